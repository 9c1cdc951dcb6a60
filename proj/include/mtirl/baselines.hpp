#pragma once

#include "mtirl/mdp.hpp"
#include "mtirl/priors.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mtirl {

/// Per-state feature vectors (rows), entries in [0, 1].
class FeatureMap {
public:
    explicit FeatureMap(Matrix features);
    static FeatureMap state_indicators(std::size_t n_states);

    const Matrix& features() const noexcept { return features_; }
    std::size_t n_features() const noexcept { return static_cast<std::size_t>(features_.cols()); }

private:
    Matrix features_;
};

/// Posterior-mean policy of the conjugate Dirichlet model; unvisited states
/// keep the prior mean.
StationaryPolicy imitator(std::span<const Demonstration> demos, const PolicyDirichletPrior& prior);

/// Randomization over stationary policies, drawn once per episode.
struct MixedPolicy {
    std::vector<StationaryPolicy> components;
    std::vector<double> weights;
};

struct MwalResult {
    MixedPolicy policy;
    Vector expert_features;
    std::vector<Vector> weight_history; ///< normalized feature weights used at each iteration
};

/// Discounted feature expectations of demonstrations, truncated where
/// gamma^t < 1e-9, averaged over trajectories.
Vector empirical_feature_expectations(std::span<const Demonstration> demos, const FeatureMap& features,
                                      double discount);

/// Exact discounted feature expectations of a stationary policy from the
/// initial distribution `start`.
Vector feature_expectations(const Cmp& cmp, const StationaryPolicy& policy, const FeatureMap& features,
                            double discount, const Vector& start);

/**
 * Multiplicative-weights apprenticeship learning. Feature weights follow the
 * multiplicative-weights update with beta = 1 / (1 + sqrt(2 ln k / T)); each
 * iteration takes the optimal policy for reward w . phi. The output is the
 * uniform mixture of those best responses. The start distribution is the
 * empirical distribution of the demonstrations' first states.
 */
MwalResult mwal(const Cmp& cmp, double discount, std::span<const Demonstration> demos, const FeatureMap& features,
                std::size_t iterations, double tolerance = kSolverTolerance);

} // namespace mtirl
