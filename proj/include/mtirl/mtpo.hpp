#pragma once

#include "mtirl/mdp.hpp"
#include "mtirl/mtpp.hpp"
#include "mtirl/priors.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace mtirl {

/// Finite set of candidate rewards with a positive measure on them
/// (counting measure by default).
class RewardHypothesisSet {
public:
    explicit RewardHypothesisSet(std::vector<RewardFunction> rewards, std::vector<double> measure = {});

    std::size_t size() const noexcept { return rewards_.size(); }
    const std::vector<RewardFunction>& rewards() const noexcept { return rewards_; }
    const std::vector<double>& measure() const noexcept { return measure_; }
    const RewardFunction& operator[](std::size_t j) const { return rewards_.at(j); }

private:
    std::vector<RewardFunction> rewards_;
    std::vector<double> measure_;
};

/**
 * Loss of each policy under each reward: entry (i, j) is
 * max_s V*_j(s) - V^{pi_i}_j(s), clamped at zero. Rows are policies,
 * columns rewards.
 */
struct LossMatrix {
    Matrix entries;
    std::vector<Vector> optimal_values; ///< V*_j, one per reward

    std::size_t n_policies() const noexcept { return static_cast<std::size_t>(entries.rows()); }
    std::size_t n_rewards() const noexcept { return static_cast<std::size_t>(entries.cols()); }
};

LossMatrix build_loss_matrix(const Cmp& cmp, double discount, std::span<const StationaryPolicy> policies,
                             const RewardHypothesisSet& hypotheses, double tolerance = kSolverTolerance);

/// Per-task probability vector over a hypothesis set.
struct RewardPosterior {
    Vector probabilities;
};

/**
 * The measure restricted to the epsilon-optimal rewards {j : loss_j < eps},
 * normalized. Returns the zero vector when no reward qualifies.
 */
Vector eps_optimal_conditional(const Vector& losses, double eps, const RewardHypothesisSet& hypotheses);

/**
 * Integrates the epsilon-conditional against the exponential optimality
 * prior. The conditional is piecewise constant in epsilon with breaks at the
 * distinct loss values, so the integral is a finite sum over those intervals
 * (each evaluated at its midpoint). The interval below the smallest loss has
 * an empty epsilon-optimal set and contributes nothing; the result is
 * averaged over policies and renormalized.
 */
RewardPosterior reward_posterior(const LossMatrix& loss, const OptimalityPrior& prior,
                                 const RewardHypothesisSet& hypotheses);

/// Draw N hypotheses from a reward prior instead of supplying them.
struct HypothesisSampler {
    RewardPrior prior;
    std::size_t count = 100;
};

/// Optional Gamma law on a multiplicative scale of the policy prior
/// concentration, resampled for each of the K draws.
struct PolicyPriorScaleHyper {
    double shape = 1.0;
    double rate = 1.0;
};

struct MtpoSettings {
    std::size_t n_policies = 100; ///< K
    OptimalityPrior optimality{1.0};
    std::optional<PolicyPriorScaleHyper> policy_scale;
    SolverSettings solver;
};

struct MtpoResult {
    RewardHypothesisSet hypotheses;
    std::vector<RewardPosterior> posteriors; ///< one per task
    std::vector<LossMatrix> losses;          ///< one per task
};

/**
 * Policy-optimality Monte Carlo: sample (or take) the reward hypotheses once,
 * draw K policies per task from the conjugate policy posterior given that
 * task's demonstrations, and integrate the optimality prior per task.
 *
 * Randomness: hypotheses from (seed, hypotheses), the prior scale of draw k
 * from (seed, hyper, k) and task m's policy from (seed, policy, k, m).
 */
MtpoResult mtpo_mc(const Cmp& cmp, const DemoSet& demos, const PolicyDirichletPrior& policy_prior,
                   const std::variant<RewardHypothesisSet, HypothesisSampler>& rewards, const MtpoSettings& settings,
                   std::uint64_t seed);

struct ValueEstimate {
    ValueFunction value;
    StationaryPolicy policy;
    RewardFunction expected_reward;
};

/// Value function and greedy policy for the posterior-expected reward.
ValueEstimate posterior_value_estimate(const RewardPosterior& posterior, const RewardHypothesisSet& hypotheses,
                                       const Cmp& cmp, SolverSettings solver);

/// (2 + sqrt(ln K)/2) / ((1 - gamma) sqrt(K)).
double mc_error_bound(std::size_t k, double discount);

} // namespace mtirl
