#pragma once

#include "mtirl/distributions.hpp"
#include "mtirl/mdp.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace mtirl {

// ---------------------------------------------------------------------------
// Reward priors
// ---------------------------------------------------------------------------

/// Rewards as a probability measure on states: rho ~ Dirichlet(concentration).
struct DirichletRewardPrior {
    Vector concentration;

    explicit DirichletRewardPrior(Vector c);
    static DirichletRewardPrior symmetric(std::size_t n_states, double value = 1.0);
};

/// Independent Beta(alpha_s, beta_s) reward per state.
struct BetaProductRewardPrior {
    Vector alpha;
    Vector beta;

    BetaProductRewardPrior(Vector a, Vector b);
};

/// Uniform prior over a finite list of reward hypotheses.
struct DiscreteRewardPrior {
    std::vector<RewardFunction> hypotheses;

    explicit DiscreteRewardPrior(std::vector<RewardFunction> h);

    /// Index of the hypothesis equal to `reward` (exact match), or -1.
    std::ptrdiff_t find(const Vector& reward) const;
};

using RewardPrior = std::variant<DirichletRewardPrior, BetaProductRewardPrior, DiscreteRewardPrior>;

std::size_t n_states(const RewardPrior& prior);
RewardFunction sample_reward(const RewardPrior& prior, Rng& rng);
double log_density(const RewardPrior& prior, const Vector& reward);

// ---------------------------------------------------------------------------
// Inverse temperature
// ---------------------------------------------------------------------------

/// Gamma(shape, rate) over the softmax inverse temperature eta, or a point
/// mass when `fixed` is set.
struct TemperaturePrior {
    double shape = 1.0;
    double rate = 1.0;
    std::optional<double> fixed;

    static TemperaturePrior gamma(double shape, double rate);
    static TemperaturePrior point_mass(double eta);

    double sample(Rng& rng) const;
    double log_density(double eta) const;
};

// ---------------------------------------------------------------------------
// Hyperprior
// ---------------------------------------------------------------------------

/// Dirichlet concentrations drawn coordinate-wise from Gamma(shape, rate).
struct ConcentrationHyper {
    std::size_t n_states = 0;
    double shape = 1.0;
    double rate = 10.0;
};

/// Gamma temperature prior whose own (shape, rate) are Gamma distributed.
struct TemperatureHyper {
    double shape_shape = 1.0;
    double shape_rate = 1.0;
    double rate_shape = 1.0;
    double rate_rate = 1.0;
};

struct PriorDraw {
    RewardPrior reward;
    TemperaturePrior temperature;
};

/**
 * Distribution over (reward prior, temperature prior). Each half is either a
 * hyper-distribution or held fixed; fixing both degenerates the hierarchy to
 * a single known prior.
 */
struct Hyperprior {
    std::variant<ConcentrationHyper, RewardPrior> reward;
    std::variant<TemperatureHyper, TemperaturePrior> temperature;

    /// Gamma(1, 10) concentrations and Gamma(1, 1) temperature parameters.
    static Hyperprior standard(std::size_t n_states);
    static Hyperprior fixed(RewardPrior reward, TemperaturePrior temperature);

    bool reward_is_fixed() const noexcept { return std::holds_alternative<RewardPrior>(reward); }
    bool temperature_is_fixed() const noexcept { return std::holds_alternative<TemperaturePrior>(temperature); }
    std::size_t n_states() const;
};

PriorDraw sample_hyper(const Hyperprior& hyper, Rng& rng);

/// Log hyperprior density of the non-fixed parts of a draw.
double log_hyper_density(const Hyperprior& hyper, const PriorDraw& draw);

// ---------------------------------------------------------------------------
// Policy prior and optimality prior
// ---------------------------------------------------------------------------

/// Row-wise independent Dirichlet over stationary policies.
class PolicyDirichletPrior {
public:
    explicit PolicyDirichletPrior(Matrix concentration);
    static PolicyDirichletPrior uniform(std::size_t n_states, std::size_t n_actions, double value = 1.0);

    const Matrix& concentration() const noexcept { return concentration_; }
    std::size_t n_states() const noexcept { return static_cast<std::size_t>(concentration_.rows()); }
    std::size_t n_actions() const noexcept { return static_cast<std::size_t>(concentration_.cols()); }

    /// Row-normalized concentrations.
    StationaryPolicy mean() const;
    PolicyDirichletPrior scaled(double factor) const;

private:
    Matrix concentration_;
};

/// Conjugate update: concentration + observed state-action counts.
PolicyDirichletPrior policy_posterior(const PolicyDirichletPrior& prior, std::span<const Demonstration> demos);

StationaryPolicy sample_policy(const PolicyDirichletPrior& posterior, Rng& rng);

/// Exponential(c) prior over the optimality gap epsilon.
struct OptimalityPrior {
    double rate = 1.0;

    explicit OptimalityPrior(double c);
};

/// Exponential mass of [a, b): e^{-ca} - e^{-cb}; b may be +infinity.
double exp_interval_mass(double c, double a, double b = std::numeric_limits<double>::infinity());

} // namespace mtirl
