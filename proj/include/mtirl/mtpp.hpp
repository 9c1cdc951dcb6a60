#pragma once

#include "mtirl/mdp.hpp"
#include "mtirl/metropolis.hpp"
#include "mtirl/priors.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mtirl {

/**
 * Demonstrations grouped by task, with per-task state-action counts cached.
 * Tasks without any demonstration are allowed and contribute a flat
 * likelihood.
 */
class DemoSet {
public:
    DemoSet(std::size_t n_states, std::size_t n_actions, std::size_t n_tasks, std::vector<Demonstration> demos);

    /// Number of tasks inferred as 1 + the largest task id.
    static DemoSet from_demos(std::size_t n_states, std::size_t n_actions, std::vector<Demonstration> demos);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::size_t n_tasks() const noexcept { return counts_.size(); }

    const std::vector<Demonstration>& demos() const noexcept { return demos_; }
    std::vector<Demonstration> task_demos(std::size_t task) const;
    const ActionCounts& counts(std::size_t task) const { return counts_.at(task); }

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<Demonstration> demos_;
    std::vector<ActionCounts> counts_;
};

/// One joint draw of hyperparameters and per-task (reward, temperature, policy).
struct MtppSample {
    PriorDraw hyper;
    std::vector<RewardFunction> rewards;
    std::vector<double> temperatures;
    std::vector<StationaryPolicy> policies;
    std::vector<double> log_likelihoods;
    double weight = 0.0;
};

enum class SamplerKind { importance, metropolis };

std::string to_string(SamplerKind kind);

struct SamplerDiagnostics {
    SamplerKind kind = SamplerKind::importance;
    std::uint64_t seed = 0;
    std::size_t requested = 0; ///< K for importance sampling, total sweeps for MH
    std::size_t chains = 1;
    std::size_t burn_in = 0; ///< per chain
    double max_log_likelihood = 0.0;
    double effective_sample_size = 0.0;
    std::map<std::string, AcceptanceStats> acceptance;
    /// Gelman-Rubin statistic of the joint log-likelihood trace, NaN with a
    /// single chain.
    double potential_scale_reduction = 0.0;
};

/// Weighted set of posterior draws for all tasks.
struct PosteriorEnsemble {
    std::size_t n_tasks = 0;
    std::vector<MtppSample> samples;
    SamplerDiagnostics diagnostics;

    /// sum_k w_k rho_m^(k).
    RewardFunction mean_reward(std::size_t task) const;

    /// Total weight of samples whose task reward equals `reward` exactly.
    double reward_mass(std::size_t task, const Vector& reward) const;
};

struct SolverSettings {
    double discount = 0.95;
    double tolerance = kSolverTolerance;
};

/// Q* per reward, memoized on the reward quantized at 1e-12. Stops inserting
/// once `capacity` entries exist.
class QCache {
public:
    QCache(const Cmp& cmp, SolverSettings solver, std::size_t capacity = 4096);

    const Matrix& q_star(const Vector& reward);
    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    const Cmp& cmp_;
    SolverSettings solver_;
    std::size_t capacity_;
    std::map<std::vector<long long>, Matrix> entries_;
    Matrix scratch_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

/**
 * Importance sampler from the hierarchical prior. For each of K draws: sample
 * (reward prior, temperature prior) from the hyperprior, then per task a
 * reward and a temperature, solve the MDP, build the softmax policy and score
 * the task's demonstrations. Weights are proportional to the product of task
 * likelihoods, normalized over all K draws in log space.
 *
 * Randomness: draw k uses substream (seed, hyper, k) for the hyperparameters
 * and (seed, task, k, m) for task m.
 *
 * Throws DegeneratePosterior when every draw has zero likelihood.
 */
PosteriorEnsemble mtpp_mc(const Cmp& cmp, const DemoSet& demos, const Hyperprior& hyper, std::size_t n_samples,
                          SolverSettings solver, std::uint64_t seed);

struct MhSettings {
    std::size_t iterations = 1000; ///< total sweeps, split evenly across chains
    std::size_t chains = 1;
    double burn_in_fraction = 0.1;
    /// Dirichlet/Beta proposal precision around the current reward; +inf
    /// proposes the current reward.
    double reward_precision = 50.0;
    /// Added to every proposal concentration so the walk can leave the faces
    /// of the simplex.
    double reward_floor = 0.1;
    /// Probability of replacing the local reward move by an independent draw
    /// from the current reward prior (Hastings-corrected mixture).
    double prior_proposal_probability = 0.2;
    double temperature_step = 0.25; ///< log-normal sigma for eta
    double hyper_step = 0.25;       ///< log-normal sigma for hyperparameters
};

/**
 * Random-walk Metropolis-Hastings over (hyperparameters, rho_m, eta_m) with
 * target hyperprior x prod_m prior(rho_m, eta_m | hyper) x likelihood. Each
 * sweep updates every hyperparameter coordinate, then each task's reward and
 * temperature. Post-burn-in sweeps from all chains are pooled with uniform
 * weights.
 */
PosteriorEnsemble mtpp_mh(const Cmp& cmp, const DemoSet& demos, const Hyperprior& hyper, const MhSettings& mh,
                          SolverSettings solver, std::uint64_t seed);

/// Greedy policy for the posterior-mean reward of one task.
StationaryPolicy posterior_policy(const PosteriorEnsemble& ensemble, std::size_t task, const Cmp& cmp,
                                  SolverSettings solver);

} // namespace mtirl
