#pragma once

#include "mtirl/distributions.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace mtirl {

/// Log-probability used in place of -infinity: importance weights built on it
/// underflow to exactly zero instead of producing NaNs.
inline constexpr double kLogZero = -1e300;

/// Default stopping tolerance of the dynamic-programming solvers.
inline constexpr double kSolverTolerance = 1e-9;

/// Two action values closer than this are treated as tied in greedy
/// selection; the lowest action index wins.
inline constexpr double kTieTolerance = 1e-10;

/**
 * Controlled Markov process: finite states and actions plus a transition
 * kernel. `kernel(a)(s, s')` is the probability of moving to s' after taking
 * action a in state s.
 */
class Cmp {
public:
    /// Validates that every (s, a) row is a distribution (sum within 1e-12).
    explicit Cmp(std::vector<Matrix> kernels);

    std::size_t n_states() const noexcept { return static_cast<std::size_t>(kernels_.front().rows()); }
    std::size_t n_actions() const noexcept { return kernels_.size(); }

    const Matrix& kernel(std::size_t action) const { return kernels_.at(action); }
    auto next_state_probs(std::size_t state, std::size_t action) const { return kernels_[action].row(state); }

private:
    std::vector<Matrix> kernels_;
};

/// State-based reward, entries in [0, 1].
class RewardFunction {
public:
    explicit RewardFunction(Vector values);

    /// Same as the constructor but additionally requires the entries to sum
    /// to one within 1e-9 (rewards as a measure on states).
    static RewardFunction on_simplex(Vector values);

    const Vector& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
    double operator[](std::size_t s) const { return values_[static_cast<Eigen::Index>(s)]; }

private:
    Vector values_;
};

/// Per-state action distributions, one row per state.
class StationaryPolicy {
public:
    explicit StationaryPolicy(Matrix action_probs);

    static StationaryPolicy uniform(std::size_t n_states, std::size_t n_actions);
    static StationaryPolicy deterministic(std::span<const std::size_t> actions, std::size_t n_actions);

    const Matrix& probs() const noexcept { return probs_; }
    std::size_t n_states() const noexcept { return static_cast<std::size_t>(probs_.rows()); }
    std::size_t n_actions() const noexcept { return static_cast<std::size_t>(probs_.cols()); }
    double operator()(std::size_t s, std::size_t a) const {
        return probs_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    }

private:
    Matrix probs_;
};

class Mdp {
public:
    Mdp(std::shared_ptr<const Cmp> cmp, RewardFunction reward, double discount);
    Mdp(Cmp cmp, RewardFunction reward, double discount);

    const Cmp& cmp() const noexcept { return *cmp_; }
    const std::shared_ptr<const Cmp>& shared_cmp() const noexcept { return cmp_; }
    const RewardFunction& reward() const noexcept { return reward_; }
    double discount() const noexcept { return discount_; }

private:
    std::shared_ptr<const Cmp> cmp_;
    RewardFunction reward_;
    double discount_;
};

struct Demonstration {
    std::size_t task_id = 0;
    std::vector<std::size_t> states;
    std::vector<std::size_t> actions;

    std::size_t length() const noexcept { return states.size(); }

    /// Throws InvalidInput unless the trajectory is nonempty, the sequences
    /// have equal length and all indices fit the given sizes.
    void validate(std::size_t n_states, std::size_t n_actions) const;
};

struct ValueFunction {
    Vector values;
};

struct OptimalSolution {
    ValueFunction value;
    StationaryPolicy policy; ///< greedy, one-hot rows
    Matrix q;
    int iterations = 0;
};

/**
 * Value iteration with state rewards: V(s) = r(s) + gamma max_a sum_s' P(s'|s,a) V(s').
 *
 * Stops once gamma/(1-gamma) * |V_{k+1} - V_k|_inf <= tolerance, which bounds
 * both the distance to V* and the Bellman residual of the result by
 * `tolerance`.
 */
OptimalSolution value_iteration(const Mdp& mdp, double tolerance = kSolverTolerance);

/// Same solver on a bare (cmp, reward, discount) triple; used by samplers.
OptimalSolution value_iteration(const Cmp& cmp, const Vector& reward, double discount,
                                double tolerance = kSolverTolerance);

/// Exact evaluation of a stationary policy via an LU solve of
/// (I - gamma P_pi) V = r, refined by Bellman backups if the residual exceeds
/// the tolerance.
ValueFunction policy_evaluation(const Mdp& mdp, const StationaryPolicy& policy,
                                double tolerance = kSolverTolerance);

/**
 * Factorizes (I - gamma P_pi) once so the same policy can be evaluated for
 * many reward vectors.
 */
class PolicyEvaluator {
public:
    PolicyEvaluator(const Cmp& cmp, const StationaryPolicy& policy, double discount);

    Vector evaluate(const Vector& reward) const;

private:
    Eigen::PartialPivLU<Matrix> lu_;
};

/// Q(s,a) = r(s) + gamma sum_s' P(s'|s,a) v(s').
Matrix q_from_v(const Mdp& mdp, const ValueFunction& v);
Matrix q_from_v(const Cmp& cmp, const Vector& reward, double discount, const Vector& v);

/// Greedy one-hot policy; ties within kTieTolerance go to the lowest action.
StationaryPolicy greedy_policy(const Matrix& q);

/// Row-wise exp(eta * Q) normalized, computed with a max-shift.
StationaryPolicy softmax_policy(const Matrix& q, double eta);

/// Log-probabilities of softmax_policy(q, eta), computed without
/// exponentiating (exact for large eta).
Matrix softmax_log_probs(const Matrix& q, double eta);

/// Samples a trajectory of `horizon` steps from the chain induced by policy
/// and kernel. Initial state defaults to a point mass on state 0.
Demonstration simulate(const Cmp& cmp, const StationaryPolicy& policy, std::size_t horizon, Rng& rng,
                       std::size_t task_id = 0, std::optional<Vector> initial = std::nullopt);

/// sum_t log pi(a_t | s_t), or kLogZero if any observed action has
/// probability zero.
double log_likelihood(const StationaryPolicy& policy, const Demonstration& demo);

/// State-action visit counts, the sufficient statistic of a stationary-policy
/// likelihood.
class ActionCounts {
public:
    ActionCounts(std::size_t n_states, std::size_t n_actions);

    void add(const Demonstration& demo);
    const Matrix& counts() const noexcept { return counts_; }
    double total() const noexcept { return counts_.sum(); }

    /// sum_{s,a} N(s,a) log p(s,a) for a matrix of log-probabilities;
    /// kLogZero when an observed pair has zero probability.
    double log_likelihood(const Matrix& log_probs) const;

private:
    Matrix counts_;
};

} // namespace mtirl
