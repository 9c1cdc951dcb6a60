#include "mtirl/mdp.hpp"

#include "mtirl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtirl {

namespace {

constexpr double kKernelTolerance = 1e-12;
constexpr double kSimplexTolerance = 1e-9;
constexpr double kPolicyTolerance = 1e-12;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_discount(double discount) {
    if (!(discount >= 0.0 && discount < 1.0)) {
        throw InvalidInput("discount must lie in [0, 1), got " + std::to_string(discount));
    }
}

void check_tolerance(double tolerance) {
    if (!(tolerance > 0.0)) throw InvalidInput("solver tolerance must be positive");
}

} // namespace

Cmp::Cmp(std::vector<Matrix> kernels) : kernels_(std::move(kernels)) {
    if (kernels_.empty()) throw InvalidInput("CMP needs at least one action");
    const auto n = kernels_.front().rows();
    if (n == 0) throw InvalidInput("CMP needs at least one state");
    for (std::size_t a = 0; a < kernels_.size(); ++a) {
        const Matrix& p = kernels_[a];
        if (p.rows() != n || p.cols() != n) throw InvalidInput("transition kernels must all be square n x n");
        if (!p.allFinite() || (p.array() < 0.0).any()) {
            throw InvalidInput("transition probabilities must be finite and nonnegative");
        }
        for (Eigen::Index s = 0; s < n; ++s) {
            if (std::abs(p.row(s).sum() - 1.0) > kKernelTolerance) {
                throw InvalidInput("transition row (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                   ") does not sum to 1");
            }
        }
    }
}

RewardFunction::RewardFunction(Vector values) : values_(std::move(values)) {
    if (values_.size() == 0) throw InvalidInput("reward function must be nonempty");
    if (!values_.allFinite()) throw InvalidInput("reward entries must be finite");
    if ((values_.array() < 0.0).any() || (values_.array() > 1.0).any()) {
        throw InvalidInput("reward entries must lie in [0, 1]");
    }
}

RewardFunction RewardFunction::on_simplex(Vector values) {
    RewardFunction r(std::move(values));
    if (std::abs(r.values_.sum() - 1.0) > kSimplexTolerance) {
        throw InvalidInput("simplex reward must sum to 1");
    }
    return r;
}

StationaryPolicy::StationaryPolicy(Matrix action_probs) : probs_(std::move(action_probs)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) throw InvalidInput("policy must be nonempty");
    if (!probs_.allFinite() || (probs_.array() < 0.0).any()) {
        throw InvalidInput("policy probabilities must be finite and nonnegative");
    }
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
        if (std::abs(probs_.row(s).sum() - 1.0) > kPolicyTolerance) {
            throw InvalidInput("policy row " + std::to_string(s) + " does not sum to 1");
        }
    }
}

StationaryPolicy StationaryPolicy::uniform(std::size_t n_states, std::size_t n_actions) {
    return StationaryPolicy(Matrix::Constant(idx(n_states), idx(n_actions), 1.0 / static_cast<double>(n_actions)));
}

StationaryPolicy StationaryPolicy::deterministic(std::span<const std::size_t> actions, std::size_t n_actions) {
    Matrix p = Matrix::Zero(idx(actions.size()), idx(n_actions));
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= n_actions) throw InvalidInput("action index out of range");
        p(idx(s), idx(actions[s])) = 1.0;
    }
    return StationaryPolicy(std::move(p));
}

Mdp::Mdp(std::shared_ptr<const Cmp> cmp, RewardFunction reward, double discount)
    : cmp_(std::move(cmp)), reward_(std::move(reward)), discount_(discount) {
    if (!cmp_) throw InvalidInput("MDP needs a CMP");
    if (reward_.size() != cmp_->n_states()) throw InvalidInput("reward length must equal the number of states");
    check_discount(discount_);
}

Mdp::Mdp(Cmp cmp, RewardFunction reward, double discount)
    : Mdp(std::make_shared<const Cmp>(std::move(cmp)), std::move(reward), discount) {}

void Demonstration::validate(std::size_t n_states, std::size_t n_actions) const {
    if (states.empty()) throw InvalidInput("demonstration must contain at least one step");
    if (states.size() != actions.size()) throw InvalidInput("demonstration states and actions differ in length");
    for (std::size_t t = 0; t < states.size(); ++t) {
        if (states[t] >= n_states) {
            throw InvalidInput("state index " + std::to_string(states[t]) + " out of range at step " +
                               std::to_string(t));
        }
        if (actions[t] >= n_actions) {
            throw InvalidInput("action index " + std::to_string(actions[t]) + " out of range at step " +
                               std::to_string(t));
        }
    }
}

Matrix q_from_v(const Cmp& cmp, const Vector& reward, double discount, const Vector& v) {
    if (!v.allFinite()) throw InvalidInput("value function must be finite");
    if (static_cast<std::size_t>(v.size()) != cmp.n_states()) throw InvalidInput("value function size mismatch");
    Matrix q(idx(cmp.n_states()), idx(cmp.n_actions()));
    for (std::size_t a = 0; a < cmp.n_actions(); ++a) {
        q.col(idx(a)) = reward + discount * (cmp.kernel(a) * v);
    }
    return q;
}

Matrix q_from_v(const Mdp& mdp, const ValueFunction& v) {
    return q_from_v(mdp.cmp(), mdp.reward().values(), mdp.discount(), v.values);
}

StationaryPolicy greedy_policy(const Matrix& q) {
    Matrix p = Matrix::Zero(q.rows(), q.cols());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        Eigen::Index best = 0;
        for (Eigen::Index a = 1; a < q.cols(); ++a) {
            if (q(s, a) > q(s, best) + kTieTolerance) best = a;
        }
        p(s, best) = 1.0;
    }
    return StationaryPolicy(std::move(p));
}

namespace {

// Above this many states the O(n^3) evaluation step of policy iteration
// stops paying for itself.
constexpr std::size_t kPolicyIterationLimit = 64;

/// Howard policy iteration with exact evaluation. Keeps the current action
/// unless another one improves on it by more than kTieTolerance, so it
/// cannot cycle between tied actions. Returns an empty vector if it fails to
/// settle.
Vector policy_iteration_values(const Cmp& cmp, const Vector& reward, double discount, int& iterations) {
    const auto n = idx(cmp.n_states());
    const auto n_actions = idx(cmp.n_actions());
    Matrix q(n, n_actions);
    for (Eigen::Index a = 0; a < n_actions; ++a)
        q.col(a) = reward + discount * (cmp.kernel(static_cast<std::size_t>(a)) * reward);
    std::vector<Eigen::Index> action(static_cast<std::size_t>(n), 0);
    for (Eigen::Index s = 0; s < n; ++s) q.row(s).maxCoeff(&action[static_cast<std::size_t>(s)]);

    Matrix system(n, n);
    Vector v(n);
    for (iterations = 1; iterations <= 1000; ++iterations) {
        for (Eigen::Index s = 0; s < n; ++s)
            system.row(s) = -discount * cmp.kernel(static_cast<std::size_t>(action[static_cast<std::size_t>(s)])).row(s);
        system.diagonal().array() += 1.0;
        v = system.partialPivLu().solve(reward);
        for (Eigen::Index a = 0; a < n_actions; ++a)
            q.col(a) = reward + discount * (cmp.kernel(static_cast<std::size_t>(a)) * v);
        bool stable = true;
        for (Eigen::Index s = 0; s < n; ++s) {
            auto& current = action[static_cast<std::size_t>(s)];
            Eigen::Index best = 0;
            const double top = q.row(s).maxCoeff(&best);
            if (q(s, current) < top - kTieTolerance) {
                current = best;
                stable = false;
            }
        }
        if (stable) return v;
    }
    return {};
}

} // namespace

OptimalSolution value_iteration(const Cmp& cmp, const Vector& reward, double discount, double tolerance) {
    check_tolerance(tolerance);
    check_discount(discount);
    if (!reward.allFinite()) throw InvalidInput("reward entries must be finite");
    if (static_cast<std::size_t>(reward.size()) != cmp.n_states()) throw InvalidInput("reward size mismatch");

    const auto n = idx(cmp.n_states());
    int iterations = 0;
    Vector v;
    if (cmp.n_states() <= kPolicyIterationLimit) v = policy_iteration_values(cmp, reward, discount, iterations);

    Matrix q(n, idx(cmp.n_actions()));
    // Value iteration, either from scratch or to polish the policy-iteration
    // fixed point. Stopping rule: |V - V*| <= gamma/(1-gamma) |V_{k+1} - V_k|.
    if (v.size() == 0) v = reward;
    Vector next(n);
    const double scale = discount / (1.0 - discount);
    for (;;) {
        ++iterations;
        for (std::size_t a = 0; a < cmp.n_actions(); ++a) {
            q.col(idx(a)).noalias() = discount * (cmp.kernel(a) * v);
            q.col(idx(a)) += reward;
        }
        next = q.rowwise().maxCoeff();
        const double delta = (next - v).cwiseAbs().maxCoeff();
        v.swap(next);
        if (scale * delta <= tolerance) break;
    }
    q = q_from_v(cmp, reward, discount, v);
    auto policy = greedy_policy(q);
    return OptimalSolution{ValueFunction{std::move(v)}, std::move(policy), std::move(q), iterations};
}

OptimalSolution value_iteration(const Mdp& mdp, double tolerance) {
    return value_iteration(mdp.cmp(), mdp.reward().values(), mdp.discount(), tolerance);
}

namespace {

Matrix induced_chain(const Cmp& cmp, const StationaryPolicy& policy) {
    if (policy.n_states() != cmp.n_states() || policy.n_actions() != cmp.n_actions()) {
        throw InvalidInput("policy shape does not match the CMP");
    }
    const auto n = idx(cmp.n_states());
    Matrix chain = Matrix::Zero(n, n);
    for (std::size_t a = 0; a < cmp.n_actions(); ++a) {
        chain += policy.probs().col(idx(a)).asDiagonal() * cmp.kernel(a);
    }
    return chain;
}

} // namespace

PolicyEvaluator::PolicyEvaluator(const Cmp& cmp, const StationaryPolicy& policy, double discount) {
    check_discount(discount);
    const auto n = idx(cmp.n_states());
    lu_.compute(Matrix::Identity(n, n) - discount * induced_chain(cmp, policy));
}

Vector PolicyEvaluator::evaluate(const Vector& reward) const { return lu_.solve(reward); }

ValueFunction policy_evaluation(const Mdp& mdp, const StationaryPolicy& policy, double tolerance) {
    check_tolerance(tolerance);
    const Matrix chain = induced_chain(mdp.cmp(), policy);
    const Vector& r = mdp.reward().values();
    const double gamma = mdp.discount();
    const auto n = chain.rows();
    Vector v = (Matrix::Identity(n, n) - gamma * chain).partialPivLu().solve(r);
    // polish: the fixed point is a contraction, so backups only shrink the error
    for (int k = 0; k < 10000; ++k) {
        Vector next = r + gamma * (chain * v);
        const double residual = (next - v).cwiseAbs().maxCoeff();
        v.swap(next);
        if (residual <= tolerance) break;
    }
    return ValueFunction{std::move(v)};
}

Matrix softmax_log_probs(const Matrix& q, double eta) {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidInput("inverse temperature must be finite and >= 0");
    if (!q.allFinite()) throw InvalidInput("Q values must be finite");
    // centre before scaling so a constant shift of a row cancels exactly
    Matrix logits(q.rows(), q.cols());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        logits.row(s) = eta * (q.row(s).array() - q.row(s).maxCoeff()).matrix();
        logits.row(s).array() -= std::log(logits.row(s).array().exp().sum());
    }
    return logits;
}

StationaryPolicy softmax_policy(const Matrix& q, double eta) {
    Matrix p = softmax_log_probs(q, eta).array().exp().matrix();
    // renormalize away the last ulp so rows pass the 1e-12 check
    for (Eigen::Index s = 0; s < p.rows(); ++s) p.row(s) /= p.row(s).sum();
    return StationaryPolicy(std::move(p));
}

Demonstration simulate(const Cmp& cmp, const StationaryPolicy& policy, std::size_t horizon, Rng& rng,
                       std::size_t task_id, std::optional<Vector> initial) {
    if (horizon == 0) throw InvalidInput("horizon must be at least 1");
    if (policy.n_states() != cmp.n_states() || policy.n_actions() != cmp.n_actions()) {
        throw InvalidInput("policy shape does not match the CMP");
    }
    auto draw = [&rng](const auto& probs) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double x = u(rng);
        double acc = 0.0;
        Eigen::Index last_positive = 0;
        for (Eigen::Index i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            last_positive = i;
            acc += probs[i];
            if (x < acc) return static_cast<std::size_t>(i);
        }
        return static_cast<std::size_t>(last_positive);
    };

    Demonstration demo;
    demo.task_id = task_id;
    demo.states.reserve(horizon);
    demo.actions.reserve(horizon);
    std::size_t s = 0;
    if (initial) {
        if (static_cast<std::size_t>(initial->size()) != cmp.n_states()) {
            throw InvalidInput("initial distribution size mismatch");
        }
        s = draw(*initial);
    }
    for (std::size_t t = 0; t < horizon; ++t) {
        const std::size_t a = draw(policy.probs().row(idx(s)));
        demo.states.push_back(s);
        demo.actions.push_back(a);
        s = draw(cmp.next_state_probs(s, a));
    }
    return demo;
}

double log_likelihood(const StationaryPolicy& policy, const Demonstration& demo) {
    demo.validate(policy.n_states(), policy.n_actions());
    double total = 0.0;
    for (std::size_t t = 0; t < demo.length(); ++t) {
        const double p = policy(demo.states[t], demo.actions[t]);
        if (p <= 0.0) return kLogZero;
        total += std::log(p);
    }
    return total;
}

ActionCounts::ActionCounts(std::size_t n_states, std::size_t n_actions)
    : counts_(Matrix::Zero(idx(n_states), idx(n_actions))) {}

void ActionCounts::add(const Demonstration& demo) {
    demo.validate(static_cast<std::size_t>(counts_.rows()), static_cast<std::size_t>(counts_.cols()));
    for (std::size_t t = 0; t < demo.length(); ++t) {
        counts_(idx(demo.states[t]), idx(demo.actions[t])) += 1.0;
    }
}

double ActionCounts::log_likelihood(const Matrix& log_probs) const {
    double total = 0.0;
    for (Eigen::Index s = 0; s < counts_.rows(); ++s) {
        for (Eigen::Index a = 0; a < counts_.cols(); ++a) {
            const double n = counts_(s, a);
            if (n == 0.0) continue;
            const double lp = log_probs(s, a);
            if (!std::isfinite(lp) || lp <= kLogZero) return kLogZero;
            total += n * lp;
        }
    }
    return std::max(total, kLogZero);
}

} // namespace mtirl
