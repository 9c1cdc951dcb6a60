#include "mtirl/mtpo.hpp"

#include "mtirl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mtirl {

namespace {

constexpr double kMergeTolerance = 1e-12;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::vector<Vector> optimal_values(const Cmp& cmp, double discount, const RewardHypothesisSet& hypotheses,
                                   double tolerance) {
    std::vector<Vector> out;
    out.reserve(hypotheses.size());
    for (const auto& r : hypotheses.rewards()) {
        out.push_back(value_iteration(cmp, r.values(), discount, tolerance).value.values);
    }
    return out;
}

LossMatrix loss_matrix_from(const Cmp& cmp, double discount, std::span<const StationaryPolicy> policies,
                            const RewardHypothesisSet& hypotheses, std::vector<Vector> v_star) {
    LossMatrix loss{Matrix(idx(policies.size()), idx(hypotheses.size())), std::move(v_star)};
    for (std::size_t i = 0; i < policies.size(); ++i) {
        const PolicyEvaluator evaluator(cmp, policies[i], discount);
        for (std::size_t j = 0; j < hypotheses.size(); ++j) {
            const Vector v = evaluator.evaluate(hypotheses[j].values());
            loss.entries(idx(i), idx(j)) = std::max(0.0, (loss.optimal_values[j] - v).maxCoeff());
        }
    }
    return loss;
}

} // namespace

RewardHypothesisSet::RewardHypothesisSet(std::vector<RewardFunction> rewards, std::vector<double> measure)
    : rewards_(std::move(rewards)), measure_(std::move(measure)) {
    if (rewards_.empty()) throw InvalidInput("hypothesis set must be nonempty");
    for (const auto& r : rewards_) {
        if (r.size() != rewards_.front().size()) throw InvalidInput("hypotheses differ in length");
    }
    if (measure_.empty()) measure_.assign(rewards_.size(), 1.0);
    if (measure_.size() != rewards_.size()) throw InvalidInput("measure must have one weight per hypothesis");
    for (double w : measure_) {
        if (!(w > 0.0) || !std::isfinite(w)) throw InvalidInput("hypothesis measure weights must be positive");
    }
}

LossMatrix build_loss_matrix(const Cmp& cmp, double discount, std::span<const StationaryPolicy> policies,
                             const RewardHypothesisSet& hypotheses, double tolerance) {
    if (policies.empty()) throw InvalidInput("loss matrix needs at least one policy");
    if (hypotheses[0].size() != cmp.n_states()) throw InvalidInput("hypothesis size does not match the CMP");
    return loss_matrix_from(cmp, discount, policies, hypotheses,
                            optimal_values(cmp, discount, hypotheses, tolerance));
}

Vector eps_optimal_conditional(const Vector& losses, double eps, const RewardHypothesisSet& hypotheses) {
    if (!(eps >= 0.0)) throw InvalidInput("epsilon must be nonnegative");
    if (static_cast<std::size_t>(losses.size()) != hypotheses.size()) {
        throw InvalidInput("loss vector must have one entry per hypothesis");
    }
    Vector out = Vector::Zero(losses.size());
    double total = 0.0;
    for (Eigen::Index j = 0; j < losses.size(); ++j) {
        if (losses[j] < eps) {
            out[j] = hypotheses.measure()[static_cast<std::size_t>(j)];
            total += out[j];
        }
    }
    if (total > 0.0) out /= total;
    return out;
}

RewardPosterior reward_posterior(const LossMatrix& loss, const OptimalityPrior& prior,
                                 const RewardHypothesisSet& hypotheses) {
    const auto n_policies = loss.n_policies();
    const auto n_rewards = loss.n_rewards();
    if (n_policies == 0) throw InvalidInput("reward posterior needs at least one policy");
    if (n_rewards != hypotheses.size()) throw InvalidInput("loss matrix width differs from the hypothesis count");
    if (!loss.entries.allFinite() || (loss.entries.array() < 0.0).any()) {
        throw InvalidInput("losses must be finite and nonnegative");
    }

    // distinct loss values, ascending, merged within kMergeTolerance
    std::vector<double> grid(loss.entries.data(), loss.entries.data() + loss.entries.size());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) <= kMergeTolerance; }),
               grid.end());

    // Interval masses relative to e^{-c eps_1}: the common factor cancels on
    // renormalization and keeps large c * eps_1 from underflowing.
    const double c = prior.rate;
    const double origin = grid.front();
    std::vector<double> mass(grid.size());
    std::vector<double> representative(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double a = grid[k] - origin;
        if (k + 1 < grid.size()) {
            mass[k] = exp_interval_mass(c, a, grid[k + 1] - origin);
            representative[k] = 0.5 * (grid[k] + grid[k + 1]);
        } else {
            mass[k] = exp_interval_mass(c, a);
            representative[k] = 2.0 * grid[k] + 1.0;
        }
    }

    // tail[k]: prior mass of all intervals from k upwards
    std::vector<double> tail(grid.size() + 1, 0.0);
    for (std::size_t k = grid.size(); k-- > 0;) tail[k] = tail[k + 1] + mass[k];

    Vector total = Vector::Zero(idx(n_rewards));
    std::vector<std::size_t> order(n_rewards);
    std::vector<double> at_least(n_rewards + 2, 0.0);
    std::vector<double> prefix(n_rewards + 1, 0.0);
    for (std::size_t i = 0; i < n_policies; ++i) {
        const auto row = loss.entries.row(idx(i));
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return row[idx(x)] < row[idx(y)]; });
        // at_least[r]: mass of the intervals whose representative exceeds the
        // r-th smallest loss, i.e. whose epsilon-optimal set holds at least
        // the r lowest-loss rewards of this policy
        at_least[0] = tail[0];
        for (std::size_t r = 1; r <= n_rewards; ++r) {
            const double l = row[idx(order[r - 1])];
            const auto first = std::upper_bound(representative.begin(), representative.end(), l);
            at_least[r] = tail[static_cast<std::size_t>(first - representative.begin())];
        }
        at_least[n_rewards + 1] = 0.0;
        for (std::size_t r = 1; r <= n_rewards; ++r)
            prefix[r] = prefix[r - 1] + hypotheses.measure()[order[r - 1]];
        double acc = 0.0;
        for (std::size_t r = n_rewards; r >= 1; --r) {
            acc += (at_least[r] - at_least[r + 1]) / prefix[r];
            total[idx(order[r - 1])] += hypotheses.measure()[order[r - 1]] * acc / static_cast<double>(n_policies);
        }
    }
    const double norm = total.sum();
    if (!(norm > 0.0)) throw InvalidInput("reward posterior has zero total mass");
    return RewardPosterior{total / norm};
}

MtpoResult mtpo_mc(const Cmp& cmp, const DemoSet& demos, const PolicyDirichletPrior& policy_prior,
                   const std::variant<RewardHypothesisSet, HypothesisSampler>& rewards, const MtpoSettings& settings,
                   std::uint64_t seed) {
    if (settings.n_policies == 0) throw InvalidInput("policy sample count K must be at least 1");
    if (demos.n_states() != cmp.n_states() || demos.n_actions() != cmp.n_actions()) {
        throw InvalidInput("demonstration set sizes do not match the CMP");
    }
    if (policy_prior.n_states() != cmp.n_states() || policy_prior.n_actions() != cmp.n_actions()) {
        throw InvalidInput("policy prior shape does not match the CMP");
    }

    RewardHypothesisSet hypotheses = [&] {
        if (const auto* given = std::get_if<RewardHypothesisSet>(&rewards)) return *given;
        const auto& sampler = std::get<HypothesisSampler>(rewards);
        if (sampler.count == 0) throw InvalidInput("hypothesis count N must be at least 1");
        Rng rng = substream(seed, {stream::hypotheses});
        std::vector<RewardFunction> drawn;
        drawn.reserve(sampler.count);
        for (std::size_t j = 0; j < sampler.count; ++j) drawn.push_back(sample_reward(sampler.prior, rng));
        return RewardHypothesisSet(std::move(drawn));
    }();
    if (hypotheses[0].size() != cmp.n_states()) throw InvalidInput("hypothesis size does not match the CMP");

    const std::size_t n_tasks = demos.n_tasks();
    const std::size_t k_draws = settings.n_policies;
    std::vector<std::vector<StationaryPolicy>> policies(n_tasks);
    for (auto& p : policies) p.reserve(k_draws);
    for (std::size_t k = 0; k < k_draws; ++k) {
        double scale = 1.0;
        if (settings.policy_scale) {
            Rng rng = substream(seed, {stream::hyper, k});
            do {
                scale = sample_gamma(settings.policy_scale->shape, settings.policy_scale->rate, rng);
            } while (!(scale > 0.0));
        }
        for (std::size_t m = 0; m < n_tasks; ++m) {
            const PolicyDirichletPrior posterior(scale * policy_prior.concentration() + demos.counts(m).counts());
            Rng rng = substream(seed, {stream::policy, k, m});
            policies[m].push_back(sample_policy(posterior, rng));
        }
    }

    const auto v_star =
        optimal_values(cmp, settings.solver.discount, hypotheses, settings.solver.tolerance);
    MtpoResult result{hypotheses, {}, {}};
    for (std::size_t m = 0; m < n_tasks; ++m) {
        LossMatrix loss = loss_matrix_from(cmp, settings.solver.discount, policies[m], hypotheses, v_star);
        result.posteriors.push_back(reward_posterior(loss, settings.optimality, hypotheses));
        result.losses.push_back(std::move(loss));
    }
    return result;
}

ValueEstimate posterior_value_estimate(const RewardPosterior& posterior, const RewardHypothesisSet& hypotheses,
                                       const Cmp& cmp, SolverSettings solver) {
    const Vector& p = posterior.probabilities;
    if (static_cast<std::size_t>(p.size()) != hypotheses.size()) {
        throw InvalidInput("posterior length differs from the hypothesis count");
    }
    if ((p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > 1e-9) {
        throw InvalidInput("posterior must be a probability vector");
    }
    Vector expected = Vector::Zero(idx(hypotheses[0].size()));
    for (std::size_t j = 0; j < hypotheses.size(); ++j) expected += p[idx(j)] * hypotheses[j].values();
    RewardFunction reward(expected.cwiseMax(0.0).cwiseMin(1.0));
    auto solution = value_iteration(cmp, reward.values(), solver.discount, solver.tolerance);
    return ValueEstimate{std::move(solution.value), std::move(solution.policy), std::move(reward)};
}

double mc_error_bound(std::size_t k, double discount) {
    if (k == 0) throw InvalidInput("K must be at least 1");
    const double kd = static_cast<double>(k);
    return (2.0 + 0.5 * std::sqrt(std::log(kd))) / ((1.0 - discount) * std::sqrt(kd));
}

} // namespace mtirl
