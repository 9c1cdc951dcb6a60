#include "mtirl/tasks.hpp"

#include "mtirl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mtirl {

namespace {
Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
} // namespace

Cmp chain_cmp(std::size_t n_states, double slip) {
    if (n_states == 0) throw InvalidInput("chain needs at least one state");
    if (!(slip >= 0.0 && slip <= 1.0)) throw InvalidInput("slip must lie in [0, 1]");
    const auto n = idx(n_states);
    Matrix advance = Matrix::Zero(n, n);
    Matrix reset = Matrix::Zero(n, n);
    for (Eigen::Index s = 0; s < n; ++s) {
        advance(s, std::min(s + 1, n - 1)) += 1.0 - slip;
        advance(s, std::min(s + 2, n - 1)) += slip;
        reset(s, 0) = 1.0;
    }
    return Cmp({advance, reset});
}

Vector default_chain_rewards(std::size_t n_states) {
    Vector r = Vector::Zero(idx(n_states));
    r[0] = 0.2;
    r[idx(n_states) - 1] = 1.0;
    return r;
}

Task make_chain(const ChainSpec& spec) {
    Vector rewards = spec.rewards.size() == 0 ? default_chain_rewards(spec.n_states) : spec.rewards;
    if (static_cast<std::size_t>(rewards.size()) != spec.n_states) {
        throw InvalidInput("chain reward vector must have one entry per state");
    }
    return Task{std::make_shared<const Cmp>(chain_cmp(spec.n_states, spec.slip)), RewardFunction(std::move(rewards)),
                spec.discount};
}

Task make_generalized_chain(std::size_t n_states, double slip, double discount, const DirichletRewardPrior& prior,
                            Rng& rng) {
    if (static_cast<std::size_t>(prior.concentration.size()) != n_states) {
        throw InvalidInput("reward prior size must match the chain length");
    }
    return Task{std::make_shared<const Cmp>(chain_cmp(n_states, slip)),
                RewardFunction::on_simplex(sample_dirichlet(prior.concentration, rng)), discount};
}

Cmp two_state_cmp() {
    Matrix stay = Matrix::Identity(2, 2);
    Matrix swap(2, 2);
    swap << 0.0, 1.0, 1.0, 0.0;
    return Cmp({stay, swap});
}

StationaryPolicy make_demonstrator(const DemonstratorSpec& spec, const Mdp& mdp) {
    const auto solution = value_iteration(mdp);
    if (spec.kind == DemonstratorKind::softmax) return softmax_policy(solution.q, spec.parameter);
    const double eps = spec.parameter;
    if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidInput("epsilon must lie in [0, 1]");
    const double uniform = 1.0 / static_cast<double>(mdp.cmp().n_actions());
    Matrix p = (1.0 - eps) * solution.policy.probs();
    p.array() += eps * uniform;
    return StationaryPolicy(std::move(p));
}

Population make_random_mdp_population(const RandomMdpSpec& spec, std::uint64_t seed) {
    if (spec.n_states == 0 || spec.n_actions == 0 || spec.n_tasks == 0 || spec.demo_length == 0) {
        throw InvalidInput("random MDP counts must be positive");
    }
    if (!(spec.eta_min > 0.0 && spec.eta_max >= spec.eta_min && std::isfinite(spec.eta_max))) {
        throw InvalidInput("temperature range must lie within (0, inf)");
    }
    if (!(spec.transition_concentration > 0.0) || !(spec.hyper_shape > 0.0) || !(spec.hyper_rate > 0.0)) {
        throw InvalidInput("random MDP distribution parameters must be positive");
    }
    const auto n = idx(spec.n_states);

    Rng env_rng = substream(seed, {stream::environment});
    std::vector<Matrix> kernels;
    const Vector row_conc = Vector::Constant(n, spec.transition_concentration);
    for (std::size_t a = 0; a < spec.n_actions; ++a) {
        Matrix p(n, n);
        for (Eigen::Index s = 0; s < n; ++s) {
            Vector row = sample_dirichlet(row_conc, env_rng);
            row /= row.sum();
            p.row(s) = row.transpose();
        }
        kernels.push_back(std::move(p));
    }

    Population pop;
    pop.cmp = std::make_shared<const Cmp>(std::move(kernels));
    pop.discount = spec.discount;

    Rng hyper_rng = substream(seed, {stream::hyper});
    pop.concentration.resize(n);
    for (Eigen::Index s = 0; s < n; ++s) {
        do {
            pop.concentration[s] = sample_gamma(spec.hyper_shape, spec.hyper_rate, hyper_rng);
        } while (!(pop.concentration[s] > 0.0));
    }

    for (std::size_t m = 0; m < spec.n_tasks; ++m) {
        Rng rng = substream(seed, {stream::task, m});
        RewardFunction reward = RewardFunction::on_simplex(sample_dirichlet(pop.concentration, rng));
        std::uniform_real_distribution<double> eta_dist(spec.eta_min, spec.eta_max);
        const double eta = spec.eta_min == spec.eta_max ? spec.eta_min : eta_dist(rng);
        const Mdp mdp(pop.cmp, reward, spec.discount);
        pop.demonstrators.push_back(make_demonstrator({DemonstratorKind::softmax, eta}, mdp));
        pop.rewards.push_back(std::move(reward));
        pop.etas.push_back(eta);
    }
    return pop;
}

} // namespace mtirl
