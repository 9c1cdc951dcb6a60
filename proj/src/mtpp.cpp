#include "mtirl/mtpp.hpp"

#include "mtirl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace mtirl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void check_problem(const Cmp& cmp, const DemoSet& demos, const Hyperprior& hyper) {
    if (demos.n_states() != cmp.n_states() || demos.n_actions() != cmp.n_actions()) {
        throw InvalidInput("demonstration set sizes do not match the CMP");
    }
    if (hyper.n_states() != cmp.n_states()) throw InvalidInput("hyperprior state count does not match the CMP");
    if (demos.n_tasks() == 0) throw InvalidInput("at least one task is required");
}

double task_log_likelihood(const DemoSet& demos, std::size_t task, const Matrix& q, double eta) {
    const ActionCounts& counts = demos.counts(task);
    if (counts.total() == 0.0) return 0.0;
    return counts.log_likelihood(softmax_log_probs(q, eta));
}

double clamp_log_weight(double x) { return std::isfinite(x) ? std::max(x, kLogZero) : kLogZero; }

RewardFunction clamped_reward(Vector v) {
    return RewardFunction(v.cwiseMax(0.0).cwiseMin(1.0));
}

} // namespace

DemoSet::DemoSet(std::size_t n_states, std::size_t n_actions, std::size_t n_tasks, std::vector<Demonstration> demos)
    : n_states_(n_states), n_actions_(n_actions), demos_(std::move(demos)) {
    counts_.assign(n_tasks, ActionCounts(n_states, n_actions));
    for (const auto& d : demos_) {
        if (d.task_id >= n_tasks) throw InvalidInput("demonstration task id out of range");
        counts_[d.task_id].add(d);
    }
}

DemoSet DemoSet::from_demos(std::size_t n_states, std::size_t n_actions, std::vector<Demonstration> demos) {
    std::size_t n_tasks = 0;
    for (const auto& d : demos) n_tasks = std::max(n_tasks, d.task_id + 1);
    return DemoSet(n_states, n_actions, n_tasks, std::move(demos));
}

std::vector<Demonstration> DemoSet::task_demos(std::size_t task) const {
    std::vector<Demonstration> out;
    for (const auto& d : demos_) {
        if (d.task_id == task) out.push_back(d);
    }
    return out;
}

std::string to_string(SamplerKind kind) {
    return kind == SamplerKind::importance ? "importance" : "metropolis";
}

RewardFunction PosteriorEnsemble::mean_reward(std::size_t task) const {
    if (task >= n_tasks) throw InvalidInput("task index out of range");
    if (samples.empty()) throw InvalidInput("empty posterior ensemble");
    Vector mean = Vector::Zero(idx(samples.front().rewards[task].size()));
    for (const auto& s : samples) mean += s.weight * s.rewards[task].values();
    return clamped_reward(std::move(mean));
}

double PosteriorEnsemble::reward_mass(std::size_t task, const Vector& reward) const {
    double mass = 0.0;
    for (const auto& s : samples) {
        if (s.rewards.at(task).values() == reward) mass += s.weight;
    }
    return mass;
}

QCache::QCache(const Cmp& cmp, SolverSettings solver, std::size_t capacity)
    : cmp_(cmp), solver_(solver), capacity_(capacity) {}

const Matrix& QCache::q_star(const Vector& reward) {
    std::vector<long long> key(static_cast<std::size_t>(reward.size()));
    for (Eigen::Index s = 0; s < reward.size(); ++s) {
        key[static_cast<std::size_t>(s)] = std::llround(reward[s] * 1e12);
    }
    if (auto it = entries_.find(key); it != entries_.end()) {
        ++hits_;
        return it->second;
    }
    ++misses_;
    Matrix q = value_iteration(cmp_, reward, solver_.discount, solver_.tolerance).q;
    if (entries_.size() < capacity_) {
        return entries_.emplace(std::move(key), std::move(q)).first->second;
    }
    scratch_ = std::move(q);
    return scratch_;
}

PosteriorEnsemble mtpp_mc(const Cmp& cmp, const DemoSet& demos, const Hyperprior& hyper, std::size_t n_samples,
                          SolverSettings solver, std::uint64_t seed) {
    if (n_samples == 0) throw InvalidInput("sample count K must be at least 1");
    check_problem(cmp, demos, hyper);
    const std::size_t n_tasks = demos.n_tasks();

    QCache cache(cmp, solver);
    PosteriorEnsemble ensemble;
    ensemble.n_tasks = n_tasks;
    ensemble.samples.reserve(n_samples);
    Vector log_weights(idx(n_samples));

    for (std::size_t k = 0; k < n_samples; ++k) {
        Rng hyper_rng = substream(seed, {stream::hyper, k});
        MtppSample sample{sample_hyper(hyper, hyper_rng), {}, {}, {}, {}, 0.0};
        double joint = 0.0;
        for (std::size_t m = 0; m < n_tasks; ++m) {
            Rng task_rng = substream(seed, {stream::task, k, m});
            RewardFunction reward = sample_reward(sample.hyper.reward, task_rng);
            const double eta = sample.hyper.temperature.sample(task_rng);
            const Matrix& q = cache.q_star(reward.values());
            const double ll = task_log_likelihood(demos, m, q, eta);
            sample.policies.push_back(softmax_policy(q, eta));
            sample.rewards.push_back(std::move(reward));
            sample.temperatures.push_back(eta);
            sample.log_likelihoods.push_back(ll);
            joint += ll;
        }
        log_weights[idx(k)] = clamp_log_weight(joint);
        ensemble.samples.push_back(std::move(sample));
    }

    const double max_log = log_weights.maxCoeff();
    if (max_log <= kLogZero * 0.5) {
        throw DegeneratePosterior("every importance weight underflowed to zero", max_log);
    }
    Vector w = (log_weights.array() - max_log).exp().matrix();
    w /= w.sum();
    for (std::size_t k = 0; k < n_samples; ++k) ensemble.samples[k].weight = w[idx(k)];

    auto& diag = ensemble.diagnostics;
    diag.kind = SamplerKind::importance;
    diag.seed = seed;
    diag.requested = n_samples;
    diag.chains = 1;
    diag.max_log_likelihood = max_log;
    diag.effective_sample_size = 1.0 / w.squaredNorm();
    diag.potential_scale_reduction = std::numeric_limits<double>::quiet_NaN();
    return ensemble;
}

// ---------------------------------------------------------------------------
// Metropolis-Hastings
// ---------------------------------------------------------------------------

namespace {

struct ChainState {
    PriorDraw prior;
    std::vector<Vector> rewards;
    std::vector<double> etas;
    std::vector<Matrix> q;
    std::vector<double> log_likelihoods;

    double joint_log_likelihood() const {
        double total = 0.0;
        for (double ll : log_likelihoods) total += ll;
        return total;
    }
};

struct RewardProposal {
    Vector reward;
    double log_hastings = 0.0; ///< log q(current | proposed) - log q(proposed | current)
};

// Moves rewards off the boundary where the prior density is zero or infinite
// so the chain starts from a state of finite density.
Vector nudge_into_support(const RewardPrior& prior, Vector r) {
    constexpr double eps = 1e-12;
    if (std::holds_alternative<DirichletRewardPrior>(prior)) {
        if ((r.array() <= 0.0).any()) {
            r.array() += eps;
            r /= r.sum();
        }
    } else if (std::holds_alternative<BetaProductRewardPrior>(prior)) {
        r = r.cwiseMax(eps).cwiseMin(1.0 - eps);
    }
    return r;
}

double log_mixture(double p, double log_a, double log_b) {
    if (p <= 0.0) return log_b;
    if (p >= 1.0) return log_a;
    const double x = std::log(p) + log_a;
    const double y = std::log1p(-p) + log_b;
    const double m = std::max(x, y);
    if (!std::isfinite(m)) return m;
    return m + std::log(std::exp(x - m) + std::exp(y - m));
}

std::optional<RewardProposal> propose_reward(const RewardPrior& prior, const Vector& current, const MhSettings& mh,
                                             Rng& rng) {
    if (std::isinf(mh.reward_precision)) return RewardProposal{current, 0.0};
    const double kappa = mh.reward_precision;
    const double floor = mh.reward_floor;
    const double p_prior = mh.prior_proposal_probability;
    std::uniform_real_distribution<double> u(0.0, 1.0);

    if (const auto* dir = std::get_if<DirichletRewardPrior>(&prior)) {
        Vector proposed = u(rng) < p_prior ? sample_dirichlet(dir->concentration, rng)
                                           : propose_dirichlet(current, kappa, floor, rng);
        if ((proposed.array() <= 0.0).any()) return std::nullopt;
        auto log_q = [&](const Vector& to, const Vector& from) {
            return log_mixture(p_prior, log_dirichlet_pdf(to, dir->concentration),
                               log_dirichlet_proposal(to, from, kappa, floor));
        };
        const double hastings = log_q(current, proposed) - log_q(proposed, current);
        return RewardProposal{std::move(proposed), hastings};
    }
    if (const auto* beta = std::get_if<BetaProductRewardPrior>(&prior)) {
        const bool independent = u(rng) < p_prior;
        Vector proposed(current.size());
        for (Eigen::Index s = 0; s < current.size(); ++s) {
            proposed[s] = independent ? sample_beta(beta->alpha[s], beta->beta[s], rng)
                                      : sample_beta(kappa * current[s] + floor, kappa * (1.0 - current[s]) + floor, rng);
        }
        if ((proposed.array() <= 0.0).any() || (proposed.array() >= 1.0).any()) return std::nullopt;
        auto log_q = [&](const Vector& to, const Vector& from) {
            double indep = 0.0;
            double local = 0.0;
            for (Eigen::Index s = 0; s < to.size(); ++s) {
                indep += log_beta_pdf(to[s], beta->alpha[s], beta->beta[s]);
                local += log_beta_pdf(to[s], kappa * from[s] + floor, kappa * (1.0 - from[s]) + floor);
            }
            return log_mixture(p_prior, indep, local);
        };
        const double hastings = log_q(current, proposed) - log_q(proposed, current);
        return RewardProposal{std::move(proposed), hastings};
    }
    // discrete hypotheses: symmetric independent proposal
    const auto& discrete = std::get<DiscreteRewardPrior>(prior);
    std::uniform_int_distribution<std::size_t> pick(0, discrete.hypotheses.size() - 1);
    return RewardProposal{discrete.hypotheses[pick(rng)].values(), 0.0};
}

class MhChain {
public:
    MhChain(const Cmp& cmp, const DemoSet& demos, const Hyperprior& hyper, const MhSettings& mh, QCache& cache,
            Rng& rng, std::map<std::string, AcceptanceStats>& acceptance)
        : demos_(demos), hyper_(hyper), mh_(mh), cache_(cache), rng_(rng), acceptance_(acceptance) {
        (void)cmp;
    }

    ChainState initial_state() {
        ChainState state{sample_hyper(hyper_, rng_), {}, {}, {}, {}};
        for (std::size_t m = 0; m < demos_.n_tasks(); ++m) {
            Vector r = nudge_into_support(state.prior.reward, sample_reward(state.prior.reward, rng_).values());
            const double eta = state.prior.temperature.sample(rng_);
            Matrix q = cache_.q_star(r);
            state.log_likelihoods.push_back(task_log_likelihood(demos_, m, q, eta));
            state.rewards.push_back(std::move(r));
            state.etas.push_back(eta);
            state.q.push_back(std::move(q));
        }
        return state;
    }

    void sweep(ChainState& state) {
        update_concentration(state);
        update_temperature_hyper(state);
        for (std::size_t m = 0; m < demos_.n_tasks(); ++m) {
            update_reward(state, m);
            update_eta(state, m);
        }
    }

private:
    double rewards_log_prior(const RewardPrior& prior, const ChainState& state) const {
        double total = 0.0;
        for (const auto& r : state.rewards) total += log_density(prior, r);
        return total;
    }

    double etas_log_prior(const TemperaturePrior& prior, const ChainState& state) const {
        double total = 0.0;
        for (double eta : state.etas) total += prior.log_density(eta);
        return total;
    }

    void update_concentration(ChainState& state) {
        const auto* h = std::get_if<ConcentrationHyper>(&hyper_.reward);
        if (!h || !(mh_.hyper_step > 0.0)) return;
        auto& stats = acceptance_["concentration"];
        Vector& conc = std::get<DirichletRewardPrior>(state.prior.reward).concentration;
        double current_lp = rewards_log_prior(state.prior.reward, state);
        for (Eigen::Index i = 0; i < conc.size(); ++i) {
            const double old_value = conc[i];
            const double new_value = log_normal_step(old_value, mh_.hyper_step, rng_);
            if (!(new_value > 0.0) || !std::isfinite(new_value)) {
                ++stats.proposed;
                continue;
            }
            conc[i] = new_value;
            const double proposed_lp = rewards_log_prior(state.prior.reward, state);
            const double log_ratio = log_gamma_pdf(new_value, h->shape, h->rate) -
                                     log_gamma_pdf(old_value, h->shape, h->rate) + proposed_lp - current_lp +
                                     std::log(new_value / old_value);
            if (metropolis_accept(log_ratio, rng_, &stats)) {
                current_lp = proposed_lp;
            } else {
                conc[i] = old_value;
            }
        }
    }

    void update_temperature_hyper(ChainState& state) {
        const auto* h = std::get_if<TemperatureHyper>(&hyper_.temperature);
        if (!h || !(mh_.hyper_step > 0.0)) return;
        auto& stats = acceptance_["temperature-hyper"];
        TemperaturePrior& prior = state.prior.temperature;
        double current_lp = etas_log_prior(prior, state);
        for (int which = 0; which < 2; ++which) {
            double& param = which == 0 ? prior.shape : prior.rate;
            const double hyper_shape = which == 0 ? h->shape_shape : h->rate_shape;
            const double hyper_rate = which == 0 ? h->shape_rate : h->rate_rate;
            const double old_value = param;
            const double new_value = log_normal_step(old_value, mh_.hyper_step, rng_);
            if (!(new_value > 0.0) || !std::isfinite(new_value)) {
                ++stats.proposed;
                continue;
            }
            param = new_value;
            const double proposed_lp = etas_log_prior(prior, state);
            const double log_ratio = log_gamma_pdf(new_value, hyper_shape, hyper_rate) -
                                     log_gamma_pdf(old_value, hyper_shape, hyper_rate) + proposed_lp - current_lp +
                                     std::log(new_value / old_value);
            if (metropolis_accept(log_ratio, rng_, &stats)) {
                current_lp = proposed_lp;
            } else {
                param = old_value;
            }
        }
    }

    void update_reward(ChainState& state, std::size_t m) {
        auto& stats = acceptance_["reward"];
        auto proposal = propose_reward(state.prior.reward, state.rewards[m], mh_, rng_);
        if (!proposal) {
            ++stats.proposed;
            return;
        }
        const double new_prior = log_density(state.prior.reward, proposal->reward);
        if (!std::isfinite(new_prior)) {
            ++stats.proposed;
            return;
        }
        const Matrix& q = cache_.q_star(proposal->reward);
        const double new_ll = task_log_likelihood(demos_, m, q, state.etas[m]);
        const double log_ratio = new_prior - log_density(state.prior.reward, state.rewards[m]) + new_ll -
                                 state.log_likelihoods[m] + proposal->log_hastings;
        if (metropolis_accept(log_ratio, rng_, &stats)) {
            state.q[m] = q;
            state.rewards[m] = std::move(proposal->reward);
            state.log_likelihoods[m] = new_ll;
        }
    }

    void update_eta(ChainState& state, std::size_t m) {
        const TemperaturePrior& prior = state.prior.temperature;
        if (prior.fixed || !(mh_.temperature_step > 0.0)) return;
        auto& stats = acceptance_["temperature"];
        const double old_eta = state.etas[m];
        const double new_eta = log_normal_step(old_eta, mh_.temperature_step, rng_);
        if (!(new_eta > 0.0) || !std::isfinite(new_eta)) {
            ++stats.proposed;
            return;
        }
        const double new_ll = task_log_likelihood(demos_, m, state.q[m], new_eta);
        const double log_ratio = prior.log_density(new_eta) - prior.log_density(old_eta) + new_ll -
                                 state.log_likelihoods[m] + std::log(new_eta / old_eta);
        if (metropolis_accept(log_ratio, rng_, &stats)) {
            state.etas[m] = new_eta;
            state.log_likelihoods[m] = new_ll;
        }
    }

    const DemoSet& demos_;
    const Hyperprior& hyper_;
    const MhSettings& mh_;
    QCache& cache_;
    Rng& rng_;
    std::map<std::string, AcceptanceStats>& acceptance_;
};

MtppSample record(const ChainState& state) {
    MtppSample s{state.prior, {}, state.etas, {}, state.log_likelihoods, 0.0};
    for (std::size_t m = 0; m < state.rewards.size(); ++m) {
        s.rewards.emplace_back(state.rewards[m]);
        s.policies.push_back(softmax_policy(state.q[m], state.etas[m]));
    }
    return s;
}

} // namespace

PosteriorEnsemble mtpp_mh(const Cmp& cmp, const DemoSet& demos, const Hyperprior& hyper, const MhSettings& mh,
                          SolverSettings solver, std::uint64_t seed) {
    if (mh.iterations == 0) throw InvalidInput("MH iteration count must be at least 1");
    if (mh.chains == 0) throw InvalidInput("MH chain count must be at least 1");
    if (!(mh.burn_in_fraction >= 0.0 && mh.burn_in_fraction < 1.0)) {
        throw InvalidInput("burn-in fraction must lie in [0, 1)");
    }
    if (!(mh.reward_precision > 0.0) || !(mh.reward_floor >= 0.0) || !(mh.temperature_step >= 0.0) ||
        !(mh.hyper_step >= 0.0) || !(mh.prior_proposal_probability >= 0.0 && mh.prior_proposal_probability <= 1.0)) {
        throw InvalidInput("invalid MH proposal settings");
    }
    check_problem(cmp, demos, hyper);

    const std::size_t per_chain = (mh.iterations + mh.chains - 1) / mh.chains;
    const auto burn_in = static_cast<std::size_t>(std::floor(mh.burn_in_fraction * static_cast<double>(per_chain)));

    PosteriorEnsemble ensemble;
    ensemble.n_tasks = demos.n_tasks();
    auto& diag = ensemble.diagnostics;
    diag.kind = SamplerKind::metropolis;
    diag.seed = seed;
    diag.requested = mh.iterations;
    diag.chains = mh.chains;
    diag.burn_in = burn_in;
    diag.max_log_likelihood = kNegInf;

    QCache cache(cmp, solver);
    std::vector<std::vector<double>> traces(mh.chains);
    for (std::size_t c = 0; c < mh.chains; ++c) {
        Rng rng = substream(seed, {stream::chain, c});
        MhChain chain(cmp, demos, hyper, mh, cache, rng, diag.acceptance);
        ChainState state = chain.initial_state();
        for (std::size_t it = 0; it < per_chain; ++it) {
            chain.sweep(state);
            if (it < burn_in) continue;
            const double joint = state.joint_log_likelihood();
            diag.max_log_likelihood = std::max(diag.max_log_likelihood, joint);
            traces[c].push_back(joint);
            ensemble.samples.push_back(record(state));
        }
    }
    if (ensemble.samples.empty()) throw InvalidInput("no post-burn-in samples; increase iterations");
    if (diag.max_log_likelihood <= kLogZero * 0.5) {
        throw DegeneratePosterior("no MH state explains the demonstrations", diag.max_log_likelihood);
    }
    const double w = 1.0 / static_cast<double>(ensemble.samples.size());
    for (auto& s : ensemble.samples) s.weight = w;
    diag.effective_sample_size = static_cast<double>(ensemble.samples.size());
    diag.potential_scale_reduction = potential_scale_reduction(traces);
    return ensemble;
}

StationaryPolicy posterior_policy(const PosteriorEnsemble& ensemble, std::size_t task, const Cmp& cmp,
                                  SolverSettings solver) {
    const RewardFunction mean = ensemble.mean_reward(task);
    return value_iteration(cmp, mean.values(), solver.discount, solver.tolerance).policy;
}

} // namespace mtirl
