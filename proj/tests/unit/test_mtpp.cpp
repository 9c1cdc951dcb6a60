#include "doctest.h"

#include "generators.hpp"
#include "oracles.hpp"

#include "mtirl/baselines.hpp"
#include "mtirl/bench.hpp"
#include "mtirl/errors.hpp"
#include "mtirl/mtpp.hpp"
#include "mtirl/tasks.hpp"

#include <cmath>
#include <numeric>

using namespace mtirl;

namespace {

constexpr double kEta = 0.2;
constexpr double kGamma = 0.9;

Vector unit(std::size_t i) {
    Vector v = Vector::Zero(2);
    v[static_cast<Eigen::Index>(i)] = 1.0;
    return v;
}

Hyperprior two_point_prior(double eta) {
    return Hyperprior::fixed(DiscreteRewardPrior({RewardFunction(unit(0)), RewardFunction(unit(1))}),
                             TemperaturePrior::point_mass(eta));
}

/// T-step demonstrations on the stay/switch MDP from the softmax policy
/// that is optimal for `reward`.
Demonstration two_state_demo(const Vector& reward, std::size_t length, std::uint64_t seed, std::size_t task = 0) {
    const Cmp cmp = two_state_cmp();
    const auto sol = value_iteration(cmp, reward, kGamma);
    Rng rng(seed);
    return simulate(cmp, softmax_policy(sol.q, kEta), length, rng, task);
}

oracle::Vec exact_posterior(const std::vector<Demonstration>& demos) {
    std::vector<oracle::Trajectory> t;
    for (const auto& d : demos) t.push_back(gen::trajectory(d));
    return oracle::enumerate_posterior(gen::kernels(two_state_cmp()), {{1.0, 0.0}, {0.0, 1.0}}, kEta, kGamma, t);
}

/// Self-normalized importance sampling estimate of P(reward = unit(1)) and
/// its delta-method standard error.
std::pair<double, double> is_estimate(const PosteriorEnsemble& ens, std::size_t task) {
    const double p = ens.reward_mass(task, unit(1));
    double var = 0.0;
    for (const auto& s : ens.samples) {
        const double f = s.rewards[task].values() == unit(1) ? 1.0 : 0.0;
        var += s.weight * s.weight * (f - p) * (f - p);
    }
    return {p, std::sqrt(var)};
}

} // namespace

// ------------------------------------------------------------------
// importance sampler
// ------------------------------------------------------------------

TEST_CASE("flat likelihood gives uniform weights") {
    const DemoSet empty(3, 2, 1, {});
    const auto ens = mtpp_mc(chain_cmp(3, 0.2), empty, Hyperprior::standard(3), 50, {}, 1);
    REQUIRE(ens.samples.size() == 50);
    for (const auto& s : ens.samples) CHECK(s.weight == doctest::Approx(1.0 / 50.0).epsilon(1e-12));
}

TEST_CASE("a single sample carries all the weight") {
    const DemoSet set = DemoSet::from_demos(2, 2, {two_state_demo(unit(1), 20, 3)});
    const auto ens = mtpp_mc(two_state_cmp(), set, Hyperprior::standard(2), 1, {kGamma, kSolverTolerance}, 5);
    CHECK(ens.samples[0].weight == 1.0);
    CHECK(ens.mean_reward(0).values() == ens.samples[0].rewards[0].values());
}

TEST_CASE("importance sampler matches exact enumeration on a two-point reward set") {
    const Demonstration d = two_state_demo(unit(1), 50, 11);
    const DemoSet set = DemoSet::from_demos(2, 2, {d});
    const auto ens = mtpp_mc(two_state_cmp(), set, two_point_prior(kEta), 10000, {kGamma, kSolverTolerance}, 7);
    const auto [p, se] = is_estimate(ens, 0);
    const double exact = exact_posterior({d})[1];
    INFO("estimate " << p << " exact " << exact << " se " << se);
    CHECK(std::abs(p - exact) <= 3.0 * se);
    CHECK(ens.diagnostics.effective_sample_size > 100.0);
}

TEST_CASE("weights follow the stored log-likelihoods and ignore per-task offsets") {
    Rng rng(3);
    const Cmp cmp = gen::cmp(rng, 3, 2);
    const DemoSet set(3, 2, 2, {gen::demo(rng, 3, 2, 30, 0), gen::demo(rng, 3, 2, 30, 1)});
    const auto ens = mtpp_mc(cmp, set, Hyperprior::standard(3), 200, {0.9, kSolverTolerance}, 9);
    for (const double offset0 : {0.0, -350.0, 120.0}) {
        std::vector<double> logw;
        for (const auto& s : ens.samples) logw.push_back(s.log_likelihoods[0] + offset0 + s.log_likelihoods[1] - 17.0);
        const double mx = *std::max_element(logw.begin(), logw.end());
        double z = 0.0;
        for (double& x : logw) z += x = std::exp(x - mx);
        for (std::size_t k = 0; k < logw.size(); ++k) CHECK(std::abs(logw[k] / z - ens.samples[k].weight) <= 1e-12);
    }
}

TEST_CASE("fixed hyperparameters factorize the joint posterior") {
    // two tasks with opposite demonstrators; each marginal must equal its own single-task posterior
    const Demonstration d0 = two_state_demo(unit(0), 40, 21, 0);
    const Demonstration d1 = two_state_demo(unit(1), 40, 22, 1);
    const DemoSet set = DemoSet::from_demos(2, 2, {d0, d1});
    const auto ens = mtpp_mc(two_state_cmp(), set, two_point_prior(kEta), 20000, {kGamma, kSolverTolerance}, 13);
    for (std::size_t m = 0; m < 2; ++m) {
        const auto [p, se] = is_estimate(ens, m);
        const double exact = exact_posterior({m == 0 ? d0 : d1})[1];
        INFO("task " << m << " estimate " << p << " exact " << exact << " se " << se);
        CHECK(std::abs(p - exact) <= 3.0 * se);
    }
}

TEST_CASE("permuting tasks permutes the per-task estimates") {
    const Demonstration a = two_state_demo(unit(0), 30, 31);
    const Demonstration b = two_state_demo(unit(1), 30, 32);
    auto with_ids = [](Demonstration d, std::size_t id) {
        d.task_id = id;
        return d;
    };
    const SolverSettings solver{kGamma, kSolverTolerance};
    const auto ab = mtpp_mc(two_state_cmp(), DemoSet::from_demos(2, 2, {with_ids(a, 0), with_ids(b, 1)}),
                            two_point_prior(kEta), 20000, solver, 17);
    const auto ba = mtpp_mc(two_state_cmp(), DemoSet::from_demos(2, 2, {with_ids(b, 0), with_ids(a, 1)}),
                            two_point_prior(kEta), 20000, solver, 17);
    for (std::size_t m = 0; m < 2; ++m) {
        const auto [p, se] = is_estimate(ab, m);
        const auto [q, se2] = is_estimate(ba, 1 - m);
        CHECK(std::abs(p - q) <= 3.0 * std::sqrt(se * se + se2 * se2));
    }
}

TEST_CASE("degenerate posterior is reported with the best log-likelihood") {
    const Hyperprior hyper = Hyperprior::fixed(DiscreteRewardPrior({RewardFunction(unit(0))}), TemperaturePrior::point_mass(1e305));
    // switching away from the rewarding state is strictly suboptimal
    const DemoSet set = DemoSet::from_demos(2, 2, {Demonstration{0, {0}, {kSwitch}}});
    try {
        mtpp_mc(two_state_cmp(), set, hyper, 5, {kGamma, kSolverTolerance}, 1);
        FAIL("expected DegeneratePosterior");
    } catch (const DegeneratePosterior& e) {
        CHECK(e.max_log_likelihood() <= kLogZero * 0.5);
    }
}

TEST_CASE("invalid sampler inputs") {
    const DemoSet set = DemoSet::from_demos(2, 2, {two_state_demo(unit(1), 5, 1)});
    CHECK_THROWS_AS(mtpp_mc(two_state_cmp(), set, Hyperprior::standard(2), 0, {}, 1), InvalidInput);
    CHECK_THROWS_AS(mtpp_mc(chain_cmp(3, 0.2), set, Hyperprior::standard(3), 5, {}, 1), InvalidInput);
    MhSettings mh;
    mh.chains = 0;
    CHECK_THROWS_AS(mtpp_mh(two_state_cmp(), set, Hyperprior::standard(2), mh, {}, 1), InvalidInput);
    CHECK_THROWS_AS(DemoSet(2, 2, 1, {Demonstration{3, {0}, {0}}}), InvalidInput);
}

// ------------------------------------------------------------------
// Metropolis-Hastings sampler
// ------------------------------------------------------------------

TEST_CASE("zero step size never moves the chain") {
    Rng rng(4);
    const Cmp cmp = gen::cmp(rng, 3, 2);
    const DemoSet set = DemoSet::from_demos(3, 2, {gen::demo(rng, 3, 2, 20)});
    MhSettings mh;
    mh.iterations = 200;
    mh.reward_precision = std::numeric_limits<double>::infinity();
    mh.temperature_step = 0.0;
    mh.hyper_step = 0.0;
    const auto ens = mtpp_mh(cmp, set, Hyperprior::standard(3), mh, {0.9, kSolverTolerance}, 3);
    REQUIRE(ens.samples.size() == 180);
    for (const auto& s : ens.samples) {
        CHECK(s.rewards[0].values() == ens.samples[0].rewards[0].values());
        CHECK(s.temperatures[0] == ens.samples[0].temperatures[0]);
    }
}

TEST_CASE("MH marginal matches exact enumeration on a two-point reward set") {
    const Demonstration d = two_state_demo(unit(1), 50, 11);
    const DemoSet set = DemoSet::from_demos(2, 2, {d});
    MhSettings mh;
    mh.iterations = 11112; // 10000 after burn-in
    const auto ens = mtpp_mh(two_state_cmp(), set, two_point_prior(kEta), mh, {kGamma, kSolverTolerance}, 19);
    REQUIRE(ens.samples.size() >= 10000);
    std::vector<double> trace;
    for (const auto& s : ens.samples) trace.push_back(s.rewards[0].values() == unit(1) ? 1.0 : 0.0);
    const double p = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(trace.size());
    const double se = batch_means_standard_error(trace);
    const double exact = exact_posterior({d})[1];
    INFO("estimate " << p << " exact " << exact << " se " << se);
    CHECK(std::abs(p - exact) <= 3.0 * se);
    CHECK(ens.diagnostics.acceptance.count("reward") == 1);
}

TEST_CASE("MH chains split the budget and pool uniformly") {
    Rng rng(6);
    const Cmp cmp = gen::cmp(rng, 3, 2);
    const DemoSet set = DemoSet::from_demos(3, 2, {gen::demo(rng, 3, 2, 20, 0), gen::demo(rng, 3, 2, 20, 1)});
    MhSettings mh;
    mh.iterations = 400;
    mh.chains = 4;
    const auto ens = mtpp_mh(cmp, set, Hyperprior::standard(3), mh, {0.9, kSolverTolerance}, 8);
    CHECK(ens.samples.size() == 360);
    CHECK(ens.diagnostics.chains == 4);
    CHECK(ens.diagnostics.burn_in == 10);
    CHECK(std::isfinite(ens.diagnostics.potential_scale_reduction));
    for (const auto& s : ens.samples) CHECK(s.weight == doctest::Approx(1.0 / 360.0));
}

// ------------------------------------------------------------------
// posterior policy
// ------------------------------------------------------------------

TEST_CASE("posterior policy of a concentrated ensemble is the optimal policy") {
    const Task chain = make_chain(ChainSpec{});
    const Hyperprior hyper = Hyperprior::fixed(DiscreteRewardPrior({chain.reward}), TemperaturePrior::point_mass(1.0));
    const DemoSet set(5, 2, 1, {});
    const SolverSettings solver{0.95, kSolverTolerance};
    const auto ens = mtpp_mc(*chain.cmp, set, hyper, 10, solver, 1);
    CHECK(posterior_policy(ens, 0, *chain.cmp, solver).probs() == value_iteration(chain.mdp()).policy.probs());
}

TEST_CASE("uninformative data gives a near-uniform posterior mean reward") {
    const Hyperprior hyper = Hyperprior::fixed(DirichletRewardPrior::symmetric(4), TemperaturePrior::point_mass(1.0));
    const DemoSet set(4, 2, 1, {});
    const auto ens = mtpp_mc(chain_cmp(4, 0.2), set, hyper, 20000, {}, 2);
    CHECK((ens.mean_reward(0).values().array() - 0.25).abs().maxCoeff() <= 1e-2);
    CHECK_NOTHROW(posterior_policy(ens, 0, chain_cmp(4, 0.2), {}));
}

TEST_CASE("chain task: posterior policy beats the imitator on average") {
    const Task chain = make_chain(ChainSpec{});
    const Mdp mdp = chain.mdp();
    const StationaryPolicy demonstrator = make_demonstrator({DemonstratorKind::eps_greedy, 1e-2}, mdp);
    const SolverSettings solver{0.95, kSolverTolerance};
    double mtpp_total = 0.0, imitator_total = 0.0;
    const int runs = 40;
    for (int r = 0; r < runs; ++r) {
        Rng rng = substream(5, {stream::replication, static_cast<std::uint64_t>(r)});
        std::vector<Demonstration> demos;
        for (int i = 0; i < 10; ++i) demos.push_back(simulate(*chain.cmp, demonstrator, 10, rng));
        const DemoSet set = DemoSet::from_demos(5, 2, demos);
        const auto ens = mtpp_mc(*chain.cmp, set, Hyperprior::standard(5), 300, solver, static_cast<std::uint64_t>(r));
        mtpp_total += l1_loss(mdp, posterior_policy(ens, 0, *chain.cmp, solver));
        imitator_total += l1_loss(mdp, imitator(demos, PolicyDirichletPrior::uniform(5, 2)));
    }
    INFO("mtpp " << mtpp_total / runs << " imitator " << imitator_total / runs);
    CHECK(mtpp_total <= imitator_total);
}

TEST_CASE("Q cache memoizes solves") {
    const Cmp cmp = chain_cmp(4, 0.2);
    QCache cache(cmp, {0.9, kSolverTolerance}, 2);
    const Vector r = Vector::Constant(4, 0.25);
    const Matrix q = cache.q_star(r);
    CHECK(cache.q_star(r) == q);
    CHECK(cache.hits() == 1);
    CHECK(cache.misses() == 1);
    CHECK(q == value_iteration(cmp, r, 0.9).q);
}
