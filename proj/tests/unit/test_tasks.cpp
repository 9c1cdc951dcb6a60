#include "doctest.h"

#include "mtirl/errors.hpp"
#include "mtirl/tasks.hpp"

#include <cmath>

using namespace mtirl;

namespace {

bool kernel_valid(const Cmp& cmp) {
    for (std::size_t a = 0; a < cmp.n_actions(); ++a) {
        const Matrix& k = cmp.kernel(a);
        if ((k.array() < 0.0).any()) return false;
        if (((k.rowwise().sum().array() - 1.0).abs() > 1e-12).any()) return false;
    }
    return true;
}

} // namespace

// ------------------------------------------------------------------
// chain
// ------------------------------------------------------------------

TEST_CASE("3-state chain without slip is deterministic") {
    const Cmp c = chain_cmp(3, 0.0);
    CHECK(c.kernel(kAdvance)(0, 1) == 1.0);
    CHECK(c.kernel(kAdvance)(1, 2) == 1.0);
    CHECK(c.kernel(kAdvance)(2, 2) == 1.0);
    for (Eigen::Index s = 0; s < 3; ++s) CHECK(c.kernel(kReset)(s, 0) == 1.0);
}

TEST_CASE("5-state chain defaults and slip structure") {
    const Task t = make_chain(ChainSpec{});
    Vector expected(5);
    expected << 0.2, 0.0, 0.0, 0.0, 1.0;
    CHECK(t.reward.values() == expected);
    CHECK(t.discount == 0.95);
    CHECK(kernel_valid(*t.cmp));
    const Matrix& adv = t.cmp->kernel(kAdvance);
    CHECK(adv(0, 1) == doctest::Approx(0.8));
    CHECK(adv(0, 2) == doctest::Approx(0.2));
    CHECK(adv(3, 4) == doctest::Approx(1.0));
    CHECK(adv(4, 4) == doctest::Approx(1.0));
    CHECK_THROWS_AS(chain_cmp(3, 1.5), InvalidInput);
    CHECK_THROWS_AS(chain_cmp(0, 0.2), InvalidInput);
}

TEST_CASE("generalized chain rewards") {
    Rng rng(1);
    const DirichletRewardPrior prior = DirichletRewardPrior::symmetric(5);
    Vector mean = Vector::Zero(5);
    for (int i = 0; i < 10000; ++i) {
        const Task t = make_generalized_chain(5, 0.2, 0.95, prior, rng);
        REQUIRE(std::abs(t.reward.values().sum() - 1.0) <= 1e-9);
        mean += t.reward.values();
    }
    CHECK(((mean / 1e4).array() - 0.2).abs().maxCoeff() <= 5e-3);
    Rng a(3), b(3);
    CHECK(make_generalized_chain(5, 0.2, 0.95, prior, a).reward.values() ==
          make_generalized_chain(5, 0.2, 0.95, prior, b).reward.values());
}

TEST_CASE("two-state stay/switch kernel") {
    const Cmp c = two_state_cmp();
    CHECK(c.kernel(kStay) == Matrix::Identity(2, 2));
    CHECK(c.kernel(kSwitch)(0, 1) == 1.0);
    CHECK(c.kernel(kSwitch)(1, 0) == 1.0);
}

// ------------------------------------------------------------------
// demonstrators
// ------------------------------------------------------------------

TEST_CASE("demonstrator limits") {
    const Mdp mdp = make_chain(ChainSpec{}).mdp();
    const StationaryPolicy greedy = value_iteration(mdp).policy;
    CHECK(make_demonstrator({DemonstratorKind::eps_greedy, 0.0}, mdp).probs() == greedy.probs());
    CHECK(make_demonstrator({DemonstratorKind::eps_greedy, 1.0}, mdp).probs() == Matrix::Constant(5, 2, 0.5));
    CHECK(make_demonstrator({DemonstratorKind::softmax, 0.0}, mdp).probs() == Matrix::Constant(5, 2, 0.5));
    const StationaryPolicy eps = make_demonstrator({DemonstratorKind::eps_greedy, 0.01}, mdp);
    CHECK(eps(0, kAdvance) == doctest::Approx(0.995));
    CHECK_THROWS_AS(make_demonstrator({DemonstratorKind::eps_greedy, 1.5}, mdp), InvalidInput);
}

// ------------------------------------------------------------------
// random MDP populations
// ------------------------------------------------------------------

TEST_CASE("random MDP population structure") {
    RandomMdpSpec spec;
    spec.n_tasks = 6;
    const Population pop = make_random_mdp_population(spec, 4);
    CHECK(kernel_valid(*pop.cmp));
    CHECK(pop.cmp->n_states() == 8);
    CHECK(pop.cmp->n_actions() == 2);
    REQUIRE(pop.rewards.size() == 6);
    for (std::size_t m = 0; m < 6; ++m) {
        CHECK(std::abs(pop.rewards[m].values().sum() - 1.0) <= 1e-9);
        CHECK(pop.etas[m] >= 2.0);
        CHECK(pop.etas[m] <= 8.0);
        const auto sol = value_iteration(pop.task(m).mdp());
        CHECK((pop.demonstrators[m].probs() - softmax_policy(sol.q, pop.etas[m]).probs()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("smaller populations are prefixes of larger ones") {
    RandomMdpSpec spec;
    spec.n_tasks = 1;
    const Population one = make_random_mdp_population(spec, 9);
    spec.n_tasks = 5;
    const Population five = make_random_mdp_population(spec, 9);
    CHECK(one.cmp->kernel(0) == five.cmp->kernel(0));
    CHECK(one.concentration == five.concentration);
    CHECK(one.rewards[0].values() == five.rewards[0].values());
    CHECK(one.etas[0] == five.etas[0]);
}

TEST_CASE("average concentration matches the Gamma mean") {
    RandomMdpSpec spec;
    spec.n_tasks = 1;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const Population p = make_random_mdp_population(spec, seed);
        sum += p.concentration.sum();
        count += static_cast<std::size_t>(p.concentration.size());
    }
    CHECK(std::abs(sum / static_cast<double>(count) - 0.1) <= 2e-3);
}

TEST_CASE("invalid population specs") {
    RandomMdpSpec spec;
    spec.eta_min = 5.0;
    spec.eta_max = 2.0;
    CHECK_THROWS_AS(make_random_mdp_population(spec, 1), InvalidInput);
    spec = RandomMdpSpec{};
    spec.n_tasks = 0;
    CHECK_THROWS_AS(make_random_mdp_population(spec, 1), InvalidInput);
}
