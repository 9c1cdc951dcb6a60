#include "doctest.h"

#include "mtirl/distributions.hpp"
#include "mtirl/metropolis.hpp"

#include <cmath>
#include <vector>

using namespace mtirl;

// ------------------------------------------------------------------
// seeds and streams
// ------------------------------------------------------------------

TEST_CASE("derived seeds depend on every key") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(2, {2, 3}));
    CHECK(derive_seed(1, {2}) != derive_seed(1, {2, 0}));

    Rng a = substream(7, {stream::task, 4});
    Rng b = substream(7, {stream::task, 4});
    CHECK(a() == b());
}

TEST_CASE("gamma sampler mean and log density") {
    Rng rng(11);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += sample_gamma(2.0, 4.0, rng);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));

    // Gamma(1, rate) is exponential
    CHECK(log_gamma_pdf(0.3, 1.0, 2.0) == doctest::Approx(std::log(2.0) - 0.6));
    CHECK(std::isinf(log_gamma_pdf(-1.0, 1.0, 1.0)));
}

TEST_CASE("dirichlet sampler mean, support and density") {
    Rng rng(3);
    Vector c(2);
    c << 10.0, 1.0;
    Vector mean = Vector::Zero(2);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        Vector x = sample_dirichlet(c, rng);
        REQUIRE(std::abs(x.sum() - 1.0) <= 1e-9);
        mean += x;
    }
    mean /= n;
    CHECK(std::abs(mean[0] - 10.0 / 11.0) <= 5e-3);
    CHECK(std::abs(mean[1] - 1.0 / 11.0) <= 5e-3);

    // uniform Dirichlet on the 2-simplex has density Gamma(3) = 2
    Vector x(3);
    x << 0.2, 0.3, 0.5;
    CHECK(log_dirichlet_pdf(x, Vector::Ones(3)) == doctest::Approx(std::log(2.0)));

    // tiny concentrations must not produce an all-zero draw
    for (int i = 0; i < 1000; ++i) CHECK(sample_dirichlet(Vector::Constant(4, 1e-3), rng).sum() == doctest::Approx(1.0));
}

TEST_CASE("beta density and log-sum-exp") {
    CHECK(log_beta_pdf(0.5, 1.0, 1.0) == doctest::Approx(0.0));
    CHECK(log_beta_pdf(0.25, 2.0, 1.0) == doctest::Approx(std::log(0.5)));

    Vector v(3);
    v << 1000.0, 1000.0, -1e300;
    CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
    CHECK(std::isinf(log_sum_exp(Vector(0))));
}

// ------------------------------------------------------------------
// Metropolis-Hastings primitives
// ------------------------------------------------------------------

TEST_CASE("accept/reject satisfies detailed balance on a two-state target") {
    // target (0.3, 0.7), proposal always flips the state
    const double target[2] = {0.3, 0.7};
    Rng rng(5);
    int state = 0;
    double counts[2][2] = {{0, 0}, {0, 0}};
    const int steps = 1000000;
    for (int t = 0; t < steps; ++t) {
        const int proposed = 1 - state;
        const int next = metropolis_accept(std::log(target[proposed] / target[state]), rng) ? proposed : state;
        counts[state][next] += 1.0;
        state = next;
    }
    const double flow01 = counts[0][1] / steps;
    const double flow10 = counts[1][0] / steps;
    CHECK(std::abs(flow01 - flow10) <= 1e-2);
    const double visits0 = (counts[0][0] + counts[0][1]) / steps;
    CHECK(std::abs(visits0 - 0.3) <= 1e-2);
}

TEST_CASE("NaN log ratio is rejected and stats are counted") {
    Rng rng(1);
    AcceptanceStats stats;
    CHECK_FALSE(metropolis_accept(std::nan(""), rng, &stats));
    CHECK(metropolis_accept(0.0, rng, &stats));
    CHECK(stats.proposed == 2);
    CHECK(stats.accepted == 1);
}

TEST_CASE("dirichlet proposal density is normalized around the current point") {
    Rng rng(9);
    Vector cur(3);
    cur << 0.2, 0.3, 0.5;
    Vector mean = Vector::Zero(3);
    for (int i = 0; i < 20000; ++i) mean += propose_dirichlet(cur, 50.0, 0.1, rng);
    mean /= 20000.0;
    CHECK((mean - (50.0 * cur.array() + 0.1).matrix() / 50.3).cwiseAbs().maxCoeff() <= 5e-3);
    CHECK(log_dirichlet_proposal(cur, cur, 50.0, 0.1) ==
          doctest::Approx(log_dirichlet_pdf(cur, (50.0 * cur.array() + 0.1).matrix())));
}

TEST_CASE("chain diagnostics") {
    std::vector<std::vector<double>> same{{1, 2, 3, 4}, {1, 2, 3, 4}};
    CHECK(potential_scale_reduction(same) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-9));
    CHECK(std::isnan(potential_scale_reduction({{1, 2, 3}})));
    std::vector<std::vector<double>> apart{{0, 0.1, 0, 0.1}, {10, 10.1, 10, 10.1}};
    CHECK(potential_scale_reduction(apart) > 10.0);

    // independent draws: batch means agrees with sd / sqrt(n)
    Rng rng(2);
    std::normal_distribution<double> z;
    std::vector<double> trace(100000);
    for (auto& x : trace) x = z(rng);
    CHECK(batch_means_standard_error(trace) == doctest::Approx(1.0 / std::sqrt(1e5)).epsilon(0.3));
}
