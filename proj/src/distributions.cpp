#include "mtirl/distributions.hpp"

#include <cmath>
#include <limits>

namespace mtirl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

} // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(master);
    for (auto k : keys) {
        h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    }
    return h;
}

Rng substream(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    return Rng(derive_seed(master, keys));
}

double sample_gamma(double shape, double rate, Rng& rng) {
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(rng);
}

Vector sample_dirichlet(const Vector& concentration, Rng& rng) {
    Vector x(concentration.size());
    for (int attempt = 0;; ++attempt) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x[i] = sample_gamma(concentration[i], 1.0, rng);
            total += x[i];
        }
        if (total > 0.0 && std::isfinite(total)) {
            return x / total;
        }
        // all variates underflowed: tiny concentrations put the draw at a
        // vertex; pick it proportionally to the concentrations
        if (attempt >= 16) {
            std::discrete_distribution<Eigen::Index> vertex(concentration.data(),
                                                           concentration.data() + concentration.size());
            x.setZero();
            x[vertex(rng)] = 1.0;
            return x;
        }
    }
}

double sample_beta(double a, double b, Rng& rng) {
    for (;;) {
        const double x = sample_gamma(a, 1.0, rng);
        const double y = sample_gamma(b, 1.0, rng);
        if (x + y > 0.0) return x / (x + y);
    }
}

double log_gamma_pdf(double x, double shape, double rate) {
    if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_dirichlet_pdf(const Vector& x, const Vector& concentration) {
    double result = 0.0;
    double sum_alpha = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0)) return kNegInf;
        result += (concentration[i] - 1.0) * std::log(x[i]) - std::lgamma(concentration[i]);
        sum_alpha += concentration[i];
    }
    return result + std::lgamma(sum_alpha);
}

double log_beta_pdf(double x, double a, double b) {
    if (!(x > 0.0 && x < 1.0)) return kNegInf;
    return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) + std::lgamma(a + b) - std::lgamma(a) -
           std::lgamma(b);
}

double log_sum_exp(const Vector& values) {
    if (values.size() == 0) return kNegInf;
    const double m = values.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((values.array() - m).exp().sum());
}

} // namespace mtirl
