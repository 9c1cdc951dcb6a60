#include "mtirl/metropolis.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace mtirl {

bool metropolis_accept(double log_ratio, Rng& rng, AcceptanceStats* stats) {
    if (stats) ++stats->proposed;
    bool accept = false;
    if (log_ratio >= 0.0) {
        accept = true;
    } else if (!std::isnan(log_ratio)) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        accept = std::log(u(rng)) < log_ratio;
    }
    if (accept && stats) ++stats->accepted;
    return accept;
}

double log_normal_step(double x, double sigma, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    return x * std::exp(sigma * z(rng));
}

Vector propose_dirichlet(const Vector& current, double precision, double floor, Rng& rng) {
    const Vector alpha = (precision * current).array() + floor;
    return sample_dirichlet(alpha, rng);
}

double log_dirichlet_proposal(const Vector& to, const Vector& from, double precision, double floor) {
    const Vector alpha = (precision * from).array() + floor;
    return log_dirichlet_pdf(to, alpha);
}

double potential_scale_reduction(const std::vector<std::vector<double>>& chains) {
    const std::size_t m = chains.size();
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t n = chains.front().size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    for (const auto& c : chains) {
        if (c.size() != n) return std::numeric_limits<double>::quiet_NaN();
    }
    std::vector<double> means(m);
    double within = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        means[j] = std::accumulate(chains[j].begin(), chains[j].end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double x : chains[j]) ss += (x - means[j]) * (x - means[j]);
        within += ss / static_cast<double>(n - 1);
    }
    within /= static_cast<double>(m);
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
    double between = 0.0;
    for (double mu : means) between += (mu - grand) * (mu - grand);
    between *= static_cast<double>(n) / static_cast<double>(m - 1);
    if (within <= 0.0) return between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    const double nd = static_cast<double>(n);
    const double var_plus = (nd - 1.0) / nd * within + between / nd;
    return std::sqrt(var_plus / within);
}

double batch_means_standard_error(const std::vector<double>& trace, std::size_t n_batches) {
    if (n_batches < 2 || trace.size() < 2 * n_batches) {
        // too short for batching: plain iid standard error
        const double n = static_cast<double>(trace.size());
        if (trace.size() < 2) return 0.0;
        const double mean = std::accumulate(trace.begin(), trace.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : trace) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / (n - 1.0) / n);
    }
    const std::size_t batch = trace.size() / n_batches;
    std::vector<double> means(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        const auto first = trace.begin() + static_cast<std::ptrdiff_t>(b * batch);
        means[b] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(batch), 0.0) / static_cast<double>(batch);
    }
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(n_batches);
    double ss = 0.0;
    for (double mu : means) ss += (mu - grand) * (mu - grand);
    return std::sqrt(ss / static_cast<double>(n_batches - 1) / static_cast<double>(n_batches));
}

} // namespace mtirl
