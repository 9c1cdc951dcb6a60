#pragma once

// Test-only reference implementations. They deliberately avoid the library
// and Eigen: plain nested vectors, textbook algorithms, no shortcuts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

/// Gaussian elimination with partial pivoting for A x = b.
inline Vec solve_linear(Mat a, Vec b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300) throw std::runtime_error("singular system");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    Vec x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

/// kernels[a][s][s'], policy[s][a].
inline Vec evaluate_policy(const std::vector<Mat>& kernels, const Mat& policy, const Vec& reward, double gamma) {
    const std::size_t n = reward.size();
    Mat a(n, Vec(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        a[s][s] = 1.0;
        for (std::size_t act = 0; act < kernels.size(); ++act)
            for (std::size_t t = 0; t < n; ++t) a[s][t] -= gamma * policy[s][act] * kernels[act][s][t];
    }
    return solve_linear(a, reward);
}

/// Optimal values by exhaustive search over deterministic stationary
/// policies (component-wise maximum of their exact values).
inline Vec optimal_values(const std::vector<Mat>& kernels, const Vec& reward, double gamma) {
    const std::size_t n = reward.size();
    const std::size_t na = kernels.size();
    std::vector<std::size_t> choice(n, 0);
    Vec best(n, -std::numeric_limits<double>::infinity());
    while (true) {
        Mat policy(n, Vec(na, 0.0));
        for (std::size_t s = 0; s < n; ++s) policy[s][choice[s]] = 1.0;
        const Vec v = evaluate_policy(kernels, policy, reward, gamma);
        for (std::size_t s = 0; s < n; ++s) best[s] = std::max(best[s], v[s]);
        std::size_t pos = 0;
        while (pos < n && ++choice[pos] == na) choice[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

inline Mat optimal_q(const std::vector<Mat>& kernels, const Vec& reward, double gamma) {
    const Vec v = optimal_values(kernels, reward, gamma);
    const std::size_t n = reward.size();
    Mat q(n, Vec(kernels.size(), 0.0));
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t a = 0; a < kernels.size(); ++a) {
            double acc = 0.0;
            for (std::size_t t = 0; t < n; ++t) acc += kernels[a][s][t] * v[t];
            q[s][a] = reward[s] + gamma * acc;
        }
    return q;
}

/// Left eigenvector of P for eigenvalue 1, normalized to sum one. Solves
/// (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
inline Vec stationary_distribution(const Mat& p) {
    const std::size_t n = p.size();
    Mat a(n, Vec(n, 0.0));
    Vec b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = p[j][i] - (i == j ? 1.0 : 0.0);
    for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
    b[n - 1] = 1.0;
    return solve_linear(a, b);
}

/// Softmax probabilities of one row, written from the definition.
inline Vec softmax_row(const Vec& q, double eta) {
    double mx = q[0];
    for (double x : q) mx = std::max(mx, x);
    Vec p(q.size());
    double z = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) z += p[a] = std::exp(eta * (q[a] - mx));
    for (double& x : p) x /= z;
    return p;
}

/// Trajectory as (state, action) pairs.
using Trajectory = std::vector<std::pair<std::size_t, std::size_t>>;

/**
 * Exact posterior over a finite reward set under a uniform prior and a
 * softmax demonstrator with known eta: enumerate every hypothesis and
 * normalize the likelihoods.
 */
inline Vec enumerate_posterior(const std::vector<Mat>& kernels, const std::vector<Vec>& hypotheses, double eta,
                               double gamma, const std::vector<Trajectory>& demos) {
    Vec log_l(hypotheses.size(), 0.0);
    for (std::size_t h = 0; h < hypotheses.size(); ++h) {
        const Mat q = optimal_q(kernels, hypotheses[h], gamma);
        for (const auto& demo : demos)
            for (auto [s, a] : demo) log_l[h] += std::log(softmax_row(q[s], eta)[a]);
    }
    const double mx = *std::max_element(log_l.begin(), log_l.end());
    Vec post(hypotheses.size());
    double z = 0.0;
    for (std::size_t h = 0; h < post.size(); ++h) z += post[h] = std::exp(log_l[h] - mx);
    for (double& x : post) x /= z;
    return post;
}

/**
 * Policy-optimality posterior by brute-force integration. For each policy
 * row of `losses`, integrates the normalized measure of {j : loss_j < eps}
 * against c exp(-c eps) with an n-point trapezoid rule on [0, 10 max loss]
 * and adds the analytic tail beyond it; rows are averaged and renormalized.
 */
inline Vec quadrature_posterior(const Mat& losses, const Vec& measure, double c, std::size_t points = 1000000) {
    const std::size_t nr = measure.size();
    Vec total(nr, 0.0);
    auto conditional = [&](const Vec& row, double eps, Vec& out) {
        double z = 0.0;
        for (std::size_t j = 0; j < nr; ++j) z += row[j] < eps ? measure[j] : 0.0;
        for (std::size_t j = 0; j < nr; ++j) out[j] = (z > 0.0 && row[j] < eps) ? measure[j] / z : 0.0;
    };
    Vec cond(nr);
    for (const Vec& row : losses) {
        const double eps_max = *std::max_element(row.begin(), row.end());
        const double upper = 10.0 * eps_max;
        if (upper > 0.0) {
            const double h = upper / static_cast<double>(points);
            for (std::size_t i = 0; i <= points; ++i) {
                const double eps = h * static_cast<double>(i);
                const double w = (i == 0 || i == points ? 0.5 : 1.0) * h * c * std::exp(-c * eps);
                conditional(row, eps, cond);
                for (std::size_t j = 0; j < nr; ++j) total[j] += w * cond[j];
            }
        }
        // beyond the range every reward qualifies
        conditional(row, std::max(upper, eps_max) + 1.0, cond);
        const double tail = std::exp(-c * upper);
        for (std::size_t j = 0; j < nr; ++j) total[j] += tail * cond[j];
    }
    double z = 0.0;
    for (double x : total) z += x;
    for (double& x : total) x /= z;
    return total;
}

/// Values of the 3-state deterministic chain with rewards (0.2, 0, 1) and
/// gamma = 0.95, solved by hand: V3 = 1/(1-g), V2 = g V3, V1 = 0.2 + g V2.
inline Vec chain3_optimal_values() { return {0.2 + 0.95 * 19.0, 0.95 * 20.0, 20.0}; }

/// The same chain under "always reset": V1 = 0.2/(1-g), V2 = g V1,
/// V3 = 1 + g V1.
inline Vec chain3_reset_values() { return {4.0, 0.95 * 4.0, 1.0 + 0.95 * 4.0}; }

} // namespace oracle
