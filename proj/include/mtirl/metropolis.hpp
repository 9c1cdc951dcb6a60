#pragma once

#include "mtirl/distributions.hpp"

#include <cstddef>
#include <vector>

namespace mtirl {

struct AcceptanceStats {
    std::size_t proposed = 0;
    std::size_t accepted = 0;

    double rate() const noexcept {
        return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
    }
    AcceptanceStats& operator+=(const AcceptanceStats& o) noexcept {
        proposed += o.proposed;
        accepted += o.accepted;
        return *this;
    }
};

/**
 * Metropolis-Hastings accept/reject for a move whose log acceptance ratio
 * (target ratio plus Hastings correction) is `log_ratio`. A NaN ratio, which
 * arises only when both states have zero density, is rejected.
 */
bool metropolis_accept(double log_ratio, Rng& rng, AcceptanceStats* stats = nullptr);

/// Multiplicative log-normal step x * exp(sigma z). The Hastings log ratio of
/// the move is log(x'/x).
double log_normal_step(double x, double sigma, Rng& rng);

/// Dirichlet random-walk proposal on the simplex centred near `current`:
/// Dirichlet(precision * current + floor).
Vector propose_dirichlet(const Vector& current, double precision, double floor, Rng& rng);
double log_dirichlet_proposal(const Vector& to, const Vector& from, double precision, double floor);

/// Gelman-Rubin potential scale reduction for one scalar traced across
/// chains (equal lengths, >= 2 chains of >= 2 draws). Returns NaN otherwise.
double potential_scale_reduction(const std::vector<std::vector<double>>& chains);

/// Standard error of the mean of a correlated trace via non-overlapping
/// batch means.
double batch_means_standard_error(const std::vector<double>& trace, std::size_t n_batches = 50);

} // namespace mtirl
