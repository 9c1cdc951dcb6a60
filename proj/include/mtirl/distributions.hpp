#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mtirl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// The single random engine type used everywhere; all streams are derived
/// from a 64-bit master seed.
using Rng = std::mt19937_64;

/// Mixes a master seed with a path of integer keys (task index, chain index,
/// replication index, ...) into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

/// Engine for the substream addressed by `keys` under `master`.
Rng substream(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

/// Named tags for substreams so distinct consumers never collide.
namespace stream {
inline constexpr std::uint64_t hyper = 1;
inline constexpr std::uint64_t task = 2;
inline constexpr std::uint64_t chain = 3;
inline constexpr std::uint64_t replication = 4;
inline constexpr std::uint64_t policy = 5;
inline constexpr std::uint64_t hypotheses = 6;
inline constexpr std::uint64_t demo = 7;
inline constexpr std::uint64_t environment = 8;
} // namespace stream

/// Gamma(shape, rate) draw; mean shape/rate.
double sample_gamma(double shape, double rate, Rng& rng);

/// Dirichlet draw via normalized Gamma variates. Resamples in the (rare)
/// event that every Gamma variate underflows to zero.
Vector sample_dirichlet(const Vector& concentration, Rng& rng);

double sample_beta(double a, double b, Rng& rng);

/// Log densities. They return -infinity outside the support.
double log_gamma_pdf(double x, double shape, double rate);
double log_dirichlet_pdf(const Vector& x, const Vector& concentration);
double log_beta_pdf(double x, double a, double b);

/// log(sum(exp(values))) with max-shift; -inf for an empty input.
double log_sum_exp(const Vector& values);

} // namespace mtirl
