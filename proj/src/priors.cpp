#include "mtirl/priors.hpp"

#include "mtirl/errors.hpp"

#include <cmath>
#include <limits>

namespace mtirl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_positive(const Vector& v, const char* what) {
    if (v.size() == 0 || !v.allFinite() || (v.array() <= 0.0).any()) {
        throw InvalidInput(std::string(what) + " must be nonempty, finite and strictly positive");
    }
}

void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) throw InvalidInput(std::string(what) + " must be finite and > 0");
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

DirichletRewardPrior::DirichletRewardPrior(Vector c) : concentration(std::move(c)) {
    require_positive(concentration, "Dirichlet concentration");
}

DirichletRewardPrior DirichletRewardPrior::symmetric(std::size_t n_states, double value) {
    return DirichletRewardPrior(Vector::Constant(static_cast<Eigen::Index>(n_states), value));
}

BetaProductRewardPrior::BetaProductRewardPrior(Vector a, Vector b) : alpha(std::move(a)), beta(std::move(b)) {
    require_positive(alpha, "Beta alpha");
    require_positive(beta, "Beta beta");
    if (alpha.size() != beta.size()) throw InvalidInput("Beta-product shape vectors differ in length");
}

DiscreteRewardPrior::DiscreteRewardPrior(std::vector<RewardFunction> h) : hypotheses(std::move(h)) {
    if (hypotheses.empty()) throw InvalidInput("discrete reward prior needs at least one hypothesis");
    for (const auto& r : hypotheses) {
        if (r.size() != hypotheses.front().size()) throw InvalidInput("reward hypotheses differ in length");
    }
}

std::ptrdiff_t DiscreteRewardPrior::find(const Vector& reward) const {
    for (std::size_t j = 0; j < hypotheses.size(); ++j) {
        if (hypotheses[j].values() == reward) return static_cast<std::ptrdiff_t>(j);
    }
    return -1;
}

std::size_t n_states(const RewardPrior& prior) {
    return std::visit(overloaded{
                          [](const DirichletRewardPrior& p) { return static_cast<std::size_t>(p.concentration.size()); },
                          [](const BetaProductRewardPrior& p) { return static_cast<std::size_t>(p.alpha.size()); },
                          [](const DiscreteRewardPrior& p) { return p.hypotheses.front().size(); },
                      },
                      prior);
}

RewardFunction sample_reward(const RewardPrior& prior, Rng& rng) {
    return std::visit(overloaded{
                          [&](const DirichletRewardPrior& p) {
                              return RewardFunction::on_simplex(sample_dirichlet(p.concentration, rng));
                          },
                          [&](const BetaProductRewardPrior& p) {
                              Vector r(p.alpha.size());
                              for (Eigen::Index s = 0; s < r.size(); ++s) r[s] = sample_beta(p.alpha[s], p.beta[s], rng);
                              return RewardFunction(std::move(r));
                          },
                          [&](const DiscreteRewardPrior& p) {
                              std::uniform_int_distribution<std::size_t> pick(0, p.hypotheses.size() - 1);
                              return p.hypotheses[pick(rng)];
                          },
                      },
                      prior);
}

double log_density(const RewardPrior& prior, const Vector& reward) {
    return std::visit(overloaded{
                          [&](const DirichletRewardPrior& p) { return log_dirichlet_pdf(reward, p.concentration); },
                          [&](const BetaProductRewardPrior& p) {
                              double total = 0.0;
                              for (Eigen::Index s = 0; s < reward.size(); ++s) {
                                  total += log_beta_pdf(reward[s], p.alpha[s], p.beta[s]);
                              }
                              return total;
                          },
                          [&](const DiscreteRewardPrior& p) {
                              return p.find(reward) >= 0 ? -std::log(static_cast<double>(p.hypotheses.size()))
                                                         : kNegInf;
                          },
                      },
                      prior);
}

TemperaturePrior TemperaturePrior::gamma(double shape, double rate) {
    require_positive(shape, "temperature prior shape");
    require_positive(rate, "temperature prior rate");
    return TemperaturePrior{shape, rate, std::nullopt};
}

TemperaturePrior TemperaturePrior::point_mass(double eta) {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidInput("fixed inverse temperature must be finite and >= 0");
    return TemperaturePrior{1.0, 1.0, eta};
}

double TemperaturePrior::sample(Rng& rng) const {
    if (fixed) return *fixed;
    // Gamma draws can underflow to exactly 0 for tiny shapes; keep eta > 0
    for (;;) {
        const double eta = sample_gamma(shape, rate, rng);
        if (eta > 0.0) return eta;
    }
}

double TemperaturePrior::log_density(double eta) const {
    if (fixed) return eta == *fixed ? 0.0 : kNegInf;
    return log_gamma_pdf(eta, shape, rate);
}

Hyperprior Hyperprior::standard(std::size_t n_states) {
    return Hyperprior{ConcentrationHyper{n_states, 1.0, 10.0}, TemperatureHyper{}};
}

Hyperprior Hyperprior::fixed(RewardPrior reward, TemperaturePrior temperature) {
    return Hyperprior{std::move(reward), std::move(temperature)};
}

std::size_t Hyperprior::n_states() const {
    if (const auto* c = std::get_if<ConcentrationHyper>(&reward)) return c->n_states;
    return mtirl::n_states(std::get<RewardPrior>(reward));
}

PriorDraw sample_hyper(const Hyperprior& hyper, Rng& rng) {
    auto reward = std::visit(overloaded{
                                 [&](const ConcentrationHyper& h) -> RewardPrior {
                                     Vector c(static_cast<Eigen::Index>(h.n_states));
                                     for (Eigen::Index s = 0; s < c.size(); ++s) {
                                         do {
                                             c[s] = sample_gamma(h.shape, h.rate, rng);
                                         } while (!(c[s] > 0.0));
                                     }
                                     return DirichletRewardPrior(std::move(c));
                                 },
                                 [](const RewardPrior& p) { return p; },
                             },
                             hyper.reward);
    auto temperature = std::visit(overloaded{
                                      [&](const TemperatureHyper& h) {
                                          double a = 0.0;
                                          double b = 0.0;
                                          do {
                                              a = sample_gamma(h.shape_shape, h.shape_rate, rng);
                                          } while (!(a > 0.0));
                                          do {
                                              b = sample_gamma(h.rate_shape, h.rate_rate, rng);
                                          } while (!(b > 0.0));
                                          return TemperaturePrior::gamma(a, b);
                                      },
                                      [](const TemperaturePrior& p) { return p; },
                                  },
                                  hyper.temperature);
    return PriorDraw{std::move(reward), temperature};
}

double log_hyper_density(const Hyperprior& hyper, const PriorDraw& draw) {
    double total = 0.0;
    if (const auto* h = std::get_if<ConcentrationHyper>(&hyper.reward)) {
        const auto& c = std::get<DirichletRewardPrior>(draw.reward).concentration;
        for (Eigen::Index s = 0; s < c.size(); ++s) total += log_gamma_pdf(c[s], h->shape, h->rate);
    }
    if (const auto* h = std::get_if<TemperatureHyper>(&hyper.temperature)) {
        total += log_gamma_pdf(draw.temperature.shape, h->shape_shape, h->shape_rate);
        total += log_gamma_pdf(draw.temperature.rate, h->rate_shape, h->rate_rate);
    }
    return total;
}

PolicyDirichletPrior::PolicyDirichletPrior(Matrix concentration) : concentration_(std::move(concentration)) {
    if (concentration_.size() == 0 || !concentration_.allFinite() || (concentration_.array() <= 0.0).any()) {
        throw InvalidInput("policy prior concentration must be nonempty, finite and strictly positive");
    }
}

PolicyDirichletPrior PolicyDirichletPrior::uniform(std::size_t n_states, std::size_t n_actions, double value) {
    return PolicyDirichletPrior(
        Matrix::Constant(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_actions), value));
}

StationaryPolicy PolicyDirichletPrior::mean() const {
    Matrix p = concentration_;
    for (Eigen::Index s = 0; s < p.rows(); ++s) p.row(s) /= p.row(s).sum();
    return StationaryPolicy(std::move(p));
}

PolicyDirichletPrior PolicyDirichletPrior::scaled(double factor) const {
    require_positive(factor, "policy prior scale");
    return PolicyDirichletPrior(concentration_ * factor);
}

PolicyDirichletPrior policy_posterior(const PolicyDirichletPrior& prior, std::span<const Demonstration> demos) {
    ActionCounts counts(prior.n_states(), prior.n_actions());
    for (const auto& d : demos) counts.add(d);
    return PolicyDirichletPrior(prior.concentration() + counts.counts());
}

StationaryPolicy sample_policy(const PolicyDirichletPrior& posterior, Rng& rng) {
    const Matrix& c = posterior.concentration();
    Matrix p(c.rows(), c.cols());
    for (Eigen::Index s = 0; s < c.rows(); ++s) {
        p.row(s) = sample_dirichlet(c.row(s).transpose(), rng).transpose();
    }
    return StationaryPolicy(std::move(p));
}

OptimalityPrior::OptimalityPrior(double c) : rate(c) { require_positive(c, "optimality prior rate"); }

double exp_interval_mass(double c, double a, double b) {
    if (!(c > 0.0)) throw InvalidInput("exponential rate must be positive");
    if (!(a >= 0.0) || std::isnan(b) || b < a) throw InvalidInput("interval must satisfy 0 <= a <= b");
    if (std::isinf(b)) return std::exp(-c * a);
    // e^{-ca}(1 - e^{-c(b-a)}) keeps precision for narrow intervals
    return std::exp(-c * a) * -std::expm1(-c * (b - a));
}

} // namespace mtirl
