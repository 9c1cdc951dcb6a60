#include "mtirl/baselines.hpp"

#include "mtirl/errors.hpp"

#include <cmath>

namespace mtirl {

FeatureMap::FeatureMap(Matrix features) : features_(std::move(features)) {
    if (features_.size() == 0) throw InvalidInput("feature map must be nonempty");
    if (!features_.allFinite() || (features_.array() < 0.0).any() || (features_.array() > 1.0).any()) {
        throw InvalidInput("feature values must lie in [0, 1]");
    }
}

FeatureMap FeatureMap::state_indicators(std::size_t n_states) {
    const auto n = static_cast<Eigen::Index>(n_states);
    return FeatureMap(Matrix::Identity(n, n));
}

StationaryPolicy imitator(std::span<const Demonstration> demos, const PolicyDirichletPrior& prior) {
    return policy_posterior(prior, demos).mean();
}

Vector empirical_feature_expectations(std::span<const Demonstration> demos, const FeatureMap& features,
                                      double discount) {
    if (demos.empty()) throw InvalidInput("feature expectations need at least one demonstration");
    const Matrix& phi = features.features();
    Vector total = Vector::Zero(phi.cols());
    for (const auto& d : demos) {
        double weight = 1.0;
        for (std::size_t t = 0; t < d.length() && weight >= 1e-9; ++t) {
            if (d.states[t] >= static_cast<std::size_t>(phi.rows())) throw InvalidInput("state index out of range");
            total += weight * phi.row(static_cast<Eigen::Index>(d.states[t])).transpose();
            weight *= discount;
        }
    }
    return total / static_cast<double>(demos.size());
}

Vector feature_expectations(const Cmp& cmp, const StationaryPolicy& policy, const FeatureMap& features,
                            double discount, const Vector& start) {
    const PolicyEvaluator evaluator(cmp, policy, discount);
    const Matrix& phi = features.features();
    Vector mu(phi.cols());
    for (Eigen::Index i = 0; i < phi.cols(); ++i) mu[i] = start.dot(evaluator.evaluate(phi.col(i)));
    return mu;
}

MwalResult mwal(const Cmp& cmp, double discount, std::span<const Demonstration> demos, const FeatureMap& features,
                std::size_t iterations, double tolerance) {
    if (iterations == 0) throw InvalidInput("MWAL needs at least one iteration");
    if (static_cast<std::size_t>(features.features().rows()) != cmp.n_states()) {
        throw InvalidInput("feature map rows must match the number of states");
    }
    const Matrix& phi = features.features();
    const auto k = static_cast<double>(features.n_features());

    Vector start = Vector::Zero(phi.rows());
    for (const auto& d : demos) {
        d.validate(cmp.n_states(), cmp.n_actions());
        start[static_cast<Eigen::Index>(d.states.front())] += 1.0;
    }
    start /= start.sum();

    MwalResult result;
    result.expert_features = empirical_feature_expectations(demos, features, discount);
    const double beta = 1.0 / (1.0 + std::sqrt(2.0 * std::log(k) / static_cast<double>(iterations)));
    Vector w = Vector::Ones(phi.cols());
    for (std::size_t t = 0; t < iterations; ++t) {
        const Vector weights = w / w.sum();
        result.weight_history.push_back(weights);
        const Vector reward = (phi * weights).cwiseMax(0.0).cwiseMin(1.0);
        StationaryPolicy best = value_iteration(cmp, reward, discount, tolerance).policy;
        const Vector mu = feature_expectations(cmp, best, features, discount, start);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double g = ((1.0 - discount) * (mu[i] - result.expert_features[i]) + 2.0) / 4.0;
            w[i] *= std::pow(beta, g);
        }
        // keep the unnormalized weights away from underflow
        w /= w.maxCoeff();
        result.policy.components.push_back(std::move(best));
    }
    result.policy.weights.assign(iterations, 1.0 / static_cast<double>(iterations));
    return result;
}

} // namespace mtirl
