#pragma once

#include <stdexcept>
#include <string>

namespace mtirl {

/// Malformed arguments to a numerical routine (bad shapes, non-finite values,
/// out-of-range indices).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Every importance weight underflowed: no sample explains the demonstrations.
class DegeneratePosterior : public std::runtime_error {
public:
    DegeneratePosterior(const std::string& what, double max_log_likelihood)
        : std::runtime_error(what + " (max log-likelihood " + std::to_string(max_log_likelihood) + ")"),
          max_log_likelihood_(max_log_likelihood) {}

    double max_log_likelihood() const noexcept { return max_log_likelihood_; }

private:
    double max_log_likelihood_;
};

/// Configuration file problems: unknown keys, bad values, unknown templates.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data files that cannot be parsed or do not match the environment.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mtirl
