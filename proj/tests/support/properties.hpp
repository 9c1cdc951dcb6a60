#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace props {

struct Outcome {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;

    bool passed() const { return failures == 0 && cases > 0; }
};

/// Names of the registered properties, in run order.
std::vector<std::string> names();

/// Runs every property on `cases` generated inputs. Case i of property p
/// draws from its own substream of `seed`, so outcomes are reproducible.
std::vector<Outcome> run_all(std::uint64_t seed, std::size_t cases);

} // namespace props
