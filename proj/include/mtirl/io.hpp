#pragma once

#include "mtirl/mdp.hpp"
#include "mtirl/mtpo.hpp"
#include "mtirl/mtpp.hpp"

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace mtirl {

/**
 * Demonstrations file. Plain text, whitespace-separated integers, '#' starts
 * a comment. The first data line holds `n_states n_actions`; each further
 * line is one trajectory: `task_id s_0 a_0 s_1 a_1 ...`.
 */
struct DemoFile {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<Demonstration> demos;
};

/// Throws DataError on malformed rows, out-of-range indices or an empty file.
DemoFile read_demonstrations(std::istream& in);
DemoFile read_demonstrations(const std::string& path);

void write_demonstrations(std::ostream& out, std::size_t n_states, std::size_t n_actions,
                          const std::vector<Demonstration>& demos);

/// One posterior draw as stored on disk.
struct StoredSample {
    double weight = 0.0;
    std::vector<Vector> rewards;
    std::vector<double> temperatures;
};

/**
 * JSON-lines ensemble: one object per sample with keys `weight`, `rewards`
 * (one array per task), `temperatures` and `log_likelihoods`. Doubles are
 * written with round-trip precision.
 */
void write_ensemble_jsonl(std::ostream& out, const PosteriorEnsemble& ensemble);
std::vector<StoredSample> read_ensemble_jsonl(std::istream& in);

/// sum_k w_k rho_m^(k) over stored samples, accumulated in file order.
Vector stored_mean_reward(const std::vector<StoredSample>& samples, std::size_t task);

/**
 * JSON-lines reward posterior: first one `{"hypothesis": j, "reward": [...],
 * "measure": x}` line per hypothesis, then one `{"task": m, "posterior":
 * [...]}` line per task.
 */
void write_reward_posterior_jsonl(std::ostream& out, const MtpoResult& result);

struct StoredRewardPosterior {
    std::vector<Vector> hypotheses;
    std::vector<Vector> posteriors; ///< one per task
};

StoredRewardPosterior read_reward_posterior_jsonl(std::istream& in);

} // namespace mtirl
