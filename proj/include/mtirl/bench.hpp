#pragma once

#include "mtirl/baselines.hpp"
#include "mtirl/config.hpp"
#include "mtirl/mdp.hpp"
#include "mtirl/mtpo.hpp"
#include "mtirl/mtpp.hpp"
#include "mtirl/tasks.hpp"

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace mtirl {

/// sum_s V*(s) - V^pi(s), each term clamped at zero.
double l1_loss(const Mdp& mdp, const StationaryPolicy& policy, double tolerance = kSolverTolerance);

/// Loss of a mixed policy: the weighted average of its components' losses.
double l1_loss(const Mdp& mdp, const MixedPolicy& policy, double tolerance = kSolverTolerance);

/// Hyperprior described by the `prior.*` keys.
Hyperprior make_hyperprior(const Config& config, std::size_t n_states);

/// MH settings from the `mh.*` keys with the given sweep count and chains.
MhSettings make_mh_settings(const Config& config, std::size_t iterations, std::size_t chains);

/// Explicit hypotheses for the discrete prior, otherwise `mtpo.hypotheses`
/// draws from a symmetric Dirichlet(`prior.reward_concentration`).
std::variant<RewardHypothesisSet, HypothesisSampler> make_hypotheses(const Config& config, std::size_t n_states);

/// One (replication, method, x) measurement.
struct ResultRow {
    std::string experiment;
    std::uint64_t seed = 0; ///< replication seed
    std::size_t replication = 0;
    std::string method;
    double x = 0.0;
    double total_loss = 0.0;
    std::vector<double> task_losses;
};

struct ExperimentResult {
    std::string experiment;
    std::uint64_t master_seed = 0;
    std::size_t replications = 0;
    std::vector<ResultRow> rows; ///< sorted by (method, x, replication)
    double wall_seconds = 0.0;
};

/// Mean and standard error over replications of one (method, x) cell.
struct AggregateRow {
    std::string method;
    double x = 0.0;
    std::size_t runs = 0;
    double mean_total_loss = 0.0;
    double se_total_loss = 0.0;
    double mean_task_loss = 0.0; ///< total loss divided by the number of tasks
    double se_task_loss = 0.0;
};

std::vector<AggregateRow> aggregate(const ExperimentResult& result);

/// Aggregate cell lookup; throws InvalidInput when absent.
const AggregateRow& find_cell(const std::vector<AggregateRow>& rows, const std::string& method, double x);

/**
 * Per-run CSV: `experiment,seed,replication,method,x,total_loss,n_tasks`
 * followed by `loss_task_0 ...` up to the largest task count (empty cells
 * where a row has fewer tasks).
 */
void write_runs_csv(std::ostream& out, const ExperimentResult& result);

/// `experiment,method,x,runs,mean_total_loss,se_total_loss,mean_task_loss,se_task_loss`.
void write_summary_csv(std::ostream& out, const std::string& experiment, const std::vector<AggregateRow>& rows);

/// Tab-separated plot data, two columns (x, mean total loss) per method.
void write_series_tsv(std::ostream& out, const std::vector<AggregateRow>& rows);

/// Methods a template reports, in output order.
std::vector<std::string> template_methods(const Config& config);

/**
 * Runs `config.replications` seeded replications of the configured template
 * (template defaults are applied to a copy). Replication r uses the seed
 * derived from (seed, replication, r); results do not depend on the thread
 * count.
 */
ExperimentResult run_experiment(const Config& config);

/// Runs the experiment and writes `<out>/<experiment>_runs.csv`,
/// `_summary.csv` and `_series.tsv`.
ExperimentResult run_experiment_to_files(const Config& config);

/// Finite-hypothesis chain instance used to check the Monte Carlo error of
/// the policy-optimality estimator.
struct BoundCheckInstance {
    ChainSpec chain;
    std::size_t n_hypotheses = 20;
    double hypothesis_concentration = 1.0;
    DemonstratorSpec demonstrator;
    std::size_t demo_length = 100;
    double optimality_rate = 1.0;
    std::size_t reference_policies = 100000;
    std::uint64_t seed = 1;
};

struct BoundCheckRow {
    std::size_t k = 0;
    double bound = 0.0;
    double mean_error = 0.0;
    double standard_error = 0.0;
    double max_error = 0.0;
};

/**
 * For each K, runs the policy-optimality estimator `replications` times with
 * K sampled policies and records |V_ref - V_K|_inf, where V is the optimal
 * value of the posterior-expected reward and V_ref comes from one run with
 * `reference_policies` policies. Demonstrations and hypotheses are fixed by
 * the instance seed.
 */
std::vector<BoundCheckRow> error_bound_check(const std::vector<std::size_t>& k_values, const BoundCheckInstance& instance,
                                          std::size_t replications);

} // namespace mtirl
