#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <vector>

namespace mtirl {

/// Names of the registered experiment templates.
inline const std::vector<std::string>& experiment_templates() {
    static const std::vector<std::string> names{
        "sampler-comparison",       "model-comparison",          "multitask-gain", "data-efficiency",
        "random-mdp-temperature-sweep", "random-mdp-task-sweep",
    };
    return names;
}

/**
 * Experiment and inference configuration, read from a `key = value` text
 * file ('#' starts a comment, list values are comma separated, reward
 * hypotheses are ';'-separated vectors). Unknown keys are rejected. Keys not
 * given in the file keep the defaults below or, for `run`, the defaults of
 * the chosen template.
 */
struct Config {
    std::string experiment;
    std::uint64_t seed = 1;
    std::size_t replications = 30;
    std::string out = "results";
    std::size_t threads = 0; ///< 0: hardware concurrency
    std::vector<std::string> methods; ///< empty: every method of the template

    // environment
    std::string env_kind = "chain"; ///< chain | generalized-chain | random-mdp | two-state
    std::size_t n_states = 5;
    std::size_t n_actions = 2;
    double slip = 0.2;
    std::vector<double> rewards; ///< chain / two-state rewards; empty selects the default
    double discount = 0.95;
    double transition_concentration = 1.0;
    double env_hyper_shape = 1.0;
    double env_hyper_rate = 10.0;
    double env_reward_concentration = 1.0; ///< generalized chain Dirichlet
    std::size_t n_tasks = 20;

    // demonstrations
    std::string demo_kind = "eps-greedy"; ///< eps-greedy | softmax
    double demo_epsilon = 0.01;
    double demo_eta = 8.0;
    double demo_eta_min = 2.0;
    double demo_eta_max = 8.0;
    std::size_t demo_length = 1000;
    std::size_t demo_total = 10;

    // sweeps
    std::vector<std::size_t> sweep_samples{100, 1000, 10000};
    std::vector<std::size_t> sweep_tasks{1, 2, 5, 10};
    std::vector<double> sweep_temperatures{2.0, 4.0, 6.0, 8.0};
    std::vector<std::size_t> sweep_chains{1, 2, 4, 8};

    // priors
    std::string reward_prior = "dirichlet-hyper"; ///< dirichlet-hyper | dirichlet | discrete
    double concentration_shape = 1.0;
    double concentration_rate = 10.0;
    double reward_concentration = 1.0;
    std::vector<std::vector<double>> hypotheses;
    std::string temperature_prior = "gamma-hyper"; ///< gamma-hyper | gamma | fixed
    double alpha_shape = 1.0;
    double alpha_rate = 1.0;
    double beta_shape = 1.0;
    double beta_rate = 1.0;
    double temperature_shape = 1.0;
    double temperature_rate = 1.0;
    double eta = 1.0;
    double policy_concentration = 1.0;

    // samplers
    std::size_t mc_samples = 1000;
    std::size_t mh_iterations = 2000;
    std::size_t mh_chains = 1;
    double mh_burn_in = 0.1;
    double mh_precision = 50.0;
    double mh_floor = 0.1;
    double mh_prior_mix = 0.2;
    double mh_eta_step = 0.25;
    double mh_hyper_step = 0.25;
    std::size_t mtpo_policies = 100;
    std::size_t mtpo_hypotheses = 100;
    double mtpo_rate = 1.0;
    std::size_t mwal_iterations = 100;

    /// Keys explicitly present in the parsed file.
    std::set<std::string> explicit_keys;

    bool has(const std::string& key) const { return explicit_keys.count(key) != 0; }
};

/// Parses the text format; throws ConfigError naming the offending key or line.
Config parse_config(std::istream& in);
Config load_config(const std::string& path);

/// Range checks on every parameter; throws ConfigError naming the bad key.
void validate_config(const Config& config);

/// Fills keys the file left unset with the defaults of `config.experiment`.
/// Throws ConfigError for an unknown template name.
void apply_template_defaults(Config& config);

/// Every accepted key, for documentation and the `validate` command.
const std::vector<std::string>& config_keys();

} // namespace mtirl
