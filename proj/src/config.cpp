#include "mtirl/config.hpp"

#include "mtirl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mtirl {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) parts.push_back(trim(item));
    return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    throw ConfigError("key '" + key + "': invalid value '" + value + "' (expected " + expected + ")");
}

double to_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(value, &used);
    } catch (const std::exception&) {
        bad_value(key, value, "a number");
    }
    if (used != value.size() || !std::isfinite(x)) bad_value(key, value, "a finite number");
    return x;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
        bad_value(key, value, "a non-negative integer");
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        bad_value(key, value, "a non-negative integer");
    }
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& part : split(value, ',')) out.push_back(to_double(key, part));
    if (out.empty()) bad_value(key, value, "a comma separated list of numbers");
    return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    for (const auto& part : split(value, ',')) out.push_back(to_unsigned(key, part));
    if (out.empty()) bad_value(key, value, "a comma separated list of integers");
    return out;
}

std::string to_choice(const std::string& key, const std::string& value, const std::vector<std::string>& choices) {
    if (std::find(choices.begin(), choices.end(), value) == choices.end()) {
        std::string list;
        for (const auto& c : choices) list += (list.empty() ? "" : " | ") + c;
        bad_value(key, value, list);
    }
    return value;
}

using Setter = std::function<void(Config&, const std::string& key, const std::string& value)>;

template <typename T> Setter number(T Config::*field) {
    return [field](Config& c, const std::string& k, const std::string& v) {
        if constexpr (std::is_same_v<T, double>)
            c.*field = to_double(k, v);
        else
            c.*field = static_cast<T>(to_unsigned(k, v));
    };
}

Setter choice(std::string Config::*field, std::vector<std::string> choices) {
    return [field, choices](Config& c, const std::string& k, const std::string& v) {
        c.*field = to_choice(k, v, choices);
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table{
        {"experiment", [](Config& c, const std::string&, const std::string& v) { c.experiment = v; }},
        {"seed", number(&Config::seed)},
        {"replications", number(&Config::replications)},
        {"out", [](Config& c, const std::string&, const std::string& v) { c.out = v; }},
        {"threads", number(&Config::threads)},
        {"methods",
         [](Config& c, const std::string&, const std::string& v) {
             c.methods.clear();
             for (const auto& m : split(v, ','))
                 if (!m.empty()) c.methods.push_back(m);
         }},

        {"env.kind", choice(&Config::env_kind, {"chain", "generalized-chain", "random-mdp", "two-state"})},
        {"env.states", number(&Config::n_states)},
        {"env.actions", number(&Config::n_actions)},
        {"env.slip", number(&Config::slip)},
        {"env.rewards", [](Config& c, const std::string& k, const std::string& v) { c.rewards = to_doubles(k, v); }},
        {"env.discount", number(&Config::discount)},
        {"env.transition_concentration", number(&Config::transition_concentration)},
        {"env.hyper_shape", number(&Config::env_hyper_shape)},
        {"env.hyper_rate", number(&Config::env_hyper_rate)},
        {"env.reward_concentration", number(&Config::env_reward_concentration)},
        {"env.tasks", number(&Config::n_tasks)},

        {"demo.kind", choice(&Config::demo_kind, {"eps-greedy", "softmax"})},
        {"demo.epsilon", number(&Config::demo_epsilon)},
        {"demo.eta", number(&Config::demo_eta)},
        {"demo.eta_min", number(&Config::demo_eta_min)},
        {"demo.eta_max", number(&Config::demo_eta_max)},
        {"demo.length", number(&Config::demo_length)},
        {"demo.total", number(&Config::demo_total)},

        {"sweep.samples",
         [](Config& c, const std::string& k, const std::string& v) { c.sweep_samples = to_sizes(k, v); }},
        {"sweep.tasks", [](Config& c, const std::string& k, const std::string& v) { c.sweep_tasks = to_sizes(k, v); }},
        {"sweep.temperatures",
         [](Config& c, const std::string& k, const std::string& v) { c.sweep_temperatures = to_doubles(k, v); }},
        {"sweep.chains",
         [](Config& c, const std::string& k, const std::string& v) { c.sweep_chains = to_sizes(k, v); }},

        {"prior.reward", choice(&Config::reward_prior, {"dirichlet-hyper", "dirichlet", "discrete"})},
        {"prior.concentration_shape", number(&Config::concentration_shape)},
        {"prior.concentration_rate", number(&Config::concentration_rate)},
        {"prior.reward_concentration", number(&Config::reward_concentration)},
        {"prior.hypotheses",
         [](Config& c, const std::string& k, const std::string& v) {
             c.hypotheses.clear();
             for (const auto& h : split(v, ';'))
                 if (!h.empty()) c.hypotheses.push_back(to_doubles(k, h));
             if (c.hypotheses.empty()) bad_value(k, v, "';'-separated reward vectors");
         }},
        {"prior.temperature", choice(&Config::temperature_prior, {"gamma-hyper", "gamma", "fixed"})},
        {"prior.alpha_shape", number(&Config::alpha_shape)},
        {"prior.alpha_rate", number(&Config::alpha_rate)},
        {"prior.beta_shape", number(&Config::beta_shape)},
        {"prior.beta_rate", number(&Config::beta_rate)},
        {"prior.temperature_shape", number(&Config::temperature_shape)},
        {"prior.temperature_rate", number(&Config::temperature_rate)},
        {"prior.eta", number(&Config::eta)},
        {"prior.policy_concentration", number(&Config::policy_concentration)},

        {"mc.samples", number(&Config::mc_samples)},
        {"mh.iterations", number(&Config::mh_iterations)},
        {"mh.chains", number(&Config::mh_chains)},
        {"mh.burn_in", number(&Config::mh_burn_in)},
        {"mh.precision", number(&Config::mh_precision)},
        {"mh.floor", number(&Config::mh_floor)},
        {"mh.prior_mix", number(&Config::mh_prior_mix)},
        {"mh.eta_step", number(&Config::mh_eta_step)},
        {"mh.hyper_step", number(&Config::mh_hyper_step)},
        {"mtpo.policies", number(&Config::mtpo_policies)},
        {"mtpo.hypotheses", number(&Config::mtpo_hypotheses)},
        {"mtpo.rate", number(&Config::mtpo_rate)},
        {"mwal.iterations", number(&Config::mwal_iterations)},
    };
    return table;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError("key '" + key + "': " + what);
}

void set_default(Config& c, const std::string& key, const std::string& value) {
    if (c.has(key)) return;
    setters().at(key)(c, key, value);
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& entry : setters()) k.push_back(entry.first);
        return k;
    }();
    return keys;
}

Config parse_config(std::istream& in) {
    Config config;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number) + ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError("line " + std::to_string(number) + ": unknown key '" + key + "'");
        if (value.empty()) throw ConfigError("key '" + key + "': empty value");
        if (config.has(key)) throw ConfigError("key '" + key + "': given more than once");
        it->second(config, key, value);
        config.explicit_keys.insert(key);
    }
    return config;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return parse_config(in);
}

void apply_template_defaults(Config& c) {
    const auto& names = experiment_templates();
    if (c.experiment.empty()) throw ConfigError("key 'experiment': missing (one of the registered templates)");
    if (std::find(names.begin(), names.end(), c.experiment) == names.end())
        throw ConfigError("key 'experiment': unknown template '" + c.experiment + "'");

    const std::string& e = c.experiment;
    if (e == "sampler-comparison" || e == "model-comparison" || e == "data-efficiency") {
        set_default(c, "env.kind", "chain");
        set_default(c, "env.states", "5");
        set_default(c, "replications", "100");
        set_default(c, "demo.kind", "eps-greedy");
        set_default(c, "demo.length", "1000");
        set_default(c, "sweep.samples", "100,1000,10000");
    } else if (e == "multitask-gain") {
        set_default(c, "env.kind", "generalized-chain");
        set_default(c, "env.states", "5");
        set_default(c, "replications", "100");
        set_default(c, "demo.kind", "eps-greedy");
        set_default(c, "demo.length", "5");
        set_default(c, "demo.total", "10");
        set_default(c, "sweep.tasks", "1,2,5,10");
        set_default(c, "mc.samples", "1000");
    } else {
        set_default(c, "env.kind", "random-mdp");
        set_default(c, "env.states", "8");
        set_default(c, "env.actions", "2");
        set_default(c, "replications", "30");
        set_default(c, "demo.kind", "softmax");
        set_default(c, "demo.length", "50");
        set_default(c, "mh.iterations", "80000");
        if (e == "random-mdp-temperature-sweep") {
            set_default(c, "env.tasks", "20");
            set_default(c, "sweep.temperatures", "2,4,6,8");
        } else {
            set_default(c, "demo.eta", "8");
            set_default(c, "sweep.tasks", "5,10,20");
        }
    }
}

void validate_config(const Config& c) {
    require(c.replications >= 1, "replications", "must be at least 1");
    require(!c.out.empty(), "out", "must not be empty");
    require(c.threads <= 1024, "threads", "must be at most 1024");

    require(c.n_states >= 2 && c.n_states <= 10000, "env.states", "must lie in [2, 10000]");
    require(c.n_actions >= 1 && c.n_actions <= 1000, "env.actions", "must lie in [1, 1000]");
    require(c.slip >= 0.0 && c.slip <= 1.0, "env.slip", "must lie in [0, 1]");
    require(c.discount >= 0.0 && c.discount < 1.0, "env.discount", "must lie in [0, 1)");
    require(c.transition_concentration > 0.0, "env.transition_concentration", "must be positive");
    require(c.env_hyper_shape > 0.0, "env.hyper_shape", "must be positive");
    require(c.env_hyper_rate > 0.0, "env.hyper_rate", "must be positive");
    require(c.env_reward_concentration > 0.0, "env.reward_concentration", "must be positive");
    require(c.n_tasks >= 1, "env.tasks", "must be at least 1");
    for (double r : c.rewards) require(r >= 0.0 && r <= 1.0, "env.rewards", "entries must lie in [0, 1]");
    if (!c.rewards.empty() && (c.env_kind == "chain" || c.env_kind == "two-state"))
        require(c.rewards.size() == (c.env_kind == "two-state" ? 2 : c.n_states), "env.rewards",
                "length must equal the number of states");
    if (c.env_kind == "chain" || c.env_kind == "generalized-chain")
        require(c.n_actions == 2 || !c.has("env.actions"), "env.actions", "chain tasks have exactly 2 actions");

    require(c.demo_epsilon >= 0.0 && c.demo_epsilon <= 1.0, "demo.epsilon", "must lie in [0, 1]");
    require(c.demo_eta >= 0.0, "demo.eta", "must be non-negative");
    require(c.demo_eta_min >= 0.0, "demo.eta_min", "must be non-negative");
    require(c.demo_eta_max >= c.demo_eta_min, "demo.eta_max", "must be at least demo.eta_min");
    require(c.demo_length >= 1, "demo.length", "must be at least 1");
    require(c.demo_total >= 1, "demo.total", "must be at least 1");

    for (auto k : c.sweep_samples) require(k >= 1, "sweep.samples", "entries must be at least 1");
    for (auto m : c.sweep_tasks) require(m >= 1, "sweep.tasks", "entries must be at least 1");
    for (double t : c.sweep_temperatures) require(t >= 0.0, "sweep.temperatures", "entries must be non-negative");
    for (auto n : c.sweep_chains) require(n >= 1, "sweep.chains", "entries must be at least 1");

    require(c.concentration_shape > 0.0, "prior.concentration_shape", "must be positive");
    require(c.concentration_rate > 0.0, "prior.concentration_rate", "must be positive");
    require(c.reward_concentration > 0.0, "prior.reward_concentration", "must be positive");
    for (const auto& h : c.hypotheses)
        for (double r : h) require(r >= 0.0 && r <= 1.0, "prior.hypotheses", "entries must lie in [0, 1]");
    if (c.reward_prior == "discrete") require(!c.hypotheses.empty(), "prior.hypotheses", "required by discrete prior");
    require(c.alpha_shape > 0.0, "prior.alpha_shape", "must be positive");
    require(c.alpha_rate > 0.0, "prior.alpha_rate", "must be positive");
    require(c.beta_shape > 0.0, "prior.beta_shape", "must be positive");
    require(c.beta_rate > 0.0, "prior.beta_rate", "must be positive");
    require(c.temperature_shape > 0.0, "prior.temperature_shape", "must be positive");
    require(c.temperature_rate > 0.0, "prior.temperature_rate", "must be positive");
    require(c.eta >= 0.0, "prior.eta", "must be non-negative");
    require(c.policy_concentration > 0.0, "prior.policy_concentration", "must be positive");

    require(c.mc_samples >= 1, "mc.samples", "must be at least 1");
    require(c.mh_iterations >= 1, "mh.iterations", "must be at least 1");
    require(c.mh_chains >= 1, "mh.chains", "must be at least 1");
    require(c.mh_burn_in >= 0.0 && c.mh_burn_in < 1.0, "mh.burn_in", "must lie in [0, 1)");
    require(c.mh_precision > 0.0, "mh.precision", "must be positive");
    require(c.mh_floor >= 0.0, "mh.floor", "must be non-negative");
    require(c.mh_prior_mix >= 0.0 && c.mh_prior_mix <= 1.0, "mh.prior_mix", "must lie in [0, 1]");
    require(c.mh_eta_step > 0.0, "mh.eta_step", "must be positive");
    require(c.mh_hyper_step > 0.0, "mh.hyper_step", "must be positive");
    require(c.mtpo_policies >= 1, "mtpo.policies", "must be at least 1");
    require(c.mtpo_hypotheses >= 1, "mtpo.hypotheses", "must be at least 1");
    require(c.mtpo_rate > 0.0, "mtpo.rate", "must be positive");
    require(c.mwal_iterations >= 1, "mwal.iterations", "must be at least 1");
}

} // namespace mtirl
