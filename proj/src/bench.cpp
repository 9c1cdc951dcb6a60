#include "mtirl/bench.hpp"

#include "mtirl/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace mtirl {

namespace {

// Seed offsets of the per-method samplers inside one replication. The same
// seed is used at every x so that sample sets of increasing size share their
// prefix.
constexpr std::uint64_t kMtppMcSeed = 101;
constexpr std::uint64_t kMtppMhSeed = 102;
constexpr std::uint64_t kMtpoSeed = 103;
constexpr std::uint64_t kFlatSeed = 104;
constexpr std::uint64_t kSingleSeed = 105;

std::string format(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

SolverSettings solver_of(const Config& c) { return SolverSettings{c.discount, kSolverTolerance}; }

DemonstratorSpec make_demo_spec(const Config& c) {
    if (c.demo_kind == "softmax") return {DemonstratorKind::softmax, c.demo_eta};
    return {DemonstratorKind::eps_greedy, c.demo_epsilon};
}

MtpoSettings make_mtpo(const Config& c, std::size_t n_policies) {
    MtpoSettings s;
    s.n_policies = n_policies;
    s.optimality = OptimalityPrior(c.mtpo_rate);
    s.solver = solver_of(c);
    return s;
}

ChainSpec chain_spec(const Config& c) {
    ChainSpec spec;
    spec.n_states = c.n_states;
    spec.slip = c.slip;
    spec.discount = c.discount;
    if (!c.rewards.empty())
        spec.rewards = Eigen::Map<const Vector>(c.rewards.data(), static_cast<Eigen::Index>(c.rewards.size()));
    return spec;
}

/// Collects rows of one replication.
struct RowSink {
    const Config& config;
    std::uint64_t seed;
    std::size_t replication;
    std::vector<ResultRow>& rows;

    bool wanted(const std::string& method) const {
        return config.methods.empty() ||
               std::find(config.methods.begin(), config.methods.end(), method) != config.methods.end();
    }

    void add(const std::string& method, double x, std::vector<double> task_losses) {
        ResultRow row;
        row.experiment = config.experiment;
        row.seed = seed;
        row.replication = replication;
        row.method = method;
        row.x = x;
        row.total_loss = 0.0;
        for (double l : task_losses) row.total_loss += l;
        row.task_losses = std::move(task_losses);
        rows.push_back(std::move(row));
    }
};

// Single-task chain templates: sampler-comparison, model-comparison, data-efficiency.
void chain_replication(RowSink& sink) {
    const Config& c = sink.config;
    const Task task = make_chain(chain_spec(c));
    const Mdp mdp = task.mdp();
    const Cmp& cmp = *task.cmp;
    const SolverSettings solver = solver_of(c);

    const StationaryPolicy demonstrator = make_demonstrator(make_demo_spec(c), mdp);
    Rng demo_rng = substream(sink.seed, {stream::demo, 0, 0});
    std::vector<Demonstration> demos{simulate(cmp, demonstrator, c.demo_length, demo_rng, 0)};
    const DemoSet set(cmp.n_states(), cmp.n_actions(), 1, demos);

    const Hyperprior hyper = make_hyperprior(c, cmp.n_states());
    const auto policy_prior = PolicyDirichletPrior::uniform(cmp.n_states(), cmp.n_actions(), c.policy_concentration);
    const bool sampler_cmp = c.experiment == "sampler-comparison";
    const bool data_eff = c.experiment == "data-efficiency";

    std::optional<double> imitator_loss;
    if (data_eff && sink.wanted("imitator")) imitator_loss = l1_loss(mdp, imitator(demos, policy_prior));

    for (std::size_t x : c.sweep_samples) {
        const double xd = static_cast<double>(x);
        if (imitator_loss) sink.add("imitator", xd, {*imitator_loss});
        if (data_eff && sink.wanted("mwal")) {
            const auto result = mwal(cmp, c.discount, demos, FeatureMap::state_indicators(cmp.n_states()), x);
            sink.add("mwal", xd, {l1_loss(mdp, result.policy)});
        }
        if (sink.wanted("mtpp-mc")) {
            const auto ens = mtpp_mc(cmp, set, hyper, x, solver, derive_seed(sink.seed, {kMtppMcSeed}));
            sink.add("mtpp-mc", xd, {l1_loss(mdp, posterior_policy(ens, 0, cmp, solver))});
        }
        if (sampler_cmp) {
            for (std::size_t chains : c.sweep_chains) {
                const std::string name = "mtpp-mh-c" + std::to_string(chains);
                if (!sink.wanted(name)) continue;
                const auto ens =
                    mtpp_mh(cmp, set, hyper, make_mh_settings(c, x, chains), solver, derive_seed(sink.seed, {kMtppMhSeed}));
                sink.add(name, xd, {l1_loss(mdp, posterior_policy(ens, 0, cmp, solver))});
            }
        } else if (sink.wanted("mtpo-mc")) {
            const auto result = mtpo_mc(cmp, set, policy_prior, make_hypotheses(c, cmp.n_states()), make_mtpo(c, x),
                                        derive_seed(sink.seed, {kMtpoSeed}));
            const auto estimate = posterior_value_estimate(result.posteriors[0], result.hypotheses, cmp, solver);
            sink.add("mtpo-mc", xd, {l1_loss(mdp, estimate.policy)});
        }
    }
}

void multitask_gain_replication(RowSink& sink) {
    const Config& c = sink.config;
    const SolverSettings solver = solver_of(c);
    const auto reward_prior = DirichletRewardPrior::symmetric(c.n_states, c.env_reward_concentration);
    const auto demo_spec = make_demo_spec(c);

    std::size_t max_tasks = 0;
    for (auto m : c.sweep_tasks) max_tasks = std::max(max_tasks, m);
    std::vector<Task> tasks;
    for (std::size_t m = 0; m < max_tasks; ++m) {
        Rng rng = substream(sink.seed, {stream::task, m});
        tasks.push_back(make_generalized_chain(c.n_states, c.slip, c.discount, reward_prior, rng));
    }
    const Cmp& cmp = *tasks.front().cmp;
    const Hyperprior hyper = make_hyperprior(c, cmp.n_states());
    const auto policy_prior = PolicyDirichletPrior::uniform(cmp.n_states(), cmp.n_actions(), c.policy_concentration);

    for (std::size_t n_tasks : c.sweep_tasks) {
        const double xd = static_cast<double>(n_tasks);
        std::vector<Demonstration> demos;
        for (std::size_t m = 0; m < n_tasks; ++m) {
            const Mdp mdp = tasks[m].mdp();
            const StationaryPolicy demonstrator = make_demonstrator(demo_spec, mdp);
            const std::size_t count = c.demo_total / n_tasks + (m < c.demo_total % n_tasks ? 1 : 0);
            for (std::size_t i = 0; i < count; ++i) {
                Rng rng = substream(sink.seed, {stream::demo, m, i});
                demos.push_back(simulate(cmp, demonstrator, c.demo_length, rng, m));
            }
        }
        const DemoSet set(cmp.n_states(), cmp.n_actions(), n_tasks, demos);

        const bool need_gain = sink.wanted("gain");
        std::vector<double> imitator_losses, joint_losses;
        if (sink.wanted("imitator") || need_gain) {
            for (std::size_t m = 0; m < n_tasks; ++m)
                imitator_losses.push_back(l1_loss(tasks[m].mdp(), imitator(set.task_demos(m), policy_prior)));
            if (sink.wanted("imitator")) sink.add("imitator", xd, imitator_losses);
        }
        if (sink.wanted("mtpp-mc") || need_gain) {
            const auto ens = mtpp_mc(cmp, set, hyper, c.mc_samples, solver, derive_seed(sink.seed, {kMtppMcSeed}));
            for (std::size_t m = 0; m < n_tasks; ++m)
                joint_losses.push_back(l1_loss(tasks[m].mdp(), posterior_policy(ens, m, cmp, solver)));
            if (sink.wanted("mtpp-mc")) sink.add("mtpp-mc", xd, joint_losses);
        }
        if (sink.wanted("mtpp-mc-single")) {
            std::vector<double> losses;
            for (std::size_t m = 0; m < n_tasks; ++m) {
                auto task_demos = set.task_demos(m);
                for (auto& d : task_demos) d.task_id = 0;
                const DemoSet single(cmp.n_states(), cmp.n_actions(), 1, task_demos);
                const auto ens =
                    mtpp_mc(cmp, single, hyper, c.mc_samples, solver, derive_seed(sink.seed, {kSingleSeed, m}));
                losses.push_back(l1_loss(tasks[m].mdp(), posterior_policy(ens, 0, cmp, solver)));
            }
            sink.add("mtpp-mc-single", xd, losses);
        }
        if (need_gain) {
            std::vector<double> gains;
            for (std::size_t m = 0; m < n_tasks; ++m) gains.push_back(imitator_losses[m] - joint_losses[m]);
            sink.add("gain", xd, gains);
        }
    }
}

void random_mdp_replication(RowSink& sink) {
    const Config& c = sink.config;
    const SolverSettings solver = solver_of(c);
    const bool temperature_sweep = c.experiment == "random-mdp-temperature-sweep";

    RandomMdpSpec spec;
    spec.n_states = c.n_states;
    spec.n_actions = c.n_actions;
    spec.transition_concentration = c.transition_concentration;
    spec.hyper_shape = c.env_hyper_shape;
    spec.hyper_rate = c.env_hyper_rate;
    spec.demo_length = c.demo_length;
    spec.discount = c.discount;
    if (temperature_sweep) {
        spec.n_tasks = c.n_tasks;
    } else {
        spec.n_tasks = *std::max_element(c.sweep_tasks.begin(), c.sweep_tasks.end());
        const bool range = c.has("demo.eta_min") || c.has("demo.eta_max");
        spec.eta_min = range ? c.demo_eta_min : c.demo_eta;
        spec.eta_max = range ? c.demo_eta_max : c.demo_eta;
    }

    std::vector<std::pair<double, std::size_t>> points; // (x, number of tasks)
    if (temperature_sweep)
        for (double eta : c.sweep_temperatures) points.emplace_back(eta, c.n_tasks);
    else
        for (std::size_t m : c.sweep_tasks) points.emplace_back(static_cast<double>(m), m);

    for (const auto& [xd, n_tasks] : points) {
        if (temperature_sweep) spec.eta_min = spec.eta_max = xd;
        const Population pop = make_random_mdp_population(spec, sink.seed);
        const Cmp& cmp = *pop.cmp;

        std::vector<Demonstration> demos;
        for (std::size_t m = 0; m < n_tasks; ++m) {
            Rng rng = substream(sink.seed, {stream::demo, m, 0});
            demos.push_back(simulate(cmp, pop.demonstrators[m], c.demo_length, rng, m));
        }
        const DemoSet set(cmp.n_states(), cmp.n_actions(), n_tasks, demos);
        const Hyperprior hyper = make_hyperprior(c, cmp.n_states());
        const auto policy_prior = PolicyDirichletPrior::uniform(cmp.n_states(), cmp.n_actions(), c.policy_concentration);

        auto per_task = [&](auto&& policy_of) {
            std::vector<double> losses;
            for (std::size_t m = 0; m < n_tasks; ++m) losses.push_back(l1_loss(pop.task(m).mdp(), policy_of(m)));
            return losses;
        };

        if (sink.wanted("demonstrator"))
            sink.add("demonstrator", xd, per_task([&](std::size_t m) { return pop.demonstrators[m]; }));
        if (sink.wanted("imitator"))
            sink.add("imitator", xd,
                     per_task([&](std::size_t m) { return imitator(set.task_demos(m), policy_prior); }));
        if (sink.wanted("mwal")) {
            const auto features = FeatureMap::state_indicators(cmp.n_states());
            sink.add("mwal", xd, per_task([&](std::size_t m) {
                         return mwal(cmp, c.discount, set.task_demos(m), features, c.mwal_iterations).policy;
                     }));
        }
        if (sink.wanted("mtpp-mh")) {
            const auto ens = mtpp_mh(cmp, set, hyper, make_mh_settings(c, c.mh_iterations, c.mh_chains), solver,
                                     derive_seed(sink.seed, {kMtppMhSeed}));
            sink.add("mtpp-mh", xd, per_task([&](std::size_t m) { return posterior_policy(ens, m, cmp, solver); }));
        }
        if (sink.wanted("flat-mh")) {
            std::vector<Demonstration> pooled = demos;
            for (auto& d : pooled) d.task_id = 0;
            const DemoSet flat(cmp.n_states(), cmp.n_actions(), 1, pooled);
            const auto ens = mtpp_mh(cmp, flat, hyper, make_mh_settings(c, c.mh_iterations, c.mh_chains), solver,
                                     derive_seed(sink.seed, {kFlatSeed}));
            const StationaryPolicy shared = posterior_policy(ens, 0, cmp, solver);
            sink.add("flat-mh", xd, per_task([&](std::size_t) { return shared; }));
        }
    }
}

void run_replication(RowSink& sink) {
    const std::string& e = sink.config.experiment;
    if (e == "multitask-gain")
        multitask_gain_replication(sink);
    else if (e == "random-mdp-temperature-sweep" || e == "random-mdp-task-sweep")
        random_mdp_replication(sink);
    else
        chain_replication(sink);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

} // namespace

Hyperprior make_hyperprior(const Config& c, std::size_t n_states) {
    Hyperprior h = Hyperprior::standard(n_states);
    if (c.reward_prior == "dirichlet-hyper") {
        h.reward = ConcentrationHyper{n_states, c.concentration_shape, c.concentration_rate};
    } else if (c.reward_prior == "dirichlet") {
        h.reward = RewardPrior{DirichletRewardPrior::symmetric(n_states, c.reward_concentration)};
    } else {
        std::vector<RewardFunction> hyps;
        for (const auto& v : c.hypotheses) {
            if (v.size() != n_states) throw ConfigError("key 'prior.hypotheses': length must equal the number of states");
            hyps.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
        }
        h.reward = RewardPrior{DiscreteRewardPrior(std::move(hyps))};
    }
    if (c.temperature_prior == "gamma-hyper")
        h.temperature = TemperatureHyper{c.alpha_shape, c.alpha_rate, c.beta_shape, c.beta_rate};
    else if (c.temperature_prior == "gamma")
        h.temperature = TemperaturePrior::gamma(c.temperature_shape, c.temperature_rate);
    else
        h.temperature = TemperaturePrior::point_mass(c.eta);
    return h;
}

MhSettings make_mh_settings(const Config& c, std::size_t iterations, std::size_t chains) {
    MhSettings mh;
    mh.iterations = iterations;
    mh.chains = chains;
    mh.burn_in_fraction = c.mh_burn_in;
    mh.reward_precision = c.mh_precision;
    mh.reward_floor = c.mh_floor;
    mh.prior_proposal_probability = c.mh_prior_mix;
    mh.temperature_step = c.mh_eta_step;
    mh.hyper_step = c.mh_hyper_step;
    return mh;
}

std::variant<RewardHypothesisSet, HypothesisSampler> make_hypotheses(const Config& c, std::size_t n_states) {
    if (c.reward_prior == "discrete") {
        std::vector<RewardFunction> hyps;
        for (const auto& v : c.hypotheses) {
            if (v.size() != n_states) throw ConfigError("key 'prior.hypotheses': length must equal the number of states");
            hyps.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
        }
        return RewardHypothesisSet(std::move(hyps));
    }
    return HypothesisSampler{DirichletRewardPrior::symmetric(n_states, c.reward_concentration), c.mtpo_hypotheses};
}

double l1_loss(const Mdp& mdp, const StationaryPolicy& policy, double tolerance) {
    const Vector v_star = value_iteration(mdp, tolerance).value.values;
    const Vector v_pi = policy_evaluation(mdp, policy, tolerance).values;
    return (v_star - v_pi).cwiseMax(0.0).sum();
}

double l1_loss(const Mdp& mdp, const MixedPolicy& policy, double tolerance) {
    if (policy.components.empty() || policy.components.size() != policy.weights.size())
        throw InvalidInput("mixed policy needs one weight per component");
    const Vector v_star = value_iteration(mdp, tolerance).value.values;
    Vector v_mix = Vector::Zero(v_star.size());
    for (std::size_t i = 0; i < policy.components.size(); ++i)
        v_mix += policy.weights[i] * policy_evaluation(mdp, policy.components[i], tolerance).values;
    return (v_star - v_mix).cwiseMax(0.0).sum();
}

std::vector<std::string> template_methods(const Config& config) {
    const std::string& e = config.experiment;
    std::vector<std::string> all;
    if (e == "sampler-comparison") {
        all.push_back("mtpp-mc");
        for (auto n : config.sweep_chains) all.push_back("mtpp-mh-c" + std::to_string(n));
    } else if (e == "model-comparison") {
        all = {"mtpp-mc", "mtpo-mc"};
    } else if (e == "data-efficiency") {
        all = {"imitator", "mwal", "mtpp-mc", "mtpo-mc"};
    } else if (e == "multitask-gain") {
        all = {"imitator", "mtpp-mc", "mtpp-mc-single", "gain"};
    } else {
        all = {"demonstrator", "imitator", "mwal", "mtpp-mh", "flat-mh"};
    }
    if (config.methods.empty()) return all;
    for (const auto& m : config.methods)
        if (std::find(all.begin(), all.end(), m) == all.end())
            throw ConfigError("key 'methods': '" + m + "' is not a method of template '" + e + "'");
    std::vector<std::string> selected;
    for (const auto& m : all)
        if (std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end()) selected.push_back(m);
    return selected;
}

ExperimentResult run_experiment(const Config& input) {
    Config config = input;
    apply_template_defaults(config);
    validate_config(config);
    (void)template_methods(config); // rejects unknown method names

    const auto start = std::chrono::steady_clock::now();
    const std::size_t reps = config.replications;
    std::vector<std::vector<ResultRow>> per_rep(reps);
    std::vector<std::exception_ptr> errors(reps);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t r = next++; r < reps; r = next++) {
            try {
                RowSink sink{config, derive_seed(config.seed, {stream::replication, r}), r, per_rep[r]};
                run_replication(sink);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    std::size_t n_threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, reps);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    ExperimentResult result;
    result.experiment = config.experiment;
    result.master_seed = config.seed;
    result.replications = reps;
    for (auto& rows : per_rep)
        for (auto& row : rows) result.rows.push_back(std::move(row));
    std::sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.method, a.x, a.replication) < std::tie(b.method, b.x, b.replication);
    });
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::vector<AggregateRow> aggregate(const ExperimentResult& result) {
    std::map<std::pair<std::string, double>, std::pair<std::vector<double>, std::vector<double>>> cells;
    for (const auto& row : result.rows) {
        auto& cell = cells[{row.method, row.x}];
        cell.first.push_back(row.total_loss);
        cell.second.push_back(row.total_loss / static_cast<double>(std::max<std::size_t>(1, row.task_losses.size())));
    }
    std::vector<AggregateRow> out;
    for (const auto& [key, values] : cells) {
        AggregateRow a;
        a.method = key.first;
        a.x = key.second;
        a.runs = values.first.size();
        a.mean_total_loss = mean_of(values.first);
        a.se_total_loss = standard_error(values.first);
        a.mean_task_loss = mean_of(values.second);
        a.se_task_loss = standard_error(values.second);
        out.push_back(a);
    }
    return out;
}

const AggregateRow& find_cell(const std::vector<AggregateRow>& rows, const std::string& method, double x) {
    for (const auto& r : rows)
        if (r.method == method && r.x == x) return r;
    throw InvalidInput("no aggregate cell for method '" + method + "' at x = " + format(x));
}

void write_runs_csv(std::ostream& out, const ExperimentResult& result) {
    std::size_t max_tasks = 0;
    for (const auto& row : result.rows) max_tasks = std::max(max_tasks, row.task_losses.size());
    out << "experiment,seed,replication,method,x,total_loss,n_tasks";
    for (std::size_t m = 0; m < max_tasks; ++m) out << ",loss_task_" << m;
    out << '\n';
    for (const auto& row : result.rows) {
        out << row.experiment << ',' << row.seed << ',' << row.replication << ',' << row.method << ','
            << format(row.x) << ',' << format(row.total_loss) << ',' << row.task_losses.size();
        for (std::size_t m = 0; m < max_tasks; ++m) {
            out << ',';
            if (m < row.task_losses.size()) out << format(row.task_losses[m]);
        }
        out << '\n';
    }
}

void write_summary_csv(std::ostream& out, const std::string& experiment, const std::vector<AggregateRow>& rows) {
    out << "experiment,method,x,runs,mean_total_loss,se_total_loss,mean_task_loss,se_task_loss\n";
    for (const auto& r : rows)
        out << experiment << ',' << r.method << ',' << format(r.x) << ',' << r.runs << ',' << format(r.mean_total_loss)
            << ',' << format(r.se_total_loss) << ',' << format(r.mean_task_loss) << ',' << format(r.se_task_loss)
            << '\n';
}

void write_series_tsv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    std::vector<std::string> methods;
    std::map<std::string, std::vector<const AggregateRow*>> series;
    for (const auto& r : rows) {
        if (!series.count(r.method)) methods.push_back(r.method);
        series[r.method].push_back(&r);
    }
    std::size_t length = 0;
    for (const auto& m : methods) length = std::max(length, series[m].size());
    for (std::size_t i = 0; i < methods.size(); ++i)
        out << (i ? "\t" : "") << methods[i] << "_x\t" << methods[i] << "_mean";
    out << '\n';
    for (std::size_t j = 0; j < length; ++j) {
        for (std::size_t i = 0; i < methods.size(); ++i) {
            const auto& s = series[methods[i]];
            if (i) out << '\t';
            if (j < s.size())
                out << format(s[j]->x) << '\t' << format(s[j]->mean_total_loss);
            else
                out << '\t';
        }
        out << '\n';
    }
}

ExperimentResult run_experiment_to_files(const Config& config) {
    ExperimentResult result = run_experiment(config);
    const std::filesystem::path dir(config.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("key 'out': cannot create directory '" + config.out + "': " + ec.message());
    const auto rows = aggregate(result);
    auto open = [&](const std::string& suffix) {
        std::ofstream f(dir / (result.experiment + suffix));
        if (!f) throw ConfigError("key 'out': cannot write into '" + config.out + "'");
        return f;
    };
    {
        auto f = open("_runs.csv");
        write_runs_csv(f, result);
    }
    {
        auto f = open("_summary.csv");
        write_summary_csv(f, result.experiment, rows);
    }
    {
        auto f = open("_series.tsv");
        write_series_tsv(f, rows);
    }
    return result;
}

std::vector<BoundCheckRow> error_bound_check(const std::vector<std::size_t>& k_values, const BoundCheckInstance& instance,
                                          std::size_t replications) {
    if (k_values.empty() || replications == 0) throw InvalidInput("need at least one K and one replication");
    const Task task = make_chain(instance.chain);
    const Cmp& cmp = *task.cmp;
    const SolverSettings solver{instance.chain.discount, kSolverTolerance};

    Rng hyp_rng = substream(instance.seed, {stream::hypotheses});
    const auto prior = DirichletRewardPrior::symmetric(cmp.n_states(), instance.hypothesis_concentration);
    std::vector<RewardFunction> hyps;
    for (std::size_t j = 0; j < instance.n_hypotheses; ++j) hyps.push_back(sample_reward(prior, hyp_rng));
    const RewardHypothesisSet hypotheses(std::move(hyps));

    const StationaryPolicy demonstrator = make_demonstrator(instance.demonstrator, task.mdp());
    Rng demo_rng = substream(instance.seed, {stream::demo, 0, 0});
    const DemoSet set(cmp.n_states(), cmp.n_actions(), 1,
                      {simulate(cmp, demonstrator, instance.demo_length, demo_rng, 0)});
    const auto policy_prior = PolicyDirichletPrior::uniform(cmp.n_states(), cmp.n_actions());

    auto value_with = [&](std::size_t k, std::uint64_t seed) {
        MtpoSettings s;
        s.n_policies = k;
        s.optimality = OptimalityPrior(instance.optimality_rate);
        s.solver = solver;
        const auto result = mtpo_mc(cmp, set, policy_prior, hypotheses, s, seed);
        return posterior_value_estimate(result.posteriors[0], hypotheses, cmp, solver).value.values;
    };

    const Vector reference = value_with(instance.reference_policies, derive_seed(instance.seed, {stream::chain}));
    std::vector<BoundCheckRow> rows;
    for (std::size_t k : k_values) {
        std::vector<double> errors;
        for (std::size_t r = 0; r < replications; ++r) {
            const Vector v = value_with(k, derive_seed(instance.seed, {stream::replication, k, r}));
            errors.push_back((reference - v).cwiseAbs().maxCoeff());
        }
        BoundCheckRow row;
        row.k = k;
        row.bound = mc_error_bound(k, instance.chain.discount);
        row.mean_error = mean_of(errors);
        row.standard_error = standard_error(errors);
        row.max_error = *std::max_element(errors.begin(), errors.end());
        rows.push_back(row);
    }
    return rows;
}

} // namespace mtirl
