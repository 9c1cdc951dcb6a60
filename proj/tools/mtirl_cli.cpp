#include "mtirl/baselines.hpp"
#include "mtirl/bench.hpp"
#include "mtirl/config.hpp"
#include "mtirl/errors.hpp"
#include "mtirl/io.hpp"
#include "mtirl/mtpo.hpp"
#include "mtirl/mtpp.hpp"
#include "mtirl/tasks.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace mtirl;
using json = nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::string demos;
    std::string model;
    std::string file;
};

Config load_with_overrides(const Options& opt) {
    Config c = load_config(opt.config);
    if (opt.seed) {
        c.seed = *opt.seed;
        c.explicit_keys.insert("seed");
    }
    if (opt.out) {
        c.out = *opt.out;
        c.explicit_keys.insert("out");
    }
    return c;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

int cmd_validate(const Options& opt) {
    Config c = load_with_overrides(opt);
    if (!c.experiment.empty()) {
        apply_template_defaults(c);
        (void)template_methods(c);
    }
    validate_config(c);
    std::cout << "config ok";
    if (!c.experiment.empty()) {
        std::cout << ": template " << c.experiment << ", " << c.replications << " replications, methods";
        for (const auto& m : template_methods(c)) std::cout << ' ' << m;
    }
    std::cout << '\n';
    return kOk;
}

int cmd_run(const Options& opt) {
    Config c = load_with_overrides(opt);
    const ExperimentResult result = run_experiment_to_files(c);
    const auto rows = aggregate(result);
    std::printf("%-16s %10s %6s %14s %12s %14s\n", "method", "x", "runs", "mean_total", "se_total", "mean_per_task");
    for (const auto& r : rows)
        std::printf("%-16s %10g %6zu %14.6g %12.4g %14.6g\n", r.method.c_str(), r.x, r.runs, r.mean_total_loss,
                    r.se_total_loss, r.mean_task_loss);
    std::printf("wrote %s/%s_{runs,summary}.csv and _series.tsv (%.1f s)\n", c.out.c_str(), result.experiment.c_str(),
                result.wall_seconds);
    return kOk;
}

/// Environment described by the config, with true task rewards when known.
struct Environment {
    std::shared_ptr<const Cmp> cmp;
    std::vector<Vector> true_rewards; ///< empty when unknown; one entry shared by all tasks otherwise per task
};

Environment make_environment(const Config& c, std::size_t n_tasks) {
    Environment env;
    if (c.env_kind == "chain") {
        ChainSpec spec;
        spec.n_states = c.n_states;
        spec.slip = c.slip;
        spec.discount = c.discount;
        if (!c.rewards.empty())
            spec.rewards = Eigen::Map<const Vector>(c.rewards.data(), static_cast<Eigen::Index>(c.rewards.size()));
        const Task task = make_chain(spec);
        env.cmp = task.cmp;
        env.true_rewards.assign(n_tasks, task.reward.values());
    } else if (c.env_kind == "two-state") {
        env.cmp = std::make_shared<const Cmp>(two_state_cmp());
        if (!c.rewards.empty())
            env.true_rewards.assign(n_tasks, Eigen::Map<const Vector>(c.rewards.data(), 2));
    } else if (c.env_kind == "random-mdp") {
        RandomMdpSpec spec;
        spec.n_states = c.n_states;
        spec.n_actions = c.n_actions;
        spec.transition_concentration = c.transition_concentration;
        spec.hyper_shape = c.env_hyper_shape;
        spec.hyper_rate = c.env_hyper_rate;
        spec.n_tasks = n_tasks;
        spec.discount = c.discount;
        const Population pop = make_random_mdp_population(spec, c.seed);
        env.cmp = pop.cmp;
        for (const auto& r : pop.rewards) env.true_rewards.push_back(r.values());
    } else {
        throw ConfigError("key 'env.kind': infer supports chain, two-state and random-mdp environments");
    }
    return env;
}

int cmd_infer(const Options& opt) {
    Config c = load_with_overrides(opt);
    validate_config(c);
    const DemoFile file = read_demonstrations(opt.demos);
    const DemoSet demos = DemoSet::from_demos(file.n_states, file.n_actions, file.demos);
    const Environment env = make_environment(c, demos.n_tasks());
    const Cmp& cmp = *env.cmp;
    if (cmp.n_states() != file.n_states || cmp.n_actions() != file.n_actions)
        throw DataError("demonstrations declare " + std::to_string(file.n_states) + " states and " +
                        std::to_string(file.n_actions) + " actions, the configured environment has " +
                        std::to_string(cmp.n_states()) + " and " + std::to_string(cmp.n_actions()));

    const SolverSettings solver{c.discount, kSolverTolerance};
    const auto policy_prior = PolicyDirichletPrior::uniform(cmp.n_states(), cmp.n_actions(), c.policy_concentration);
    const std::filesystem::path dir(c.out);
    std::filesystem::create_directories(dir);

    json summary;
    summary["model"] = opt.model;
    summary["seed"] = c.seed;
    summary["n_tasks"] = demos.n_tasks();
    std::vector<Vector> means;
    std::vector<StationaryPolicy> policies;

    std::ofstream posterior(dir / "posterior.jsonl");
    if (!posterior) throw ConfigError("key 'out': cannot write into '" + c.out + "'");
    if (opt.model == "mtpo-mc") {
        MtpoSettings s;
        s.n_policies = c.mtpo_policies;
        s.optimality = OptimalityPrior(c.mtpo_rate);
        s.solver = solver;
        const MtpoResult result = mtpo_mc(cmp, demos, policy_prior, make_hypotheses(c, cmp.n_states()), s, c.seed);
        write_reward_posterior_jsonl(posterior, result);
        for (std::size_t m = 0; m < demos.n_tasks(); ++m) {
            const auto est = posterior_value_estimate(result.posteriors[m], result.hypotheses, cmp, solver);
            means.push_back(est.expected_reward.values());
            policies.push_back(est.policy);
        }
    } else {
        const Hyperprior hyper = make_hyperprior(c, cmp.n_states());
        PosteriorEnsemble ens;
        if (opt.model == "mtpp-mc") {
            ens = mtpp_mc(cmp, demos, hyper, c.mc_samples, solver, c.seed);
        } else {
            const MhSettings mh = make_mh_settings(c, c.mh_iterations, c.mh_chains);
            ens = mtpp_mh(cmp, demos, hyper, mh, solver, c.seed);
        }
        write_ensemble_jsonl(posterior, ens);
        for (std::size_t m = 0; m < demos.n_tasks(); ++m) {
            means.push_back(ens.mean_reward(m).values());
            policies.push_back(posterior_policy(ens, m, cmp, solver));
        }
        const auto& d = ens.diagnostics;
        json diag;
        diag["sampler"] = to_string(d.kind);
        diag["requested"] = d.requested;
        diag["chains"] = d.chains;
        diag["burn_in"] = d.burn_in;
        diag["samples"] = ens.samples.size();
        diag["max_log_likelihood"] = d.max_log_likelihood;
        diag["effective_sample_size"] = d.effective_sample_size;
        if (std::isfinite(d.potential_scale_reduction)) diag["potential_scale_reduction"] = d.potential_scale_reduction;
        for (const auto& [block, stats] : d.acceptance) diag["acceptance"][block] = stats.rate();
        summary["diagnostics"] = diag;
    }

    std::printf("%-5s %-40s %-12s %12s %14s\n", "task", "mean_reward", "policy", "loss", "imitator_loss");
    for (std::size_t m = 0; m < demos.n_tasks(); ++m) {
        json task;
        task["task"] = m;
        task["mean_reward"] = to_std(means[m]);
        std::vector<std::size_t> greedy;
        std::string policy_text;
        for (std::size_t s = 0; s < cmp.n_states(); ++s) {
            Eigen::Index a = 0;
            policies[m].probs().row(static_cast<Eigen::Index>(s)).maxCoeff(&a);
            greedy.push_back(static_cast<std::size_t>(a));
            policy_text += std::to_string(a);
        }
        task["greedy_policy"] = greedy;
        std::string reward_text;
        for (Eigen::Index s = 0; s < means[m].size(); ++s) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%s%.3f", s ? " " : "", means[m][s]);
            reward_text += buf;
        }
        if (!env.true_rewards.empty()) {
            const Mdp truth(env.cmp, RewardFunction(env.true_rewards.at(m)), c.discount);
            const double loss = l1_loss(truth, policies[m]);
            const double imitator_loss = l1_loss(truth, imitator(demos.task_demos(m), policy_prior));
            task["loss"] = loss;
            task["imitator_loss"] = imitator_loss;
            std::printf("%-5zu %-40s %-12s %12.6g %14.6g\n", m, reward_text.c_str(), policy_text.c_str(), loss,
                        imitator_loss);
        } else {
            std::printf("%-5zu %-40s %-12s %12s %14s\n", m, reward_text.c_str(), policy_text.c_str(), "-", "-");
        }
        summary["tasks"].push_back(task);
    }
    std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
    std::printf("wrote %s and %s\n", (dir / "posterior.jsonl").c_str(), (dir / "summary.json").c_str());
    return kOk;
}

int cmd_show(const Options& opt) {
    std::ifstream in(opt.file);
    if (!in) throw DataError("cannot read '" + opt.file + "'");
    std::string first;
    while (std::getline(in, first) && first.find_first_not_of(" \t\r") == std::string::npos) {
    }
    in.clear();
    in.seekg(0);
    if (first.find("\"hypothesis\"") != std::string::npos) {
        const auto stored = read_reward_posterior_jsonl(in);
        std::printf("reward posterior: %zu hypotheses, %zu tasks\n", stored.hypotheses.size(),
                    stored.posteriors.size());
        for (std::size_t m = 0; m < stored.posteriors.size(); ++m) {
            const Vector& p = stored.posteriors[m];
            Vector mean = Vector::Zero(stored.hypotheses.front().size());
            for (std::size_t j = 0; j < stored.hypotheses.size(); ++j) mean += p[static_cast<Eigen::Index>(j)] * stored.hypotheses[j];
            Eigen::Index best = 0;
            p.maxCoeff(&best);
            std::printf("task %zu: most probable hypothesis %ld (p = %.4f), expected reward", m, static_cast<long>(best),
                        p[best]);
            for (Eigen::Index s = 0; s < mean.size(); ++s) std::printf(" %.4f", mean[s]);
            std::printf("\n");
        }
        return kOk;
    }
    const auto samples = read_ensemble_jsonl(in);
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& s : samples) {
        sum += s.weight;
        sum_sq += s.weight * s.weight;
    }
    const std::size_t n_tasks = samples.front().rewards.size();
    std::printf("posterior ensemble: %zu samples, %zu tasks, weight sum %.6f, effective sample size %.1f\n",
                samples.size(), n_tasks, sum, sum * sum / sum_sq);
    for (std::size_t m = 0; m < n_tasks; ++m) {
        const Vector mean = stored_mean_reward(samples, m);
        double eta = 0.0;
        for (const auto& s : samples) eta += s.weight * s.temperatures.at(m);
        std::printf("task %zu: mean reward", m);
        for (Eigen::Index s = 0; s < mean.size(); ++s) std::printf(" %.4f", mean[s]);
        std::printf(", mean eta %.4f\n", eta);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multitask Bayesian inverse reinforcement learning"};
    app.require_subcommand(1);
    Options opt;

    auto* run = app.add_subcommand("run", "Run an experiment template and write CSV results");
    run->add_option("--config", opt.config, "Experiment configuration file")->required();
    run->add_option("--seed", opt.seed, "Override the master seed");
    run->add_option("--out", opt.out, "Override the output directory");

    auto* infer = app.add_subcommand("infer", "Sample a posterior from a demonstrations file");
    infer->add_option("--demos", opt.demos, "Demonstrations file")->required();
    infer->add_option("--model", opt.model, "mtpp-mc | mtpp-mh | mtpo-mc")
        ->required()
        ->check(CLI::IsMember({"mtpp-mc", "mtpp-mh", "mtpo-mc"}));
    infer->add_option("--config", opt.config, "Environment, prior and sampler configuration")->required();
    infer->add_option("--seed", opt.seed, "Override the master seed");
    infer->add_option("--out", opt.out, "Override the output directory");

    auto* validate = app.add_subcommand("validate", "Check a configuration file");
    validate->add_option("--config", opt.config, "Configuration file")->required();

    auto* show = app.add_subcommand("show", "Summarize a serialized posterior");
    show->add_option("file", opt.file, "posterior.jsonl written by infer")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(opt);
        if (*infer) return cmd_infer(opt);
        if (*validate) return cmd_validate(opt);
        if (*show) return cmd_show(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kData;
    } catch (const DegeneratePosterior& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumeric;
    }
    return kUsage;
}
