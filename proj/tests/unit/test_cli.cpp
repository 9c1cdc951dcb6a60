#include "doctest.h"

#include "json.hpp"

#include "mtirl/bench.hpp"
#include "mtirl/config.hpp"
#include "mtirl/io.hpp"
#include "mtirl/mtpp.hpp"
#include "mtirl/tasks.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mtirl;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string output;
};

const fs::path& workdir() {
    static const fs::path dir = [] {
        fs::path d(MTIRL_TEST_WORKDIR);
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Run cli(const std::string& args) {
    const fs::path log = workdir() / "last_output.txt";
    const std::string cmd = std::string("\"") + MTIRL_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = workdir() / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

} // namespace

// ------------------------------------------------------------------
// run / validate
// ------------------------------------------------------------------

TEST_CASE("run: minimal config succeeds and repeats byte for byte") {
    const fs::path cfg = write_file("minimal.cfg", "experiment = data-efficiency\nreplications = 1\nsweep.samples = 10\n"
                                                   "mwal.iterations = 3\nmtpo.policies = 5\nmtpo.hypotheses = 5\n"
                                                   "demo.length = 20\n");
    const fs::path out1 = workdir() / "run1";
    const fs::path out2 = workdir() / "run2";
    const Run a = cli("run --config " + q(cfg) + " --seed 9 --out " + q(out1));
    INFO(a.output);
    REQUIRE(a.status == 0);
    const Run b = cli("run --config " + q(cfg) + " --seed 9 --out " + q(out2));
    REQUIRE(b.status == 0);
    for (const char* suffix : {"_runs.csv", "_summary.csv", "_series.tsv"}) {
        const std::string name = std::string("data-efficiency") + suffix;
        REQUIRE(fs::exists(out1 / name));
        CHECK(slurp(out1 / name) == slurp(out2 / name));
    }
}

TEST_CASE("run: unknown template is a configuration error naming the key") {
    const fs::path cfg = write_file("bad.cfg", "experiment = no-such-template\n");
    const Run r = cli("run --config " + q(cfg));
    CHECK(r.status == 2);
    CHECK(r.output.find("experiment") != std::string::npos);

    CHECK(cli("run --config " + q(workdir() / "missing.cfg")).status == 2);
    CHECK(cli("run").status == 1);
    CHECK(cli("frobnicate").status == 1);
}

TEST_CASE("validate") {
    const fs::path good = write_file("good.cfg", "experiment = multitask-gain\n");
    const Run ok = cli("validate --config " + q(good));
    CHECK(ok.status == 0);
    CHECK(ok.output.find("mtpp-mc") != std::string::npos);
    const fs::path bad = write_file("range.cfg", "experiment = multitask-gain\nenv.discount = 1.5\n");
    const Run err = cli("validate --config " + q(bad));
    CHECK(err.status == 2);
    CHECK(err.output.find("env.discount") != std::string::npos);
}

// ------------------------------------------------------------------
// infer / show
// ------------------------------------------------------------------

TEST_CASE("infer: empty or mismatched demonstrations are data errors") {
    const fs::path cfg = write_file("infer_chain.cfg", "env.kind = chain\n");
    const fs::path empty = write_file("empty.txt", "");
    CHECK(cli("infer --demos " + q(empty) + " --model mtpp-mc --config " + q(cfg) + " --out " + q(workdir() / "e")).status == 3);
    const fs::path wrong = write_file("wrong.txt", "3 2\n0 0 1 1 0\n");
    const Run r = cli("infer --demos " + q(wrong) + " --model mtpp-mc --config " + q(cfg) + " --out " + q(workdir() / "w"));
    CHECK(r.status == 3);
    CHECK(r.output.find("states") != std::string::npos);
    const fs::path bad_row = write_file("badrow.txt", "5 2\n0 0 1 7\n");
    CHECK(cli("infer --demos " + q(bad_row) + " --model mtpp-mc --config " + q(cfg) + " --out " + q(workdir() / "b")).status == 3);
    CHECK(cli("infer --demos " + q(bad_row) + " --model nope --config " + q(cfg)).status == 1);
}

TEST_CASE("infer: simulate, write, infer reproduces the in-process posterior exactly") {
    const std::string cfg_text = "env.kind = two-state\nenv.discount = 0.9\nenv.rewards = 0,1\nprior.reward = discrete\n"
                                 "prior.hypotheses = 1,0;0,1\nprior.temperature = fixed\nprior.eta = 0.2\n"
                                 "mc.samples = 3000\nseed = 12\n";
    const fs::path cfg = write_file("two_state.cfg", cfg_text);
    std::istringstream cin(cfg_text);
    const Config config = parse_config(cin);

    // demonstrations from the softmax demonstrator of reward (0, 1)
    const Cmp cmp = two_state_cmp();
    Vector truth(2);
    truth << 0.0, 1.0;
    const auto sol = value_iteration(cmp, truth, 0.9);
    Rng rng(77);
    std::vector<Demonstration> demos{simulate(cmp, softmax_policy(sol.q, 0.2), 50, rng, 0),
                                     simulate(cmp, softmax_policy(sol.q, 0.2), 50, rng, 1)};
    std::ostringstream text;
    write_demonstrations(text, 2, 2, demos);
    const fs::path demo_file = write_file("two_state_demos.txt", text.str());

    const fs::path out = workdir() / "infer_two_state";
    const Run r = cli("infer --demos " + q(demo_file) + " --model mtpp-mc --config " + q(cfg) + " --out " + q(out));
    INFO(r.output);
    REQUIRE(r.status == 0);

    const DemoSet set = DemoSet::from_demos(2, 2, demos);
    const auto ens = mtpp_mc(cmp, set, make_hyperprior(config, 2), config.mc_samples, {0.9, kSolverTolerance}, 12);

    std::ifstream post(out / "posterior.jsonl");
    const auto stored = read_ensemble_jsonl(post);
    const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    for (std::size_t m = 0; m < 2; ++m) {
        const Vector expected = ens.mean_reward(m).values();
        CHECK(stored_mean_reward(stored, m) == expected);
        const auto from_json = summary["tasks"][m]["mean_reward"].get<std::vector<double>>();
        CHECK(from_json == std::vector<double>(expected.data(), expected.data() + 2));
    }

    const Run shown = cli("show " + q(out / "posterior.jsonl"));
    CHECK(shown.status == 0);
    CHECK(shown.output.find("3000") != std::string::npos);
}

TEST_CASE("infer: policy-optimality model beats the imitator on the chain") {
    const fs::path cfg = write_file("chain_mtpo.cfg", "env.kind = chain\nmtpo.policies = 100\nmtpo.hypotheses = 100\nseed = 3\n");
    const Task chain = make_chain(ChainSpec{});
    const Mdp mdp = chain.mdp();
    const StationaryPolicy demonstrator = make_demonstrator({DemonstratorKind::eps_greedy, 1e-2}, mdp);
    Rng rng(5);
    std::ostringstream text;
    write_demonstrations(text, 5, 2, {simulate(*chain.cmp, demonstrator, 1000, rng)});
    const fs::path demo_file = write_file("chain_demos.txt", text.str());

    const fs::path out = workdir() / "infer_chain";
    const Run r = cli("infer --demos " + q(demo_file) + " --model mtpo-mc --config " + q(cfg) + " --out " + q(out));
    INFO(r.output);
    REQUIRE(r.status == 0);
    const auto task = nlohmann::json::parse(slurp(out / "summary.json"))["tasks"][0];
    const auto greedy = task["greedy_policy"].get<std::vector<std::size_t>>();
    const double recomputed = l1_loss(mdp, StationaryPolicy::deterministic(greedy, 2));
    CHECK(task["loss"].get<double>() == doctest::Approx(recomputed).epsilon(1e-9));
    CHECK(task["loss"].get<double>() < task["imitator_loss"].get<double>());

    const Run shown = cli("show " + q(out / "posterior.jsonl"));
    CHECK(shown.status == 0);
}
