#include "mtirl/io.hpp"

#include "mtirl/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace mtirl {

using json = nlohmann::json;

namespace {

std::vector<long long> parse_integers(const std::string& line, std::size_t line_number) {
    std::istringstream in(line);
    std::vector<long long> values;
    std::string token;
    while (in >> token) {
        std::size_t used = 0;
        long long x = 0;
        try {
            x = std::stoll(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size())
            throw DataError("line " + std::to_string(line_number) + ": '" + token + "' is not an integer");
        values.push_back(x);
    }
    return values;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_vector(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

} // namespace

DemoFile read_demonstrations(std::istream& in) {
    DemoFile file;
    bool have_header = false;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto values = parse_integers(line, number);
        if (values.empty()) continue;
        const std::string where = "line " + std::to_string(number) + ": ";
        if (!have_header) {
            if (values.size() != 2 || values[0] < 1 || values[1] < 1)
                throw DataError(where + "expected header 'n_states n_actions' with positive sizes");
            file.n_states = static_cast<std::size_t>(values[0]);
            file.n_actions = static_cast<std::size_t>(values[1]);
            have_header = true;
            continue;
        }
        if (values.size() < 3 || values.size() % 2 == 0)
            throw DataError(where + "expected 'task_id' followed by state/action pairs");
        if (values[0] < 0) throw DataError(where + "negative task id");
        Demonstration demo;
        demo.task_id = static_cast<std::size_t>(values[0]);
        for (std::size_t i = 1; i + 1 < values.size(); i += 2) {
            const long long s = values[i];
            const long long a = values[i + 1];
            if (s < 0 || static_cast<std::size_t>(s) >= file.n_states)
                throw DataError(where + "state " + std::to_string(s) + " out of range");
            if (a < 0 || static_cast<std::size_t>(a) >= file.n_actions)
                throw DataError(where + "action " + std::to_string(a) + " out of range");
            demo.states.push_back(static_cast<std::size_t>(s));
            demo.actions.push_back(static_cast<std::size_t>(a));
        }
        file.demos.push_back(std::move(demo));
    }
    if (!have_header) throw DataError("demonstrations file is empty");
    if (file.demos.empty()) throw DataError("demonstrations file has no trajectories");
    return file;
}

DemoFile read_demonstrations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read demonstrations file '" + path + "'");
    return read_demonstrations(in);
}

void write_demonstrations(std::ostream& out, std::size_t n_states, std::size_t n_actions,
                          const std::vector<Demonstration>& demos) {
    out << n_states << ' ' << n_actions << '\n';
    for (const auto& d : demos) {
        d.validate(n_states, n_actions);
        out << d.task_id;
        for (std::size_t t = 0; t < d.length(); ++t) out << ' ' << d.states[t] << ' ' << d.actions[t];
        out << '\n';
    }
}

void write_ensemble_jsonl(std::ostream& out, const PosteriorEnsemble& ensemble) {
    for (const auto& sample : ensemble.samples) {
        json line;
        line["weight"] = sample.weight;
        json rewards = json::array();
        for (const auto& r : sample.rewards) rewards.push_back(to_std(r.values()));
        line["rewards"] = std::move(rewards);
        line["temperatures"] = sample.temperatures;
        line["log_likelihoods"] = sample.log_likelihoods;
        out << line.dump() << '\n';
    }
}

std::vector<StoredSample> read_ensemble_jsonl(std::istream& in) {
    std::vector<StoredSample> samples;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            StoredSample s;
            s.weight = j.at("weight").get<double>();
            for (const auto& r : j.at("rewards")) s.rewards.push_back(to_vector(r));
            s.temperatures = j.at("temperatures").get<std::vector<double>>();
            samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(number) + ": " + e.what());
        }
    }
    if (samples.empty()) throw DataError("posterior file has no samples");
    return samples;
}

Vector stored_mean_reward(const std::vector<StoredSample>& samples, std::size_t task) {
    if (samples.empty() || task >= samples.front().rewards.size()) throw InvalidInput("task index out of range");
    Vector mean = Vector::Zero(samples.front().rewards[task].size());
    for (const auto& s : samples) mean += s.weight * s.rewards.at(task);
    return mean;
}

void write_reward_posterior_jsonl(std::ostream& out, const MtpoResult& result) {
    const auto& h = result.hypotheses;
    for (std::size_t j = 0; j < h.size(); ++j) {
        json line;
        line["hypothesis"] = j;
        line["reward"] = to_std(h[j].values());
        line["measure"] = h.measure()[j];
        out << line.dump() << '\n';
    }
    for (std::size_t m = 0; m < result.posteriors.size(); ++m) {
        json line;
        line["task"] = m;
        line["posterior"] = to_std(result.posteriors[m].probabilities);
        out << line.dump() << '\n';
    }
}

StoredRewardPosterior read_reward_posterior_jsonl(std::istream& in) {
    StoredRewardPosterior stored;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            if (j.contains("hypothesis"))
                stored.hypotheses.push_back(to_vector(j.at("reward")));
            else
                stored.posteriors.push_back(to_vector(j.at("posterior")));
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(number) + ": " + e.what());
        }
    }
    if (stored.hypotheses.empty() || stored.posteriors.empty())
        throw DataError("reward posterior file lacks hypotheses or task posteriors");
    return stored;
}

} // namespace mtirl
