#include "mixboost/tuner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mixboost/error.hpp"
#include "mixboost/rng.hpp"
#include "mixboost/threading.hpp"

namespace mixboost {

std::vector<Stage> schedule(const SHConfig& sh) {
    require(sh.n0 >= 1, "n0 must be at least 1");
    require(sh.eta > 1.0, "eta must be greater than 1");
    require(sh.r_min > 0.0 && sh.r_min <= 1.0, "r_min must lie in (0, 1]");
    require(sh.num_cores >= 1, "num_cores must be at least 1");

    const int s_max = static_cast<int>(
        std::floor(-std::log(sh.r_min) / std::log(sh.eta) + 1e-9));
    const double required = std::pow(sh.eta, s_max);
    if (static_cast<double>(sh.n0) < required)
        throw Error("n0 = " + std::to_string(sh.n0) + " is too small: need n0 >= eta^s_max = " +
                    std::to_string(required) + " (s_max = " + std::to_string(s_max) + ")");

    std::vector<Stage> stages;
    for (int i = 0; i <= s_max; ++i) {
        Stage stage;
        stage.n_configs = static_cast<int>(
            std::floor(static_cast<double>(sh.n0) * std::pow(sh.eta, -i) + 1e-9));
        stage.resource = std::pow(sh.eta, i - s_max);
        stages.push_back(stage);
    }
    return stages;
}

void SearchSpace::validate() const {
    require(!params.empty(), "search space must define at least one parameter");
    for (const auto& p : params) {
        require(!p.name.empty(), "search-space parameter needs a name");
        require(p.min <= p.max, "parameter '" + p.name + "': min must not exceed max");
        require(p.scale == "linear" || p.scale == "log10",
                "parameter '" + p.name + "': scale must be 'linear' or 'log10'");
        require(p.type == "real" || p.type == "int" || p.type == "bool",
                "parameter '" + p.name + "': type must be 'real', 'int' or 'bool'");
    }
}

std::vector<Config> sample_configs(const SearchSpace& space, int count, std::uint64_t seed) {
    space.validate();
    require(count >= 1, "configuration count must be positive");
    Rng rng = Rng::child(seed, rng_purpose::kConfigSample);
    std::vector<Config> configs(static_cast<std::size_t>(count));
    for (auto& config : configs) {
        for (const auto& p : space.params) {
            double value;
            if (p.type == "bool") {
                value = rng.coin() ? 1.0 : 0.0;
            } else if (p.type == "int") {
                const auto lo = static_cast<long long>(std::llround(p.min));
                const auto hi = static_cast<long long>(std::llround(p.max));
                value = static_cast<double>(rng.uniform_int(lo, hi));
                if (p.scale == "log10") value = std::round(std::pow(10.0, value));
            } else {
                value = rng.uniform(p.min, p.max);
                if (p.scale == "log10") value = std::pow(10.0, value);
            }
            config[p.name] = value;
        }
    }
    return configs;
}

namespace {

struct StageOutcome {
    std::vector<double> losses; // per surviving-config position
};

} // namespace

TuneResult run_successive_halving(const SHConfig& sh, const SearchSpace& space,
                                  const TrainerFn& trainer, int n_folds) {
    require(n_folds >= 1, "fold count must be positive");
    const auto stages = schedule(sh);
    const auto configs = sample_configs(space, sh.n0, sh.seed);

    TuneResult result;
    std::vector<int> survivors(configs.size());
    for (std::size_t i = 0; i < survivors.size(); ++i) survivors[i] = static_cast<int>(i);

    for (std::size_t stage_idx = 0; stage_idx < stages.size(); ++stage_idx) {
        const Stage& stage = stages[stage_idx];
        // The survivor count always matches the schedule for integer eta;
        // trim defensively for fractional rates.
        if (static_cast<int>(survivors.size()) > stage.n_configs)
            survivors.resize(static_cast<std::size_t>(stage.n_configs));

        const int n_workers = std::min(sh.num_cores, static_cast<int>(survivors.size()));
        const int threads_per_worker = std::max(1, sh.num_cores / std::max(1, n_workers));

        std::vector<double> losses(survivors.size(), 0.0);
        std::vector<std::vector<Trial>> trial_rows(survivors.size());
        std::atomic<std::size_t> next{0};

        auto worker = [&]() {
            set_thread_budget(threads_per_worker);
            for (;;) {
                const std::size_t slot = next.fetch_add(1);
                if (slot >= survivors.size()) break;
                const int config_id = survivors[slot];
                double total = 0.0;
                bool failed = false;
                for (int fold = 0; fold < n_folds; ++fold) {
                    Trial trial;
                    trial.config_id = config_id;
                    trial.stage = static_cast<int>(stage_idx);
                    trial.resource = stage.resource;
                    trial.fold = fold;
                    const auto start = std::chrono::steady_clock::now();
                    try {
                        trial.loss = trainer(configs[static_cast<std::size_t>(config_id)],
                                             stage.resource, fold, threads_per_worker);
                        if (std::isnan(trial.loss)) throw Error("trainer returned NaN loss");
                    } catch (const std::exception&) {
                        trial.loss = std::numeric_limits<double>::infinity();
                        trial.failed = true;
                        failed = true;
                    }
                    trial.wall_time_sec =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count();
                    total += trial.loss;
                    trial_rows[slot].push_back(trial);
                }
                losses[slot] = failed ? std::numeric_limits<double>::infinity()
                                      : total / static_cast<double>(n_folds);
            }
        };

        if (n_workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(static_cast<std::size_t>(n_workers));
            for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }

        for (const auto& rows : trial_rows)
            result.trials.insert(result.trials.end(), rows.begin(), rows.end());

        // Rank at the stage barrier: lowest loss first, earlier config id on ties.
        std::vector<std::size_t> order(survivors.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (losses[a] != losses[b]) return losses[a] < losses[b];
            return survivors[a] < survivors[b];
        });

        const bool last_stage = stage_idx + 1 == stages.size();
        if (last_stage) {
            const std::size_t best = order.front();
            result.best_config_id = survivors[best];
            result.best_loss = losses[best];
            result.best_config = configs[static_cast<std::size_t>(survivors[best])];
        } else {
            const auto keep = static_cast<std::size_t>(
                std::floor(static_cast<double>(stage.n_configs) / sh.eta + 1e-9));
            std::vector<int> kept;
            kept.reserve(keep);
            for (std::size_t i = 0; i < keep && i < order.size(); ++i)
                kept.push_back(survivors[order[i]]);
            std::sort(kept.begin(), kept.end());
            survivors = std::move(kept);
            require(!survivors.empty(), "successive halving eliminated every configuration");
        }
    }
    return result;
}

SearchSpace space_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("search-space file is not valid JSON: ") + e.what());
    }
    try {
        SearchSpace space;
        for (const auto& jp : j) {
            ParamSpec p;
            p.name = jp.at("name").get<std::string>();
            p.min = jp.at("min").get<double>();
            p.max = jp.at("max").get<double>();
            p.scale = jp.value("scale", std::string("linear"));
            p.type = jp.value("type", std::string("real"));
            space.params.push_back(std::move(p));
        }
        space.validate();
        return space;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed search-space file: ") + e.what());
    }
}

SearchSpace load_space(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return space_from_json(ss.str());
}

std::string trials_to_csv(const std::vector<Trial>& trials) {
    std::ostringstream out;
    out << "config_id,stage,resource,fold,loss,wall_time_sec\n";
    char buf[64];
    for (const Trial& t : trials) {
        out << t.config_id << "," << t.stage << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", t.resource);
        out << buf << "," << t.fold << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", t.loss);
        out << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.6f", t.wall_time_sec);
        out << buf << "\n";
    }
    return out.str();
}

} // namespace mixboost
