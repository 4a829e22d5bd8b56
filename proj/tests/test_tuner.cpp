#include <doctest.h>

#include <cmath>
#include <set>

#include "mixboost/error.hpp"
#include "mixboost/rng.hpp"
#include "mixboost/tuner.hpp"

using namespace mixboost;

TEST_CASE("schedules match the closed-form stage lists") {
    {
        const auto stages = schedule({512, 4.0, 0.25, 1, 0});
        REQUIRE(stages.size() == 2);
        CHECK(stages[0] == Stage{512, 0.25});
        CHECK(stages[1] == Stage{128, 1.0});
    }
    {
        const auto stages = schedule({256, 4.0, 1.0 / 16.0, 1, 0});
        REQUIRE(stages.size() == 3);
        CHECK(stages[0] == Stage{256, 0.0625});
        CHECK(stages[1] == Stage{64, 0.25});
        CHECK(stages[2] == Stage{16, 1.0});
    }
    {
        // r_min = 1: a single full-resource stage
        const auto stages = schedule({10, 4.0, 1.0, 1, 0});
        REQUIRE(stages.size() == 1);
        CHECK(stages[0] == Stage{10, 1.0});
    }
}

TEST_CASE("schedule rejects undersized n0 and quotes the requirement") {
    CHECK_THROWS_WITH_AS(schedule({3, 4.0, 0.25, 1, 0}), doctest::Contains("n0"), Error);
    CHECK_THROWS_AS(schedule({16, 1.0, 0.25, 1, 0}), Error);  // eta must exceed 1
    CHECK_THROWS_AS(schedule({16, 4.0, 0.0, 1, 0}), Error);   // r_min in (0,1]
}

TEST_CASE("point spaces sample constant configurations") {
    SearchSpace space;
    space.params = {{"depth", 3, 3, "linear", "int"}};
    const auto configs = sample_configs(space, 10, 1);
    for (const auto& config : configs) CHECK(config.at("depth") == 3.0);

    SearchSpace log_point;
    log_point.params = {{"alpha", -2, -2, "log10", "real"}};
    for (const auto& config : sample_configs(log_point, 10, 2))
        CHECK(config.at("alpha") == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("log-scale sampling has the right quantiles" * doctest::timeout(30)) {
    SearchSpace space;
    space.params = {{"rate", -3, 0, "log10", "real"}};
    const auto configs = sample_configs(space, 10'000, 9);
    std::vector<double> exponents;
    exponents.reserve(configs.size());
    for (const auto& config : configs) exponents.push_back(std::log10(config.at("rate")));
    std::sort(exponents.begin(), exponents.end());
    CHECK(std::abs(exponents[2500] - (-2.25)) < 0.05);
    CHECK(std::abs(exponents[5000] - (-1.5)) < 0.05);
    CHECK(std::abs(exponents[7500] - (-0.75)) < 0.05);
}

TEST_CASE("sampling is deterministic per seed and covers bool/int types") {
    SearchSpace space;
    space.params = {{"flag", 0, 1, "linear", "bool"},
                    {"depth", 1, 8, "linear", "int"},
                    {"rate", 0.0, 1.0, "linear", "real"}};
    const auto a = sample_configs(space, 64, 5);
    const auto b = sample_configs(space, 64, 5);
    CHECK(a == b);
    std::set<double> flags, depths;
    for (const auto& config : a) {
        flags.insert(config.at("flag"));
        const double depth = config.at("depth");
        depths.insert(depth);
        CHECK(depth == std::floor(depth));
        CHECK(depth >= 1.0);
        CHECK(depth <= 8.0);
    }
    CHECK(flags.size() == 2);
    CHECK(depths.size() > 3);
}

TEST_CASE("single-stage run returns the argmin") {
    SearchSpace space;
    space.params = {{"x", 0.0, 1.0, "linear", "real"}};
    const std::vector<double> losses = {0.3, 0.2, 0.5, 0.4};
    // sampling is deterministic, so the trainer can key losses off the
    // configs the tuner will draw
    const auto configs = sample_configs(space, 4, 3);
    const auto trainer = [&](const Config& config, double, int, int) {
        for (std::size_t i = 0; i < configs.size(); ++i)
            if (config == configs[i]) return losses[i];
        throw std::runtime_error("unexpected configuration");
    };
    SHConfig sh{4, 4.0, 1.0, 1, 3};
    const auto result = run_successive_halving(sh, space, trainer);
    CHECK(result.best_loss == 0.2);
    CHECK(result.best_config_id == 1);
    CHECK(result.trials.size() == 4);
}

TEST_CASE("trial counts per stage match the schedule exactly") {
    SearchSpace space;
    space.params = {{"x", 0.0, 1.0, "linear", "real"}};
    const auto trainer = [](const Config& config, double, int, int) { return config.at("x"); };
    SHConfig sh{512, 4.0, 0.25, 1, 11};
    const auto result = run_successive_halving(sh, space, trainer);

    std::size_t stage0 = 0, stage1 = 0;
    std::set<int> stage1_ids, stage0_ids;
    for (const auto& trial : result.trials) {
        if (trial.stage == 0) {
            ++stage0;
            stage0_ids.insert(trial.config_id);
            CHECK(trial.resource == 0.25);
        } else {
            ++stage1;
            stage1_ids.insert(trial.config_id);
            CHECK(trial.resource == 1.0);
        }
    }
    CHECK(stage0 == 512);
    CHECK(stage1 == 128);
    // survivors are a subset of the previous stage's configurations
    for (int id : stage1_ids) CHECK(stage0_ids.count(id) == 1);
}

TEST_CASE("non-integer elimination rates floor consistently") {
    const auto stages = schedule({10, 2.5, 0.4, 1, 0});
    REQUIRE(stages.size() == 2);
    CHECK(stages[0].n_configs == 10);
    CHECK(stages[0].resource == doctest::Approx(0.4));
    CHECK(stages[1].n_configs == 4);
    CHECK(stages[1].resource == 1.0);

    SearchSpace space;
    space.params = {{"x", 0.0, 1.0, "linear", "real"}};
    const auto trainer = [](const Config& config, double, int, int) { return config.at("x"); };
    const auto result = run_successive_halving({10, 2.5, 0.4, 1, 3}, space, trainer);
    std::size_t stage1_trials = 0;
    for (const auto& trial : result.trials) stage1_trials += trial.stage == 1;
    CHECK(stage1_trials == 4);
}

TEST_CASE("failures score infinity and the sweep continues") {
    SearchSpace space;
    space.params = {{"x", 0.0, 1.0, "linear", "real"}};
    const auto trainer = [](const Config& config, double, int, int) -> double {
        if (config.at("x") > 0.5) throw std::runtime_error("synthetic failure");
        return config.at("x");
    };
    SHConfig sh{16, 4.0, 0.25, 2, 21};
    const auto result = run_successive_halving(sh, space, trainer);
    CHECK(result.best_loss <= 0.5);
    bool saw_failure = false;
    for (const auto& trial : result.trials)
        if (trial.failed) {
            saw_failure = true;
            CHECK(std::isinf(trial.loss));
        }
    CHECK(saw_failure);
}

TEST_CASE("synthetic objective is recovered across tuner seeds") {
    // loss = |x - 0.7| + noise whose scale shrinks as the resource grows
    SearchSpace space;
    space.params = {{"x", 0.0, 1.0, "linear", "real"}};
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto trainer = [&](const Config& config, double resource, int, int) {
            const double x = config.at("x");
            Rng noise = Rng::child(seed, 1234,
                                   static_cast<std::uint64_t>(x * 1e9) ^
                                       static_cast<std::uint64_t>(resource * 1e6));
            return std::abs(x - 0.7) + 0.15 * (1.0 - resource) * (2.0 * noise.uniform() - 1.0);
        };
        SHConfig sh{64, 4.0, 1.0 / 16.0, 1, seed};
        const auto result = run_successive_halving(sh, space, trainer);
        if (std::abs(result.best_config.at("x") - 0.7) <= 0.05) ++hits;
    }
    CHECK(hits >= 18);
}

TEST_CASE("results are invariant to the worker count") {
    SearchSpace space;
    space.params = {{"x", 0.0, 1.0, "linear", "real"}, {"y", -1.0, 1.0, "linear", "real"}};
    const auto trainer = [](const Config& config, double resource, int, int) {
        return std::abs(config.at("x") - 0.3) + 0.2 * std::abs(config.at("y")) / resource;
    };
    SHConfig serial{64, 4.0, 0.25, 1, 77};
    SHConfig parallel{64, 4.0, 0.25, 8, 77};
    const auto a = run_successive_halving(serial, space, trainer);
    const auto b = run_successive_halving(parallel, space, trainer);
    CHECK(a.best_config_id == b.best_config_id);
    CHECK(a.best_config == b.best_config);
    CHECK(a.best_loss == b.best_loss);
    CHECK(a.trials.size() == b.trials.size());
}

TEST_CASE("cross-validation ranks by the mean over folds") {
    SearchSpace space;
    space.params = {{"x", 0.0, 1.0, "linear", "real"}};
    const auto trainer = [](const Config& config, double, int fold, int) {
        // fold losses differ but their mean is |x - 0.4|
        const double base = std::abs(config.at("x") - 0.4);
        return fold == 0 ? base + 0.1 : base - 0.1;
    };
    SHConfig sh{16, 4.0, 1.0, 1, 5};
    const auto result = run_successive_halving(sh, space, trainer, 2);
    CHECK(result.trials.size() == 32); // 16 configs x 2 folds

    double best = 1e9;
    const auto configs = sample_configs(space, 16, 5);
    for (const auto& config : configs) best = std::min(best, std::abs(config.at("x") - 0.4));
    CHECK(result.best_loss == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("trial logs serialize to CSV") {
    std::vector<Trial> trials = {{3, 0, 0.25, 0, 0.5, 0.001, false}};
    const auto csv = trials_to_csv(trials);
    CHECK(csv.find("config_id,stage,resource,fold,loss,wall_time_sec\n") == 0);
    CHECK(csv.find("3,0,0.25,0,0.5") != std::string::npos);
}

TEST_CASE("search spaces load from JSON") {
    const auto space = space_from_json(R"([
        {"name": "learning_rate", "min": -2.5, "max": -1, "scale": "log10", "type": "real"},
        {"name": "max_max_depth", "min": 1, "max": 19, "type": "int"}
    ])");
    REQUIRE(space.params.size() == 2);
    CHECK(space.params[0].scale == "log10");
    CHECK(space.params[1].type == "int");
    CHECK(space.params[1].scale == "linear");

    CHECK_THROWS_AS(space_from_json("not json"), Error);
    CHECK_THROWS_AS(space_from_json(R"([{"name": "x", "min": 2, "max": 1}])"), Error);
}
