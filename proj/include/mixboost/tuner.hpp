#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace mixboost {

/// Successive-halving run parameters. With s_max = floor(-log_eta(r_min)),
/// stage i in 0..s_max evaluates n_i = floor(n0 * eta^-i) configurations on
/// a fraction r_i = eta^(i - s_max) of the training examples; n0 must be at
/// least eta^s_max.
struct SHConfig {
    int n0 = 64;
    double eta = 4.0;
    double r_min = 0.25;
    int num_cores = 1;
    std::uint64_t seed = 0;
};

struct Stage {
    int n_configs = 0;
    double resource = 0.0;

    bool operator==(const Stage&) const = default;
};

std::vector<Stage> schedule(const SHConfig& sh);

/// One tunable hyper-parameter. log10-scaled bounds are exponents: a sample
/// u from [min, max] becomes 10^u. Integers round, booleans are a fair coin.
struct ParamSpec {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    std::string scale = "linear"; // "linear" or "log10"
    std::string type = "real";    // "real", "int" or "bool"
};

struct SearchSpace {
    std::vector<ParamSpec> params;

    void validate() const;
};

/// A sampled configuration, keyed by parameter name (ints and bools stored
/// as their numeric values).
using Config = std::map<std::string, double>;

std::vector<Config> sample_configs(const SearchSpace& space, int count, std::uint64_t seed);

struct Trial {
    int config_id = 0;
    int stage = 0;
    double resource = 0.0;
    int fold = 0;
    double loss = 0.0;
    double wall_time_sec = 0.0;
    bool failed = false;
};

/// Validation loss of one configuration trained on a fraction `resource` of
/// the training rows, evaluated on fold `fold` (always 0 outside
/// cross-validation), with `n_threads` compute threads available.
using TrainerFn = std::function<double(const Config& config, double resource, int fold,
                                       int n_threads)>;

struct TuneResult {
    Config best_config;
    int best_config_id = 0;
    double best_loss = 0.0;
    std::vector<Trial> trials;
};

/// Run successive halving over the search space. Per stage, surviving
/// configurations are evaluated concurrently from a shared work queue by
/// min(num_cores, survivors) workers, each granted floor(num_cores/workers)
/// compute threads; ranking at the stage barrier keeps the floor(n_i/eta)
/// lowest-loss configurations (ties break toward the earlier configuration
/// index). A throwing trainer marks the trial failed with loss +inf and the
/// sweep continues. With n_folds > 1 the trainer runs once per fold and
/// configurations are ranked by the mean loss. The outcome is a function of
/// (seed, space, trainer) only — num_cores changes wall time, not results.
TuneResult run_successive_halving(const SHConfig& sh, const SearchSpace& space,
                                  const TrainerFn& trainer, int n_folds = 1);

/// Trial log as CSV (config id, stage, resource, fold, loss, wall time).
std::string trials_to_csv(const std::vector<Trial>& trials);

/// Search-space JSON: [{"name": ..., "min": ..., "max": ..., "scale": ...,
/// "type": ...}, ...].
SearchSpace space_from_json(const std::string& text);
SearchSpace load_space(const std::string& path);

} // namespace mixboost
