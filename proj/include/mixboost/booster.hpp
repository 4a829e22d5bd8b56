#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mixboost/dataset.hpp"
#include "mixboost/rff.hpp"
#include "mixboost/rng.hpp"
#include "mixboost/tree.hpp"

namespace mixboost {

/// Mixture over base-hypothesis subclasses: trees of each depth in
/// [min_depth, max_depth] share probability tree_probability uniformly, and
/// the projected ridge regressor takes the rest. K = (max_depth - min_depth + 1) + 1.
struct MixturePMF {
    double tree_probability = 1.0;
    std::size_t min_depth = 6;
    std::size_t max_depth = 6;

    std::size_t n_depths() const { return max_depth - min_depth + 1; }
    std::size_t n_subclasses() const { return n_depths() + 1; }

    /// [p_t/N_D repeated N_D times, 1 - p_t]; entries sum to 1.
    std::vector<double> probabilities() const;
    void validate() const;
};

/// A sampled subclass: a tree depth, or the ridge-on-random-features learner.
struct Subclass {
    bool is_tree = true;
    std::size_t depth = 0; // meaningful when is_tree
};

Subclass sample_subclass(const MixturePMF& pmf, Rng& rng);

/// Training hyper-parameters (names follow the library's tuning surface).
struct BoostParams {
    int num_round = 100;
    double learning_rate = 0.1;
    std::string objective = "mse"; // "mse" or "logloss"
    std::optional<double> base_score;
    double lambda_l2 = 0.0;
    double subsample = 1.0;
    double colsample = 1.0;
    double tree_probability = 1.0;
    int min_max_depth = 6;
    int max_max_depth = 6;
    int hist_nbins = 256;
    double alpha = 1.0;
    bool fit_intercept = false;
    double gamma = 1.0;
    int n_components = 50;
    int early_stopping_rounds = 0; // 0 disables early stopping
    std::uint64_t random_state = 42;

    void validate() const;
    MixturePMF mixture() const;
};

/// Trained additive model: prediction = base_score + learning_rate * sum of
/// learner outputs, applied in training order. Immutable once trained.
struct Ensemble {
    static constexpr int kFormatVersion = 1;

    int format_version = kFormatVersion;
    std::string objective = "mse";
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::optional<RFFProjection> projection; // present iff any ridge learner exists
    std::vector<std::variant<Tree, RidgeModel>> learners;

    double predict_margin(const double* x, std::size_t n_cols) const;

    std::size_t n_trees() const;
    std::size_t n_ridge() const;

    /// Columns an input row must provide: one past the largest feature index
    /// any learner consults (the projection consumes its full input width).
    std::size_t required_features() const;
};

enum class PredictKind { margin, probability };

/// Margins, or sigmoid probabilities for the logistic objective.
/// Requesting probabilities from a regression model raises Error.
std::vector<double> predict(const Ensemble& ensemble, const double* X, std::size_t n_rows,
                            std::size_t n_cols, PredictKind kind = PredictKind::margin);
std::vector<double> predict(const Ensemble& ensemble, const Dataset& ds,
                            PredictKind kind = PredictKind::margin);

struct RoundRecord {
    int round = 0;
    double train_metric = 0.0;
    std::optional<double> valid_metric;
};

struct TrainResult {
    Ensemble model;
    std::vector<RoundRecord> history; // one record per computed round
    int best_round = 0;               // rounds kept after early-stopping truncation
    bool hessian_clamped = false;
};

/// Run the boosting loop: per round, compute gradients and hessians at the
/// current margins, sample a subclass, draw the round's row/column
/// subsamples, fit the learner to targets -g/h with weights h, and advance
/// the margins by learning_rate times the learner output. With
/// early_stopping_rounds > 0 (validation data required), training stops once
/// the validation metric has not improved for that many rounds and the model
/// is truncated to the best round. Deterministic given random_state,
/// independent of thread count.
TrainResult train(const Dataset& train_data, const Dataset* valid_data, const BoostParams& params);

} // namespace mixboost
