#include "mixboost/booster.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "mixboost/error.hpp"
#include "mixboost/histogram.hpp"
#include "mixboost/losses.hpp"
#include "mixboost/threading.hpp"

namespace mixboost {

std::vector<double> MixturePMF::probabilities() const {
    const auto nd = static_cast<double>(n_depths());
    std::vector<double> probs(n_subclasses(), tree_probability / nd);
    probs.back() = 1.0 - tree_probability;
    return probs;
}

void MixturePMF::validate() const {
    require(tree_probability >= 0.0 && tree_probability <= 1.0,
            "tree_probability must lie in [0, 1]");
    require(min_depth >= 1, "min_max_depth must be at least 1");
    require(min_depth <= max_depth, "min_max_depth must not exceed max_max_depth");
    const auto probs = probabilities();
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0 || p > 1.0) throw InternalError("mixture probability out of range");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InternalError("mixture probabilities do not sum to 1");
}

Subclass sample_subclass(const MixturePMF& pmf, Rng& rng) {
    const auto probs = pmf.probabilities();
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        cum += probs[k];
        if (u < cum || k + 1 == probs.size()) {
            if (k < pmf.n_depths()) return Subclass{true, pmf.min_depth + k};
            return Subclass{false, 0};
        }
    }
    return Subclass{false, 0}; // unreachable
}

void BoostParams::validate() const {
    require(num_round >= 1, "num_round must be at least 1");
    require(learning_rate > 0.0, "learning_rate must be positive");
    require(objective == "mse" || objective == "logloss",
            "objective must be 'mse' or 'logloss'");
    require(lambda_l2 >= 0.0, "lambda_l2 must be non-negative");
    require(subsample > 0.0 && subsample <= 1.0, "subsample must lie in (0, 1]");
    require(colsample > 0.0 && colsample <= 1.0, "colsample must lie in (0, 1]");
    require(hist_nbins >= 2 && hist_nbins <= 256, "hist_nbins must lie in [2, 256]");
    require(alpha >= 0.0, "alpha must be non-negative");
    require(gamma > 0.0, "gamma must be positive");
    require(n_components >= 1, "n_components must be at least 1");
    require(early_stopping_rounds >= 0, "early_stopping_rounds must be non-negative");
    if (base_score) require(std::isfinite(*base_score), "base_score must be finite");
    mixture().validate();
}

MixturePMF BoostParams::mixture() const {
    require(min_max_depth >= 1, "min_max_depth must be at least 1");
    require(min_max_depth <= max_max_depth, "min_max_depth must not exceed max_max_depth");
    return MixturePMF{tree_probability, static_cast<std::size_t>(min_max_depth),
                      static_cast<std::size_t>(max_max_depth)};
}

double Ensemble::predict_margin(const double* x, std::size_t n_cols) const {
    double acc = base_score;
    // All ridge learners share one projection, so z(x) is computed at most
    // once per row; the arithmetic matches predict_rff operation for
    // operation.
    std::vector<double> z;
    for (const auto& learner : learners) {
        if (const Tree* tree = std::get_if<Tree>(&learner)) {
            acc += learning_rate * tree->predict(x);
            continue;
        }
        const RidgeModel& ridge = std::get<RidgeModel>(learner);
        if (z.empty()) {
            require(n_cols >= projection->input_dim(), "projection input dimension mismatch");
            const auto c = projection->output_dim();
            const double scale = std::sqrt(2.0 / static_cast<double>(c));
            z.resize(c);
            for (std::size_t k = 0; k < c; ++k) {
                double dot = projection->offsets(static_cast<Eigen::Index>(k));
                for (std::size_t j = 0; j < projection->input_dim(); ++j)
                    dot += projection->weights(static_cast<Eigen::Index>(j),
                                               static_cast<Eigen::Index>(k)) *
                           x[j];
                z[k] = scale * std::cos(dot);
            }
        }
        double out = ridge.intercept;
        for (std::size_t k = 0; k < z.size(); ++k)
            out += ridge.coefficients(static_cast<Eigen::Index>(k)) * z[k];
        acc += learning_rate * out;
    }
    return acc;
}

std::size_t Ensemble::n_trees() const {
    std::size_t n = 0;
    for (const auto& l : learners) n += std::holds_alternative<Tree>(l) ? 1 : 0;
    return n;
}

std::size_t Ensemble::n_ridge() const { return learners.size() - n_trees(); }

std::size_t Ensemble::required_features() const {
    std::size_t needed = 0;
    if (projection) needed = projection->input_dim();
    for (const auto& learner : learners) {
        if (const Tree* tree = std::get_if<Tree>(&learner)) {
            for (const TreeNode& node : tree->nodes)
                if (!node.is_leaf())
                    needed = std::max(needed, static_cast<std::size_t>(node.feature) + 1);
        }
    }
    return needed;
}

std::vector<double> predict(const Ensemble& ensemble, const double* X, std::size_t n_rows,
                            std::size_t n_cols, PredictKind kind) {
    if (kind == PredictKind::probability)
        require(ensemble.objective == "logloss",
                "probability output requires the 'logloss' objective");
    require(n_cols >= ensemble.required_features(),
            "feature-count mismatch: the model consults " +
                std::to_string(ensemble.required_features()) + " columns but the input has " +
                std::to_string(n_cols));
    std::vector<double> out(n_rows);
    parallel_for(n_rows, [&](std::size_t i) {
        const double margin = ensemble.predict_margin(X + i * n_cols, n_cols);
        out[i] = (kind == PredictKind::probability) ? sigmoid(margin) : margin;
    });
    return out;
}

std::vector<double> predict(const Ensemble& ensemble, const Dataset& ds, PredictKind kind) {
    return predict(ensemble, ds.features().data(), ds.n_rows(), ds.n_cols(), kind);
}

namespace {

double default_base_score(const Dataset& ds, const std::string& objective) {
    double wsum = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const double w = ds.weight(i);
        wsum += w;
        acc += w * ds.label(i);
    }
    if (objective == "mse") return acc / wsum;
    // Log-odds of the weighted positive rate.
    const double p = std::clamp(acc / wsum, 1e-15, 1.0 - 1e-15);
    return std::log(p / (1.0 - p));
}

double evaluate(const std::string& objective, const Dataset& ds,
                const std::vector<double>& margins) {
    if (objective == "mse") return metric(MetricKind::rmse, ds.labels(), margins, ds.weights());
    std::vector<double> probs(margins.size());
    for (std::size_t i = 0; i < margins.size(); ++i) probs[i] = sigmoid(margins[i]);
    return metric(MetricKind::weighted_logloss, ds.labels(), probs, ds.weights());
}

} // namespace

TrainResult train(const Dataset& train_data, const Dataset* valid_data,
                  const BoostParams& params) {
    params.validate();
    const bool logistic = params.objective == "logloss";
    if (logistic)
        require(train_data.labels_are_binary(),
                "'logloss' objective requires labels in {0, 1}");
    require(params.early_stopping_rounds == 0 || valid_data != nullptr,
            "early stopping requires validation data");
    if (valid_data)
        require(valid_data->n_cols() == train_data.n_cols(),
                "validation data feature count does not match training data");

    const std::size_t n = train_data.n_rows();
    const std::size_t d = train_data.n_cols();
    const LossFunction loss =
        logistic ? LossFunction::logistic_l2(0.0) : LossFunction::squared_error();

    // Internal labels: {0,1} maps to {-1,+1} for the logistic loss.
    std::vector<double> y_fit(n);
    for (std::size_t i = 0; i < n; ++i)
        y_fit[i] = logistic ? 2.0 * train_data.label(i) - 1.0 : train_data.label(i);
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) weights[i] = train_data.weight(i);

    Ensemble model;
    model.objective = params.objective;
    model.learning_rate = params.learning_rate;
    model.base_score =
        params.base_score ? *params.base_score : default_base_score(train_data, params.objective);

    const MixturePMF pmf = params.mixture();

    // Fixed binning, built once before boosting.
    const auto sorted = presort(train_data);
    const HistogramLayout layout =
        build_histograms(train_data, sorted, static_cast<std::size_t>(params.hist_nbins));

    // Cached projection of the full train set, materialized at the first
    // ridge draw. The projection stream depends only on the root seed, so
    // the learner sequence does not change it.
    Eigen::MatrixXd projected_train;
    bool projected = false;

    std::vector<double> margins(n, model.base_score);
    std::vector<double> valid_margins;
    if (valid_data) valid_margins.assign(valid_data->n_rows(), model.base_score);

    TrainResult result;
    double best_valid = std::numeric_limits<double>::infinity();
    int best_round = 0;

    std::vector<double> targets, sub_h;
    for (int round = 1; round <= params.num_round; ++round) {
        GradHess gh = loss.grad_hess(y_fit, margins, weights);
        if (!loss.strongly_convex()) {
            for (double& h : gh.h) {
                if (h < 1e-12) {
                    h = 1e-12;
                    if (!result.hessian_clamped) {
                        result.hessian_clamped = true;
                        std::cerr << "warning: hessian fell below 1e-12 and was clamped "
                                     "(loss is not strongly convex)\n";
                    }
                }
            }
        }

        Rng subclass_rng = Rng::child(params.random_state, rng_purpose::kSubclass, round);
        const Subclass subclass = sample_subclass(pmf, subclass_rng);
        const auto row_idx = sample_without_replacement(n, params.subsample, params.random_state,
                                                        rng_purpose::kRowSample, round);
        const auto col_idx = sample_without_replacement(d, params.colsample, params.random_state,
                                                        rng_purpose::kColSample, round);

        std::variant<Tree, RidgeModel> learner;
        if (subclass.is_tree) {
            learner = fit_tree(train_data, gh.g, gh.h, layout, subclass.depth, params.lambda_l2,
                               row_idx, col_idx);
        } else {
            if (!model.projection) {
                model.projection =
                    make_projection(d, static_cast<std::size_t>(params.n_components), params.gamma,
                                    params.random_state);
            }
            if (!projected) {
                projected_train = project(*model.projection, train_data);
                projected = true;
            }
            const auto n_sub = static_cast<Eigen::Index>(row_idx.size());
            Eigen::MatrixXd x_sub(n_sub, projected_train.cols());
            Eigen::VectorXd y_sub(n_sub), h_sub(n_sub);
            for (Eigen::Index t = 0; t < n_sub; ++t) {
                const std::size_t r = row_idx[static_cast<std::size_t>(t)];
                x_sub.row(t) = projected_train.row(static_cast<Eigen::Index>(r));
                y_sub(t) = -gh.g[r] / gh.h[r];
                h_sub(t) = gh.h[r];
            }
            learner = fit_ridge(x_sub, y_sub, h_sub, params.alpha, params.fit_intercept);
        }

        // Advance margins through the same per-row path predict() uses.
        auto advance = [&](const Dataset& ds, std::vector<double>& f) {
            parallel_for(ds.n_rows(), [&](std::size_t i) {
                const double* x = ds.row(i);
                double out;
                if (const Tree* tree = std::get_if<Tree>(&learner))
                    out = tree->predict(x);
                else
                    out = predict_rff(*model.projection, std::get<RidgeModel>(learner), x,
                                      ds.n_cols());
                f[i] += params.learning_rate * out;
            });
        };
        advance(train_data, margins);
        if (valid_data) advance(*valid_data, valid_margins);

        for (double f : margins)
            if (!std::isfinite(f))
                throw Error("training diverged: non-finite margin at round " +
                            std::to_string(round));

        model.learners.push_back(std::move(learner));

        RoundRecord record;
        record.round = round;
        record.train_metric = evaluate(params.objective, train_data, margins);
        if (valid_data) record.valid_metric = evaluate(params.objective, *valid_data, valid_margins);
        result.history.push_back(record);

        if (params.early_stopping_rounds > 0) {
            // Ties count as "not improved".
            if (*record.valid_metric < best_valid) {
                best_valid = *record.valid_metric;
                best_round = round;
            } else if (round - best_round >= params.early_stopping_rounds) {
                break;
            }
        }
    }

    if (params.early_stopping_rounds > 0) {
        model.learners.resize(static_cast<std::size_t>(best_round));
        result.best_round = best_round;
    } else {
        result.best_round = static_cast<int>(model.learners.size());
    }
    if (model.n_ridge() == 0) model.projection.reset();

    result.model = std::move(model);
    return result;
}

} // namespace mixboost
