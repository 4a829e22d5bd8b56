// mixboost command-line interface: train, predict, tune, verify, synth.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixboost/booster.hpp"
#include "mixboost/dataset.hpp"
#include "mixboost/error.hpp"
#include "mixboost/losses.hpp"
#include "mixboost/model_io.hpp"
#include "mixboost/synth.hpp"
#include "mixboost/theory.hpp"
#include "mixboost/threading.hpp"
#include "mixboost/tuner.hpp"

namespace {

using mixboost::BoostParams;
using mixboost::Dataset;
using mixboost::Error;

struct BoostFlags {
    BoostParams params;
    double base_score = std::numeric_limits<double>::quiet_NaN();

    BoostParams resolve() const {
        BoostParams p = params;
        if (!std::isnan(base_score)) p.base_score = base_score;
        return p;
    }
};

void add_boost_flags(CLI::App* cmd, BoostFlags& flags) {
    auto& p = flags.params;
    cmd->add_option("--num_round", p.num_round, "number of boosting iterations");
    cmd->add_option("--learning_rate", p.learning_rate, "shrinkage applied to each learner");
    cmd->add_option("--objective", p.objective, "'mse' or 'logloss'");
    cmd->add_option("--base_score", flags.base_score,
                    "initial prediction (default: derived from the labels)");
    cmd->add_option("--lambda_l2", p.lambda_l2, "L2 regularization on tree leaf values");
    cmd->add_option("--subsample", p.subsample, "fraction of examples drawn per iteration");
    cmd->add_option("--colsample", p.colsample, "fraction of features drawn per iteration");
    cmd->add_option("--tree_probability", p.tree_probability,
                    "probability of fitting a tree at an iteration");
    cmd->add_option("--min_max_depth", p.min_max_depth, "smallest tree depth in the mixture");
    cmd->add_option("--max_max_depth", p.max_max_depth, "largest tree depth in the mixture");
    cmd->add_option("--hist_nbins", p.hist_nbins, "histogram bins per feature (2..256)");
    cmd->add_option("--alpha", p.alpha, "ridge regularizer");
    cmd->add_option("--fit_intercept", p.fit_intercept, "fit an unpenalized ridge intercept (0/1)");
    cmd->add_option("--gamma", p.gamma, "RBF kernel width for the random features");
    cmd->add_option("--n_components", p.n_components, "random feature dimension");
    cmd->add_option("--early_stopping_rounds", p.early_stopping_rounds,
                    "stop after this many rounds without validation improvement (0 = off)");
    cmd->add_option("--random_state", p.random_state, "training seed");
}

void apply_config(const mixboost::Config& config, BoostParams& p) {
    for (const auto& [name, value] : config) {
        if (name == "num_round")
            p.num_round = static_cast<int>(std::llround(value));
        else if (name == "learning_rate")
            p.learning_rate = value;
        else if (name == "lambda_l2")
            p.lambda_l2 = value;
        else if (name == "subsample")
            p.subsample = value;
        else if (name == "colsample")
            p.colsample = value;
        else if (name == "tree_probability")
            p.tree_probability = value;
        else if (name == "min_max_depth")
            p.min_max_depth = static_cast<int>(std::llround(value));
        else if (name == "max_max_depth")
            p.max_max_depth = static_cast<int>(std::llround(value));
        else if (name == "hist_nbins")
            p.hist_nbins = static_cast<int>(std::llround(value));
        else if (name == "alpha")
            p.alpha = value;
        else if (name == "fit_intercept")
            p.fit_intercept = value != 0.0;
        else if (name == "gamma")
            p.gamma = value;
        else if (name == "n_components")
            p.n_components = static_cast<int>(std::llround(value));
        else if (name == "early_stopping_rounds")
            p.early_stopping_rounds = static_cast<int>(std::llround(value));
        else if (name == "base_score")
            p.base_score = value;
        else
            throw Error("search space names unknown hyper-parameter '" + name + "'");
    }
    // Depth bounds sampled independently can invert; repair to a valid pair.
    if (p.min_max_depth > p.max_max_depth) std::swap(p.min_max_depth, p.max_max_depth);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    mixboost::require(out.good(), "cannot open file for writing: " + path);
    out << text;
    mixboost::require(out.good(), "write failed: " + path);
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trace_csv(const std::vector<mixboost::RoundRecord>& history) {
    std::string out = "round,train_loss,valid_loss\n";
    for (const auto& rec : history) {
        out += std::to_string(rec.round) + "," + format_real(rec.train_metric) + ",";
        if (rec.valid_metric) out += format_real(*rec.valid_metric);
        out += "\n";
    }
    return out;
}

int cmd_train(const std::string& data_path, const std::string& label, bool no_header,
              const std::string& valid_path, bool balanced, const BoostFlags& flags,
              const std::string& model_out, const std::string& trace_out) {
    Dataset data = mixboost::load_csv(data_path, label, !no_header);
    if (balanced) {
        auto weights = mixboost::balanced_weights(data.labels());
        data = Dataset(data.features(), data.n_rows(), data.n_cols(), data.labels(),
                       std::move(weights));
    }
    std::optional<Dataset> valid;
    if (!valid_path.empty()) {
        valid = mixboost::load_csv(valid_path, label, !no_header);
        if (balanced) {
            auto weights = mixboost::balanced_weights(valid->labels());
            valid = Dataset(valid->features(), valid->n_rows(), valid->n_cols(), valid->labels(),
                            std::move(weights));
        }
    }

    const auto result = mixboost::train(data, valid ? &*valid : nullptr, flags.resolve());
    mixboost::save_model(result.model, model_out);
    if (!trace_out.empty()) write_text(trace_out, trace_csv(result.history));

    std::cout << "trained " << result.model.learners.size() << " learners ("
              << result.model.n_trees() << " trees, " << result.model.n_ridge() << " ridge)\n";
    if (!result.history.empty()) {
        const auto& last = result.history[static_cast<std::size_t>(result.best_round) - 1];
        std::cout << "best round " << result.best_round << ": train " << last.train_metric;
        if (last.valid_metric) std::cout << ", valid " << *last.valid_metric;
        std::cout << "\n";
    }
    std::cout << "model written to " << model_out << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, bool no_header,
                const std::string& drop_column, const std::string& output_kind,
                const std::string& out_path) {
    if (output_kind != "margin" && output_kind != "probability")
        throw Error("--output must be 'margin' or 'probability'");
    const auto model = mixboost::load_model(model_path);
    const auto features = mixboost::load_feature_csv(data_path, !no_header, drop_column);
    mixboost::require(features.n_cols >= 1, "prediction input has no feature columns");
    const auto kind = output_kind == "probability" ? mixboost::PredictKind::probability
                                                   : mixboost::PredictKind::margin;
    const auto preds = mixboost::predict(model, features.values.data(), features.n_rows,
                                         features.n_cols, kind);
    std::string text = "prediction\n";
    for (double p : preds) text += format_real(p) + "\n";
    write_text(out_path, text);
    std::cout << "wrote " << preds.size() << " predictions to " << out_path << "\n";
    return 0;
}

int cmd_tune(const std::string& data_path, const std::string& label, bool no_header,
             const std::string& valid_path, bool balanced, const std::string& space_path,
             mixboost::SHConfig sh, int cv_folds, const BoostFlags& flags,
             const std::string& best_out, const std::string& log_out) {
    const auto space = mixboost::load_space(space_path);
    const auto stages = mixboost::schedule(sh); // fail fast, before any training

    Dataset data = mixboost::load_csv(data_path, label, !no_header);
    if (balanced) {
        auto weights = mixboost::balanced_weights(data.labels());
        data = Dataset(data.features(), data.n_rows(), data.n_cols(), data.labels(),
                       std::move(weights));
    }
    std::optional<Dataset> valid;
    if (cv_folds <= 1) {
        mixboost::require(!valid_path.empty(), "tune requires --valid (or --cv-folds > 1)");
        valid = mixboost::load_csv(valid_path, label, !no_header);
        if (balanced) {
            auto weights = mixboost::balanced_weights(valid->labels());
            valid = Dataset(valid->features(), valid->n_rows(), valid->n_cols(), valid->labels(),
                            std::move(weights));
        }
    }

    // One fixed permutation drives both the fold assignment and the resource
    // subsets, so a stage's subset nests inside every larger stage's subset.
    const std::size_t n = data.n_rows();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    {
        mixboost::Rng rng = mixboost::Rng::child(sh.seed, mixboost::rng_purpose::kResourceSubset);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t j = i + rng.uniform_below(n - i);
            std::swap(perm[i], perm[j]);
        }
    }

    const BoostParams base = flags.resolve();
    const auto trainer = [&](const mixboost::Config& config, double resource, int fold,
                             int /*threads*/) -> double {
        BoostParams params = base;
        apply_config(config, params);

        std::vector<std::size_t> pool;
        std::optional<Dataset> fold_valid;
        if (cv_folds > 1) {
            std::vector<std::size_t> fold_rows;
            for (std::size_t i = 0; i < n; ++i) {
                if (static_cast<int>(i % static_cast<std::size_t>(cv_folds)) == fold)
                    fold_rows.push_back(perm[i]);
                else
                    pool.push_back(perm[i]);
            }
            fold_valid = data.select_rows(fold_rows);
        } else {
            pool = perm;
        }
        const auto take = std::max<std::size_t>(
            1,
            static_cast<std::size_t>(std::ceil(resource * static_cast<double>(pool.size()) - 1e-12)));
        pool.resize(std::min(take, pool.size()));
        const Dataset subset = data.select_rows(pool);

        const Dataset& eval = cv_folds > 1 ? *fold_valid : *valid;
        if (params.early_stopping_rounds > 0) {
            const auto result = mixboost::train(subset, &eval, params);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& rec : result.history)
                if (rec.valid_metric) best = std::min(best, *rec.valid_metric);
            return best;
        }
        const auto result = mixboost::train(subset, nullptr, params);
        const auto preds = mixboost::predict(result.model, eval);
        if (params.objective == "logloss") {
            std::vector<double> probs(preds.size());
            for (std::size_t i = 0; i < preds.size(); ++i) probs[i] = mixboost::sigmoid(preds[i]);
            return mixboost::metric(mixboost::MetricKind::weighted_logloss, eval.labels(), probs,
                                    eval.weights());
        }
        return mixboost::metric(mixboost::MetricKind::rmse, eval.labels(), preds, eval.weights());
    };

    const auto result = mixboost::run_successive_halving(sh, space, trainer, cv_folds);

    nlohmann::json best;
    for (const auto& [name, value] : result.best_config) best[name] = value;
    best["_config_id"] = result.best_config_id;
    best["_loss"] = result.best_loss;
    write_text(best_out, best.dump(2) + "\n");
    if (!log_out.empty()) write_text(log_out, mixboost::trials_to_csv(result.trials));

    std::cout << "stages:";
    for (const auto& stage : stages)
        std::cout << " (" << stage.n_configs << ", " << stage.resource << ")";
    std::cout << "\nbest config " << result.best_config_id << " with validation loss "
              << result.best_loss << "\nwritten to " << best_out << "\n";
    return 0;
}

int cmd_verify(const std::string& instance_path, const std::string& builtin, int rounds,
               int trials, std::uint64_t seed) {
    mixboost::TheoryInstance instance;
    if (!instance_path.empty()) {
        instance = mixboost::load_instance(instance_path);
        std::cout << "instance: " << instance_path << "\n";
    } else {
        instance = mixboost::builtin_instance(builtin);
        std::cout << "instance: builtin '" << builtin << "'\n";
    }
    std::cout << "examples " << instance.n_examples() << ", hypotheses " << instance.n_hypotheses()
              << ", subclasses " << instance.n_subclasses() << "\n";

    bool all_ok = true;

    const auto state0 = mixboost::DescentState::zero(instance);
    const auto progress = mixboost::verify_expected_progress(instance, state0);
    std::printf("expected-progress inequality at beta=0: lhs %.12g >= rhs %.12g : %s\n", progress.lhs,
                progress.rhs, progress.holds ? "holds" : "VIOLATED");
    all_ok = all_ok && progress.holds;

    mixboost::ThetaEstimate theta_grid;
    bool have_grid = false;
    if (instance.n_examples() <= 3) {
        theta_grid = mixboost::min_cosine_angle(instance, mixboost::ThetaMethod::grid);
        have_grid = true;
        std::printf("theta (grid): %.9f +/- %.2g\n", theta_grid.value, theta_grid.error_bar);
    }
    try {
        const auto theta_analytic =
            mixboost::min_cosine_angle(instance, mixboost::ThetaMethod::analytic_orthonormal);
        std::printf("theta (analytic): %.9f\n", theta_analytic.value);
        if (have_grid && std::abs(theta_analytic.value - theta_grid.value) > 1e-3) {
            std::printf("theta methods disagree beyond 1e-3: VIOLATED\n");
            all_ok = false;
        }
    } catch (const Error&) {
        // no closed form for this instance shape; the grid estimate stands alone
    }

    const auto report = mixboost::verify_linear_rate(instance, rounds, trials, seed);
    std::printf("epsilon = mu/S = %.6f, theta = %.6f, per-round factor = %.9f\n", report.epsilon,
                report.theta, report.contraction);
    std::printf("optimal loss %.12g, Monte Carlo slack %.4f (%d trials)\n", report.optimal_loss,
                report.mc_slack, trials);
    std::printf("%6s  %16s  %16s\n", "round", "mean gap", "bound");
    const std::size_t m_count = report.mean_gap.size();
    const std::size_t step = std::max<std::size_t>(1, (m_count - 1) / 10);
    for (std::size_t m = 0; m < m_count; m += (m == 0 ? 1 : step))
        std::printf("%6zu  %16.9e  %16.9e\n", m, report.mean_gap[m], report.bound[m]);
    std::printf("linear-rate bound: %s\n", report.holds ? "holds at every round" : "VIOLATED");
    all_ok = all_ok && report.holds;

    std::printf("%s\n", all_ok ? "PASS" : "FAIL");
    return all_ok ? 0 : 1;
}

int cmd_synth(const std::string& generator, const std::string& task, std::size_t n, std::size_t d,
              std::uint64_t seed, const std::string& out_path) {
    const Dataset ds = mixboost::make_synthetic(generator, task, n, d, seed);
    mixboost::write_csv(ds, out_path);
    std::cout << "wrote " << ds.n_rows() << "x" << ds.n_cols() << " " << task << " dataset ('"
              << generator << "') to " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"heterogeneous boosting of decision trees and random-feature ridge regressors"};
    app.require_subcommand(1);
    app.fallthrough(); // --num-cores may follow the subcommand

    int num_cores = 0;
    app.add_option("--num-cores", num_cores, "global compute-thread budget (0 = runtime default)");

    // train
    auto* train = app.add_subcommand("train", "fit a model on a CSV dataset");
    std::string train_data, train_label = "y", train_valid, model_out = "model.json", trace_out;
    bool train_no_header = false, train_balanced = false;
    BoostFlags train_flags;
    train->add_option("--data", train_data, "training CSV")->required();
    train->add_option("--label", train_label, "label column name or zero-based index");
    train->add_flag("--no-header", train_no_header, "CSV has no header row");
    train->add_option("--valid", train_valid, "validation CSV (same schema)");
    train->add_flag("--balanced-weights", train_balanced,
                    "weight examples by inverse class frequency");
    train->add_option("--model-out", model_out, "output model file");
    train->add_option("--trace-out", trace_out, "per-round loss CSV");
    add_boost_flags(train, train_flags);

    // predict
    auto* predict = app.add_subcommand("predict", "score a CSV with a trained model");
    std::string pred_model, pred_data, pred_drop, pred_output = "margin",
                pred_out = "predictions.csv";
    bool pred_no_header = false;
    predict->add_option("--model", pred_model, "model file")->required();
    predict->add_option("--data", pred_data, "feature CSV")->required();
    predict->add_flag("--no-header", pred_no_header, "CSV has no header row");
    predict->add_option("--label", pred_drop, "label column to ignore, if present");
    predict->add_option("--output", pred_output, "'margin' or 'probability'");
    predict->add_option("--out", pred_out, "output CSV");

    // tune
    auto* tune = app.add_subcommand("tune", "successive-halving hyper-parameter search");
    std::string tune_data, tune_label = "y", tune_valid, space_path,
                best_out = "best_config.json", log_out;
    bool tune_no_header = false, tune_balanced = false;
    mixboost::SHConfig sh;
    int cv_folds = 1;
    BoostFlags tune_flags;
    tune_flags.params.early_stopping_rounds = 10;
    tune->add_option("--data", tune_data, "training CSV")->required();
    tune->add_option("--label", tune_label, "label column name or zero-based index");
    tune->add_flag("--no-header", tune_no_header, "CSV has no header row");
    tune->add_option("--valid", tune_valid, "validation CSV");
    tune->add_flag("--balanced-weights", tune_balanced,
                   "weight examples by inverse class frequency");
    tune->add_option("--space", space_path, "search-space JSON")->required();
    tune->add_option("--n0", sh.n0, "initial configuration count");
    tune->add_option("--eta", sh.eta, "elimination rate");
    tune->add_option("--r-min", sh.r_min, "minimum training-example fraction");
    tune->add_option("--seed", sh.seed, "tuner seed");
    tune->add_option("--cv-folds", cv_folds, "inner cross-validation folds (1 = use --valid)");
    tune->add_option("--best-out", best_out, "output best-config JSON");
    tune->add_option("--log-out", log_out, "trial log CSV");
    add_boost_flags(tune, tune_flags);

    // verify
    auto* verify = app.add_subcommand("verify", "check the convergence guarantees on an instance");
    std::string instance_path, builtin = "identity2-uniform";
    int rounds = 50, trials = 2000;
    std::uint64_t verify_seed = 7;
    verify->add_option("--instance", instance_path, "instance JSON file");
    verify->add_option("--builtin", builtin, "built-in instance name");
    verify->add_option("--rounds", rounds, "descent rounds per trajectory");
    verify->add_option("--trials", trials, "independent trajectories");
    verify->add_option("--seed", verify_seed, "trajectory seed");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic CSV dataset");
    std::string gen = "linear", task = "regression", synth_out = "synthetic.csv";
    std::size_t synth_n = 1000, synth_d = 5;
    std::uint64_t synth_seed = 0;
    synth->add_option("--generator", gen, "'linear', 'axis-aligned' or 'rbf'");
    synth->add_option("--task", task, "'regression' or 'classification'");
    synth->add_option("--n", synth_n, "rows");
    synth->add_option("--d", synth_d, "feature columns");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output CSV");

    try {
        app.parse(argc, argv);
        mixboost::set_thread_budget(num_cores);
        if (num_cores > 0) sh.num_cores = num_cores;

        if (*train)
            return cmd_train(train_data, train_label, train_no_header, train_valid, train_balanced,
                             train_flags, model_out, trace_out);
        if (*predict)
            return cmd_predict(pred_model, pred_data, pred_no_header, pred_drop, pred_output,
                               pred_out);
        if (*tune)
            return cmd_tune(tune_data, tune_label, tune_no_header, tune_valid, tune_balanced,
                            space_path, sh, cv_folds, tune_flags, best_out, log_out);
        if (*verify) return cmd_verify(instance_path, builtin, rounds, trials, verify_seed);
        if (*synth) return cmd_synth(gen, task, synth_n, synth_d, synth_seed, synth_out);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
