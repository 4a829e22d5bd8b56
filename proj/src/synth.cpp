#include "mixboost/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mixboost/error.hpp"
#include "mixboost/rng.hpp"

namespace mixboost {

Dataset make_synthetic(const std::string& generator, const std::string& task, std::size_t n_rows,
                       std::size_t n_cols, std::uint64_t seed) {
    require(n_rows >= 4 && n_cols >= 1, "synthetic data needs n >= 4 and d >= 1");
    require(task == "regression" || task == "classification",
            "task must be 'regression' or 'classification'");
    Rng rng = Rng::child(seed, rng_purpose::kSynth);

    std::vector<double> features(n_rows * n_cols);
    for (double& v : features) v = rng.uniform(-1.0, 1.0);
    auto cell = [&](std::size_t i, std::size_t j) { return features[i * n_cols + j]; };

    std::vector<double> target(n_rows);
    if (generator == "linear") {
        std::vector<double> coef(n_cols);
        for (double& w : coef) w = rng.normal();
        for (std::size_t i = 0; i < n_rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n_cols; ++j) s += coef[j] * cell(i, j);
            target[i] = s;
        }
        for (double& t : target) t += 0.05 * rng.normal();
    } else if (generator == "axis-aligned") {
        const std::size_t f1 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(n_cols) - 1));
        std::size_t f2 = f1;
        if (n_cols > 1)
            while (f2 == f1)
                f2 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(n_cols) - 1));
        const double t1 = rng.uniform(-0.4, 0.4);
        const double t2 = rng.uniform(-0.4, 0.4);
        double leaves[4];
        for (double& v : leaves) v = rng.uniform(-2.0, 2.0);
        for (std::size_t i = 0; i < n_rows; ++i) {
            const int quadrant = (cell(i, f1) <= t1 ? 0 : 2) + (cell(i, f2) <= t2 ? 0 : 1);
            target[i] = leaves[quadrant] + 0.01 * rng.normal();
        }
    } else if (generator == "rbf") {
        const std::size_t n_centers = 5;
        const double gamma = 1.5;
        std::vector<double> centers(n_centers * n_cols);
        std::vector<double> amplitude(n_centers);
        for (double& v : centers) v = rng.uniform(-1.0, 1.0);
        for (double& a : amplitude) a = rng.uniform(-1.5, 1.5);
        for (std::size_t i = 0; i < n_rows; ++i) {
            double s = 0.0;
            for (std::size_t m = 0; m < n_centers; ++m) {
                double dist_sq = 0.0;
                for (std::size_t j = 0; j < n_cols; ++j) {
                    const double diff = cell(i, j) - centers[m * n_cols + j];
                    dist_sq += diff * diff;
                }
                s += amplitude[m] * std::exp(-gamma * dist_sq);
            }
            target[i] = s;
        }
        for (double& t : target) t += 0.01 * rng.normal();
    } else {
        throw Error("unknown generator '" + generator +
                    "' (expected 'linear', 'axis-aligned' or 'rbf')");
    }

    if (task == "classification") {
        std::vector<double> sorted = target;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        for (double& t : target) t = t > median ? 1.0 : 0.0;
    }
    return Dataset(std::move(features), n_rows, n_cols, std::move(target));
}

} // namespace mixboost
