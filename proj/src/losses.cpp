#include "mixboost/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mixboost/error.hpp"

namespace mixboost {

namespace {

// log(1 + exp(t)) without overflow for large |t|.
double log1p_exp(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

void check_lengths(std::size_t ny, std::size_t nf, std::size_t nw) {
    require(ny == nf, "labels and margins must have the same length");
    require(nw == 0 || nw == ny, "weights must be empty or match the label length");
}

} // namespace

LossFunction LossFunction::squared_error() { return LossFunction(LossKind::squared_error, 0.0); }

LossFunction LossFunction::logistic_l2(double lambda) {
    require(lambda >= 0.0, "logistic L2 term must be non-negative");
    return LossFunction(LossKind::logistic_l2, lambda);
}

LossFunction LossFunction::by_name(const std::string& name) {
    if (name == "mse") return squared_error();
    if (name == "logloss") return logistic_l2(0.0);
    throw Error("unknown objective '" + name + "' (expected 'mse' or 'logloss')");
}

double LossFunction::mu() const {
    return kind_ == LossKind::squared_error ? 1.0 : lambda_;
}

double LossFunction::smoothness() const {
    return kind_ == LossKind::squared_error ? 1.0 : 0.25 + lambda_;
}

double LossFunction::point_value(double y, double f) const {
    if (kind_ == LossKind::squared_error) {
        const double r = y - f;
        return 0.5 * r * r;
    }
    return log1p_exp(-y * f) + 0.5 * lambda_ * f * f;
}

double LossFunction::point_grad(double y, double f) const {
    if (kind_ == LossKind::squared_error) return f - y;
    return -y * sigmoid(-y * f) + lambda_ * f;
}

double LossFunction::point_hess(double y, double f) const {
    if (kind_ == LossKind::squared_error) return 1.0;
    const double s = sigmoid(y * f);
    return s * (1.0 - s) + lambda_;
}

double LossFunction::value(const std::vector<double>& y, const std::vector<double>& f,
                           const std::vector<double>& w) const {
    check_lengths(y.size(), f.size(), w.size());
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        require(std::isfinite(f[i]), "non-finite margin at index " + std::to_string(i));
        const double wi = w.empty() ? 1.0 : w[i];
        total += wi * point_value(y[i], f[i]);
    }
    return total;
}

GradHess LossFunction::grad_hess(const std::vector<double>& y, const std::vector<double>& f,
                                 const std::vector<double>& w) const {
    check_lengths(y.size(), f.size(), w.size());
    GradHess gh;
    gh.g.resize(y.size());
    gh.h.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        gh.g[i] = wi * point_grad(y[i], f[i]);
        gh.h[i] = wi * point_hess(y[i], f[i]);
    }
    return gh;
}

MetricKind metric_for_objective(const std::string& objective) {
    if (objective == "mse") return MetricKind::rmse;
    if (objective == "logloss") return MetricKind::weighted_logloss;
    throw Error("unknown objective '" + objective + "' (expected 'mse' or 'logloss')");
}

double metric(MetricKind kind, const std::vector<double>& y, const std::vector<double>& predictions,
              const std::vector<double>& w) {
    check_lengths(y.size(), predictions.size(), w.size());
    double wsum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) wsum += w.empty() ? 1.0 : w[i];
    require(wsum > 0.0, "metric weights sum to zero");

    double acc = 0.0;
    if (kind == MetricKind::rmse) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double wi = w.empty() ? 1.0 : w[i];
            const double r = y[i] - predictions[i];
            acc += wi * r * r;
        }
        return std::sqrt(acc / wsum);
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        const double p = std::clamp(predictions[i], 1e-15, 1.0 - 1e-15);
        acc -= wi * (y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
    }
    return acc / wsum;
}

} // namespace mixboost
