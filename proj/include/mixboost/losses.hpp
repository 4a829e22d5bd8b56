#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace mixboost {

enum class LossKind { squared_error, logistic_l2 };

/// Per-example first and second derivatives of the loss at the current
/// margins, already multiplied by the sample weights.
struct GradHess {
    std::vector<double> g;
    std::vector<double> h;
};

/// Twice-differentiable loss with known curvature bounds.
///
/// squared_error:   l(y,f) = (y-f)^2 / 2            mu = 1,      smoothness = 1
/// logistic_l2(L):  l(y,f) = log(1+exp(-y f)) + L f^2 / 2 with y in {-1,+1}
///                                                   mu = L,      smoothness = 1/4 + L
///
/// logistic_l2 accepts lambda = 0 (plain logistic loss) but is then not
/// strongly convex; strongly_convex() reports that.
class LossFunction {
public:
    static LossFunction squared_error();
    static LossFunction logistic_l2(double lambda);
    /// By objective name: "mse" or "logloss" (plain logistic, lambda = 0).
    static LossFunction by_name(const std::string& name);

    LossKind kind() const { return kind_; }
    double lambda() const { return lambda_; }

    double mu() const;
    double smoothness() const;
    bool strongly_convex() const { return mu() > 0.0; }

    /// Pointwise loss and its derivatives in f.
    double point_value(double y, double f) const;
    double point_grad(double y, double f) const;
    double point_hess(double y, double f) const;

    /// Weighted total loss sum_i w_i * l(y_i, f_i). Raises on non-finite margins.
    double value(const std::vector<double>& y, const std::vector<double>& f,
                 const std::vector<double>& w = {}) const;

    /// g_i = w_i * l'(y_i, f_i), h_i = w_i * l''(y_i, f_i).
    GradHess grad_hess(const std::vector<double>& y, const std::vector<double>& f,
                       const std::vector<double>& w = {}) const;

private:
    LossFunction(LossKind kind, double lambda) : kind_(kind), lambda_(lambda) {}
    LossKind kind_;
    double lambda_ = 0.0;
};

inline double sigmoid(double t) {
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

enum class MetricKind { rmse, weighted_logloss };

MetricKind metric_for_objective(const std::string& objective);

/// rmse: sqrt(sum w (y-p)^2 / sum w).
/// weighted_logloss: -sum w [y ln p + (1-y) ln(1-p)] / sum w with p clipped
/// to [1e-15, 1-1e-15]; labels in {0,1}, p are probabilities.
double metric(MetricKind kind, const std::vector<double>& y, const std::vector<double>& predictions,
              const std::vector<double>& w = {});

} // namespace mixboost
