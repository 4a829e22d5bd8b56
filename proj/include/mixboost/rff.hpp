#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mixboost/dataset.hpp"

namespace mixboost {

/// Random feature map z(x) = sqrt(2/c) * cos(xi^T x + tau) whose inner
/// products approximate the Gaussian RBF kernel exp(-gamma ||x - x'||^2).
/// xi entries are i.i.d. Normal(0, 2*gamma) — the Fourier transform of the
/// kernel — and tau is uniform on [0, 2*pi). Generated once per booster and
/// reused at every iteration.
struct RFFProjection {
    Eigen::MatrixXd weights;  // d x c
    Eigen::VectorXd offsets;  // c
    double gamma = 1.0;

    std::size_t input_dim() const { return static_cast<std::size_t>(weights.rows()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(weights.cols()); }
};

RFFProjection make_projection(std::size_t n_features, std::size_t n_components, double gamma,
                              std::uint64_t root_seed);

/// Map rows of X (row-major, n x d) into the projected space (n x c).
/// Every output entry lies in [-sqrt(2/c), sqrt(2/c)].
Eigen::MatrixXd project(const RFFProjection& proj, const double* X, std::size_t n_rows,
                        std::size_t n_cols);
Eigen::MatrixXd project(const RFFProjection& proj, const Dataset& ds);

/// Linear model on the projected space.
struct RidgeModel {
    Eigen::VectorXd coefficients; // c
    double intercept = 0.0;
    double alpha = 0.0;

    double predict_projected(const Eigen::VectorXd& z) const {
        return coefficients.dot(z) + intercept;
    }
};

/// Closed-form weighted ridge: minimizes sum_i h_i (y_i - w^T x_i)^2 + alpha ||w||^2
/// via the normal equations (X^T H X + alpha I) w = X^T H y, H = diag(h).
/// With fit_intercept an unpenalized constant column is appended and its
/// coefficient reported separately. The system is solved by a dense LDLT
/// factorization; a numerically singular system with alpha = 0 raises an
/// error advising alpha > 0.
RidgeModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& h,
                     double alpha, bool fit_intercept);

/// w^T z(x) + intercept for a raw input row.
double predict_rff(const RFFProjection& proj, const RidgeModel& model, const double* x,
                   std::size_t n_cols);

} // namespace mixboost
