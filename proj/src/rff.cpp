#include "mixboost/rff.hpp"

#include <cmath>

#include "mixboost/error.hpp"
#include "mixboost/rng.hpp"
#include "mixboost/threading.hpp"

namespace mixboost {

RFFProjection make_projection(std::size_t n_features, std::size_t n_components, double gamma,
                              std::uint64_t root_seed) {
    require(n_features >= 1 && n_components >= 1, "projection dimensions must be positive");
    require(gamma > 0.0, "gamma must be positive");
    RFFProjection proj;
    proj.gamma = gamma;
    proj.weights.resize(static_cast<Eigen::Index>(n_features),
                        static_cast<Eigen::Index>(n_components));
    proj.offsets.resize(static_cast<Eigen::Index>(n_components));

    Rng rng = Rng::child(root_seed, rng_purpose::kProjection);
    const double stddev = std::sqrt(2.0 * gamma);
    for (Eigen::Index k = 0; k < proj.weights.cols(); ++k)
        for (Eigen::Index j = 0; j < proj.weights.rows(); ++j)
            proj.weights(j, k) = rng.normal(0.0, stddev);
    for (Eigen::Index k = 0; k < proj.offsets.size(); ++k)
        proj.offsets(k) = rng.uniform(0.0, 2.0 * M_PI);
    return proj;
}

Eigen::MatrixXd project(const RFFProjection& proj, const double* X, std::size_t n_rows,
                        std::size_t n_cols) {
    require(n_cols == proj.input_dim(), "projection input dimension mismatch: expected " +
                                            std::to_string(proj.input_dim()) + ", got " +
                                            std::to_string(n_cols));
    const auto c = static_cast<std::size_t>(proj.output_dim());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(c));
    const double scale = std::sqrt(2.0 / static_cast<double>(c));
    // Row-parallel with a fixed per-row dot-product order, so results are
    // identical for any thread count.
    parallel_for(n_rows, [&](std::size_t i) {
        const double* x = X + i * n_cols;
        for (std::size_t k = 0; k < c; ++k) {
            double dot = proj.offsets(static_cast<Eigen::Index>(k));
            for (std::size_t j = 0; j < n_cols; ++j)
                dot += proj.weights(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * x[j];
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = scale * std::cos(dot);
        }
    });
    return out;
}

Eigen::MatrixXd project(const RFFProjection& proj, const Dataset& ds) {
    return project(proj, ds.features().data(), ds.n_rows(), ds.n_cols());
}

RidgeModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& h,
                     double alpha, bool fit_intercept) {
    require(alpha >= 0.0, "alpha must be non-negative");
    require(X.rows() == y.size() && X.rows() == h.size(),
            "ridge inputs must have matching row counts");
    require((h.array() > 0.0).all(), "ridge requires positive hessian weights");

    const Eigen::Index c = X.cols();
    const Eigen::Index dim = fit_intercept ? c + 1 : c;

    Eigen::MatrixXd Xa;
    const Eigen::MatrixXd* Xp = &X;
    if (fit_intercept) {
        Xa.resize(X.rows(), dim);
        Xa.leftCols(c) = X;
        Xa.col(c).setOnes();
        Xp = &Xa;
    }

    Eigen::MatrixXd A = Xp->transpose() * h.asDiagonal() * (*Xp);
    for (Eigen::Index k = 0; k < c; ++k) A(k, k) += alpha; // intercept stays unpenalized
    const Eigen::VectorXd b = Xp->transpose() * (h.asDiagonal() * y);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    // A is positive semi-definite; a (near-)zero pivot means the system is
    // rank-deficient, which only happens without regularization.
    const Eigen::VectorXd pivots = ldlt.vectorD();
    if (pivots.maxCoeff() <= 0.0 || pivots.minCoeff() <= 1e-12 * pivots.maxCoeff()) {
        if (alpha == 0.0)
            throw Error("ridge normal equations are singular; set alpha > 0");
        throw Error("ridge normal equations are numerically singular");
    }
    Eigen::VectorXd w = ldlt.solve(b);

    const double b_scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
    const double residual = (A * w - b).lpNorm<Eigen::Infinity>();
    if (!w.allFinite() || residual > 1e-6 * b_scale) {
        if (alpha == 0.0)
            throw Error("ridge normal equations are singular; set alpha > 0");
        throw Error("ridge solve failed (residual " + std::to_string(residual) + ")");
    }

    RidgeModel model;
    model.alpha = alpha;
    if (fit_intercept) {
        model.coefficients = w.head(c);
        model.intercept = w(c);
    } else {
        model.coefficients = w;
        model.intercept = 0.0;
    }
    return model;
}

double predict_rff(const RFFProjection& proj, const RidgeModel& model, const double* x,
                   std::size_t n_cols) {
    require(n_cols == proj.input_dim(), "projection input dimension mismatch");
    const auto c = proj.output_dim();
    const double scale = std::sqrt(2.0 / static_cast<double>(c));
    double acc = model.intercept;
    for (std::size_t k = 0; k < c; ++k) {
        double dot = proj.offsets(static_cast<Eigen::Index>(k));
        for (std::size_t j = 0; j < n_cols; ++j)
            dot += proj.weights(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * x[j];
        acc += model.coefficients(static_cast<Eigen::Index>(k)) * scale * std::cos(dot);
    }
    return acc;
}

} // namespace mixboost
