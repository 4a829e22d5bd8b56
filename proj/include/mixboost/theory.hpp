#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixboost/losses.hpp"

namespace mixboost {

/// Explicit hypothesis matrix for exact coordinate descent: column j holds
/// the evaluations of normalized hypothesis j on the n examples (unit column
/// norms), and index_sets partitions the columns into the K subclasses that
/// probabilities samples over.
struct TheoryInstance {
    Eigen::MatrixXd hypotheses;                     // n x J, unit-norm columns
    std::vector<std::vector<std::size_t>> index_sets; // K disjoint, covering sets
    std::vector<double> probabilities;              // K entries, sum 1
    LossFunction loss = LossFunction::squared_error();
    Eigen::VectorXd labels;                         // n

    std::size_t n_examples() const { return static_cast<std::size_t>(hypotheses.rows()); }
    std::size_t n_hypotheses() const { return static_cast<std::size_t>(hypotheses.cols()); }
    std::size_t n_subclasses() const { return index_sets.size(); }

    /// Enforces unit columns (1e-12), a true partition, and a valid PMF.
    void validate() const;

    double loss_at_margins(const Eigen::VectorXd& margins) const;
    double loss_of(const Eigen::VectorXd& beta) const { return loss_at_margins(hypotheses * beta); }
};

/// Coordinate-descent state; margins track hypotheses * beta incrementally.
struct DescentState {
    Eigen::VectorXd beta;
    Eigen::VectorXd margins;
    int iteration = 0;

    static DescentState zero(const TheoryInstance& instance);
    /// Drift between incremental margins and a fresh recomputation.
    double margin_drift(const TheoryInstance& instance) const;
};

/// Curvature-normalized coordinate gradients at beta:
///   Gamma_j = (sum_i g_i B_ij) / sqrt(sum_i h_i B_ij^2),
/// with g, h the pointwise loss derivatives at the current margins. Raises
/// on non-positive curvature.
Eigen::VectorXd gamma(const TheoryInstance& instance, const DescentState& state);

/// One descent step on subclass k: pick j = argmax_{j in I(k)} |Gamma_j|
/// (ties to the lowest j), move beta_j by epsilon times the closed-form
/// magnitude -grad_j/curv_j, and update margins incrementally.
void descent_step(const TheoryInstance& instance, DescentState& state, std::size_t subclass,
                  double epsilon);

enum class ThetaMethod { grid, analytic_orthonormal };

struct ThetaEstimate {
    double value = 0.0;
    double error_bar = 0.0; // mesh/refinement resolution (grid method only)
};

/// Minimum cosine angle: the minimum over unit directions c in the span of
/// the hypothesis columns of sum_k phi_k max_{j in I(k)} |cos(B_.j, c)|.
///
/// grid: dense mesh over the unit sphere of the span (needs n <= 3) refined
/// by local pattern search; value is reported with a resolution error bar.
/// analytic_orthonormal: closed forms for orthonormal columns — min_k phi_k
/// when every subclass holds exactly one column, 1/sqrt(J) when all J
/// columns share one subclass. Other shapes are rejected.
ThetaEstimate min_cosine_angle(const TheoryInstance& instance, ThetaMethod method);

struct ExpectedProgressReport {
    double lhs = 0.0; // E over subclass choice of Gamma_{j_m}^2
    double rhs = 0.0; // squared phi-weighted max-magnitude norm of Gamma
    bool holds = false;
};

/// Exact enumeration of both sides of the expected-progress inequality at
/// the given state; holds means lhs >= rhs - 1e-12.
ExpectedProgressReport verify_expected_progress(const TheoryInstance& instance,
                                                const DescentState& state);

struct LinearRateReport {
    std::vector<double> mean_gap; // index m = 0..rounds
    std::vector<double> bound;    // contraction^m * gap_0
    double theta = 0.0;
    double contraction = 0.0; // 1 - (mu/S)^2 theta^2
    double epsilon = 0.0;     // mu / S
    double optimal_loss = 0.0;
    double mc_slack = 0.0;    // 3 / sqrt(trials)
    bool holds = false;
};

/// Run `trials` independent descent trajectories from beta = 0 with the
/// rate-optimal step size epsilon = mu/S, and compare the empirical mean
/// optimality gap against the linear-rate bound at every round (within
/// Monte Carlo slack). The optimal loss is computed exactly for squared
/// error (projection onto the span) and by Newton descent to gradient norm
/// 1e-12 otherwise. Requires a strongly convex loss.
LinearRateReport verify_linear_rate(const TheoryInstance& instance, int rounds, int trials,
                                    std::uint64_t seed);

/// Unconstrained minimum of the loss over the span of the hypothesis columns.
double optimal_loss(const TheoryInstance& instance);

/// JSON instance files: {"hypotheses": [[row], ...], "subclasses": [[j, ...], ...],
///  "probabilities": [...], "loss": {"kind": "mse"|"logloss", "lambda": x}, "labels": [...]}.
TheoryInstance instance_from_json(const std::string& text);
std::string instance_to_json(const TheoryInstance& instance);
TheoryInstance load_instance(const std::string& path);

/// Named demonstration instances used by the CLI ("identity2-uniform",
/// "identity2-single", "perfect-fit", "logistic3-random").
TheoryInstance builtin_instance(const std::string& name);
std::vector<std::string> builtin_instance_names();

} // namespace mixboost
