#include "mixboost/theory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mixboost/error.hpp"
#include "mixboost/rng.hpp"
#include "mixboost/threading.hpp"

namespace mixboost {

using nlohmann::json;

void TheoryInstance::validate() const {
    const std::size_t n = n_examples();
    const std::size_t j_count = n_hypotheses();
    require(n >= 1 && j_count >= 1, "instance needs at least one example and one hypothesis");
    require(static_cast<std::size_t>(labels.size()) == n,
            "instance label count does not match example count");

    for (std::size_t j = 0; j < j_count; ++j) {
        const double norm_sq = hypotheses.col(static_cast<Eigen::Index>(j)).squaredNorm();
        if (std::abs(norm_sq - 1.0) > 1e-12)
            throw Error("hypothesis column " + std::to_string(j) +
                        " is not unit-norm (squared norm " + std::to_string(norm_sq) +
                        "); normalized subclasses require unit columns");
    }

    require(!index_sets.empty(), "instance needs at least one subclass");
    require(index_sets.size() == probabilities.size(),
            "subclass count does not match probability count");
    std::vector<bool> seen(j_count, false);
    for (const auto& set : index_sets) {
        require(!set.empty(), "subclass index sets must be non-empty");
        for (std::size_t j : set) {
            require(j < j_count, "subclass index out of range");
            require(!seen[j], "subclass index sets must be disjoint");
            seen[j] = true;
        }
    }
    require(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }),
            "subclass index sets must cover every hypothesis column");

    double sum = 0.0;
    for (double p : probabilities) {
        require(p >= 0.0, "subclass probabilities must be non-negative");
        sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-12, "subclass probabilities must sum to 1");
}

double TheoryInstance::loss_at_margins(const Eigen::VectorXd& margins) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i)
        total += loss.point_value(labels(i), margins(i));
    return total;
}

DescentState DescentState::zero(const TheoryInstance& instance) {
    DescentState state;
    state.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(instance.n_hypotheses()));
    state.margins = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(instance.n_examples()));
    state.iteration = 0;
    return state;
}

double DescentState::margin_drift(const TheoryInstance& instance) const {
    return (instance.hypotheses * beta - margins).lpNorm<Eigen::Infinity>();
}

namespace {

struct PointwiseDerivs {
    Eigen::VectorXd g;
    Eigen::VectorXd h;
};

PointwiseDerivs derivs_at(const TheoryInstance& instance, const Eigen::VectorXd& margins) {
    PointwiseDerivs d;
    d.g.resize(margins.size());
    d.h.resize(margins.size());
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
        d.g(i) = instance.loss.point_grad(instance.labels(i), margins(i));
        d.h(i) = instance.loss.point_hess(instance.labels(i), margins(i));
    }
    return d;
}

std::size_t sample_categorical(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        cum += probs[k];
        if (u < cum) return k;
    }
    return probs.size() - 1;
}

// Coordinate gradient and curvature of the reformulated objective.
void coordinate_derivs(const TheoryInstance& instance, const Eigen::VectorXd& margins,
                       Eigen::VectorXd& grad, Eigen::VectorXd& curv) {
    const PointwiseDerivs d = derivs_at(instance, margins);
    grad = instance.hypotheses.transpose() * d.g;
    curv = instance.hypotheses.cwiseAbs2().transpose() * d.h;
}

} // namespace

Eigen::VectorXd gamma(const TheoryInstance& instance, const DescentState& state) {
    Eigen::VectorXd grad, curv;
    coordinate_derivs(instance, state.margins, grad, curv);
    Eigen::VectorXd out(grad.size());
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
        if (!(curv(j) > 0.0))
            throw Error("non-positive curvature at coordinate " + std::to_string(j));
        out(j) = grad(j) / std::sqrt(curv(j));
    }
    return out;
}

void descent_step(const TheoryInstance& instance, DescentState& state, std::size_t subclass,
                  double epsilon) {
    require(subclass < instance.n_subclasses(), "subclass index out of range");
    Eigen::VectorXd grad, curv;
    coordinate_derivs(instance, state.margins, grad, curv);

    std::size_t best_j = 0;
    double best_abs = -1.0;
    for (std::size_t j : instance.index_sets[subclass]) {
        const auto idx = static_cast<Eigen::Index>(j);
        if (!(curv(idx) > 0.0))
            throw Error("non-positive curvature at coordinate " + std::to_string(j));
        const double a = std::abs(grad(idx) / std::sqrt(curv(idx)));
        if (a > best_abs || (a == best_abs && j < best_j)) {
            best_abs = a;
            best_j = j;
        }
    }

    const auto j = static_cast<Eigen::Index>(best_j);
    const double magnitude = -grad(j) / curv(j);
    state.beta(j) += epsilon * magnitude;
    state.margins += epsilon * magnitude * instance.hypotheses.col(j);
    ++state.iteration;
}

namespace {

// Objective of the minimum-cosine-angle search for a unit direction c.
double phi_norm_of_cosines(const TheoryInstance& instance, const Eigen::VectorXd& c) {
    const Eigen::VectorXd dots = instance.hypotheses.transpose() * c;
    double total = 0.0;
    for (std::size_t k = 0; k < instance.n_subclasses(); ++k) {
        double best = 0.0;
        for (std::size_t j : instance.index_sets[k])
            best = std::max(best, std::abs(dots(static_cast<Eigen::Index>(j))));
        total += instance.probabilities[k] * best;
    }
    return total;
}

// Orthonormal basis of the span of the hypothesis columns.
Eigen::MatrixXd span_basis(const Eigen::MatrixXd& B) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), rank);
    return q;
}

// Local pattern search over the unit sphere, starting at unit vector c.
double refine_on_sphere(const TheoryInstance& instance, Eigen::VectorXd c,
                        const Eigen::MatrixXd& basis, double initial_step, double& final_step) {
    const Eigen::Index r = basis.cols();
    double best = phi_norm_of_cosines(instance, c);
    double step = initial_step;
    while (step > 1e-10) {
        bool improved = false;
        for (Eigen::Index t = 0; t < r && !improved; ++t) {
            // Tangent directions within the span, orthogonal to c.
            Eigen::VectorXd dir = basis.col(t) - basis.col(t).dot(c) * c;
            const double len = dir.norm();
            if (len < 1e-12) continue;
            dir /= len;
            for (const double sign : {1.0, -1.0}) {
                Eigen::VectorXd cand = (c + sign * step * dir).normalized();
                const double value = phi_norm_of_cosines(instance, cand);
                if (value < best) {
                    best = value;
                    c = cand;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    final_step = step;
    return best;
}

} // namespace

ThetaEstimate min_cosine_angle(const TheoryInstance& instance, ThetaMethod method) {
    instance.validate();

    if (method == ThetaMethod::analytic_orthonormal) {
        const Eigen::MatrixXd gram =
            instance.hypotheses.transpose() * instance.hypotheses;
        const double off = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
                               .cwiseAbs()
                               .maxCoeff();
        require(off <= 1e-9, "analytic method requires orthonormal hypothesis columns");
        const std::size_t j_count = instance.n_hypotheses();
        if (instance.n_subclasses() == 1) {
            return {1.0 / std::sqrt(static_cast<double>(j_count)), 0.0};
        }
        const bool one_per_subclass =
            instance.n_subclasses() == j_count &&
            std::all_of(instance.index_sets.begin(), instance.index_sets.end(),
                        [](const auto& s) { return s.size() == 1; });
        require(one_per_subclass,
                "analytic method supports one column per subclass or a single subclass");
        double theta = 1.0;
        for (double p : instance.probabilities) theta = std::min(theta, p);
        return {theta, 0.0};
    }

    require(instance.n_examples() <= 3, "grid method supports at most 3 examples");
    const Eigen::MatrixXd basis = span_basis(instance.hypotheses);
    const Eigen::Index rank = basis.cols();

    if (rank == 1) {
        return {phi_norm_of_cosines(instance, basis.col(0)), 0.0};
    }

    struct MeshPoint {
        double value;
        Eigen::VectorXd c;
    };
    std::vector<MeshPoint> best_points;
    auto consider = [&](const Eigen::VectorXd& c, double value, std::size_t keep) {
        if (best_points.size() < keep) {
            best_points.push_back({value, c});
            std::sort(best_points.begin(), best_points.end(),
                      [](const MeshPoint& a, const MeshPoint& b) { return a.value < b.value; });
        } else if (value < best_points.back().value) {
            best_points.back() = {value, c};
            std::sort(best_points.begin(), best_points.end(),
                      [](const MeshPoint& a, const MeshPoint& b) { return a.value < b.value; });
        }
    };

    double mesh_spacing = 0.0;
    if (rank == 2) {
        const std::size_t mesh = 200'000;
        mesh_spacing = M_PI / static_cast<double>(mesh);
        for (std::size_t i = 0; i < mesh; ++i) {
            const double angle = mesh_spacing * static_cast<double>(i);
            const Eigen::VectorXd c =
                std::cos(angle) * basis.col(0) + std::sin(angle) * basis.col(1);
            consider(c, phi_norm_of_cosines(instance, c), 8);
        }
    } else {
        // Spherical Fibonacci mesh over the 2-sphere of span coordinates.
        const std::size_t mesh = 500'000;
        mesh_spacing = std::sqrt(4.0 * M_PI / static_cast<double>(mesh));
        const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < mesh; ++i) {
            const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(mesh);
            const double radius = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double angle = golden_angle * static_cast<double>(i);
            const Eigen::Vector3d u(radius * std::cos(angle), radius * std::sin(angle), z);
            const Eigen::VectorXd c = basis * u;
            consider(c, phi_norm_of_cosines(instance, c), 16);
        }
    }

    double theta = best_points.front().value;
    double final_step = mesh_spacing;
    for (const auto& point : best_points) {
        double step_out = mesh_spacing;
        const double refined =
            refine_on_sphere(instance, point.c, basis, 2.0 * mesh_spacing, step_out);
        if (refined < theta) {
            theta = refined;
            final_step = step_out;
        }
    }
    return {theta, std::max(final_step, mesh_spacing * 1e-3)};
}

ExpectedProgressReport verify_expected_progress(const TheoryInstance& instance,
                                                const DescentState& state) {
    const Eigen::VectorXd gamma_vec = gamma(instance, state);
    double lhs = 0.0;
    double phi_norm = 0.0;
    for (std::size_t k = 0; k < instance.n_subclasses(); ++k) {
        double best_sq = 0.0;
        double best_abs = 0.0;
        for (std::size_t j : instance.index_sets[k]) {
            const double v = gamma_vec(static_cast<Eigen::Index>(j));
            best_sq = std::max(best_sq, v * v);
            best_abs = std::max(best_abs, std::abs(v));
        }
        lhs += instance.probabilities[k] * best_sq;
        phi_norm += instance.probabilities[k] * best_abs;
    }
    const double rhs = phi_norm * phi_norm;
    return {lhs, rhs, lhs >= rhs - 1e-12};
}

double optimal_loss(const TheoryInstance& instance) {
    const Eigen::MatrixXd basis = span_basis(instance.hypotheses);
    if (instance.loss.kind() == LossKind::squared_error) {
        const Eigen::VectorXd fitted = basis * (basis.transpose() * instance.labels);
        return instance.loss_at_margins(fitted);
    }
    require(instance.loss.strongly_convex(),
            "optimal loss requires a strongly convex loss");
    // Newton descent in span coordinates, to gradient norm 1e-12.
    const Eigen::Index r = basis.cols();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(r);
    double value = instance.loss_at_margins(basis * u);
    for (int iter = 0; iter < 500; ++iter) {
        const Eigen::VectorXd margins = basis * u;
        const PointwiseDerivs d = derivs_at(instance, margins);
        const Eigen::VectorXd grad = basis.transpose() * d.g;
        if (grad.lpNorm<Eigen::Infinity>() <= 1e-13) break;
        const Eigen::MatrixXd hess = basis.transpose() * d.h.asDiagonal() * basis;
        Eigen::VectorXd direction = hess.ldlt().solve(-grad);
        double step = 1.0;
        for (int halving = 0; halving < 60; ++halving) {
            const double cand = instance.loss_at_margins(basis * (u + step * direction));
            if (cand <= value) {
                u += step * direction;
                value = cand;
                break;
            }
            step *= 0.5;
        }
    }
    return value;
}

LinearRateReport verify_linear_rate(const TheoryInstance& instance, int rounds, int trials,
                                    std::uint64_t seed) {
    instance.validate();
    require(instance.loss.strongly_convex(),
            "the linear-rate guarantee requires a strongly convex loss");
    require(rounds >= 1 && trials >= 1, "rounds and trials must be positive");

    LinearRateReport report;
    report.epsilon = instance.loss.mu() / instance.loss.smoothness();
    ThetaEstimate theta;
    try {
        theta = min_cosine_angle(instance, ThetaMethod::analytic_orthonormal);
    } catch (const Error&) {
        theta = min_cosine_angle(instance, ThetaMethod::grid);
    }
    report.theta = theta.value;
    const double ratio = instance.loss.mu() / instance.loss.smoothness();
    report.contraction = 1.0 - ratio * ratio * theta.value * theta.value;
    report.optimal_loss = optimal_loss(instance);
    report.mc_slack = 3.0 / std::sqrt(static_cast<double>(trials));

    const auto m_count = static_cast<std::size_t>(rounds) + 1;
    std::vector<std::vector<double>> gaps(static_cast<std::size_t>(trials));

    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        Rng rng = Rng::child(seed, rng_purpose::kTheoryTrial, t);
        DescentState state = DescentState::zero(instance);
        auto& gap_curve = gaps[t];
        gap_curve.resize(m_count);
        gap_curve[0] = instance.loss_at_margins(state.margins) - report.optimal_loss;
        for (int m = 1; m <= rounds; ++m) {
            const std::size_t subclass = sample_categorical(instance.probabilities, rng);
            descent_step(instance, state, subclass, report.epsilon);
            gap_curve[static_cast<std::size_t>(m)] =
                instance.loss_at_margins(state.margins) - report.optimal_loss;
        }
    });

    // Combine in trial order so the mean does not depend on the thread count.
    report.mean_gap.assign(m_count, 0.0);
    for (const auto& curve : gaps)
        for (std::size_t m = 0; m < m_count; ++m) report.mean_gap[m] += curve[m];
    for (double& g : report.mean_gap) g /= static_cast<double>(trials);

    report.bound.resize(m_count);
    const double gap0 = report.mean_gap[0];
    for (std::size_t m = 0; m < m_count; ++m)
        report.bound[m] = gap0 * std::pow(report.contraction, static_cast<double>(m));

    report.holds = true;
    for (std::size_t m = 0; m < m_count; ++m) {
        if (report.mean_gap[m] > report.bound[m] * (1.0 + report.mc_slack) + 1e-10) {
            report.holds = false;
            break;
        }
    }
    return report;
}

TheoryInstance instance_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("instance file is not valid JSON: ") + e.what());
    }
    try {
        TheoryInstance instance;
        const auto& rows = j.at("hypotheses");
        require(!rows.empty(), "instance has no hypothesis rows");
        const std::size_t n = rows.size();
        const std::size_t j_count = rows[0].size();
        instance.hypotheses.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j_count));
        for (std::size_t i = 0; i < n; ++i) {
            require(rows[i].size() == j_count, "hypothesis rows must have equal length");
            for (std::size_t c = 0; c < j_count; ++c)
                instance.hypotheses(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                    rows[i][c].get<double>();
        }
        for (const auto& set : j.at("subclasses")) {
            std::vector<std::size_t> s;
            for (const auto& v : set) s.push_back(v.get<std::size_t>());
            instance.index_sets.push_back(std::move(s));
        }
        for (const auto& p : j.at("probabilities")) instance.probabilities.push_back(p.get<double>());
        const auto& loss = j.at("loss");
        const auto kind = loss.at("kind").get<std::string>();
        if (kind == "mse")
            instance.loss = LossFunction::squared_error();
        else if (kind == "logloss")
            instance.loss = LossFunction::logistic_l2(loss.value("lambda", 0.0));
        else
            throw Error("unknown loss kind '" + kind + "' in instance file");
        const auto& labels = j.at("labels");
        instance.labels.resize(static_cast<Eigen::Index>(labels.size()));
        for (std::size_t i = 0; i < labels.size(); ++i)
            instance.labels(static_cast<Eigen::Index>(i)) = labels[i].get<double>();
        instance.validate();
        return instance;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed instance file: ") + e.what());
    }
}

std::string instance_to_json(const TheoryInstance& instance) {
    json j;
    json rows = json::array();
    for (Eigen::Index i = 0; i < instance.hypotheses.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < instance.hypotheses.cols(); ++c)
            row.push_back(instance.hypotheses(i, c));
        rows.push_back(std::move(row));
    }
    j["hypotheses"] = std::move(rows);
    j["subclasses"] = instance.index_sets;
    j["probabilities"] = instance.probabilities;
    if (instance.loss.kind() == LossKind::squared_error) {
        j["loss"] = {{"kind", "mse"}};
    } else {
        j["loss"] = {{"kind", "logloss"}, {"lambda", instance.loss.lambda()}};
    }
    json labels = json::array();
    for (Eigen::Index i = 0; i < instance.labels.size(); ++i) labels.push_back(instance.labels(i));
    j["labels"] = std::move(labels);
    return j.dump(2) + "\n";
}

TheoryInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return instance_from_json(ss.str());
}

TheoryInstance builtin_instance(const std::string& name) {
    TheoryInstance instance;
    if (name == "identity2-uniform") {
        instance.hypotheses = Eigen::MatrixXd::Identity(2, 2);
        instance.index_sets = {{0}, {1}};
        instance.probabilities = {0.5, 0.5};
        instance.loss = LossFunction::squared_error();
        instance.labels = Eigen::Vector2d(1.0, 1.0);
    } else if (name == "identity2-single") {
        instance.hypotheses = Eigen::MatrixXd::Identity(2, 2);
        instance.index_sets = {{0, 1}};
        instance.probabilities = {1.0};
        instance.loss = LossFunction::squared_error();
        instance.labels = Eigen::Vector2d(1.0, 1.0);
    } else if (name == "perfect-fit") {
        instance.hypotheses.resize(2, 1);
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        instance.hypotheses << inv_sqrt2, inv_sqrt2;
        instance.index_sets = {{0}};
        instance.probabilities = {1.0};
        instance.loss = LossFunction::squared_error();
        instance.labels = Eigen::Vector2d(1.0, 1.0);
    } else if (name == "logistic3-random") {
        Rng rng(20240515);
        instance.hypotheses.resize(3, 5);
        for (Eigen::Index c = 0; c < 5; ++c) {
            Eigen::Vector3d col(rng.normal(), rng.normal(), rng.normal());
            instance.hypotheses.col(c) = col.normalized();
        }
        instance.index_sets = {{0, 1, 2}, {3, 4}};
        instance.probabilities = {0.6, 0.4};
        instance.loss = LossFunction::logistic_l2(0.1);
        instance.labels = Eigen::Vector3d(1.0, -1.0, 1.0);
    } else {
        throw Error("unknown built-in instance '" + name + "'");
    }
    instance.validate();
    return instance;
}

std::vector<std::string> builtin_instance_names() {
    return {"identity2-uniform", "identity2-single", "perfect-fit", "logistic3-random"};
}

} // namespace mixboost
