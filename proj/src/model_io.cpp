#include "mixboost/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mixboost/error.hpp"

namespace mixboost {

using nlohmann::json;

namespace {

json tree_to_json(const Tree& tree) {
    json nodes = json::array();
    for (const TreeNode& n : tree.nodes) {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"value", n.value}});
    }
    return {{"type", "tree"}, {"nodes", std::move(nodes)}};
}

Tree tree_from_json(const json& j) {
    Tree tree;
    for (const auto& jn : j.at("nodes")) {
        TreeNode n;
        n.feature = jn.at("feature").get<std::int32_t>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<std::int32_t>();
        n.right = jn.at("right").get<std::int32_t>();
        n.value = jn.at("value").get<double>();
        tree.nodes.push_back(n);
    }
    require(!tree.nodes.empty(), "model file contains an empty tree");
    for (const TreeNode& n : tree.nodes) {
        if (n.is_leaf()) continue;
        const auto size = static_cast<std::int32_t>(tree.nodes.size());
        if (n.left < 0 || n.left >= size || n.right < 0 || n.right >= size)
            throw Error("model file contains an out-of-range tree child index");
    }
    tree.depth_limit = tree.depth();
    return tree;
}

json ridge_to_json(const RidgeModel& ridge) {
    json coef = json::array();
    for (Eigen::Index k = 0; k < ridge.coefficients.size(); ++k) coef.push_back(ridge.coefficients(k));
    return {{"type", "rff"},
            {"coefficients", std::move(coef)},
            {"intercept", ridge.intercept},
            {"alpha", ridge.alpha}};
}

RidgeModel ridge_from_json(const json& j) {
    RidgeModel ridge;
    const auto& coef = j.at("coefficients");
    ridge.coefficients.resize(static_cast<Eigen::Index>(coef.size()));
    for (std::size_t k = 0; k < coef.size(); ++k)
        ridge.coefficients(static_cast<Eigen::Index>(k)) = coef[k].get<double>();
    ridge.intercept = j.at("intercept").get<double>();
    ridge.alpha = j.value("alpha", 0.0);
    return ridge;
}

json projection_to_json(const RFFProjection& proj) {
    json weights = json::array(); // row-major d x c
    for (Eigen::Index r = 0; r < proj.weights.rows(); ++r)
        for (Eigen::Index k = 0; k < proj.weights.cols(); ++k) weights.push_back(proj.weights(r, k));
    json offsets = json::array();
    for (Eigen::Index k = 0; k < proj.offsets.size(); ++k) offsets.push_back(proj.offsets(k));
    return {{"gamma", proj.gamma},
            {"n_features", proj.weights.rows()},
            {"n_components", proj.weights.cols()},
            {"weights", std::move(weights)},
            {"offsets", std::move(offsets)}};
}

RFFProjection projection_from_json(const json& j) {
    RFFProjection proj;
    proj.gamma = j.at("gamma").get<double>();
    const auto d = j.at("n_features").get<Eigen::Index>();
    const auto c = j.at("n_components").get<Eigen::Index>();
    const auto& weights = j.at("weights");
    const auto& offsets = j.at("offsets");
    require(static_cast<Eigen::Index>(weights.size()) == d * c,
            "model file projection weight count mismatch");
    require(static_cast<Eigen::Index>(offsets.size()) == c,
            "model file projection offset count mismatch");
    proj.weights.resize(d, c);
    std::size_t t = 0;
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index k = 0; k < c; ++k) proj.weights(r, k) = weights[t++].get<double>();
    proj.offsets.resize(c);
    for (Eigen::Index k = 0; k < c; ++k)
        proj.offsets(k) = offsets[static_cast<std::size_t>(k)].get<double>();
    return proj;
}

} // namespace

std::string to_model_json(const Ensemble& ensemble) {
    json j;
    j["format_version"] = ensemble.format_version;
    j["objective"] = ensemble.objective;
    j["base_score"] = ensemble.base_score;
    j["learning_rate"] = ensemble.learning_rate;
    if (ensemble.projection) j["rff_projection"] = projection_to_json(*ensemble.projection);
    json learners = json::array();
    for (const auto& learner : ensemble.learners) {
        if (const Tree* tree = std::get_if<Tree>(&learner))
            learners.push_back(tree_to_json(*tree));
        else
            learners.push_back(ridge_to_json(std::get<RidgeModel>(learner)));
    }
    j["learners"] = std::move(learners);
    return j.dump(2) + "\n";
}

Ensemble from_model_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        Ensemble ensemble;
        ensemble.format_version = j.at("format_version").get<int>();
        if (ensemble.format_version != Ensemble::kFormatVersion)
            throw Error("unsupported model format version " +
                        std::to_string(ensemble.format_version) + " (expected " +
                        std::to_string(Ensemble::kFormatVersion) + ")");
        ensemble.objective = j.at("objective").get<std::string>();
        ensemble.base_score = j.at("base_score").get<double>();
        ensemble.learning_rate = j.at("learning_rate").get<double>();
        if (j.contains("rff_projection"))
            ensemble.projection = projection_from_json(j.at("rff_projection"));
        for (const auto& jl : j.at("learners")) {
            const auto type = jl.at("type").get<std::string>();
            if (type == "tree") {
                ensemble.learners.emplace_back(tree_from_json(jl));
            } else if (type == "rff") {
                require(ensemble.projection.has_value(),
                        "model file has a ridge learner but no projection");
                ensemble.learners.emplace_back(ridge_from_json(jl));
            } else {
                throw Error("unknown learner type '" + type + "' in model file");
            }
        }
        return ensemble;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const Ensemble& ensemble, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot open file for writing: " + path);
    out << to_model_json(ensemble);
    require(out.good(), "write failed: " + path);
}

Ensemble load_model(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_model_json(ss.str());
}

} // namespace mixboost
