#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mixboost/error.hpp"
#include "mixboost/histogram.hpp"
#include "mixboost/rng.hpp"
#include "mixboost/tree.hpp"

#include "oracles.hpp"

using namespace mixboost;

namespace {

Dataset column_dataset(const std::vector<double>& column) {
    return Dataset(column, column.size(), 1, std::vector<double>(column.size(), 0.0));
}

std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d, std::size_t distinct) {
    std::vector<double> features(n * d);
    for (double& v : features)
        v = static_cast<double>(rng.uniform_int(0, static_cast<long long>(distinct) - 1)) /
            static_cast<double>(distinct);
    return Dataset(features, n, d, std::vector<double>(n, 0.0));
}

} // namespace

TEST_CASE("presort orders every feature") {
    const Dataset ds({3, 1, 2}, 3, 1, {0, 0, 0});
    const auto order = presort(ds);
    REQUIRE(order.size() == 1);
    CHECK(order[0] == std::vector<std::uint32_t>{1, 2, 0});

    const Dataset sorted_ds({1, 2, 3}, 3, 1, {0, 0, 0});
    CHECK(presort(sorted_ds)[0] == std::vector<std::uint32_t>{0, 1, 2});

    // ties keep original index order
    const Dataset tied({2, 1, 2, 1}, 4, 1, {0, 0, 0, 0});
    CHECK(presort(tied)[0] == std::vector<std::uint32_t>{1, 3, 0, 2});
}

TEST_CASE("presort of a random column yields a non-decreasing sequence") {
    Rng rng(5);
    std::vector<double> column(1000);
    for (double& v : column) v = rng.normal();
    const Dataset ds = column_dataset(column);
    const auto order = presort(ds);
    for (std::size_t i = 1; i < column.size(); ++i)
        CHECK(column[order[0][i - 1]] <= column[order[0][i]]);
}

TEST_CASE("histograms balance a divisible column exactly") {
    const Dataset ds = column_dataset({1, 2, 3, 4, 5, 6, 7, 8});
    const auto layout = build_histograms(ds, presort(ds), 4);
    CHECK(layout.bin_count(0) == 4);
    CHECK(layout.edges(0) == std::vector<double>{2, 4, 6});
    std::vector<int> occupancy(4, 0);
    for (std::size_t i = 0; i < 8; ++i) ++occupancy[layout.code(i, 0)];
    for (int c : occupancy) CHECK(c == 2);
}

TEST_CASE("constant and low-cardinality columns") {
    const Dataset constant = column_dataset({7, 7, 7, 7});
    const auto layout = build_histograms(constant, presort(constant), 8);
    CHECK(layout.bin_count(0) == 1);

    // fewer distinct values than bins: one bin per distinct value, ties together
    const Dataset skewed = column_dataset({1, 2, 2, 2, 2, 2, 2, 3});
    const auto layout2 = build_histograms(skewed, presort(skewed), 8);
    CHECK(layout2.bin_count(0) == 3);
    CHECK(layout2.code(0, 0) == 0);
    CHECK(layout2.code(1, 0) == 1);
    CHECK(layout2.code(7, 0) == 2);
}

TEST_CASE("histogram occupancy stays below twice the target") {
    Rng rng(17);
    std::vector<double> column(10'000);
    for (double& v : column) v = rng.uniform();
    const Dataset ds = column_dataset(column);
    const auto layout = build_histograms(ds, presort(ds), 256);
    std::vector<int> occupancy(layout.bin_count(0), 0);
    for (std::size_t i = 0; i < column.size(); ++i) ++occupancy[layout.code(i, 0)];
    const double target = 10'000.0 / 256.0;
    for (int c : occupancy) CHECK(static_cast<double>(c) <= 2.0 * target);
}

TEST_CASE("bin counts respect the cap and reject bad requests") {
    Rng rng(19);
    std::vector<double> column(4000);
    for (double& v : column) v = rng.normal(); // ~4000 distinct values
    const Dataset ds = column_dataset(column);
    const auto layout = build_histograms(ds, presort(ds), 256);
    CHECK(layout.bin_count(0) <= 256);
    CHECK(layout.bin_count(0) >= 200); // greedy actually uses the budget

    CHECK_THROWS_AS(build_histograms(ds, presort(ds), 1), Error);
    CHECK_THROWS_AS(build_histograms(ds, presort(ds), 257), Error);
}

TEST_CASE("bin_of agrees with training-time codes") {
    Rng rng(23);
    std::vector<double> column(500);
    for (double& v : column) v = rng.uniform(-3.0, 3.0);
    const Dataset ds = column_dataset(column);
    const auto layout = build_histograms(ds, presort(ds), 16);
    for (std::size_t i = 0; i < column.size(); ++i)
        CHECK(layout.bin_of(column[i], 0) == layout.code(i, 0));
}

TEST_CASE("stump on the four-point line splits in the middle") {
    const Dataset ds({1, 2, 3, 4}, 4, 1, {0, 0, 0, 0});
    const std::vector<double> g = {-1, -1, 1, 1}, h = {1, 1, 1, 1};
    const auto layout = build_histograms(ds, presort(ds), 256);
    const Tree tree = fit_tree(ds, g, h, layout, 1, 0.0, iota(4), {0});

    REQUIRE(tree.nodes.size() == 3);
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold == 2.0);
    const double x_low[] = {1.5}, x_high[] = {3.7};
    CHECK(tree.predict(x_low) == doctest::Approx(1.0));
    CHECK(tree.predict(x_high) == doctest::Approx(-1.0));

    // gain of the winning split is 4
    const auto oracle = oracles::brute_force_split(ds, g, h, iota(4), {0}, 0.0);
    CHECK(oracle.gain == doctest::Approx(4.0));
    CHECK(oracle.threshold == 2.0);
}

TEST_CASE("all-zero gradients produce a single zero leaf") {
    const Dataset ds({1, 2, 3, 4}, 4, 1, {0, 0, 0, 0});
    const std::vector<double> g = {0, 0, 0, 0}, h = {1, 1, 1, 1};
    const auto layout = build_histograms(ds, presort(ds), 256);
    const Tree tree = fit_tree(ds, g, h, layout, 3, 0.0, iota(4), {0});
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].is_leaf());
    CHECK(tree.nodes[0].value == 0.0);
}

TEST_CASE("non-positive hessians are rejected") {
    const Dataset ds({1, 2}, 2, 1, {0, 0});
    const auto layout = build_histograms(ds, presort(ds), 256);
    CHECK_THROWS_AS(fit_tree(ds, {1, 1}, {0, 0}, layout, 1, 0.0, iota(2), {0}), Error);
}

TEST_CASE("zero-hessian slices never become degenerate leaves") {
    // example 2 has h = 0 with a non-zero gradient; an unregularized split
    // isolating it would have infinite apparent gain
    const Dataset ds({1, 2, 3}, 3, 1, {0, 0, 0});
    const std::vector<double> g = {-1.0, 1.0, 5.0}, h = {1.0, 1.0, 0.0};
    const auto layout = build_histograms(ds, presort(ds), 256);
    const Tree tree = fit_tree(ds, g, h, layout, 3, 0.0, iota(3), {0});
    for (const auto& node : tree.nodes) {
        if (node.is_leaf()) CHECK(std::isfinite(node.value));
    }
}

TEST_CASE("predict_tree routes thresholds with ties to the left") {
    Tree stump;
    stump.nodes.resize(3);
    stump.nodes[0] = {0, 2.5, 1, 2, 0.0};
    stump.nodes[1] = {-1, 0.0, -1, -1, 1.0};
    stump.nodes[2] = {-1, 0.0, -1, -1, -1.0};
    const double a[] = {2.0}, b[] = {3.0}, boundary[] = {2.5};
    CHECK(stump.predict(a) == 1.0);
    CHECK(stump.predict(b) == -1.0);
    CHECK(stump.predict(boundary) == 1.0);

    Tree leaf_only;
    leaf_only.nodes.push_back({-1, 0.0, -1, -1, 0.7});
    const double anything[] = {123.0};
    CHECK(leaf_only.predict(anything) == 0.7);
}

TEST_CASE("exact-mode root split equals exhaustive search on random data") {
    Rng rng(31);
    for (int round = 0; round < 50; ++round) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(20, 200));
        const auto d = static_cast<std::size_t>(rng.uniform_int(1, 5));
        const auto distinct = static_cast<std::size_t>(rng.uniform_int(2, 64));
        const Dataset ds = random_dataset(rng, n, d, distinct);
        std::vector<double> g(n), h(n);
        for (double& v : g) v = rng.normal();
        for (double& v : h) v = rng.uniform(0.5, 2.0);
        const double lambda = rng.coin() ? 0.0 : rng.uniform(0.0, 1.0);

        const auto layout = build_histograms(ds, presort(ds), 256);
        const Tree tree = fit_tree(ds, g, h, layout, 1, lambda, iota(n), iota(d));
        const auto oracle = oracles::brute_force_split(ds, g, h, iota(n), iota(d), lambda);

        if (!oracle.found || !(oracle.gain > 0.0)) {
            CHECK(tree.nodes[0].is_leaf());
            continue;
        }
        REQUIRE_FALSE(tree.nodes[0].is_leaf());
        CHECK(tree.nodes[0].feature == static_cast<std::int32_t>(oracle.feature));
        CHECK(tree.nodes[0].threshold == oracle.threshold);
    }
}

TEST_CASE("leaf values minimize the regularized weighted objective") {
    Rng rng(37);
    for (int round = 0; round < 20; ++round) {
        const std::size_t n = 60;
        const Dataset ds = random_dataset(rng, n, 3, 16);
        std::vector<double> g(n), h(n);
        for (double& v : g) v = rng.normal();
        for (double& v : h) v = rng.uniform(0.2, 3.0);
        const double lambda = rng.uniform(0.0, 2.0);

        const auto layout = build_histograms(ds, presort(ds), 256);
        const Tree tree = fit_tree(ds, g, h, layout, 3, lambda, iota(n), iota(3));

        // gather per-leaf example sets by routing
        for (std::size_t node_id = 0; node_id < tree.nodes.size(); ++node_id) {
            if (!tree.nodes[node_id].is_leaf()) continue;
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i) {
                std::int32_t cur = 0;
                while (!tree.nodes[cur].is_leaf()) {
                    const auto& nd = tree.nodes[cur];
                    cur = ds.value(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
                }
                if (cur == static_cast<std::int32_t>(node_id)) members.push_back(i);
            }
            if (members.empty()) continue;
            auto objective = [&](double v) {
                double total = lambda * v * v;
                for (std::size_t i : members) {
                    const double target = -g[i] / h[i];
                    total += h[i] * (target - v) * (target - v);
                }
                return total;
            };
            const double best = oracles::golden_minimize(objective, -50.0, 50.0);
            CHECK(tree.nodes[node_id].value == doctest::Approx(best).epsilon(1e-8));
            CHECK(objective(tree.nodes[node_id].value) <= objective(best) + 1e-10);
        }
    }
}

TEST_CASE("exact-mode trees reproduce the exhaustive-search tree") {
    Rng rng(41);
    for (int round = 0; round < 10; ++round) {
        const std::size_t n = 120;
        const auto d = static_cast<std::size_t>(rng.uniform_int(2, 4));
        const Dataset ds = random_dataset(rng, n, d, 24);
        std::vector<double> g(n), h(n);
        for (double& v : g) v = rng.normal();
        for (double& v : h) v = rng.uniform(0.5, 1.5);

        const auto layout = build_histograms(ds, presort(ds), 256);
        const Tree tree = fit_tree(ds, g, h, layout, 3, 0.1, iota(n), iota(d));
        const auto reference = oracles::brute_force_tree(ds, g, h, iota(n), iota(d), 0.1, 3);

        for (std::size_t i = 0; i < n; ++i) {
            CHECK(tree.predict(ds.row(i)) ==
                  doctest::Approx(oracles::ref_tree_predict(*reference, ds.row(i)))
                      .epsilon(1e-9));
        }
    }
}

TEST_CASE("exact mode holds right at the 256-distinct-value boundary") {
    Rng rng(53);
    const std::size_t n = 512;
    std::vector<double> features(n);
    for (std::size_t i = 0; i < n; ++i) features[i] = static_cast<double>(i % 256); // 256 distinct
    const Dataset ds(features, n, 1, std::vector<double>(n, 0.0));
    std::vector<double> g(n), h(n, 1.0);
    for (double& v : g) v = rng.normal();

    const auto layout = build_histograms(ds, presort(ds), 256);
    CHECK(layout.bin_count(0) == 256);
    const Tree tree = fit_tree(ds, g, h, layout, 1, 0.0, iota(n), {0});
    const auto oracle = oracles::brute_force_split(ds, g, h, iota(n), {0}, 0.0);
    REQUIRE(oracle.found);
    REQUIRE_FALSE(tree.nodes[0].is_leaf());
    CHECK(tree.nodes[0].threshold == oracle.threshold);
}

TEST_CASE("depth limit holds on adversarial input") {
    Rng rng(43);
    const std::size_t n = 300;
    std::vector<double> features(n), g(n), h(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        features[i] = static_cast<double>(i); // all distinct, perfectly splittable
        g[i] = rng.normal();
    }
    const Dataset ds(features, n, 1, std::vector<double>(n, 0.0));
    const auto layout = build_histograms(ds, presort(ds), 256);
    for (std::size_t depth : {1u, 2u, 4u, 6u}) {
        const Tree tree = fit_tree(ds, g, h, layout, depth, 0.0, iota(n), {0});
        CHECK(tree.depth() <= depth);
    }
}

TEST_CASE("accepted splits always have positive gain and lower the objective") {
    Rng rng(47);
    const std::size_t n = 150;
    const Dataset ds = random_dataset(rng, n, 4, 32);
    std::vector<double> g(n), h(n);
    for (double& v : g) v = rng.normal();
    for (double& v : h) v = rng.uniform(0.3, 2.0);
    const double lambda = 0.5;
    const auto layout = build_histograms(ds, presort(ds), 256);
    const Tree tree = fit_tree(ds, g, h, layout, 4, lambda, iota(n), iota(4));

    // Newton objective of a node with members S at the optimal value:
    // sum_S h (t - v)^2 + lambda v^2 with v = -G/(H+lambda)
    auto node_members = [&](std::int32_t target) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            std::int32_t cur = 0;
            std::vector<std::int32_t> path{cur};
            while (!tree.nodes[cur].is_leaf()) {
                const auto& nd = tree.nodes[cur];
                cur = ds.value(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
                path.push_back(cur);
            }
            if (std::find(path.begin(), path.end(), target) != path.end()) members.push_back(i);
        }
        return members;
    };
    auto objective = [&](const std::vector<std::size_t>& members) {
        double G = 0.0, H = 0.0;
        for (auto i : members) {
            G += g[i];
            H += h[i];
        }
        const double v = -G / (H + lambda);
        double total = lambda * v * v;
        for (auto i : members) {
            const double t = -g[i] / h[i];
            total += h[i] * (t - v) * (t - v);
        }
        return total;
    };
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
        const auto& node = tree.nodes[id];
        if (node.is_leaf()) continue;
        const double parent = objective(node_members(static_cast<std::int32_t>(id)));
        const double children =
            objective(node_members(node.left)) + objective(node_members(node.right));
        CHECK(children <= parent + 1e-9);
    }
}
