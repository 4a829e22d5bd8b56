#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "mixboost/dataset.hpp"
#include "mixboost/error.hpp"
#include "mixboost/rng.hpp"

using namespace mixboost;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

} // namespace

TEST_CASE("load_csv parses a small labeled file") {
    const auto path = temp_path("ds_small.csv");
    write_file(path, "a,b,y\n1,2,0\n3,4,1\n");
    const Dataset ds = load_csv(path, "y", true);
    CHECK(ds.n_rows() == 2);
    CHECK(ds.n_cols() == 2);
    CHECK(ds.value(0, 0) == 1.0);
    CHECK(ds.value(1, 1) == 4.0);
    CHECK(ds.label(0) == 0.0);
    CHECK(ds.label(1) == 1.0);
}

TEST_CASE("load_csv selects the label by index without a header") {
    const auto path = temp_path("ds_nohdr.csv");
    write_file(path, "1,2,0\n3,4,1\n");
    const Dataset ds = load_csv(path, "2", false);
    CHECK(ds.n_cols() == 2);
    CHECK(ds.label(1) == 1.0);
}

TEST_CASE("load_csv rejects NaN cells and unparsable cells") {
    const auto nan_path = temp_path("ds_nan.csv");
    write_file(nan_path, "a,y\nNaN,1\n");
    CHECK_THROWS_AS(load_csv(nan_path, "y", true), Error);

    const auto bad_path = temp_path("ds_bad.csv");
    write_file(bad_path, "a,y\nfoo,1\n");
    CHECK_THROWS_WITH_AS(load_csv(bad_path, "y", true),
                         doctest::Contains("row 2, column 0"), Error);

    CHECK_THROWS_AS(load_csv(temp_path("ds_missing.csv"), "y", true), Error);
}

TEST_CASE("csv write-then-read round trip is bit exact") {
    Rng rng(101);
    const std::size_t n = 100, d = 5;
    std::vector<double> features(n * d);
    for (double& v : features) v = rng.normal(0.0, 100.0);
    std::vector<double> labels(n);
    for (double& v : labels) v = rng.normal();
    const Dataset original(features, n, d, labels);

    const auto path = temp_path("ds_roundtrip.csv");
    write_csv(original, path);
    const Dataset reloaded = load_csv(path, "y", true);

    REQUIRE(reloaded.n_rows() == n);
    REQUIRE(reloaded.n_cols() == d);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(reloaded.label(i) == original.label(i));
        for (std::size_t j = 0; j < d; ++j) CHECK(reloaded.value(i, j) == original.value(i, j));
    }
}

TEST_CASE("dataset construction validates shapes and weights") {
    CHECK_THROWS_AS(Dataset({}, 0, 0, {}), Error);
    CHECK_THROWS_AS(Dataset({1.0, 2.0}, 2, 1, {0.0, 1.0}, {0.0, 0.0}), Error);
    CHECK_THROWS_AS(Dataset({1.0, 2.0}, 2, 1, {0.0, 1.0}, {-1.0, 1.0}), Error);
    const Dataset ok({1.0, 2.0}, 2, 1, {0.0, 1.0}, {0.0, 3.0});
    CHECK(ok.weight(0) == 0.0);
    CHECK(ok.weight(1) == 3.0);
}

TEST_CASE("split produces the documented sizes and a disjoint cover") {
    std::vector<double> features(10), labels(10);
    for (std::size_t i = 0; i < 10; ++i) {
        features[i] = static_cast<double>(i);
        labels[i] = static_cast<double>(i % 2);
    }
    const Dataset ds(features, 10, 1, labels);

    SplitSpec spec;
    spec.train_fraction = 0.8;
    spec.validation_fraction = 0.1;
    spec.test_fraction = 0.1;
    spec.seed = 42;

    auto [tr, va, te] = split_indices(10, ds.labels(), spec);
    CHECK(tr.size() == 8);
    CHECK(va.size() == 1);
    CHECK(te.size() == 1);

    std::set<std::size_t> all(tr.begin(), tr.end());
    all.insert(va.begin(), va.end());
    all.insert(te.begin(), te.end());
    CHECK(all.size() == 10);

    auto [tr2, va2, te2] = split_indices(10, ds.labels(), spec);
    CHECK(tr == tr2);
    CHECK(va == va2);
    CHECK(te == te2);
}

TEST_CASE("splits partition for many seeds") {
    std::vector<double> labels(23, 0.0);
    for (std::size_t i = 0; i < 23; ++i) labels[i] = static_cast<double>(i % 2);
    SplitSpec spec;
    spec.train_fraction = 0.6;
    spec.validation_fraction = 0.2;
    spec.test_fraction = 0.2;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        spec.seed = seed;
        for (bool stratify : {false, true}) {
            spec.stratify = stratify;
            auto [tr, va, te] = split_indices(23, labels, spec);
            std::set<std::size_t> all(tr.begin(), tr.end());
            for (auto i : va) CHECK(all.insert(i).second);
            for (auto i : te) CHECK(all.insert(i).second);
            CHECK(all.size() == 23);
        }
    }
}

TEST_CASE("stratified split keeps class counts within one of exact") {
    // 6 zeros + 4 ones, fractions (0.5, 0.25, 0.25): class-1 exact counts are (2, 1, 1).
    std::vector<double> labels = {0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
    SplitSpec spec;
    spec.train_fraction = 0.5;
    spec.validation_fraction = 0.25;
    spec.test_fraction = 0.25;
    spec.stratify = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        spec.seed = seed;
        auto [tr, va, te] = split_indices(10, labels, spec);
        auto ones = [&](const std::vector<std::size_t>& part) {
            std::size_t count = 0;
            for (auto i : part) count += labels[i] == 1.0;
            return count;
        };
        CHECK(ones(tr) >= 1);
        CHECK(ones(tr) <= 3);
        CHECK(ones(va) == 1);
        CHECK(ones(te) == 1);
    }
}

TEST_CASE("split rejects degenerate inputs") {
    std::vector<double> labels = {0.0, 1.0};
    SplitSpec spec;
    spec.train_fraction = 0.998;
    spec.validation_fraction = 0.001;
    spec.test_fraction = 0.001;
    CHECK_THROWS_AS(split_indices(2, labels, spec), Error); // empty parts
    spec.train_fraction = 1.5;
    CHECK_THROWS_AS(split_indices(2, labels, spec), Error);
}

TEST_CASE("balanced weights follow n over 2 count") {
    const auto w = balanced_weights({0, 0, 0, 1});
    REQUIRE(w.size() == 4);
    CHECK(w[0] == doctest::Approx(2.0 / 3.0));
    CHECK(w[1] == doctest::Approx(2.0 / 3.0));
    CHECK(w[2] == doctest::Approx(2.0 / 3.0));
    CHECK(w[3] == doctest::Approx(2.0));

    const auto even = balanced_weights({0, 1});
    CHECK(even[0] == 1.0);
    CHECK(even[1] == 1.0);

    CHECK_THROWS_AS(balanced_weights({1, 1, 1}), Error);
}

TEST_CASE("balanced weights always sum to n") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(2, 200));
        std::vector<double> labels(n);
        bool has_both = false;
        do {
            for (double& y : labels) y = rng.coin() ? 1.0 : 0.0;
            has_both = std::count(labels.begin(), labels.end(), 1.0) > 0 &&
                       std::count(labels.begin(), labels.end(), 0.0) > 0;
        } while (!has_both);
        const auto w = balanced_weights(labels);
        double sum = 0.0;
        for (double v : w) sum += v;
        CHECK(sum == doctest::Approx(static_cast<double>(n)).epsilon(1e-12));
    }
}

TEST_CASE("subsample identity and determinism") {
    std::vector<double> features(100 * 3), labels(100, 0.0);
    for (double& v : features) v = 1.0;
    const Dataset ds(features, 100, 3, labels);

    SubsampleSpec spec;
    spec.row_fraction = 1.0;
    spec.col_fraction = 1.0;
    auto [rows, cols] = subsample(ds, spec);
    CHECK(rows.size() == 100);
    CHECK(cols.size() == 3);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i] == i);

    spec.row_fraction = 0.5;
    spec.seed = 77;
    auto [r1, c1] = subsample(ds, spec);
    auto [r2, c2] = subsample(ds, spec);
    CHECK(r1.size() == 50);
    CHECK(r1 == r2);
    std::set<std::size_t> unique_rows(r1.begin(), r1.end());
    CHECK(unique_rows.size() == 50);
    for (auto r : r1) CHECK(r < 100);
}

TEST_CASE("subsample sizes follow the ceiling rule") {
    std::vector<double> features(10, 0.0), labels(10, 0.0);
    const Dataset ds(features, 10, 1, labels);
    SubsampleSpec spec;
    spec.seed = 1;
    spec.row_fraction = 0.55;
    CHECK(subsample(ds, spec).first.size() == 6); // ceil(5.5)
    spec.row_fraction = 0.05;
    CHECK(subsample(ds, spec).first.size() == 1); // ceil(0.5)
    spec.row_fraction = 0.0;
    CHECK_THROWS_AS(subsample(ds, spec), Error);
    spec.row_fraction = 1.5;
    CHECK_THROWS_AS(subsample(ds, spec), Error);
}

TEST_CASE("stratify requires binary labels") {
    std::vector<double> labels = {0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5};
    SplitSpec spec;
    spec.train_fraction = 0.5;
    spec.validation_fraction = 0.25;
    spec.test_fraction = 0.25;
    spec.stratify = true;
    CHECK_THROWS_AS(split_indices(8, labels, spec), Error);
}

TEST_CASE("subsample selects rows uniformly" * doctest::timeout(30)) {
    std::vector<double> features(100, 0.0), labels(100, 0.0);
    const Dataset ds(features, 100, 1, labels);
    std::vector<int> hits(100, 0);
    const int n_seeds = 10'000;
    SubsampleSpec spec;
    spec.row_fraction = 0.5;
    for (int seed = 0; seed < n_seeds; ++seed) {
        spec.seed = static_cast<std::uint64_t>(seed);
        auto [rows, cols] = subsample(ds, spec);
        for (auto r : rows) ++hits[r];
    }
    for (int count : hits) {
        const double freq = static_cast<double>(count) / n_seeds;
        CHECK(freq > 0.48);
        CHECK(freq < 0.52);
    }
}
