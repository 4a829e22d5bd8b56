#include "mixboost/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mixboost/error.hpp"
#include "mixboost/rng.hpp"

namespace mixboost {

Dataset::Dataset(std::vector<double> features, std::size_t n_rows, std::size_t n_cols,
                 std::vector<double> labels, std::vector<double> weights)
    : features_(std::move(features)), n_rows_(n_rows), n_cols_(n_cols),
      labels_(std::move(labels)), weights_(std::move(weights)) {
    require(n_rows_ >= 1 && n_cols_ >= 1, "dataset must have at least one row and one column");
    require(features_.size() == n_rows_ * n_cols_, "feature buffer size does not match n_rows*n_cols");
    require(labels_.size() == n_rows_, "label count does not match row count");
    for (double v : features_)
        require(std::isfinite(v), "dataset contains a non-finite feature value");
    for (double v : labels_)
        require(std::isfinite(v), "dataset contains a non-finite label");
    if (!weights_.empty()) {
        require(weights_.size() == n_rows_, "weight count does not match row count");
        double sum = 0.0;
        for (double w : weights_) {
            require(std::isfinite(w) && w >= 0.0, "weights must be finite and non-negative");
            sum += w;
        }
        require(sum > 0.0, "weights must not all be zero");
    }
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& idx) const {
    std::vector<double> feat(idx.size() * n_cols_);
    std::vector<double> lab(idx.size());
    std::vector<double> wts;
    if (!weights_.empty()) wts.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::size_t src = idx[r];
        std::copy_n(row(src), n_cols_, feat.begin() + r * n_cols_);
        lab[r] = labels_[src];
        if (!weights_.empty()) wts[r] = weights_[src];
    }
    return Dataset(std::move(feat), idx.size(), n_cols_, std::move(lab), std::move(wts));
}

bool Dataset::labels_are_binary() const {
    return std::all_of(labels_.begin(), labels_.end(),
                       [](double y) { return y == 0.0 || y == 1.0; });
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row_no, std::size_t col_no) {
    std::string s = cell;
    const auto first = s.find_first_not_of(" \t");
    const auto last = s.find_last_not_of(" \t");
    if (first == std::string::npos)
        throw Error("row " + std::to_string(row_no) + ", column " + std::to_string(col_no) +
                    ": empty cell");
    s = s.substr(first, last - first + 1);
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw Error("row " + std::to_string(row_no) + ", column " + std::to_string(col_no) +
                    ": cannot parse '" + s + "' as a number");
    if (!std::isfinite(v))
        throw Error("row " + std::to_string(row_no) + ", column " + std::to_string(col_no) +
                    ": non-finite value '" + s + "' (clean or impute the data before loading)");
    return v;
}

} // namespace

Dataset load_csv(const std::string& path, const std::string& label_column, bool has_header) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);

    std::string line;
    std::vector<std::string> header;
    std::size_t n_cols_total = 0;
    std::size_t label_idx = 0;
    bool label_resolved = false;
    std::size_t row_no = 0;

    if (has_header) {
        require(static_cast<bool>(std::getline(in, line)), "file is empty: " + path);
        ++row_no;
        header = split_line(line);
        n_cols_total = header.size();
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == label_column) {
                label_idx = j;
                label_resolved = true;
                break;
            }
        }
    }
    if (!label_resolved) {
        // Fall back to a zero-based column index.
        std::size_t v = 0;
        const char* b = label_column.data();
        const char* e = b + label_column.size();
        auto [ptr, ec] = std::from_chars(b, e, v);
        require(ec == std::errc() && ptr == e,
                "label column '" + label_column + "' not found" +
                    (has_header ? " in header and not a valid index" : " (expected a zero-based index)"));
        label_idx = v;
        label_resolved = true;
    }

    std::vector<double> features;
    std::vector<double> labels;
    std::size_t n_rows = 0;

    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_line(line);
        if (n_cols_total == 0) {
            n_cols_total = cells.size();
            require(n_cols_total >= 2, "need at least one feature column plus the label column");
            require(label_idx < n_cols_total,
                    "label index " + std::to_string(label_idx) + " out of range for " +
                        std::to_string(n_cols_total) + " columns");
        }
        require(cells.size() == n_cols_total,
                "row " + std::to_string(row_no) + ": expected " + std::to_string(n_cols_total) +
                    " columns, got " + std::to_string(cells.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const double v = parse_cell(cells[j], row_no, j);
            if (j == label_idx)
                labels.push_back(v);
            else
                features.push_back(v);
        }
        ++n_rows;
    }
    require(n_rows >= 1, "file contains no data rows: " + path);
    require(label_idx < n_cols_total,
            "label index " + std::to_string(label_idx) + " out of range for " +
                std::to_string(n_cols_total) + " columns");
    return Dataset(std::move(features), n_rows, n_cols_total - 1, std::move(labels));
}

FeatureMatrix load_feature_csv(const std::string& path, bool has_header,
                               const std::string& drop_column) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);

    std::string line;
    std::size_t n_cols_total = 0;
    std::size_t drop_idx = 0;
    bool dropping = !drop_column.empty();
    bool drop_resolved = false;
    std::size_t row_no = 0;

    if (has_header) {
        require(static_cast<bool>(std::getline(in, line)), "file is empty: " + path);
        ++row_no;
        const auto header = split_line(line);
        n_cols_total = header.size();
        if (dropping) {
            for (std::size_t j = 0; j < header.size(); ++j) {
                if (header[j] == drop_column) {
                    drop_idx = j;
                    drop_resolved = true;
                    break;
                }
            }
        }
    }
    if (dropping && !drop_resolved) {
        std::size_t v = 0;
        const char* b = drop_column.data();
        const char* e = b + drop_column.size();
        auto [ptr, ec] = std::from_chars(b, e, v);
        require(ec == std::errc() && ptr == e,
                "column '" + drop_column + "' not found and not a valid index");
        drop_idx = v;
        drop_resolved = true;
    }

    FeatureMatrix fm;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_line(line);
        if (n_cols_total == 0) n_cols_total = cells.size();
        require(cells.size() == n_cols_total,
                "row " + std::to_string(row_no) + ": expected " + std::to_string(n_cols_total) +
                    " columns, got " + std::to_string(cells.size()));
        if (dropping)
            require(drop_idx < n_cols_total, "column index " + std::to_string(drop_idx) +
                                                 " out of range for " +
                                                 std::to_string(n_cols_total) + " columns");
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (dropping && j == drop_idx) continue;
            fm.values.push_back(parse_cell(cells[j], row_no, j));
        }
        ++fm.n_rows;
    }
    require(fm.n_rows >= 1, "file contains no data rows: " + path);
    fm.n_cols = n_cols_total - (dropping ? 1 : 0);
    return fm;
}

void write_csv(const Dataset& ds, const std::string& path, const std::string& label_name) {
    std::ofstream out(path);
    require(out.good(), "cannot open file for writing: " + path);
    for (std::size_t j = 0; j < ds.n_cols(); ++j) out << "x" << j << ",";
    out << label_name << "\n";
    char buf[40];
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        for (std::size_t j = 0; j < ds.n_cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.value(i, j));
            out << buf << ",";
        }
        std::snprintf(buf, sizeof(buf), "%.17g", ds.label(i));
        out << buf << "\n";
    }
    require(out.good(), "write failed: " + path);
}

namespace {

void validate_split_spec(const SplitSpec& spec) {
    const double fs[3] = {spec.train_fraction, spec.validation_fraction, spec.test_fraction};
    for (double f : fs) require(f > 0.0 && f < 1.0, "split fractions must lie in (0,1)");
    require(std::abs(fs[0] + fs[1] + fs[2] - 1.0) <= 1e-9, "split fractions must sum to 1");
}

// Shuffle `idx` and partition into (train, valid, test) by rounded counts.
void partition_block(std::vector<std::size_t>& idx, const SplitSpec& spec, Rng& rng,
                     std::vector<std::size_t>& train, std::vector<std::size_t>& valid,
                     std::vector<std::size_t>& test) {
    const std::size_t n = idx.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t j = i + rng.uniform_below(n - i);
        std::swap(idx[i], idx[j]);
    }
    auto rounded = [&](double f) {
        return static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
    };
    std::size_t n_valid = rounded(spec.validation_fraction);
    std::size_t n_test = rounded(spec.test_fraction);
    if (n_valid + n_test > n) n_test = n - n_valid;
    const std::size_t n_train = n - n_valid - n_test;
    train.insert(train.end(), idx.begin(), idx.begin() + n_train);
    valid.insert(valid.end(), idx.begin() + n_train, idx.begin() + n_train + n_valid);
    test.insert(test.end(), idx.begin() + n_train + n_valid, idx.end());
}

} // namespace

std::tuple<std::vector<std::size_t>, std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, const std::vector<double>& labels, const SplitSpec& spec) {
    validate_split_spec(spec);
    Rng rng = Rng::child(spec.seed, rng_purpose::kSplit);
    std::vector<std::size_t> train, valid, test;

    if (spec.stratify) {
        // Two-class stratification: partition each class with the same scheme.
        std::map<double, std::vector<std::size_t>> classes;
        for (std::size_t i = 0; i < n; ++i) classes[labels[i]].push_back(i);
        require(classes.size() == 2, "stratified split requires binary classification labels");
        for (auto& [cls, idx] : classes) {
            (void)cls;
            partition_block(idx, spec, rng, train, valid, test);
        }
        std::sort(train.begin(), train.end());
        std::sort(valid.begin(), valid.end());
        std::sort(test.begin(), test.end());
    } else {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        partition_block(idx, spec, rng, train, valid, test);
        std::sort(train.begin(), train.end());
        std::sort(valid.begin(), valid.end());
        std::sort(test.begin(), test.end());
    }
    require(!train.empty() && !valid.empty() && !test.empty(),
            "split produced an empty part; use more rows or larger fractions");
    return {std::move(train), std::move(valid), std::move(test)};
}

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    auto [tr, va, te] = split_indices(ds.n_rows(), ds.labels(), spec);
    return {ds.select_rows(tr), ds.select_rows(va), ds.select_rows(te)};
}

std::vector<double> balanced_weights(const std::vector<double>& labels) {
    std::map<double, std::size_t> counts;
    for (double y : labels) ++counts[y];
    require(counts.size() == 2, "balanced weights require exactly two classes, got " +
                                    std::to_string(counts.size()));
    const double n = static_cast<double>(labels.size());
    std::vector<double> w(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        w[i] = n / (2.0 * static_cast<double>(counts[labels[i]]));
    return w;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, double fraction,
                                                    std::uint64_t seed, std::uint64_t purpose,
                                                    std::uint64_t stream_index) {
    require(fraction > 0.0 && fraction <= 1.0, "sampling fraction must lie in (0,1]");
    const std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-12)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (k == n) return idx; // identity case, no draws consumed
    Rng rng = Rng::child(seed, purpose, stream_index);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.uniform_below(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
subsample(const Dataset& ds, const SubsampleSpec& spec) {
    auto rows = sample_without_replacement(ds.n_rows(), spec.row_fraction, spec.seed,
                                           rng_purpose::kRowSample, 0);
    auto cols = sample_without_replacement(ds.n_cols(), spec.col_fraction, spec.seed,
                                           rng_purpose::kColSample, 0);
    return {std::move(rows), std::move(cols)};
}

} // namespace mixboost
