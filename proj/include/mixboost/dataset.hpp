#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace mixboost {

/// Immutable dense dataset: row-major feature matrix, labels, optional
/// per-example weights (all ones when absent). Construction validates that
/// every value is finite and weights are non-negative with positive sum;
/// after that the object is safe to share across threads.
class Dataset {
public:
    Dataset(std::vector<double> features, std::size_t n_rows, std::size_t n_cols,
            std::vector<double> labels, std::vector<double> weights = {});

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return n_cols_; }

    double value(std::size_t row, std::size_t col) const { return features_[row * n_cols_ + col]; }
    const double* row(std::size_t i) const { return features_.data() + i * n_cols_; }
    const std::vector<double>& features() const { return features_; }

    double label(std::size_t i) const { return labels_[i]; }
    const std::vector<double>& labels() const { return labels_; }

    bool has_weights() const { return !weights_.empty(); }
    double weight(std::size_t i) const { return weights_.empty() ? 1.0 : weights_[i]; }
    const std::vector<double>& weights() const { return weights_; }

    /// Copy of the rows in `idx`, preserving order (labels and weights follow).
    Dataset select_rows(const std::vector<std::size_t>& idx) const;

    /// True when every label is 0 or 1.
    bool labels_are_binary() const;

private:
    std::vector<double> features_; // row-major, n_rows x n_cols
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<double> labels_;
    std::vector<double> weights_; // empty means all ones
};

struct SplitSpec {
    double train_fraction = 0.8;
    double validation_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
    bool stratify = false;
};

struct SubsampleSpec {
    double row_fraction = 1.0; // in (0, 1]
    double col_fraction = 1.0; // in (0, 1]
    std::uint64_t seed = 0;
};

/// Load a numeric CSV. The label column is chosen by header name, or by
/// zero-based index when the name does not match (always by index for
/// headerless files). Any cell that fails to parse, or parses to NaN/Inf,
/// raises Error naming the offending row and column.
Dataset load_csv(const std::string& path, const std::string& label_column, bool has_header);

/// Feature rows without labels (for prediction inputs). drop_column, when
/// non-empty, names or indexes a column to discard.
struct FeatureMatrix {
    std::vector<double> values; // row-major
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
};
FeatureMatrix load_feature_csv(const std::string& path, bool has_header,
                               const std::string& drop_column = "");

/// Write features + labels back out as CSV (header x0..x{d-1},<label_name>).
/// Reals are printed with round-trip precision.
void write_csv(const Dataset& ds, const std::string& path, const std::string& label_name = "y");

/// Deterministic disjoint train/validation/test partition. With stratify,
/// each binary class is partitioned separately so per-part class counts stay
/// within one example of the exact proportions.
std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

/// Index sets of the same partition (train, validation, test), for callers
/// that need row identities rather than copies.
std::tuple<std::vector<std::size_t>, std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, const std::vector<double>& labels, const SplitSpec& spec);

/// Balanced binary-class weights w_i = n / (2 * count(class of i)); the sum
/// over all examples is exactly n. Raises Error for single-class labels.
std::vector<double> balanced_weights(const std::vector<double>& labels);

/// ceil(fraction * n) distinct indices drawn uniformly without replacement,
/// returned in increasing order; deterministic per seed.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
subsample(const Dataset& ds, const SubsampleSpec& spec);

/// The row half of `subsample`, reusable for any index range.
std::vector<std::size_t> sample_without_replacement(std::size_t n, double fraction,
                                                    std::uint64_t seed, std::uint64_t purpose,
                                                    std::uint64_t stream_index);

} // namespace mixboost
