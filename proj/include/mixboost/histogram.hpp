#pragma once

#include <cstdint>
#include <vector>

#include "mixboost/dataset.hpp"

namespace mixboost {

/// Per-feature index permutations putting feature values in non-decreasing
/// order (stable: ties keep the original index order). Computed once before
/// boosting; each feature's sort runs independently, so this parallelizes
/// across features.
std::vector<std::vector<std::uint32_t>> presort(const Dataset& ds);

/// Fixed per-feature binning of the training set.
///
/// Bin edges are chosen once, greedily balancing the number of examples per
/// bin without ever splitting a group of tied values, and stay fixed for all
/// boosting iterations. An interior edge is the largest feature value of its
/// bin, so "value <= edge" routes left and reproduces training-time bin
/// membership exactly. At most 256 bins per feature; features with fewer
/// distinct values than bins get one bin per distinct value.
class HistogramLayout {
public:
    std::size_t n_features() const { return edges_.size(); }
    std::size_t n_rows() const { return n_rows_; }

    /// Interior edges of feature j, ascending (size = bin_count(j) - 1).
    const std::vector<double>& edges(std::size_t j) const { return edges_[j]; }
    std::size_t bin_count(std::size_t j) const { return edges_[j].size() + 1; }

    /// Precomputed bin code of a training cell (column-major storage).
    std::uint8_t code(std::size_t row, std::size_t feature) const {
        return codes_[feature * n_rows_ + row];
    }
    const std::uint8_t* feature_codes(std::size_t feature) const {
        return codes_.data() + feature * n_rows_;
    }

    /// Bin index of an arbitrary value under feature j's edges.
    std::size_t bin_of(double value, std::size_t j) const;

    friend HistogramLayout build_histograms(const Dataset& ds,
                                            const std::vector<std::vector<std::uint32_t>>& presorted,
                                            std::size_t h_bins);

private:
    std::vector<std::vector<double>> edges_; // per feature, interior edges
    std::vector<std::uint8_t> codes_;        // column-major n_features x n_rows
    std::size_t n_rows_ = 0;
};

/// Build the fixed layout from presorted feature orders. h_bins in [2, 256].
HistogramLayout build_histograms(const Dataset& ds,
                                 const std::vector<std::vector<std::uint32_t>>& presorted,
                                 std::size_t h_bins);

} // namespace mixboost
