#include "mixboost/histogram.hpp"

#include <algorithm>

#include "mixboost/error.hpp"
#include "mixboost/threading.hpp"

namespace mixboost {

std::vector<std::vector<std::uint32_t>> presort(const Dataset& ds) {
    const std::size_t n = ds.n_rows();
    const std::size_t d = ds.n_cols();
    std::vector<std::vector<std::uint32_t>> order(d);
    parallel_for(d, [&](std::size_t j) {
        auto& perm = order[j];
        perm.resize(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
        std::stable_sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) {
            return ds.value(a, j) < ds.value(b, j);
        });
    });
    return order;
}

std::size_t HistogramLayout::bin_of(double value, std::size_t j) const {
    const auto& e = edges_[j];
    // First bin whose edge is >= value; values above the last edge fall in
    // the final (unbounded) bin.
    return static_cast<std::size_t>(
        std::lower_bound(e.begin(), e.end(), value) - e.begin());
}

HistogramLayout build_histograms(const Dataset& ds,
                                 const std::vector<std::vector<std::uint32_t>>& presorted,
                                 std::size_t h_bins) {
    require(h_bins >= 2 && h_bins <= 256, "h_bins must lie in [2, 256]");
    require(presorted.size() == ds.n_cols(), "presorted order count does not match feature count");
    const std::size_t n = ds.n_rows();
    const std::size_t d = ds.n_cols();

    HistogramLayout layout;
    layout.n_rows_ = n;
    layout.edges_.resize(d);
    layout.codes_.assign(d * n, 0);

    parallel_for(d, [&](std::size_t j) {
        const auto& perm = presorted[j];
        auto& edges = layout.edges_[j];
        std::uint8_t* codes = layout.codes_.data() + j * n;

        // Tied-value groups in ascending order: (value, count).
        std::vector<std::pair<double, std::size_t>> groups;
        std::size_t i = 0;
        while (i < n) {
            const double v = ds.value(perm[i], j);
            std::size_t end = i;
            while (end < n && ds.value(perm[end], j) == v) ++end;
            groups.emplace_back(v, end - i);
            i = end;
        }

        if (groups.size() <= h_bins) {
            // One bin per distinct value; bin search over these edges is
            // identical to an exact search over raw values.
            for (std::size_t g = 0; g + 1 < groups.size(); ++g) edges.push_back(groups[g].first);
        } else {
            // Greedy balance: close the current bin once it reaches the
            // running target size, rebalancing the target over the bins that
            // remain. A group of tied values never splits across bins.
            std::size_t bins_left = h_bins;
            std::size_t rows_left = n;
            double target = static_cast<double>(rows_left) / static_cast<double>(bins_left);
            std::size_t in_bin = 0;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                in_bin += groups[g].second;
                const bool last_group = (g + 1 == groups.size());
                if (!last_group && bins_left > 1 &&
                    static_cast<double>(in_bin) >= target - 1e-9) {
                    edges.push_back(groups[g].first);
                    rows_left -= in_bin;
                    --bins_left;
                    target = static_cast<double>(rows_left) / static_cast<double>(bins_left);
                    in_bin = 0;
                }
            }
        }

        // Assign codes by walking the sorted order against the edges.
        std::size_t bin = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = ds.value(perm[t], j);
            while (bin < edges.size() && v > edges[bin]) ++bin;
            codes[perm[t]] = static_cast<std::uint8_t>(bin);
        }
    });
    return layout;
}

} // namespace mixboost
