#include "mixboost/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixboost/error.hpp"
#include "mixboost/threading.hpp"

namespace mixboost {

std::size_t Tree::depth() const {
    std::size_t deepest = 0;
    // nodes are preorder; walk with explicit depths
    std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [id, depth] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, depth);
        const TreeNode& node = nodes[id];
        if (!node.is_leaf()) {
            stack.push_back({node.left, depth + 1});
            stack.push_back({node.right, depth + 1});
        }
    }
    return deepest;
}

namespace {

struct BinStat {
    double g = 0.0;
    double h = 0.0;
    std::uint32_t count = 0;
};

// One histogram per node: bins for every candidate feature, concatenated.
struct NodeHist {
    std::vector<BinStat> bins;
};

struct SplitCandidate {
    double gain = 0.0;
    std::size_t feature_slot = 0;
    std::size_t bin = 0; // split after this bin: code <= bin goes left
    double g_left = 0.0, h_left = 0.0;
    std::uint32_t count_left = 0;
    bool valid = false;
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& ds, const std::vector<double>& g, const std::vector<double>& h,
                const HistogramLayout& layout, std::size_t max_depth, double lambda,
                std::vector<std::size_t> rows, const std::vector<std::size_t>& cols)
        : ds_(ds), grad_(g), hess_(h), layout_(layout), max_depth_(max_depth), lambda_(lambda),
          rows_(std::move(rows)), cols_(cols) {
        slot_offset_.resize(cols_.size() + 1, 0);
        for (std::size_t s = 0; s < cols_.size(); ++s)
            slot_offset_[s + 1] = slot_offset_[s] + layout_.bin_count(cols_[s]);
        scratch_.resize(rows_.size());
    }

    Tree build() {
        Tree tree;
        tree.depth_limit = max_depth_;
        tree.features_used = cols_;

        double g_total = 0.0, h_total = 0.0;
        bool any_positive_h = false;
        for (std::size_t r : rows_) {
            g_total += grad_[r];
            h_total += hess_[r];
            any_positive_h = any_positive_h || hess_[r] > 0.0;
        }
        require(any_positive_h, "cannot fit a tree: no example has a positive hessian");

        NodeHist root_hist = make_hist(0, rows_.size());
        grow(tree, 0, rows_.size(), 0, g_total, h_total,
             static_cast<std::uint32_t>(rows_.size()), root_hist);
        return tree;
    }

private:
    std::size_t slot_bins(std::size_t slot) const {
        return slot_offset_[slot + 1] - slot_offset_[slot];
    }

    NodeHist make_hist(std::size_t begin, std::size_t end) const {
        NodeHist hist;
        hist.bins.assign(slot_offset_.back(), BinStat{});
        // Accumulate per feature; each slot touches only its own bin range,
        // and examples are visited in range order, so the result does not
        // depend on the thread count.
        parallel_for(cols_.size(), [&](std::size_t slot) {
            const std::uint8_t* codes = layout_.feature_codes(cols_[slot]);
            BinStat* bins = hist.bins.data() + slot_offset_[slot];
            for (std::size_t t = begin; t < end; ++t) {
                const std::size_t r = rows_[t];
                BinStat& b = bins[codes[r]];
                b.g += grad_[r];
                b.h += hess_[r];
                ++b.count;
            }
        });
        return hist;
    }

    SplitCandidate best_split(const NodeHist& hist, double g_total, double h_total,
                              std::uint32_t count) const {
        std::vector<SplitCandidate> per_slot(cols_.size());
        parallel_for(cols_.size(), [&](std::size_t slot) {
            const BinStat* bins = hist.bins.data() + slot_offset_[slot];
            const std::size_t n_bins = slot_bins(slot);
            const double parent_score = g_total * g_total / (h_total + lambda_);
            SplitCandidate best;
            double gl = 0.0, hl = 0.0;
            std::uint32_t cl = 0;
            for (std::size_t b = 0; b + 1 < n_bins; ++b) {
                gl += bins[b].g;
                hl += bins[b].h;
                cl += bins[b].count;
                if (cl == 0) continue;
                const std::uint32_t cr = count - cl;
                if (cr == 0) break;
                const double gr = g_total - gl;
                const double hr = h_total - hl;
                const double gain =
                    gl * gl / (hl + lambda_) + gr * gr / (hr + lambda_) - parent_score;
                // zero-hessian slices with lambda = 0 produce non-finite
                // scores; such splits would create degenerate leaves
                if (!std::isfinite(gain)) continue;
                if (!best.valid || gain > best.gain) {
                    best = {gain, slot, b, gl, hl, cl, true};
                }
            }
            per_slot[slot] = best;
        });
        SplitCandidate best;
        for (const auto& cand : per_slot) {
            // Ascending slot (= feature) order with strict comparisons keeps
            // the lowest feature index, then lowest threshold, among ties.
            if (cand.valid && (!best.valid || cand.gain > best.gain)) best = cand;
        }
        return best;
    }

    std::int32_t grow(Tree& tree, std::size_t begin, std::size_t end, std::size_t depth,
                      double g_total, double h_total, std::uint32_t count, NodeHist& hist) {
        const auto id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();

        const bool can_split = depth < max_depth_ && count >= 2;
        SplitCandidate split;
        if (can_split) split = best_split(hist, g_total, h_total, count);

        if (!can_split || !split.valid || !(split.gain > 0.0)) {
            const double value = -g_total / (h_total + lambda_);
            tree.nodes[id].value = value == 0.0 ? 0.0 : value; // avoid serializing -0
            return id;
        }

        const std::size_t feature = cols_[split.feature_slot];
        const double threshold = layout_.edges(feature)[split.bin];

        // Stable partition: left block keeps examples with code <= split bin.
        const std::uint8_t* codes = layout_.feature_codes(feature);
        std::size_t n_left = 0;
        std::size_t n_right = 0;
        for (std::size_t t = begin; t < end; ++t) {
            const std::size_t r = rows_[t];
            if (codes[r] <= split.bin)
                rows_[begin + n_left++] = r;
            else
                scratch_[n_right++] = r;
        }
        std::copy_n(scratch_.begin(), n_right, rows_.begin() + begin + n_left);
        const std::size_t mid = begin + n_left;

        const double g_right = g_total - split.g_left;
        const double h_right = h_total - split.h_left;
        const std::uint32_t count_right = count - split.count_left;

        // Scan the smaller child; the sibling is parent minus child.
        NodeHist small = (n_left <= n_right) ? make_hist(begin, mid) : make_hist(mid, end);
        NodeHist& large = hist; // reuse the parent's storage
        for (std::size_t b = 0; b < large.bins.size(); ++b) {
            large.bins[b].g -= small.bins[b].g;
            large.bins[b].h -= small.bins[b].h;
            large.bins[b].count -= small.bins[b].count;
        }
        NodeHist& left_hist = (n_left <= n_right) ? small : large;
        NodeHist& right_hist = (n_left <= n_right) ? large : small;

        const auto left_id =
            grow(tree, begin, mid, depth + 1, split.g_left, split.h_left, split.count_left, left_hist);
        const auto right_id =
            grow(tree, mid, end, depth + 1, g_right, h_right, count_right, right_hist);

        tree.nodes[id].feature = static_cast<std::int32_t>(feature);
        tree.nodes[id].threshold = threshold;
        tree.nodes[id].left = left_id;
        tree.nodes[id].right = right_id;
        return id;
    }

    const Dataset& ds_;
    const std::vector<double>& grad_;
    const std::vector<double>& hess_;
    const HistogramLayout& layout_;
    const std::size_t max_depth_;
    const double lambda_;
    std::vector<std::size_t> rows_;
    std::vector<std::size_t> cols_;
    std::vector<std::size_t> slot_offset_;
    mutable std::vector<std::size_t> scratch_;
};

} // namespace

Tree fit_tree(const Dataset& ds, const std::vector<double>& g, const std::vector<double>& h,
              const HistogramLayout& layout, std::size_t max_depth, double lambda_l2,
              const std::vector<std::size_t>& row_idx, const std::vector<std::size_t>& col_idx) {
    require(max_depth >= 1, "tree depth limit must be at least 1");
    require(lambda_l2 >= 0.0, "leaf L2 regularization must be non-negative");
    require(g.size() == ds.n_rows() && h.size() == ds.n_rows(),
            "gradient vectors must align with the dataset rows");
    require(!row_idx.empty() && !col_idx.empty(), "row and column subsets must be non-empty");

    TreeBuilder builder(ds, g, h, layout, max_depth, lambda_l2, row_idx, col_idx);
    return builder.build();
}

} // namespace mixboost
