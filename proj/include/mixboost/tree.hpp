#pragma once

#include <cstdint>
#include <vector>

#include "mixboost/dataset.hpp"
#include "mixboost/histogram.hpp"

namespace mixboost {

/// Binary decision tree node. feature < 0 marks a leaf; internal nodes route
/// an example left iff x[feature] <= threshold.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

/// Fitted regression tree; nodes are stored in preorder with nodes[0] the root.
struct Tree {
    std::vector<TreeNode> nodes;
    std::size_t depth_limit = 0;
    std::vector<std::size_t> features_used;

    double predict(const double* x) const {
        std::int32_t cur = 0;
        while (!nodes[cur].is_leaf())
            cur = (x[nodes[cur].feature] <= nodes[cur].threshold) ? nodes[cur].left
                                                                  : nodes[cur].right;
        return nodes[cur].value;
    }

    std::size_t depth() const;
};

/// Fit a tree to second-order targets by depth-first growth over histogram
/// bins.
///
/// At each node every candidate feature in col_idx is scanned over its bin
/// boundaries; a split's score is the reduction of the node's weighted
/// least-squares objective,
///     gain = G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda),
/// with G, H the gradient/hessian sums over the node's examples. The best
/// positive-gain split wins (ties: lowest feature index, then lowest
/// threshold). Nodes become leaves at the depth limit, when no split has
/// positive gain, or when a child would receive no examples; a leaf's value
/// is -G/(H+lambda). Bin statistics are rebuilt per node, with the larger
/// sibling derived from the parent by subtraction.
///
/// g and h are aligned with ds rows (weights already folded in); row_idx and
/// col_idx select the training subsample. h must be positive somewhere in
/// the sample.
Tree fit_tree(const Dataset& ds, const std::vector<double>& g, const std::vector<double>& h,
              const HistogramLayout& layout, std::size_t max_depth, double lambda_l2,
              const std::vector<std::size_t>& row_idx, const std::vector<std::size_t>& col_idx);

} // namespace mixboost
