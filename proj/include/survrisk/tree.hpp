#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "survrisk/error.hpp"

namespace survrisk {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(const Eigen::VectorXd& x) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& nd = nodes[static_cast<std::size_t>(i)];
            i = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }
};

// Row indices sorted by each feature's value, computed once per dataset and
// filtered per subsample so node split scans stay linear.
struct FeatureOrders {
    std::vector<std::vector<int>> order;  // per column of X
};

inline FeatureOrders compute_feature_orders(const Eigen::MatrixXd& X) {
    FeatureOrders out;
    out.order.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        auto& ord = out.order[static_cast<std::size_t>(f)];
        ord.resize(static_cast<std::size_t>(X.rows()));
        std::iota(ord.begin(), ord.end(), 0);
        std::stable_sort(ord.begin(), ord.end(),
                         [&](int a, int b) { return X(a, f) < X(b, f); });
    }
    return out;
}

namespace detail {

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

}  // namespace detail

// Greedy least-squares CART: split on the (feature, threshold) with the
// largest squared-error reduction, thresholds at midpoints of consecutive
// distinct sorted values, ties to the lowest feature index then lowest
// threshold; stop on depth, min_node, or zero reduction. Left branch takes
// x <= threshold. Leaf value is the mean response.
inline RegressionTree fit_tree(const Eigen::MatrixXd& X, const std::vector<double>& z,
                               const std::vector<int>& active_rows,
                               const std::vector<int>& active_cols, int max_depth, int min_node,
                               const FeatureOrders* orders = nullptr) {
    if (active_rows.empty()) throw DataError("fit_tree: no active rows");
    if (active_cols.empty()) throw DataError("fit_tree: no active columns");
    if (min_node < 1) throw DataError("fit_tree: min_node must be >= 1");

    // per-feature row lists for the active subsample, sorted by feature value
    std::vector<std::vector<int>> lists(active_cols.size());
    if (orders) {
        std::vector<char> active(static_cast<std::size_t>(X.rows()), 0);
        for (int r : active_rows) active[static_cast<std::size_t>(r)] = 1;
        for (std::size_t c = 0; c < active_cols.size(); ++c) {
            lists[c].reserve(active_rows.size());
            for (int r : orders->order[static_cast<std::size_t>(active_cols[c])])
                if (active[static_cast<std::size_t>(r)]) lists[c].push_back(r);
        }
    } else {
        for (std::size_t c = 0; c < active_cols.size(); ++c) {
            lists[c] = active_rows;
            const Eigen::Index f = active_cols[c];
            std::stable_sort(lists[c].begin(), lists[c].end(),
                             [&](int a, int b) { return X(a, f) < X(b, f); });
        }
    }

    RegressionTree tree;
    struct Frame {
        std::vector<std::vector<int>> lists;
        int depth;
        int node;
    };

    auto leaf_value = [&](const std::vector<int>& rows) {
        double s = 0.0;
        for (int r : rows) s += z[static_cast<std::size_t>(r)];
        return s / static_cast<double>(rows.size());
    };

    tree.nodes.push_back(TreeNode{});
    std::vector<Frame> stack;
    stack.push_back({std::move(lists), 0, 0});

    while (!stack.empty()) {
        Frame frame = std::move(stack.back());
        stack.pop_back();
        const auto& rows = frame.lists.front();
        const int m = static_cast<int>(rows.size());

        double sum_total = 0.0;
        double zmin = z[static_cast<std::size_t>(rows.front())], zmax = zmin;
        for (int r : rows) {
            const double v = z[static_cast<std::size_t>(r)];
            sum_total += v;
            zmin = std::min(zmin, v);
            zmax = std::max(zmax, v);
        }

        detail::SplitChoice best;
        if (frame.depth < max_depth && m >= 2 * min_node && zmin != zmax) {
            for (std::size_t c = 0; c < frame.lists.size(); ++c) {
                const Eigen::Index f = active_cols[c];
                const auto& lst = frame.lists[c];
                double sum_left = 0.0;
                for (int q = 0; q + 1 < m; ++q) {
                    sum_left += z[static_cast<std::size_t>(lst[static_cast<std::size_t>(q)])];
                    const double v = X(lst[static_cast<std::size_t>(q)], f);
                    const double v_next = X(lst[static_cast<std::size_t>(q + 1)], f);
                    if (v == v_next) continue;
                    const int n_left = q + 1, n_right = m - n_left;
                    if (n_left < min_node || n_right < min_node) continue;
                    const double sum_right = sum_total - sum_left;
                    const double gain = sum_left * sum_left / n_left +
                                        sum_right * sum_right / n_right -
                                        sum_total * sum_total / m;
                    if (gain > best.gain) {
                        best.gain = gain;
                        best.feature = static_cast<int>(f);
                        best.threshold = v + (v_next - v) / 2.0;
                    }
                }
            }
        }

        if (best.feature < 0) {
            tree.nodes[static_cast<std::size_t>(frame.node)].value = leaf_value(rows);
            continue;
        }

        Frame left, right;
        left.depth = right.depth = frame.depth + 1;
        left.lists.resize(frame.lists.size());
        right.lists.resize(frame.lists.size());
        for (std::size_t c = 0; c < frame.lists.size(); ++c)
            for (int r : frame.lists[c])
                (X(r, best.feature) <= best.threshold ? left.lists[c] : right.lists[c])
                    .push_back(r);

        const int left_index = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});
        tree.nodes.push_back(TreeNode{});
        auto& node = tree.nodes[static_cast<std::size_t>(frame.node)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = left_index;
        node.right = left_index + 1;
        left.node = left_index;
        right.node = left_index + 1;
        stack.push_back(std::move(right));
        stack.push_back(std::move(left));
    }
    return tree;
}

}  // namespace survrisk
