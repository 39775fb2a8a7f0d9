#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "hte/core/error.hpp"
#include "hte/core/matrix.hpp"
#include "hte/core/rng.hpp"

namespace hte {

struct TreeNode {
    int feature = -1;          // -1 marks a leaf
    double threshold = 0.0;    // goes left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    double prediction = 0.0;

    bool is_leaf() const { return feature < 0; }
};

// CART regression tree fitted by greedy weighted sum-of-squares reduction.
// Split thresholds sit at midpoints between consecutive distinct sorted
// values; ties between candidate splits break towards the lowest feature
// index, then the smallest threshold. Leaves predict weighted means.
struct TreeModel {
    std::vector<TreeNode> nodes;
    int max_depth = 0;
    double min_leaf = 1.0;     // minimum sum of weights per leaf

    double predict_row(std::span<const double> x) const {
        int node = 0;
        while (!nodes[node].is_leaf())
            node = x[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                                   : nodes[node].right;
        return nodes[node].prediction;
    }

    std::vector<double> predict(const Matrix& x) const {
        std::vector<double> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
        return out;
    }

    int depth() const { return depth_below(0); }

private:
    int depth_below(int node) const {
        if (nodes[node].is_leaf()) return 0;
        return 1 + std::max(depth_below(nodes[node].left), depth_below(nodes[node].right));
    }
};

struct TreeOptions {
    int max_depth = 6;
    double min_leaf = 5.0;
    int mtry = 0;              // features considered per split; 0 = all
    RngStream* rng = nullptr;  // required when mtry > 0
};

namespace detail {

struct SplitCandidate {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Best split for the rows in `idx`. Gain is the increase in
// sum(child) S_c^2/W_c over the parent's S^2/W, which equals the weighted
// SSE reduction. Iteration order (features ascending, thresholds ascending)
// plus strict improvement gives the documented deterministic tie-break.
inline SplitCandidate find_best_split(const Matrix& x, std::span<const double> y,
                                      std::span<const double> w,
                                      std::span<const std::size_t> idx,
                                      const TreeOptions& opt,
                                      std::span<const int> features) {
    const std::size_t m = idx.size();
    double w_total = 0.0, s_total = 0.0;
    for (std::size_t r : idx) {
        w_total += w[r];
        s_total += w[r] * y[r];
    }
    SplitCandidate best;
    if (w_total < 2.0 * opt.min_leaf) return best;
    const double parent_score = s_total * s_total / w_total;

    std::vector<std::size_t> order(idx.begin(), idx.end());
    for (int j : features) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return x(a, j) < x(b, j);
        });
        double w_left = 0.0, s_left = 0.0;
        for (std::size_t k = 0; k + 1 < m; ++k) {
            const std::size_t r = order[k];
            w_left += w[r];
            s_left += w[r] * y[r];
            const double v = x(r, j);
            const double v_next = x(order[k + 1], j);
            if (v == v_next) continue;
            if (w_left < opt.min_leaf || w_total - w_left < opt.min_leaf) continue;
            const double s_right = s_total - s_left;
            const double w_right = w_total - w_left;
            const double gain =
                s_left * s_left / w_left + s_right * s_right / w_right - parent_score;
            if (gain > best.gain + 1e-12 ||
                (!best.found && gain > 1e-12)) {
                best.found = true;
                best.feature = j;
                best.threshold = 0.5 * (v + v_next);
                best.gain = gain;
            }
        }
    }
    return best;
}

inline int grow_tree(TreeModel& model, const Matrix& x, std::span<const double> y,
                     std::span<const double> w, std::vector<std::size_t>& idx,
                     int depth, const TreeOptions& opt) {
    double w_sum = 0.0, s_sum = 0.0;
    for (std::size_t r : idx) {
        w_sum += w[r];
        s_sum += w[r] * y[r];
    }
    const int node_id = static_cast<int>(model.nodes.size());
    model.nodes.push_back(TreeNode{});
    model.nodes[node_id].prediction = w_sum > 0.0 ? s_sum / w_sum : 0.0;
    if (depth >= opt.max_depth || idx.size() < 2) return node_id;

    std::vector<int> features;
    const int p = static_cast<int>(x.cols());
    if (opt.mtry > 0 && opt.mtry < p) {
        if (!opt.rng) throw ConfigError("fit_tree: mtry sampling needs an rng");
        std::vector<int> all(p);
        for (int j = 0; j < p; ++j) all[j] = j;
        for (int k = 0; k < opt.mtry; ++k) {
            const std::size_t pick = k + opt.rng->uniform_below(p - k);
            std::swap(all[k], all[pick]);
        }
        features.assign(all.begin(), all.begin() + opt.mtry);
        std::sort(features.begin(), features.end());
    } else {
        features.resize(p);
        for (int j = 0; j < p; ++j) features[j] = j;
    }

    const auto split = detail::find_best_split(x, y, w, idx, opt, features);
    if (!split.found) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t r : idx)
        (x(r, split.feature) <= split.threshold ? left_idx : right_idx).push_back(r);
    idx.clear();
    idx.shrink_to_fit();

    model.nodes[node_id].feature = split.feature;
    model.nodes[node_id].threshold = split.threshold;
    const int left = grow_tree(model, x, y, w, left_idx, depth + 1, opt);
    model.nodes[node_id].left = left;
    const int right = grow_tree(model, x, y, w, right_idx, depth + 1, opt);
    model.nodes[node_id].right = right;
    return node_id;
}

} // namespace detail

inline TreeModel fit_tree(const Matrix& x, std::span<const double> y,
                          std::span<const double> weights, const TreeOptions& opt) {
    if (x.rows() != y.size()) throw DataError("fit_tree: x/y length mismatch");
    if (x.rows() == 0) throw DataError("fit_tree: empty data");
    std::vector<double> w;
    if (weights.empty()) {
        w.assign(y.size(), 1.0);
    } else {
        if (weights.size() != y.size()) throw DataError("fit_tree: weight length mismatch");
        w.assign(weights.begin(), weights.end());
        for (double wi : w)
            if (!(wi >= 0.0)) throw DataError("fit_tree: negative weight");
    }

    // Zero-weight rows carry no information and must not contribute split
    // candidates, so that integer-weighted fits equal row-replicated fits.
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (w[i] > 0.0) idx.push_back(i);
    if (idx.empty()) throw DataError("fit_tree: all weights are zero");

    TreeModel model;
    model.max_depth = opt.max_depth;
    model.min_leaf = opt.min_leaf;
    detail::grow_tree(model, x, y, w, idx, 0, opt);
    return model;
}

inline TreeModel fit_tree(const Matrix& x, std::span<const double> y,
                          const TreeOptions& opt) {
    return fit_tree(x, y, std::span<const double>(), opt);
}

} // namespace hte
