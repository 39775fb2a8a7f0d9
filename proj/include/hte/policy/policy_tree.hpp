#pragma once
#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hte/core/error.hpp"
#include "hte/core/matrix.hpp"

namespace hte {

// Fixed-depth (<= 2) axis-aligned decision tree maximizing
// sum_i D(x_i) * score_i by exhaustive search over midpoint thresholds.
// The optimum is exact over the candidate grid; ties resolve to the
// lexicographically smallest (feature, threshold, leaf-assignment) tuple,
// scanning features then thresholds in ascending order and preferring
// action 0 on a zero-sum leaf.
struct PolicyTreeModel {
    struct Node {
        int feature = -1;       // -1 marks an action leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        int action = 0;
        bool is_leaf() const { return feature < 0; }
    };

    std::vector<Node> nodes;
    double objective = 0.0;

    int decide(std::span<const double> x) const {
        int node = 0;
        while (!nodes[node].is_leaf())
            node = x[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                                   : nodes[node].right;
        return nodes[node].action;
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& nd : nodes)
            arr.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.action});
        return nlohmann::json{{"nodes", arr}, {"objective", objective}};
    }

    static PolicyTreeModel from_json(const nlohmann::json& j) {
        PolicyTreeModel m;
        for (const auto& nd : j.at("nodes"))
            m.nodes.push_back(Node{nd[0].get<int>(), nd[1].get<double>(), nd[2].get<int>(),
                                   nd[3].get<int>(), nd[4].get<int>()});
        m.objective = j.value("objective", 0.0);
        return m;
    }
};

namespace detail {

struct Depth1Solution {
    bool split_found = false;
    int feature = 0;
    double threshold = 0.0;
    int action_left = 0, action_right = 0;
    int leaf_action = 0;        // used when no split candidate exists
    double objective = 0.0;
};

// Treating a leaf: assign 1 only when the score total is strictly positive.
inline Depth1Solution solve_leaf(double total) {
    Depth1Solution s;
    s.leaf_action = total > 0.0 ? 1 : 0;
    s.objective = total > 0.0 ? total : 0.0;
    return s;
}

inline Depth1Solution solve_depth1(const Matrix& x, std::span<const double> scores,
                                   std::span<const std::size_t> idx) {
    double total = 0.0;
    for (std::size_t i : idx) total += scores[i];
    Depth1Solution best = solve_leaf(total);

    std::vector<std::size_t> order(idx.begin(), idx.end());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return x(a, j) < x(b, j);
        });
        double left_sum = 0.0;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            left_sum += scores[order[k]];
            const double v = x(order[k], j);
            const double v_next = x(order[k + 1], j);
            if (v == v_next) continue;
            const double right_sum = total - left_sum;
            const double obj =
                (left_sum > 0.0 ? left_sum : 0.0) + (right_sum > 0.0 ? right_sum : 0.0);
            if (obj > best.objective) {
                best.split_found = true;
                best.feature = static_cast<int>(j);
                best.threshold = 0.5 * (v + v_next);
                best.action_left = left_sum > 0.0 ? 1 : 0;
                best.action_right = right_sum > 0.0 ? 1 : 0;
                best.objective = obj;
            }
        }
    }
    return best;
}

inline int emit_depth1(PolicyTreeModel& model, const Depth1Solution& s) {
    const int id = static_cast<int>(model.nodes.size());
    model.nodes.push_back(PolicyTreeModel::Node{});
    if (!s.split_found) {
        model.nodes[id].action = s.leaf_action;
        return id;
    }
    model.nodes[id].feature = s.feature;
    model.nodes[id].threshold = s.threshold;
    const int left = static_cast<int>(model.nodes.size());
    model.nodes.push_back(PolicyTreeModel::Node{-1, 0.0, -1, -1, s.action_left});
    const int right = static_cast<int>(model.nodes.size());
    model.nodes.push_back(PolicyTreeModel::Node{-1, 0.0, -1, -1, s.action_right});
    model.nodes[id].left = left;
    model.nodes[id].right = right;
    return id;
}

} // namespace detail

inline PolicyTreeModel fit_policy_tree(std::span<const double> scores, const Matrix& x,
                                       int depth) {
    if (depth < 1 || depth > 2)
        throw ConfigError("fit_policy_tree: depth must be 1 or 2 (combinatorial budget)");
    if (scores.size() != x.rows()) throw DataError("fit_policy_tree: score length mismatch");
    if (x.rows() == 0) throw DataError("fit_policy_tree: empty data");

    std::vector<std::size_t> all(x.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    PolicyTreeModel model;
    if (depth == 1) {
        const auto sol = detail::solve_depth1(x, scores, all);
        model.objective = sol.objective;
        detail::emit_depth1(model, sol);
        return model;
    }

    // Depth 2: each root candidate decomposes into two independent depth-1
    // problems; both sides being maximal makes the lexicographic tie-break
    // compose correctly across levels.
    const auto root_as_depth1 = detail::solve_depth1(x, scores, all);
    bool have_split = false;
    int best_feature = 0;
    double best_threshold = 0.0;
    detail::Depth1Solution best_left, best_right;
    double best_obj = root_as_depth1.objective;   // no-split fallback must not win ties

    std::vector<std::size_t> order(all);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return x(a, j) < x(b, j);
        });
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            const double v = x(order[k], j);
            const double v_next = x(order[k + 1], j);
            if (v == v_next) continue;
            const double threshold = 0.5 * (v + v_next);
            std::vector<std::size_t> left_idx, right_idx;
            for (std::size_t i : all)
                (x(i, j) <= threshold ? left_idx : right_idx).push_back(i);
            const auto ls = detail::solve_depth1(x, scores, left_idx);
            const auto rs = detail::solve_depth1(x, scores, right_idx);
            const double obj = ls.objective + rs.objective;
            if (obj > best_obj || (!have_split && obj == best_obj)) {
                have_split = true;
                best_feature = static_cast<int>(j);
                best_threshold = threshold;
                best_left = ls;
                best_right = rs;
                best_obj = obj;
            }
        }
    }

    model.objective = best_obj;
    if (!have_split) {
        detail::emit_depth1(model, root_as_depth1);
        return model;
    }
    const int root = static_cast<int>(model.nodes.size());
    model.nodes.push_back(PolicyTreeModel::Node{});
    model.nodes[root].feature = best_feature;
    model.nodes[root].threshold = best_threshold;
    const int left = detail::emit_depth1(model, best_left);
    model.nodes[root].left = left;
    const int right = detail::emit_depth1(model, best_right);
    model.nodes[root].right = right;
    return model;
}

} // namespace hte
