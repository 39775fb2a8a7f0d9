#pragma once
#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "hte/cate/cate_model.hpp"
#include "hte/core/dataset.hpp"
#include "hte/core/folds.hpp"
#include "hte/core/rng.hpp"

namespace hte {

struct CausalTreeOptions {
    double min_leaf_per_arm = 25;   // per arm, enforced in both halves
    int max_depth = 3;
    double honest_fraction = 0.5;   // fraction of rows in the estimation half
    double gain_threshold = 0.0;    // required strict criterion improvement
};

// Honest causal tree. Splits are chosen on the split half to maximize
// sum_child n_child * effect_child^2 (the variance-of-effects criterion);
// leaf effects are re-estimated as arm-mean differences on the estimation
// half, which never influences split selection.
class CausalTreeModel : public CateModel {
public:
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        int left = -1, right = -1;
        double effect = 0.0;            // estimation-half arm-mean difference
        std::size_t n_est = 0;
        bool is_leaf() const { return feature < 0; }
    };

    std::vector<Node> nodes;
    std::vector<std::size_t> split_half, estimation_half;

    std::string method() const override { return "causal_tree"; }
    double predict_row(std::span<const double> x) const override {
        int node = 0;
        while (!nodes[node].is_leaf())
            node = x[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                                   : nodes[node].right;
        return nodes[node].effect;
    }
    json to_json() const override {
        json arr = json::array();
        for (const auto& nd : nodes)
            arr.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.effect});
        return json{{"method", "causal_tree"}, {"n_features", n_features_}, {"nodes", arr}};
    }

    void set_n_features(std::size_t p) { n_features_ = p; }
};

namespace detail {

struct ArmStats {
    std::size_t n0 = 0, n1 = 0;
    double sum0 = 0.0, sum1 = 0.0;

    void add(int t, double y) {
        if (t == 1) {
            ++n1;
            sum1 += y;
        } else {
            ++n0;
            sum0 += y;
        }
    }
    bool valid(double min_per_arm) const {
        return static_cast<double>(n0) >= min_per_arm &&
               static_cast<double>(n1) >= min_per_arm;
    }
    double effect() const { return sum1 / static_cast<double>(n1) - sum0 / static_cast<double>(n0); }
    std::size_t total() const { return n0 + n1; }
};

inline ArmStats arm_stats(const Dataset& data, std::span<const std::size_t> idx) {
    ArmStats s;
    for (std::size_t i : idx) s.add(data.t[i], data.y[i]);
    return s;
}

inline int grow_causal_tree(CausalTreeModel& model, const Dataset& data,
                            std::vector<std::size_t>& split_idx,
                            std::vector<std::size_t>& est_idx, int depth,
                            const CausalTreeOptions& opt) {
    const ArmStats split_stats = arm_stats(data, split_idx);
    const ArmStats est_stats = arm_stats(data, est_idx);

    const int node_id = static_cast<int>(model.nodes.size());
    model.nodes.push_back(CausalTreeModel::Node{});
    model.nodes[node_id].effect = est_stats.effect();
    model.nodes[node_id].n_est = est_stats.total();
    if (depth >= opt.max_depth) return node_id;

    const double parent_effect = split_stats.effect();
    const double parent_score =
        static_cast<double>(split_stats.total()) * parent_effect * parent_effect;

    // Candidate split search on the split half; children must keep min_leaf
    // of each arm in both halves.
    int best_feature = -1;
    double best_threshold = 0.0, best_gain = opt.gain_threshold;
    std::vector<std::size_t> order(split_idx);
    for (std::size_t j = 0; j < data.p(); ++j) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return data.x(a, j) < data.x(b, j);
        });
        ArmStats left;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            const std::size_t r = order[k];
            left.add(data.t[r], data.y[r]);
            const double v = data.x(r, j);
            const double v_next = data.x(order[k + 1], j);
            if (v == v_next) continue;
            ArmStats right;
            right.n0 = split_stats.n0 - left.n0;
            right.n1 = split_stats.n1 - left.n1;
            right.sum0 = split_stats.sum0 - left.sum0;
            right.sum1 = split_stats.sum1 - left.sum1;
            if (!left.valid(opt.min_leaf_per_arm) || !right.valid(opt.min_leaf_per_arm))
                continue;
            const double threshold = 0.5 * (v + v_next);
            ArmStats est_left;
            for (std::size_t i : est_idx)
                if (data.x(i, j) <= threshold) est_left.add(data.t[i], data.y[i]);
            ArmStats est_right;
            est_right.n0 = est_stats.n0 - est_left.n0;
            est_right.n1 = est_stats.n1 - est_left.n1;
            if (!est_left.valid(opt.min_leaf_per_arm) ||
                !est_right.valid(opt.min_leaf_per_arm))
                continue;
            const double el = left.effect(), er = right.effect();
            const double gain = static_cast<double>(left.total()) * el * el +
                                static_cast<double>(right.total()) * er * er - parent_score;
            if (gain > best_gain) {
                best_gain = gain;
                best_feature = static_cast<int>(j);
                best_threshold = threshold;
            }
        }
    }
    if (best_feature < 0) return node_id;

    std::vector<std::size_t> sl, sr, el, er;
    for (std::size_t i : split_idx)
        (data.x(i, best_feature) <= best_threshold ? sl : sr).push_back(i);
    for (std::size_t i : est_idx)
        (data.x(i, best_feature) <= best_threshold ? el : er).push_back(i);
    split_idx.clear();
    est_idx.clear();

    model.nodes[node_id].feature = best_feature;
    model.nodes[node_id].threshold = best_threshold;
    const int left = grow_causal_tree(model, data, sl, el, depth + 1, opt);
    model.nodes[node_id].left = left;
    const int right = grow_causal_tree(model, data, sr, er, depth + 1, opt);
    model.nodes[node_id].right = right;
    return node_id;
}

} // namespace detail

inline std::shared_ptr<CausalTreeModel> fit_causal_tree(const Dataset& data,
                                                        const CausalTreeOptions& opt,
                                                        RngStream& rng) {
    if (opt.honest_fraction <= 0.0 || opt.honest_fraction >= 1.0)
        throw ConfigError("fit_causal_tree: honest_fraction must lie in (0,1)");

    // Honest split, stratified by arm so both halves keep both arms.
    std::vector<std::size_t> arm0 = data.arm_indices(0);
    std::vector<std::size_t> arm1 = data.arm_indices(1);
    detail::shuffle_indices(arm0, rng);
    detail::shuffle_indices(arm1, rng);
    auto model = std::make_shared<CausalTreeModel>();
    auto deal = [&](const std::vector<std::size_t>& arm) {
        const std::size_t n_est = static_cast<std::size_t>(opt.honest_fraction *
                                                           static_cast<double>(arm.size()));
        for (std::size_t k = 0; k < arm.size(); ++k)
            (k < n_est ? model->estimation_half : model->split_half).push_back(arm[k]);
    };
    deal(arm0);
    deal(arm1);
    std::sort(model->split_half.begin(), model->split_half.end());
    std::sort(model->estimation_half.begin(), model->estimation_half.end());

    const auto root_split = detail::arm_stats(data, model->split_half);
    const auto root_est = detail::arm_stats(data, model->estimation_half);
    if (root_split.n0 == 0 || root_split.n1 == 0 || root_est.n0 == 0 || root_est.n1 == 0)
        throw DataError("fit_causal_tree: a half lacks a treatment arm at the root");

    std::vector<std::size_t> split_idx = model->split_half;
    std::vector<std::size_t> est_idx = model->estimation_half;
    detail::grow_causal_tree(*model, data, split_idx, est_idx, 0, opt);
    model->set_n_features(data.p());
    return model;
}

} // namespace hte
