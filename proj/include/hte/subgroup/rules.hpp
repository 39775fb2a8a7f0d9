#pragma once
#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hte/cate/cate_model.hpp"
#include "hte/core/dataset.hpp"
#include "hte/learn/tree.hpp"

namespace hte {

// One axis-aligned comparison inside a subgroup signature.
struct Condition {
    enum class Op { Le, Gt, Ge, Lt };
    int feature = 0;
    Op op = Op::Le;
    double bound = 0.0;

    bool holds(std::span<const double> x) const {
        const double v = x[feature];
        switch (op) {
            case Op::Le: return v <= bound;
            case Op::Gt: return v > bound;
            case Op::Ge: return v >= bound;
            case Op::Lt: return v < bound;
        }
        return false;
    }

    std::string render(const std::vector<std::string>& names) const {
        const std::string name = feature < static_cast<int>(names.size())
                                     ? names[feature]
                                     : "x" + std::to_string(feature + 1);
        const char* sym = op == Op::Le ? " <= " : op == Op::Gt ? " > "
                                      : op == Op::Ge ? " >= " : " < ";
        std::ostringstream os;
        os << name << sym << bound;
        return os.str();
    }
};

struct PrimBox {
    std::vector<double> lower, upper;   // per feature, possibly infinite
    double support = 0.0;               // fraction of training data inside
    double mean_target = 0.0;
};

// A subgroup membership rule. Signature-bearing representations store the
// rule as a union of conjunctions (clauses); membership evaluates those
// clauses directly, so signature and membership agree by construction.
// Threshold-on-CATE rules carry a scorer instead.
struct SubgroupRule {
    enum class Rep { ThresholdOnCate, TreeLeaves, PrimBoxes };
    Rep representation = Rep::TreeLeaves;
    std::vector<std::vector<Condition>> clauses;  // OR of ANDs
    std::function<double(std::span<const double>)> scorer;  // membership = scorer > 0
    std::vector<PrimBox> boxes;                   // populated for PrimBoxes
    std::vector<std::string> feature_names;

    bool contains(std::span<const double> x) const {
        if (representation == Rep::ThresholdOnCate) return scorer && scorer(x) > 0.0;
        for (const auto& clause : clauses) {
            bool all = true;
            for (const auto& c : clause)
                if (!c.holds(x)) {
                    all = false;
                    break;
                }
            if (all) return true;
        }
        return false;
    }

    std::vector<char> membership(const Matrix& x) const {
        std::vector<char> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = contains(x.row(i)) ? 1 : 0;
        return out;
    }

    std::string signature() const {
        if (representation == Rep::ThresholdOnCate) return "";
        if (clauses.empty()) return "(empty)";
        std::ostringstream os;
        for (std::size_t c = 0; c < clauses.size(); ++c) {
            if (c) os << " OR ";
            if (clauses[c].empty()) {
                os << "(all)";
                continue;
            }
            os << "(";
            for (std::size_t k = 0; k < clauses[c].size(); ++k) {
                if (k) os << " AND ";
                os << clauses[c][k].render(feature_names);
            }
            os << ")";
        }
        return os.str();
    }
};

inline SubgroupRule threshold_rule(CateModelPtr cate, double delta = 0.0) {
    SubgroupRule rule;
    rule.representation = SubgroupRule::Rep::ThresholdOnCate;
    rule.scorer = [cate = std::move(cate), delta](std::span<const double> x) {
        return cate->predict_row(x) - delta;
    };
    return rule;
}

namespace detail {

inline void collect_leaf_clauses(const TreeModel& tree, int node,
                                 std::vector<Condition>& path, double threshold,
                                 std::vector<std::vector<Condition>>& out) {
    const TreeNode& nd = tree.nodes[node];
    if (nd.is_leaf()) {
        if (nd.prediction > threshold) out.push_back(path);
        return;
    }
    path.push_back(Condition{nd.feature, Condition::Op::Le, nd.threshold});
    collect_leaf_clauses(tree, nd.left, path, threshold, out);
    path.back() = Condition{nd.feature, Condition::Op::Gt, nd.threshold};
    collect_leaf_clauses(tree, nd.right, path, threshold, out);
    path.pop_back();
}

} // namespace detail

// Virtual-twins subgroup: a shallow regression tree on the estimated CATE
// values; the subgroup is the union of leaves whose mean estimated effect
// exceeds the threshold.
inline SubgroupRule vt_subgroups(const Dataset& data, const CateModel& cate,
                                 int tree_depth, double min_leaf,
                                 double threshold = 0.0) {
    if (tree_depth < 1 || tree_depth > 2)
        throw ConfigError("vt_subgroups: tree_depth must be 1 or 2");
    const std::vector<double> delta_hat = cate.predict(data.x);
    TreeOptions opt;
    opt.max_depth = tree_depth;
    opt.min_leaf = min_leaf;
    const TreeModel tree = fit_tree(data.x, delta_hat, opt);

    SubgroupRule rule;
    rule.representation = SubgroupRule::Rep::TreeLeaves;
    rule.feature_names = data.feature_names;
    std::vector<Condition> path;
    detail::collect_leaf_clauses(tree, 0, path, threshold, rule.clauses);
    return rule;
}

// Interaction-tree split statistic for a binary outcome: the standardized
// squared difference of the arm-wise proportion differences between the left
// and right child nodes. counts[node][arm][outcome] with node 0 = left.
inline double interaction_stat_binary(const std::size_t counts[2][2][2]) {
    double p[2][2];
    double n[2][2];
    double events = 0.0, total = 0.0;
    for (int node = 0; node < 2; ++node)
        for (int arm = 0; arm < 2; ++arm) {
            n[node][arm] =
                static_cast<double>(counts[node][arm][0] + counts[node][arm][1]);
            if (n[node][arm] < 1.0)
                throw DataError("interaction_stat_binary: empty node-arm cell");
            p[node][arm] = static_cast<double>(counts[node][arm][1]) / n[node][arm];
            events += static_cast<double>(counts[node][arm][1]);
            total += n[node][arm];
        }
    const double pooled = events / total;
    if (pooled <= 0.0 || pooled >= 1.0)
        throw NumericError("interaction_stat_binary: pooled proportion in {0,1}, "
                           "statistic undefined");
    const double diff = (p[0][1] - p[0][0]) - (p[1][1] - p[1][0]);
    const double denom = pooled * (1.0 - pooled) *
                         (1.0 / n[0][1] + 1.0 / n[0][0] + 1.0 / n[1][0] + 1.0 / n[1][1]);
    return diff * diff / denom;
}

} // namespace hte
