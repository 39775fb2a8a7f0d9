#pragma once
#include <cstddef>
#include <span>
#include <vector>

#include "hte/core/error.hpp"
#include "hte/core/matrix.hpp"
#include "hte/core/parallel.hpp"
#include "hte/core/rng.hpp"
#include "hte/learn/tree.hpp"

namespace hte {

struct ForestOptions {
    int n_trees = 300;
    int mtry = 0;              // 0 = p/3 rounded up
    double min_leaf = 5.0;
    int max_depth = 30;
    bool bootstrap = true;
    int threads = 1;
};

// Bagged regression trees. Each tree sees a bootstrap resample (weighted by
// multiplicity) drawn from its own substream, so the fit is reproducible and
// independent of tree-fitting order.
struct ForestModel {
    std::vector<TreeModel> trees;
    std::vector<std::vector<char>> in_bag;   // in_bag[t][i]: row i included in tree t
    int n_trees = 0;
    int mtry = 0;
    bool bootstrap = true;

    double predict_row(std::span<const double> x) const {
        double sum = 0.0;
        for (const auto& tree : trees) sum += tree.predict_row(x);
        return sum / static_cast<double>(trees.size());
    }

    std::vector<double> predict(const Matrix& x) const {
        std::vector<double> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
        return out;
    }

    // Out-of-bag prediction for training row i: averages only the trees
    // whose bootstrap sample excluded i.
    double predict_oob(const Matrix& x_train, std::size_t i) const {
        double sum = 0.0;
        int used = 0;
        for (std::size_t t = 0; t < trees.size(); ++t) {
            if (in_bag[t][i]) continue;
            sum += trees[t].predict_row(x_train.row(i));
            ++used;
        }
        if (used == 0)
            throw NumericError("predict_oob: every tree contains row " + std::to_string(i));
        return sum / used;
    }
};

inline ForestModel fit_forest(const Matrix& x, std::span<const double> y,
                              const ForestOptions& opt, RngStream& rng) {
    if (opt.n_trees < 1) throw ConfigError("fit_forest: n_trees must be >= 1");
    const std::size_t n = x.rows();
    const int p = static_cast<int>(x.cols());
    const int mtry = opt.mtry > 0 ? opt.mtry : (p + 2) / 3;

    ForestModel model;
    model.n_trees = opt.n_trees;
    model.mtry = mtry;
    model.bootstrap = opt.bootstrap;
    model.trees.resize(opt.n_trees);
    model.in_bag.assign(opt.n_trees, std::vector<char>(n, 0));

    const std::uint64_t base = rng.next_u64();
    RngStream seeder(base);
    parallel_for(static_cast<std::size_t>(opt.n_trees), opt.threads, [&](std::size_t t) {
        RngStream tree_rng = seeder.substream(t);
        std::vector<double> w(n, 0.0);
        if (opt.bootstrap) {
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t pick = tree_rng.uniform_below(n);
                w[pick] += 1.0;
            }
        } else {
            w.assign(n, 1.0);
        }
        for (std::size_t i = 0; i < n; ++i) model.in_bag[t][i] = w[i] > 0.0 ? 1 : 0;
        TreeOptions topt;
        topt.max_depth = opt.max_depth;
        topt.min_leaf = opt.min_leaf;
        topt.mtry = mtry < p ? mtry : 0;
        topt.rng = &tree_rng;
        model.trees[t] = fit_tree(x, y, w, topt);
    });
    return model;
}

} // namespace hte
