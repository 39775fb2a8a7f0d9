#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hte/core/error.hpp"
#include "hte/core/matrix.hpp"
#include "hte/core/rng.hpp"
#include "hte/learn/tree.hpp"

namespace hte {

enum class BoostLoss { Squared, Logistic };

struct BoostOptions {
    int n_rounds = 200;
    int max_depth = 3;
    double shrinkage = 0.1;
    double subsample = 1.0;    // row fraction per round, sampled without replacement
    double colsample = 1.0;    // feature fraction per round; 1 = off
    double min_leaf = 5.0;
    BoostLoss loss = BoostLoss::Squared;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Gradient boosting with regression-tree base learners fitted to the
// negative gradient: the residual y - F under squared loss, y - sigmoid(F)
// under logistic loss. Prediction after m rounds is
// base_score + shrinkage * sum of the first m trees.
struct BoostModel {
    double base_score = 0.0;
    std::vector<TreeModel> trees;
    double shrinkage = 0.1;
    BoostLoss loss = BoostLoss::Squared;

    // Raw additive score F(x).
    double raw_score(std::span<const double> x, std::size_t rounds) const {
        double f = base_score;
        for (std::size_t t = 0; t < rounds && t < trees.size(); ++t)
            f += shrinkage * trees[t].predict_row(x);
        return f;
    }
    double raw_score(std::span<const double> x) const { return raw_score(x, trees.size()); }

    // Mean-scale prediction: F for squared loss, sigmoid(F) for logistic.
    double predict_row(std::span<const double> x) const {
        const double f = raw_score(x);
        return loss == BoostLoss::Logistic ? sigmoid(f) : f;
    }

    std::vector<double> predict(const Matrix& x) const {
        std::vector<double> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
        return out;
    }
};

inline BoostModel fit_boost(const Matrix& x, std::span<const double> y,
                            std::span<const double> weights, const BoostOptions& opt,
                            RngStream& rng) {
    const std::size_t n = x.rows();
    if (n != y.size()) throw DataError("fit_boost: x/y length mismatch");
    std::vector<double> w;
    if (weights.empty())
        w.assign(n, 1.0);
    else {
        if (weights.size() != n) throw DataError("fit_boost: weight length mismatch");
        w.assign(weights.begin(), weights.end());
    }

    double w_sum = 0.0, wy_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w_sum += w[i];
        wy_sum += w[i] * y[i];
    }
    if (w_sum <= 0.0) throw DataError("fit_boost: total weight must be positive");
    const double y_mean = wy_sum / w_sum;

    BoostModel model;
    model.shrinkage = opt.shrinkage;
    model.loss = opt.loss;
    if (opt.loss == BoostLoss::Logistic) {
        for (std::size_t i = 0; i < n; ++i)
            if (y[i] != 0.0 && y[i] != 1.0)
                throw DataError("fit_boost: logistic loss requires y in {0,1}");
        const double p = std::clamp(y_mean, 1e-6, 1.0 - 1e-6);
        model.base_score = std::log(p / (1.0 - p));
    } else {
        model.base_score = y_mean;
    }

    std::vector<double> f(n, model.base_score);
    std::vector<double> grad(n);
    std::vector<double> w_round(n);
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;

    const int p_cols = static_cast<int>(x.cols());
    model.trees.reserve(opt.n_rounds);
    for (int round = 0; round < opt.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i)
            grad[i] = opt.loss == BoostLoss::Logistic ? y[i] - sigmoid(f[i]) : y[i] - f[i];

        // Row subsampling: keep a without-replacement fraction by zeroing the
        // weights of the rest; zero-weight rows are ignored by the tree.
        w_round = w;
        if (opt.subsample < 1.0) {
            const std::size_t keep =
                std::max<std::size_t>(1, static_cast<std::size_t>(opt.subsample * n));
            for (std::size_t k = 0; k < keep; ++k) {
                const std::size_t pick = k + rng.uniform_below(n - k);
                std::swap(rows[k], rows[pick]);
            }
            std::vector<char> kept(n, 0);
            for (std::size_t k = 0; k < keep; ++k) kept[rows[k]] = 1;
            for (std::size_t i = 0; i < n; ++i)
                if (!kept[i]) w_round[i] = 0.0;
        }

        TreeOptions topt;
        topt.max_depth = opt.max_depth;
        topt.min_leaf = opt.min_leaf;
        if (opt.colsample < 1.0) {
            topt.mtry = std::max(1, static_cast<int>(opt.colsample * p_cols));
            topt.rng = &rng;
        }
        TreeModel tree = fit_tree(x, grad, w_round, topt);
        for (std::size_t i = 0; i < n; ++i)
            f[i] += opt.shrinkage * tree.predict_row(x.row(i));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

inline BoostModel fit_boost(const Matrix& x, std::span<const double> y,
                            const BoostOptions& opt, RngStream& rng) {
    return fit_boost(x, y, std::span<const double>(), opt, rng);
}

} // namespace hte
