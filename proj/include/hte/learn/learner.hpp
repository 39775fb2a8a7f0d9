#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hte/core/error.hpp"
#include "hte/core/matrix.hpp"
#include "hte/core/rng.hpp"
#include "hte/learn/boost.hpp"
#include "hte/learn/elastic_net.hpp"
#include "hte/learn/forest.hpp"
#include "hte/learn/tree.hpp"

namespace hte {

using json = nlohmann::json;

enum class LearnerKind { Mean, Tree, Forest, Boost, ElasticNet };
enum class Family { Gaussian, Binomial };

inline std::string to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::Mean: return "mean";
        case LearnerKind::Tree: return "tree";
        case LearnerKind::Forest: return "forest";
        case LearnerKind::Boost: return "boost";
        case LearnerKind::ElasticNet: return "elastic_net";
    }
    return "?";
}

inline LearnerKind learner_kind_from_string(const std::string& s) {
    if (s == "mean") return LearnerKind::Mean;
    if (s == "tree") return LearnerKind::Tree;
    if (s == "forest") return LearnerKind::Forest;
    if (s == "boost") return LearnerKind::Boost;
    if (s == "elastic_net") return LearnerKind::ElasticNet;
    throw ConfigError("unknown learner kind '" + s + "'");
}

// Union of the hyperparameters across learner kinds; the kind decides which
// fields are read.
struct LearnerParams {
    int max_depth = 3;
    double min_leaf = 5.0;
    int n_trees = 300;
    int mtry = 0;
    int n_rounds = 200;
    double shrinkage = 0.1;
    double subsample = 1.0;
    double colsample = 1.0;
    double lambda = 0.0;
    double alpha_mix = 1.0;
    double tol = 1e-8;
    int max_iter = 100000;

    json to_json() const {
        return json{{"max_depth", max_depth},   {"min_leaf", min_leaf},
                    {"n_trees", n_trees},       {"mtry", mtry},
                    {"n_rounds", n_rounds},     {"shrinkage", shrinkage},
                    {"subsample", subsample},   {"colsample", colsample},
                    {"lambda", lambda},         {"alpha_mix", alpha_mix},
                    {"tol", tol},               {"max_iter", max_iter}};
    }

    static LearnerParams from_json(const json& j) {
        LearnerParams p;
        p.max_depth = j.value("max_depth", p.max_depth);
        p.min_leaf = j.value("min_leaf", p.min_leaf);
        p.n_trees = j.value("n_trees", p.n_trees);
        p.mtry = j.value("mtry", p.mtry);
        p.n_rounds = j.value("n_rounds", p.n_rounds);
        p.shrinkage = j.value("shrinkage", p.shrinkage);
        p.subsample = j.value("subsample", p.subsample);
        p.colsample = j.value("colsample", p.colsample);
        p.lambda = j.value("lambda", p.lambda);
        p.alpha_mix = j.value("alpha_mix", p.alpha_mix);
        p.tol = j.value("tol", p.tol);
        p.max_iter = j.value("max_iter", p.max_iter);
        return p;
    }
};

// A fitted model behind a uniform prediction surface. Binomial-family models
// predict on the probability scale.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual double predict_row(std::span<const double> x) const = 0;
    virtual json to_json() const = 0;

    std::vector<double> predict(const Matrix& x) const {
        std::vector<double> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
        return out;
    }
};

using PredictorPtr = std::shared_ptr<const Predictor>;

namespace detail {

inline json tree_to_json(const TreeModel& t) {
    json nodes = json::array();
    for (const auto& nd : t.nodes)
        nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.prediction});
    return json{{"nodes", nodes}};
}

inline TreeModel tree_from_json(const json& j) {
    TreeModel t;
    for (const auto& nd : j.at("nodes"))
        t.nodes.push_back(TreeNode{nd[0].get<int>(), nd[1].get<double>(), nd[2].get<int>(),
                                   nd[3].get<int>(), nd[4].get<double>()});
    return t;
}

} // namespace detail

class MeanPredictor : public Predictor {
public:
    explicit MeanPredictor(double value) : value_(value) {}
    double predict_row(std::span<const double>) const override { return value_; }
    json to_json() const override { return json{{"model", "mean"}, {"value", value_}}; }

private:
    double value_;
};

class TreePredictor : public Predictor {
public:
    explicit TreePredictor(TreeModel model) : model_(std::move(model)) {}
    double predict_row(std::span<const double> x) const override {
        return model_.predict_row(x);
    }
    json to_json() const override {
        json j = detail::tree_to_json(model_);
        j["model"] = "tree";
        return j;
    }
    const TreeModel& tree() const { return model_; }

private:
    TreeModel model_;
};

class ForestPredictor : public Predictor {
public:
    explicit ForestPredictor(ForestModel model) : model_(std::move(model)) {}
    double predict_row(std::span<const double> x) const override {
        return model_.predict_row(x);
    }
    json to_json() const override {
        json trees = json::array();
        for (const auto& t : model_.trees) trees.push_back(detail::tree_to_json(t));
        return json{{"model", "forest"}, {"trees", trees}};
    }
    const ForestModel& forest() const { return model_; }

private:
    ForestModel model_;
};

class BoostPredictor : public Predictor {
public:
    explicit BoostPredictor(BoostModel model) : model_(std::move(model)) {}
    double predict_row(std::span<const double> x) const override {
        return model_.predict_row(x);
    }
    json to_json() const override {
        json trees = json::array();
        for (const auto& t : model_.trees) trees.push_back(detail::tree_to_json(t));
        return json{{"model", "boost"},
                    {"base_score", model_.base_score},
                    {"shrinkage", model_.shrinkage},
                    {"loss", model_.loss == BoostLoss::Logistic ? "logistic" : "squared"},
                    {"trees", trees}};
    }
    const BoostModel& boost() const { return model_; }

private:
    BoostModel model_;
};

class ElasticNetPredictor : public Predictor {
public:
    explicit ElasticNetPredictor(ElasticNetModel model) : model_(std::move(model)) {}
    double predict_row(std::span<const double> x) const override {
        return model_.predict_row(x);
    }
    json to_json() const override {
        return json{{"model", "elastic_net"},
                    {"intercept", model_.intercept},
                    {"beta", model_.beta},
                    {"lambda", model_.lambda},
                    {"alpha_mix", model_.alpha_mix},
                    {"family", model_.family == GlmFamily::Binomial ? "binomial" : "gaussian"}};
    }
    const ElasticNetModel& net() const { return model_; }

private:
    ElasticNetModel model_;
};

// Clamps another predictor's output; used for propensity clipping.
class ClippedPredictor : public Predictor {
public:
    ClippedPredictor(PredictorPtr inner, double lo, double hi)
        : inner_(std::move(inner)), lo_(lo), hi_(hi) {}
    double predict_row(std::span<const double> x) const override {
        return std::clamp(inner_->predict_row(x), lo_, hi_);
    }
    json to_json() const override {
        return json{{"model", "clipped"}, {"lo", lo_}, {"hi", hi_},
                    {"inner", inner_->to_json()}};
    }

private:
    PredictorPtr inner_;
    double lo_, hi_;
};

// Wraps an arbitrary callable; the oracle mode of the simulation lab injects
// true nuisance functions through this. Not serializable.
class FunctionPredictor : public Predictor {
public:
    explicit FunctionPredictor(std::function<double(std::span<const double>)> fn)
        : fn_(std::move(fn)) {}
    double predict_row(std::span<const double> x) const override { return fn_(x); }
    json to_json() const override {
        throw ConfigError("FunctionPredictor cannot be serialized");
    }

private:
    std::function<double(std::span<const double>)> fn_;
};

inline PredictorPtr fit_predictor(LearnerKind kind, const LearnerParams& params,
                                  const Matrix& x, std::span<const double> y,
                                  std::span<const double> weights, Family family,
                                  RngStream& rng) {
    switch (kind) {
        case LearnerKind::Mean: {
            double sw = 0.0, swy = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double wi = weights.empty() ? 1.0 : weights[i];
                sw += wi;
                swy += wi * y[i];
            }
            return std::make_shared<MeanPredictor>(sw > 0.0 ? swy / sw : 0.0);
        }
        case LearnerKind::Tree: {
            TreeOptions opt;
            opt.max_depth = params.max_depth;
            opt.min_leaf = params.min_leaf;
            return std::make_shared<TreePredictor>(fit_tree(x, y, weights, opt));
        }
        case LearnerKind::Forest: {
            ForestOptions opt;
            opt.n_trees = params.n_trees;
            opt.mtry = params.mtry;
            opt.min_leaf = params.min_leaf;
            return std::make_shared<ForestPredictor>(fit_forest(x, y, opt, rng));
        }
        case LearnerKind::Boost: {
            BoostOptions opt;
            opt.n_rounds = params.n_rounds;
            opt.max_depth = params.max_depth;
            opt.shrinkage = params.shrinkage;
            opt.subsample = params.subsample;
            opt.colsample = params.colsample;
            opt.min_leaf = params.min_leaf;
            opt.loss = family == Family::Binomial ? BoostLoss::Logistic : BoostLoss::Squared;
            return std::make_shared<BoostPredictor>(fit_boost(x, y, weights, opt, rng));
        }
        case LearnerKind::ElasticNet: {
            ElasticNetOptions opt;
            opt.lambda = params.lambda;
            opt.alpha_mix = params.alpha_mix;
            opt.tol = params.tol;
            opt.max_iter = params.max_iter;
            opt.family = family == Family::Binomial ? GlmFamily::Binomial : GlmFamily::Gaussian;
            return std::make_shared<ElasticNetPredictor>(fit_elastic_net(x, y, weights, opt));
        }
    }
    throw ConfigError("fit_predictor: unknown learner kind");
}

inline PredictorPtr predictor_from_json(const json& j) {
    const std::string model = j.at("model").get<std::string>();
    if (model == "mean") return std::make_shared<MeanPredictor>(j.at("value").get<double>());
    if (model == "tree") return std::make_shared<TreePredictor>(detail::tree_from_json(j));
    if (model == "forest") {
        ForestModel fm;
        for (const auto& t : j.at("trees")) fm.trees.push_back(detail::tree_from_json(t));
        fm.n_trees = static_cast<int>(fm.trees.size());
        return std::make_shared<ForestPredictor>(std::move(fm));
    }
    if (model == "boost") {
        BoostModel bm;
        bm.base_score = j.at("base_score").get<double>();
        bm.shrinkage = j.at("shrinkage").get<double>();
        bm.loss = j.at("loss").get<std::string>() == "logistic" ? BoostLoss::Logistic
                                                                : BoostLoss::Squared;
        for (const auto& t : j.at("trees")) bm.trees.push_back(detail::tree_from_json(t));
        return std::make_shared<BoostPredictor>(std::move(bm));
    }
    if (model == "elastic_net") {
        ElasticNetModel em;
        em.intercept = j.at("intercept").get<double>();
        em.beta = j.at("beta").get<std::vector<double>>();
        em.lambda = j.at("lambda").get<double>();
        em.alpha_mix = j.at("alpha_mix").get<double>();
        em.family = j.at("family").get<std::string>() == "binomial" ? GlmFamily::Binomial
                                                                    : GlmFamily::Gaussian;
        return std::make_shared<ElasticNetPredictor>(std::move(em));
    }
    if (model == "clipped")
        return std::make_shared<ClippedPredictor>(predictor_from_json(j.at("inner")),
                                                  j.at("lo").get<double>(),
                                                  j.at("hi").get<double>());
    throw ConfigError("predictor_from_json: unknown model '" + model + "'");
}

} // namespace hte
