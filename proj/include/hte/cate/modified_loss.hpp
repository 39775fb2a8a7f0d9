#pragma once
#include <span>
#include <string>
#include <vector>

#include "hte/cate/cate_model.hpp"
#include "hte/core/dataset.hpp"
#include "hte/learn/tune.hpp"
#include "hte/nuisance.hpp"
#include "hte/transforms.hpp"

namespace hte {

// A direct CATE estimator whose fitted g(x) is itself the effect estimate:
// covers the R-learner and W-/A-learning.
class DirectCateModel : public CateModel {
public:
    DirectCateModel(std::string method, PredictorPtr g, std::size_t p)
        : method_(std::move(method)), g_(std::move(g)) {
        n_features_ = p;
    }
    std::string method() const override { return method_; }
    double predict_row(std::span<const double> x) const override {
        return g_->predict_row(x);
    }
    json to_json() const override {
        return json{{"method", method_}, {"n_features", n_features_}, {"g", g_->to_json()}};
    }

private:
    std::string method_;
    PredictorPtr g_;
};

// R-learner: weighted regression of the Robinson pseudo-outcome
// (Y - m)/(T - pi) with weights (T - pi)^2, which minimizes the R-loss
// sum (Y_i - m^{-i} - (T_i - pi^{-i}) g(X_i))^2 over the final learner's
// function class. Nuisances must be cross-fitted.
inline CateModelPtr fit_r_learner(const Dataset& data, const NuisanceFit& nuisance,
                                  const TunedLearnerSpec& final_spec, RngStream& rng) {
    const TransformedSample rt = robinson_transform(data, nuisance);
    RngStream tune_rng = rng.substream(0);
    const LearnerParams params =
        resolve_spec(final_spec, data.x, rt.pseudo_outcome, Family::Gaussian, tune_rng);
    RngStream fit_rng = rng.substream(1);
    auto g = fit_predictor(final_spec.kind, params, data.x, rt.pseudo_outcome, rt.weights,
                           Family::Gaussian, fit_rng);
    return std::make_shared<DirectCateModel>("R", std::move(g), data.p());
}

enum class MlmVariant { W, A };

struct MlmOptions {
    MlmVariant variant = MlmVariant::W;
    bool augmented = false;
};

// Modified-loss methods. W-learning regresses 2A(Y - b) under the weights
// 1/(A pi + (1-A)/2); A-learning minimizes sum((Y - b) - (T - pi) g(X))^2,
// solved as a weighted regression of (Y - b)/(T - pi) with weights
// (T - pi)^2. Augmentation subtracts b(x) = h(x); unaugmented runs use b = 0.
inline CateModelPtr fit_mlm(const Dataset& data, std::span<const double> pi,
                            std::span<const double> augmentation, const MlmOptions& opt,
                            const TunedLearnerSpec& final_spec, RngStream& rng) {
    const std::size_t n = data.n();
    detail::check_propensity(pi, n);
    if (!augmentation.empty() && augmentation.size() != n)
        throw DataError("fit_mlm: augmentation length mismatch");

    std::vector<double> target(n), weights(n);
    if (opt.variant == MlmVariant::W) {
        for (std::size_t i = 0; i < n; ++i) {
            const int a = data.a(i);
            const double centered = data.y[i] - (augmentation.empty() ? 0.0 : augmentation[i]);
            target[i] = 2.0 * a * centered;
            weights[i] = 1.0 / detail::arm_prob(a, pi[i]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double denom = data.t[i] - pi[i];
            const double centered = data.y[i] - (augmentation.empty() ? 0.0 : augmentation[i]);
            target[i] = centered / denom;
            weights[i] = denom * denom;
        }
    }

    RngStream tune_rng = rng.substream(0);
    const LearnerParams params =
        resolve_spec(final_spec, data.x, target, Family::Gaussian, tune_rng);
    RngStream fit_rng = rng.substream(1);
    auto g = fit_predictor(final_spec.kind, params, data.x, target, weights,
                           Family::Gaussian, fit_rng);
    std::string name = opt.variant == MlmVariant::W ? "W" : "A";
    if (opt.augmented) name += "_aug";
    return std::make_shared<DirectCateModel>(std::move(name), std::move(g), data.p());
}

// Convenience wrapper wiring the nuisance fit into fit_mlm: propensities from
// the cross-fitted (or known) oof values, augmentation from oof h when asked.
inline CateModelPtr fit_mlm(const Dataset& data, const NuisanceFit& nuisance,
                            const MlmOptions& opt, const TunedLearnerSpec& final_spec,
                            RngStream& rng) {
    std::vector<double> aug;
    if (opt.augmented) {
        aug.resize(data.n());
        for (std::size_t i = 0; i < data.n(); ++i) aug[i] = nuisance.oof_h(i);
    }
    return fit_mlm(data, nuisance.oof_pi, aug, opt, final_spec, rng);
}

} // namespace hte
