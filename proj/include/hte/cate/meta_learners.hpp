#pragma once
#include <span>
#include <string>
#include <vector>

#include "hte/cate/cate_model.hpp"
#include "hte/core/dataset.hpp"
#include "hte/learn/tune.hpp"
#include "hte/nuisance.hpp"

namespace hte {

namespace detail {

// Covariates with the treatment indicator appended as a regular column,
// optionally followed by treatment-by-covariate interaction columns.
inline Matrix augment_with_treatment(const Matrix& x, std::span<const int> t,
                                     bool interactions) {
    const std::size_t n = x.rows(), p = x.cols();
    Matrix out(n, p + 1 + (interactions ? p : 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) out(i, j) = x(i, j);
        out(i, p) = static_cast<double>(t[i]);
        if (interactions)
            for (std::size_t j = 0; j < p; ++j) out(i, p + 1 + j) = t[i] * x(i, j);
    }
    return out;
}

inline std::vector<double> toggled_row(std::span<const double> x, int t, bool interactions) {
    const std::size_t p = x.size();
    std::vector<double> row(p + 1 + (interactions ? p : 0));
    for (std::size_t j = 0; j < p; ++j) row[j] = x[j];
    row[p] = static_cast<double>(t);
    if (interactions)
        for (std::size_t j = 0; j < p; ++j) row[p + 1 + j] = t * x[j];
    return row;
}

} // namespace detail

// S-learner: one pooled response-surface fit with the treatment appended as
// a covariate; the effect estimate toggles the treatment column.
class SLearnerModel : public CateModel {
public:
    SLearnerModel(PredictorPtr m, std::size_t p, bool interactions)
        : m_(std::move(m)), interactions_(interactions) {
        n_features_ = p;
    }
    std::string method() const override { return "S"; }
    double predict_row(std::span<const double> x) const override {
        return m_->predict_row(detail::toggled_row(x, 1, interactions_)) -
               m_->predict_row(detail::toggled_row(x, 0, interactions_));
    }
    json to_json() const override {
        return json{{"method", "S"},
                    {"interactions", interactions_},
                    {"n_features", n_features_},
                    {"m", m_->to_json()}};
    }

private:
    PredictorPtr m_;
    bool interactions_;
};

inline CateModelPtr fit_s_learner(const Dataset& data, const TunedLearnerSpec& outcome_spec,
                                  RngStream& rng, bool interactions = false) {
    const Matrix xt = detail::augment_with_treatment(data.x, data.t, interactions);
    RngStream tune_rng = rng.substream(0);
    const LearnerParams params =
        resolve_spec(outcome_spec, xt, data.y, Family::Gaussian, tune_rng);
    RngStream fit_rng = rng.substream(1);
    auto m = fit_predictor(outcome_spec.kind, params, xt, data.y, {}, Family::Gaussian,
                           fit_rng);
    return std::make_shared<SLearnerModel>(std::move(m), data.p(), interactions);
}

// T-learner: two arm-wise regressions, effect = m1(x) - m0(x).
class TLearnerModel : public CateModel {
public:
    TLearnerModel(PredictorPtr m0, PredictorPtr m1, std::size_t p)
        : m0_(std::move(m0)), m1_(std::move(m1)) {
        n_features_ = p;
    }
    std::string method() const override { return "T"; }
    double predict_row(std::span<const double> x) const override {
        return m1_->predict_row(x) - m0_->predict_row(x);
    }
    json to_json() const override {
        return json{{"method", "T"},
                    {"n_features", n_features_},
                    {"m0", m0_->to_json()},
                    {"m1", m1_->to_json()}};
    }

private:
    PredictorPtr m0_, m1_;
};

inline CateModelPtr fit_t_learner(const Dataset& data, const TunedLearnerSpec& outcome_spec,
                                  RngStream& rng) {
    const auto arm0 = data.arm_indices(0);
    const auto arm1 = data.arm_indices(1);
    if (arm0.size() < 2 || arm1.size() < 2)
        throw DataError("fit_t_learner: degenerate treatment arm");
    RngStream tune_rng = rng.substream(0);
    const LearnerParams params =
        resolve_spec(outcome_spec, data.x, data.y, Family::Gaussian, tune_rng);
    RngStream r0 = rng.substream(1), r1 = rng.substream(2);
    auto m0 = fit_predictor(outcome_spec.kind, params, data.x.take_rows(arm0),
                            take(data.y, arm0), {}, Family::Gaussian, r0);
    auto m1 = fit_predictor(outcome_spec.kind, params, data.x.take_rows(arm1),
                            take(data.y, arm1), {}, Family::Gaussian, r1);
    return std::make_shared<TLearnerModel>(std::move(m0), std::move(m1), data.p());
}

// X-learner: imputed arm-wise effects re-regressed on covariates, blended by
// the propensity, delta(x) = w(x) d0(x) + (1-w(x)) d1(x). Imputations use
// the cross-fitted nuisances.
class XLearnerModel : public CateModel {
public:
    XLearnerModel(PredictorPtr d0, PredictorPtr d1, PredictorPtr weight,
                  double const_weight, std::size_t p)
        : d0_(std::move(d0)), d1_(std::move(d1)), weight_(std::move(weight)),
          const_weight_(const_weight) {
        n_features_ = p;
    }
    std::string method() const override { return "X"; }
    double predict_row(std::span<const double> x) const override {
        const double w = weight_ ? weight_->predict_row(x) : const_weight_;
        return w * d0_->predict_row(x) + (1.0 - w) * d1_->predict_row(x);
    }
    json to_json() const override {
        json j{{"method", "X"},
               {"n_features", n_features_},
               {"d0", d0_->to_json()},
               {"d1", d1_->to_json()}};
        if (weight_)
            j["weight"] = weight_->to_json();
        else
            j["const_weight"] = const_weight_;
        return j;
    }

private:
    PredictorPtr d0_, d1_, weight_;
    double const_weight_;
};

inline CateModelPtr fit_x_learner(const Dataset& data, const NuisanceFit& nuisance,
                                  const TunedLearnerSpec& second_stage_spec,
                                  RngStream& rng) {
    const auto arm0 = data.arm_indices(0);
    const auto arm1 = data.arm_indices(1);
    if (arm0.empty() || arm1.empty()) throw DataError("fit_x_learner: empty treatment arm");

    // Imputed effects: treated contrast their outcome with the control-arm
    // model, controls contrast the treated-arm model with their outcome.
    std::vector<double> d1_target(arm1.size()), d0_target(arm0.size());
    for (std::size_t k = 0; k < arm1.size(); ++k)
        d1_target[k] = data.y[arm1[k]] - nuisance.oof_m0[arm1[k]];
    for (std::size_t k = 0; k < arm0.size(); ++k)
        d0_target[k] = nuisance.oof_m1[arm0[k]] - data.y[arm0[k]];

    const Matrix x1 = data.x.take_rows(arm1);
    const Matrix x0 = data.x.take_rows(arm0);
    RngStream tune_rng = rng.substream(0);
    const LearnerParams params =
        resolve_spec(second_stage_spec, data.x, data.y, Family::Gaussian, tune_rng);
    RngStream r1 = rng.substream(1), r0 = rng.substream(2);
    auto d1 = fit_predictor(second_stage_spec.kind, params, x1, d1_target, {},
                            Family::Gaussian, r1);
    auto d0 = fit_predictor(second_stage_spec.kind, params, x0, d0_target, {},
                            Family::Gaussian, r0);

    // Weight: known randomization probability in RCTs, fitted propensity
    // otherwise.
    PredictorPtr weight = nuisance.pi_hat;
    const double const_w = nuisance.pi_from_known ? nuisance.known_pi_mean : 0.5;
    return std::make_shared<XLearnerModel>(std::move(d0), std::move(d1), std::move(weight),
                                           const_w, data.p());
}

} // namespace hte
