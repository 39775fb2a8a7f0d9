#pragma once
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hte/core/dataset.hpp"
#include "hte/core/error.hpp"
#include "hte/core/folds.hpp"
#include "hte/core/parallel.hpp"
#include "hte/learn/tune.hpp"

namespace hte {

struct NuisanceOptions {
    int k = 5;                 // cross-fitting folds
    double clip_eps = 0.01;    // propensity clipped to [eps, 1-eps]
    bool stratify = true;      // folds stratified by treatment arm
    int threads = 1;
};

// Cross-fitted nuisance functions: arm-wise outcome means m0/m1, the pooled
// mean m (fitted without the treatment column), and the propensity pi. The
// out-of-fold prediction for row i comes from models fitted without fold(i);
// whole-data refits serve prediction on new covariate vectors.
struct NuisanceFit {
    PredictorPtr m0_hat, m1_hat, m_hat, pi_hat;   // pi_hat null when pi was known
    std::vector<double> oof_m0, oof_m1, oof_m, oof_pi;
    FoldAssignment folds;
    double clip_eps = 0.01;
    bool pi_from_known = false;
    double known_pi_mean = 0.0;

    // Main covariate effect h(x) = (m0(x) + m1(x)) / 2.
    double h_at(std::span<const double> x) const {
        return 0.5 * (m0_hat->predict_row(x) + m1_hat->predict_row(x));
    }
    double oof_h(std::size_t i) const { return 0.5 * (oof_m0[i] + oof_m1[i]); }

    // Out-of-fold m(t, x_i) for the arm actually assigned.
    double oof_m_obs(std::size_t i, int t) const { return t == 1 ? oof_m1[i] : oof_m0[i]; }

    // Propensity at a new covariate vector.
    double pi_at(std::span<const double> x) const {
        if (pi_hat) return pi_hat->predict_row(x);
        return known_pi_mean;
    }
};

inline NuisanceFit fit_nuisance(const Dataset& data, const TunedLearnerSpec& outcome_spec,
                                const TunedLearnerSpec& propensity_spec,
                                const NuisanceOptions& opt, RngStream& rng) {
    const std::size_t n = data.n();
    NuisanceFit fit;
    fit.clip_eps = opt.clip_eps;
    RngStream fold_rng = rng.substream(1);
    fit.folds = opt.stratify ? make_folds(n, opt.k, data.t, fold_rng)
                             : make_folds(n, opt.k, fold_rng);

    // Every fold's training complement must contain both arms, checked
    // before any model fitting so the failure mode is a clear diagnostic.
    for (int f = 0; f < fit.folds.k; ++f) {
        std::size_t n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (fit.folds.fold_of[i] == f) continue;
            (data.t[i] == 0 ? n0 : n1) += 1;
        }
        if (n0 == 0 || n1 == 0)
            throw DataError("fit_nuisance: training folds for fold " + std::to_string(f) +
                            " lack a treatment arm; use stratified folds");
    }

    RngStream tune_rng = rng.substream(2);
    const LearnerParams outcome_params =
        resolve_spec(outcome_spec, data.x, data.y, Family::Gaussian, tune_rng);
    LearnerParams propensity_params;
    std::vector<double> t_real(n);
    for (std::size_t i = 0; i < n; ++i) t_real[i] = static_cast<double>(data.t[i]);
    fit.pi_from_known = data.has_known_propensity();
    if (!fit.pi_from_known) {
        RngStream ptune_rng = rng.substream(3);
        propensity_params =
            resolve_spec(propensity_spec, data.x, t_real, Family::Binomial, ptune_rng);
    }

    fit.oof_m0.assign(n, 0.0);
    fit.oof_m1.assign(n, 0.0);
    fit.oof_m.assign(n, 0.0);
    fit.oof_pi.assign(n, 0.0);

    parallel_for(static_cast<std::size_t>(fit.folds.k), opt.threads, [&](std::size_t f) {
        const int fold = static_cast<int>(f);
        const auto train_idx = fit.folds.complement_indices(fold);
        const auto hold_idx = fit.folds.fold_indices(fold);
        const Matrix x_train = data.x.take_rows(train_idx);
        const std::vector<double> y_train = take(data.y, train_idx);
        const std::vector<int> t_train = take(data.t, train_idx);

        std::vector<std::size_t> arm0, arm1;
        for (std::size_t k = 0; k < train_idx.size(); ++k)
            (t_train[k] == 0 ? arm0 : arm1).push_back(k);
        if (arm0.empty() || arm1.empty())
            throw DataError("fit_nuisance: training folds for fold " + std::to_string(fold) +
                            " lack a treatment arm; use stratified folds");

        RngStream fold_fit = rng.substream(16 + 8 * f);
        RngStream r0 = fold_fit.substream(0), r1 = fold_fit.substream(1),
                  rm = fold_fit.substream(2), rp = fold_fit.substream(3);
        const auto m0 = fit_predictor(outcome_spec.kind, outcome_params,
                                      x_train.take_rows(arm0), take(y_train, arm0), {},
                                      Family::Gaussian, r0);
        const auto m1 = fit_predictor(outcome_spec.kind, outcome_params,
                                      x_train.take_rows(arm1), take(y_train, arm1), {},
                                      Family::Gaussian, r1);
        const auto m = fit_predictor(outcome_spec.kind, outcome_params, x_train, y_train, {},
                                     Family::Gaussian, rm);
        PredictorPtr pi;
        if (!fit.pi_from_known) {
            std::vector<double> t_tr(train_idx.size());
            for (std::size_t k = 0; k < train_idx.size(); ++k)
                t_tr[k] = static_cast<double>(t_train[k]);
            pi = fit_predictor(propensity_spec.kind, propensity_params, x_train, t_tr, {},
                               Family::Binomial, rp);
        }
        for (std::size_t i : hold_idx) {
            const auto row = data.x.row(i);
            fit.oof_m0[i] = m0->predict_row(row);
            fit.oof_m1[i] = m1->predict_row(row);
            fit.oof_m[i] = m->predict_row(row);
            fit.oof_pi[i] = fit.pi_from_known
                                ? data.pi_known[i]
                                : std::clamp(pi->predict_row(row), opt.clip_eps,
                                             1.0 - opt.clip_eps);
        }
    });

    // Whole-data refits for prediction on new covariates.
    {
        const auto arm0 = data.arm_indices(0);
        const auto arm1 = data.arm_indices(1);
        RngStream full_fit = rng.substream(4);
        RngStream r0 = full_fit.substream(0), r1 = full_fit.substream(1),
                  rm = full_fit.substream(2), rp = full_fit.substream(3);
        fit.m0_hat = fit_predictor(outcome_spec.kind, outcome_params, data.x.take_rows(arm0),
                                   take(data.y, arm0), {}, Family::Gaussian, r0);
        fit.m1_hat = fit_predictor(outcome_spec.kind, outcome_params, data.x.take_rows(arm1),
                                   take(data.y, arm1), {}, Family::Gaussian, r1);
        fit.m_hat = fit_predictor(outcome_spec.kind, outcome_params, data.x, data.y, {},
                                  Family::Gaussian, rm);
        if (fit.pi_from_known) {
            double s = 0.0;
            for (double v : data.pi_known) s += v;
            fit.known_pi_mean = s / static_cast<double>(n);
        } else {
            const auto raw = fit_predictor(propensity_spec.kind, propensity_params, data.x,
                                           t_real, {}, Family::Binomial, rp);
            fit.pi_hat = std::make_shared<ClippedPredictor>(raw, opt.clip_eps,
                                                            1.0 - opt.clip_eps);
        }
    }
    return fit;
}

// Oracle nuisances built from known functions; used to validate transforms
// and estimators against the simulator's ground truth.
inline NuisanceFit make_oracle_nuisance(
    const Dataset& data, std::function<double(std::span<const double>)> m0,
    std::function<double(std::span<const double>)> m1,
    std::function<double(std::span<const double>)> pi, double clip_eps = 0.01) {
    NuisanceFit fit;
    fit.clip_eps = clip_eps;
    const std::size_t n = data.n();
    fit.oof_m0.resize(n);
    fit.oof_m1.resize(n);
    fit.oof_m.resize(n);
    fit.oof_pi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = data.x.row(i);
        const double p = std::clamp(pi(row), clip_eps, 1.0 - clip_eps);
        fit.oof_m0[i] = m0(row);
        fit.oof_m1[i] = m1(row);
        fit.oof_m[i] = p * fit.oof_m1[i] + (1.0 - p) * fit.oof_m0[i];
        fit.oof_pi[i] = p;
    }
    fit.m0_hat = std::make_shared<FunctionPredictor>(m0);
    fit.m1_hat = std::make_shared<FunctionPredictor>(m1);
    auto pi_clipped = [pi, clip_eps](std::span<const double> x) {
        return std::clamp(pi(x), clip_eps, 1.0 - clip_eps);
    };
    fit.pi_hat = std::make_shared<FunctionPredictor>(pi_clipped);
    auto m_fn = [m0, m1, pi_clipped](std::span<const double> x) {
        const double p = pi_clipped(x);
        return p * m1(x) + (1.0 - p) * m0(x);
    };
    fit.m_hat = std::make_shared<FunctionPredictor>(m_fn);
    return fit;
}

// Propensity overlap diagnostics. Quantiles are reported per arm; the
// poor-overlap flag fires when more than 10% of the sample sits outside
// [0.05, 0.95].
struct OverlapReport {
    std::vector<double> quantile_probs{0.05, 0.25, 0.50, 0.75, 0.95};
    std::vector<double> quantiles_treated, quantiles_control;
    double fraction_outside = 0.0;
    double fraction_outside_treated = 0.0, fraction_outside_control = 0.0;
    std::vector<double> hist_breaks;              // partition of (0,1)
    std::vector<int> hist_treated, hist_control;
    bool poor_overlap = false;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = prob * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace detail

inline OverlapReport overlap_report(const Dataset& data, const NuisanceFit& fit,
                                    int bins = 20) {
    OverlapReport rep;
    std::vector<double> pi1, pi0;
    std::size_t out_all = 0, out1 = 0, out0 = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        const double p = fit.oof_pi[i];
        const bool outside = p < 0.05 || p > 0.95;
        out_all += outside;
        if (data.t[i] == 1) {
            pi1.push_back(p);
            out1 += outside;
        } else {
            pi0.push_back(p);
            out0 += outside;
        }
    }
    std::sort(pi1.begin(), pi1.end());
    std::sort(pi0.begin(), pi0.end());
    for (double prob : rep.quantile_probs) {
        rep.quantiles_treated.push_back(detail::quantile_sorted(pi1, prob));
        rep.quantiles_control.push_back(detail::quantile_sorted(pi0, prob));
    }
    rep.fraction_outside = static_cast<double>(out_all) / static_cast<double>(data.n());
    rep.fraction_outside_treated =
        pi1.empty() ? 0.0 : static_cast<double>(out1) / static_cast<double>(pi1.size());
    rep.fraction_outside_control =
        pi0.empty() ? 0.0 : static_cast<double>(out0) / static_cast<double>(pi0.size());
    rep.hist_breaks.resize(bins + 1);
    rep.hist_treated.assign(bins, 0);
    rep.hist_control.assign(bins, 0);
    for (int b = 0; b <= bins; ++b)
        rep.hist_breaks[b] = static_cast<double>(b) / static_cast<double>(bins);
    auto bin_of = [&](double p) {
        int b = static_cast<int>(p * bins);
        return std::clamp(b, 0, bins - 1);
    };
    for (double p : pi1) ++rep.hist_treated[bin_of(p)];
    for (double p : pi0) ++rep.hist_control[bin_of(p)];
    rep.poor_overlap = rep.fraction_outside > 0.10;
    return rep;
}

} // namespace hte
