#pragma once
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hte/core/dataset.hpp"
#include "hte/core/folds.hpp"
#include "hte/inference/linear_model.hpp"
#include "hte/learn/tune.hpp"
#include "hte/nuisance.hpp"

namespace hte {

struct HeterogeneityTestResult {
    std::string kind;                       // "blp" | "gate"
    // BLP calibration regression.
    double alpha = 0.0, alpha_se = 0.0;
    double beta = 0.0, beta_se = 0.0;
    double p_beta = 1.0;                    // one-sided, beta > 0
    bool heterogeneity_estimable = true;
    // Sorted-group GATEs, ordered by the CATE-proxy quantile.
    std::vector<double> group_effects, group_ses;
    double homogeneity_stat = 0.0;
    double p_homogeneity = 1.0;
    int n_groups = 0;
    int monotonicity_inversions = 0;
    int n_splits = 1, splits_used = 1;
    std::string aggregation;
    double p_adjusted = 1.0;                // doubled-alpha rule applied to the median p

    nlohmann::json to_json() const {
        nlohmann::json j{{"kind", kind}};
        if (kind == "blp") {
            j["alpha"] = alpha;
            j["alpha_se"] = alpha_se;
            j["beta"] = beta;
            j["beta_se"] = beta_se;
            j["p_beta_one_sided"] = p_beta;
            j["heterogeneity_estimable"] = heterogeneity_estimable;
        } else {
            j["group_effects"] = group_effects;
            j["group_ses"] = group_ses;
            j["homogeneity_stat"] = homogeneity_stat;
            j["p_homogeneity"] = p_homogeneity;
            j["p_adjusted"] = p_adjusted;
            j["n_groups"] = n_groups;
            j["monotonicity_inversions"] = monotonicity_inversions;
            j["n_splits"] = n_splits;
            j["splits_used"] = splits_used;
            j["aggregation"] = aggregation;
        }
        return j;
    }
};

// Best-linear-predictor calibration test. Regresses the centered outcome
// Y - m^{-i} on dbar*(T - pi^{-i}) and the centered interaction
// (T - pi^{-i})(delta^{-i} - dbar); the interaction loading beta captures
// heterogeneity, beta = 1 meaning a perfectly calibrated CATE estimate.
// Sandwich (HC1) standard errors; one-sided p-value for beta > 0.
inline HeterogeneityTestResult blp_test(const Dataset& data, const NuisanceFit& fit,
                                        std::span<const double> cross_fitted_delta) {
    const std::size_t n = data.n();
    if (cross_fitted_delta.size() != n) throw DataError("blp_test: delta length mismatch");

    HeterogeneityTestResult res;
    res.kind = "blp";
    double dbar = 0.0;
    for (double d : cross_fitted_delta) dbar += d;
    dbar /= static_cast<double>(n);

    double dvar = 0.0;
    for (double d : cross_fitted_delta) dvar += (d - dbar) * (d - dbar);
    if (dvar == 0.0) {
        // Constant proxy: the heterogeneity loading has no support.
        res.heterogeneity_estimable = false;
        res.beta = std::numeric_limits<double>::quiet_NaN();
        res.p_beta = 1.0;
        return res;
    }

    const double r1_scale = std::abs(dbar) > 1e-12 ? dbar : 1.0;
    Matrix design(n, 2);
    std::vector<double> yc(n);
    double r2_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double centered_t = data.t[i] - fit.oof_pi[i];
        design(i, 0) = r1_scale * centered_t;
        design(i, 1) = centered_t * (cross_fitted_delta[i] - dbar);
        r2_mean += design(i, 1);
        yc[i] = data.y[i] - fit.oof_m[i];
    }
    // Center the interaction regressor so its sample mean is exactly zero.
    r2_mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) design(i, 1) -= r2_mean;

    const OlsFit ols = ols_robust(design, yc);
    res.alpha = ols.beta[0];
    res.alpha_se = ols.se[0];
    res.beta = ols.beta[1];
    res.beta_se = ols.se[1];
    res.p_beta = ols.se[1] > 0.0 ? normal_sf(res.beta / res.beta_se) : 1.0;
    return res;
}

struct GateOptions {
    int groups = 5;
    int n_splits = 1;
    TunedLearnerSpec propensity_spec = [] {
        TunedLearnerSpec s;
        s.kind = LearnerKind::ElasticNet;
        s.grid[0].lambda = 1e-3;
        return s;
    }();
};

namespace detail {

struct GateSplitResult {
    std::vector<double> effects, ses;
    double stat = 0.0;
    double p = 1.0;
};

inline std::optional<GateSplitResult> gate_one_split(const Dataset& data,
                                                     const TunedLearnerSpec& learner_spec,
                                                     const GateOptions& opt,
                                                     RngStream& rng) {
    const std::size_t n = data.n();
    // Stratified half split: A trains the proxy, B carries the inference.
    std::vector<std::size_t> arm0 = data.arm_indices(0);
    std::vector<std::size_t> arm1 = data.arm_indices(1);
    shuffle_indices(arm0, rng);
    shuffle_indices(arm1, rng);
    std::vector<std::size_t> set_a, set_b;
    for (std::size_t k = 0; k < arm0.size(); ++k)
        (k % 2 == 0 ? set_a : set_b).push_back(arm0[k]);
    for (std::size_t k = 0; k < arm1.size(); ++k)
        (k % 2 == 0 ? set_a : set_b).push_back(arm1[k]);

    const Dataset train = data.take_rows(set_a);
    const auto a0 = train.arm_indices(0);
    const auto a1 = train.arm_indices(1);
    if (a0.size() < 2 || a1.size() < 2) return std::nullopt;

    RngStream tune_rng = rng.substream(0);
    const LearnerParams params =
        resolve_spec(learner_spec, train.x, train.y, Family::Gaussian, tune_rng);
    RngStream r0 = rng.substream(1), r1 = rng.substream(2), rp = rng.substream(3);
    const auto m0 = fit_predictor(learner_spec.kind, params, train.x.take_rows(a0),
                                  take(train.y, a0), {}, Family::Gaussian, r0);
    const auto m1 = fit_predictor(learner_spec.kind, params, train.x.take_rows(a1),
                                  take(train.y, a1), {}, Family::Gaussian, r1);
    PredictorPtr pi_model;
    if (!data.has_known_propensity()) {
        std::vector<double> t_real(train.n());
        for (std::size_t i = 0; i < train.n(); ++i) t_real[i] = train.t[i];
        const LearnerParams pi_params = opt.propensity_spec.grid[0];
        pi_model = fit_predictor(opt.propensity_spec.kind, pi_params, train.x, t_real, {},
                                 Family::Binomial, rp);
    }

    // Quantile groups of the proxy CATE on B, sizes differing by at most 1.
    const std::size_t nb = set_b.size();
    const int K = opt.groups;
    if (nb < static_cast<std::size_t>(2 * K)) return std::nullopt;
    std::vector<double> proxy(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        const auto row = data.x.row(set_b[k]);
        proxy[k] = m1->predict_row(row) - m0->predict_row(row);
    }
    std::vector<std::size_t> rank(nb);
    std::iota(rank.begin(), rank.end(), 0);
    std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        if (proxy[a] != proxy[b]) return proxy[a] < proxy[b];
        return a < b;
    });
    std::vector<int> group(nb);
    for (std::size_t pos = 0; pos < nb; ++pos)
        group[rank[pos]] = static_cast<int>(pos * static_cast<std::size_t>(K) / nb);

    std::vector<std::vector<int>> arms_seen(K, std::vector<int>(2, 0));
    Matrix design(nb, 2 + static_cast<std::size_t>(K));
    std::vector<double> yb(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        const std::size_t i = set_b[k];
        const auto row = data.x.row(i);
        const double pi = data.has_known_propensity()
                              ? data.pi_known[i]
                              : std::clamp(pi_model->predict_row(row), 0.01, 0.99);
        design(k, 0) = 1.0;
        design(k, 1) = m0->predict_row(row);
        design(k, 2 + group[k]) = data.t[i] - pi;
        yb[k] = data.y[i];
        ++arms_seen[group[k]][data.t[i]];
    }
    for (int g = 0; g < K; ++g)
        if (arms_seen[g][0] == 0 || arms_seen[g][1] == 0) return std::nullopt;

    const OlsFit ols = ols_robust(design, yb);
    GateSplitResult out;
    out.effects.assign(ols.beta.begin() + 2, ols.beta.end());
    out.ses.assign(ols.se.begin() + 2, ols.se.end());

    // Wald chi-squared on the K-1 adjacent contrasts.
    const int kc = K - 1;
    Matrix v(kc, kc);
    std::vector<double> d(kc);
    for (int r = 0; r < kc; ++r) {
        d[r] = out.effects[r + 1] - out.effects[r];
        for (int c = 0; c < kc; ++c) {
            v(r, c) = ols.cov(2 + r + 1, 2 + c + 1) - ols.cov(2 + r + 1, 2 + c) -
                      ols.cov(2 + r, 2 + c + 1) + ols.cov(2 + r, 2 + c);
        }
    }
    const Matrix vinv = invert_spd(v);
    double stat = 0.0;
    for (int r = 0; r < kc; ++r)
        for (int c = 0; c < kc; ++c) stat += d[r] * vinv(r, c) * d[c];
    out.stat = stat;
    out.p = chi2_sf(stat, kc);
    return out;
}

} // namespace detail

// Sorted-group GATE homogeneity test with repeated sample splitting. Point
// estimates and p-values aggregate as medians across splits; the doubled-
// alpha rule compensates for the split randomness (reject at level alpha
// when p_adjusted = 2 * median p falls below alpha).
inline HeterogeneityTestResult gate_test(const Dataset& data,
                                         const TunedLearnerSpec& learner_spec,
                                         const GateOptions& opt, RngStream& rng) {
    if (opt.groups < 2) throw ConfigError("gate_test: need at least 2 groups");
    if (opt.n_splits < 1) throw ConfigError("gate_test: need at least 1 split");

    std::vector<detail::GateSplitResult> splits;
    for (int s = 0; s < opt.n_splits; ++s) {
        RngStream split_rng = rng.substream(0x9a7e0000u + static_cast<std::uint64_t>(s));
        auto res = detail::gate_one_split(data, learner_spec, opt, split_rng);
        if (res) splits.push_back(std::move(*res));
    }
    if (splits.size() * 2 < static_cast<std::size_t>(opt.n_splits))
        throw DataError("gate_test: more than half the splits were discarded "
                        "(groups missing a treatment arm)");

    HeterogeneityTestResult out;
    out.kind = "gate";
    out.n_groups = opt.groups;
    out.n_splits = opt.n_splits;
    out.splits_used = static_cast<int>(splits.size());
    out.group_effects.resize(opt.groups);
    out.group_ses.resize(opt.groups);
    for (int g = 0; g < opt.groups; ++g) {
        std::vector<double> eff, ses;
        for (const auto& s : splits) {
            eff.push_back(s.effects[g]);
            ses.push_back(s.ses[g]);
        }
        out.group_effects[g] = median_of(eff);
        out.group_ses[g] = median_of(ses);
    }
    std::vector<double> stats, ps;
    for (const auto& s : splits) {
        stats.push_back(s.stat);
        ps.push_back(s.p);
    }
    out.homogeneity_stat = median_of(stats);
    out.p_homogeneity = median_of(ps);
    out.p_adjusted = splits.size() > 1 ? std::min(1.0, 2.0 * out.p_homogeneity)
                                       : out.p_homogeneity;
    out.aggregation = splits.size() > 1 ? "median-of-splits, alpha doubled" : "single split";
    for (int g = 0; g + 1 < opt.groups; ++g)
        if (out.group_effects[g + 1] < out.group_effects[g]) ++out.monotonicity_inversions;
    return out;
}

// Lower bound on the ITE standard deviation from the marginal outcome SDs,
// sigma_delta >= |sd(Y|T=1) - sd(Y|T=0)| (the rho = 1 case).
struct ITEVarianceBound {
    double sd_y1 = 0.0, sd_y0 = 0.0;
    double lower_bound = 0.0;
    double rho = 1.0;   // sensitivity correlation, reporting only

    nlohmann::json to_json() const {
        return nlohmann::json{{"sd_y1", sd_y1},
                              {"sd_y0", sd_y0},
                              {"lower_bound", lower_bound},
                              {"rho", rho}};
    }
};

inline ITEVarianceBound ite_sd_bound(const Dataset& data) {
    auto arm_sd = [&](int arm) {
        double sum = 0.0, count = 0.0;
        for (std::size_t i = 0; i < data.n(); ++i)
            if (data.t[i] == arm) {
                sum += data.y[i];
                count += 1.0;
            }
        if (count < 2.0) throw DataError("ite_sd_bound: degenerate arm");
        const double mean = sum / count;
        double ss = 0.0;
        for (std::size_t i = 0; i < data.n(); ++i)
            if (data.t[i] == arm) ss += (data.y[i] - mean) * (data.y[i] - mean);
        return std::sqrt(ss / (count - 1.0));
    };
    ITEVarianceBound b;
    b.sd_y1 = arm_sd(1);
    b.sd_y0 = arm_sd(0);
    b.lower_bound = std::abs(b.sd_y1 - b.sd_y0);
    return b;
}

} // namespace hte
