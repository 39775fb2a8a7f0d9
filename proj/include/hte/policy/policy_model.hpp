#pragma once
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hte/cate/cate_model.hpp"
#include "hte/core/dataset.hpp"
#include "hte/nuisance.hpp"
#include "hte/policy/policy_tree.hpp"

namespace hte {

enum class PolicyKind { ThresholdOnCate, LinearOwl, LinearAol, AipwClassify, PolicyTree };

inline std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::ThresholdOnCate: return "threshold_on_cate";
        case PolicyKind::LinearOwl: return "linear_owl";
        case PolicyKind::LinearAol: return "linear_aol";
        case PolicyKind::AipwClassify: return "aipw_classify";
        case PolicyKind::PolicyTree: return "policy_tree";
    }
    return "?";
}

// A treatment rule D(x) = I(g(x) > 0) with its decision score g. The rule is
// invariant to strictly positive rescaling of the score.
struct PolicyModel {
    PolicyKind kind = PolicyKind::ThresholdOnCate;

    double intercept = 0.0;          // linear kinds
    std::vector<double> beta;
    CateModelPtr cate;               // threshold_on_cate
    double delta = 0.0;
    PredictorPtr classifier;         // aipw_classify with a non-linear final
    PolicyTreeModel tree;            // policy_tree

    double score(std::span<const double> x) const {
        switch (kind) {
            case PolicyKind::ThresholdOnCate:
                return cate->predict_row(x) - delta;
            case PolicyKind::LinearOwl:
            case PolicyKind::LinearAol: {
                double g = intercept;
                for (std::size_t j = 0; j < beta.size(); ++j) g += beta[j] * x[j];
                return g;
            }
            case PolicyKind::AipwClassify: {
                if (!beta.empty() || classifier == nullptr) {
                    double g = intercept;
                    for (std::size_t j = 0; j < beta.size(); ++j) g += beta[j] * x[j];
                    return g;
                }
                const double p = std::clamp(classifier->predict_row(x), 1e-12, 1.0 - 1e-12);
                return std::log(p / (1.0 - p));
            }
            case PolicyKind::PolicyTree:
                return tree.decide(x) == 1 ? 1.0 : -1.0;
        }
        return 0.0;
    }

    int decide(std::span<const double> x) const { return score(x) > 0.0 ? 1 : 0; }

    std::vector<int> decide_all(const Matrix& x) const {
        std::vector<int> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = decide(x.row(i));
        return out;
    }

    json to_json() const {
        json j{{"kind", to_string(kind)}};
        switch (kind) {
            case PolicyKind::ThresholdOnCate:
                j["delta"] = delta;
                j["cate"] = cate->to_json();
                break;
            case PolicyKind::LinearOwl:
            case PolicyKind::LinearAol:
                j["intercept"] = intercept;
                j["beta"] = beta;
                break;
            case PolicyKind::AipwClassify:
                if (classifier && beta.empty()) {
                    j["classifier"] = classifier->to_json();
                } else {
                    j["intercept"] = intercept;
                    j["beta"] = beta;
                }
                break;
            case PolicyKind::PolicyTree:
                j["tree"] = tree.to_json();
                break;
        }
        return j;
    }
};

inline PolicyModel rule_from_cate(CateModelPtr model, double delta) {
    PolicyModel pm;
    pm.kind = PolicyKind::ThresholdOnCate;
    pm.cate = std::move(model);
    pm.delta = delta;
    return pm;
}

enum class ValueEstimator { Ipw, Aipw };

struct ValueEstimate {
    ValueEstimator estimator = ValueEstimator::Ipw;
    double value = 0.0;
    double se = 0.0;             // conditional on the rule
    std::size_t n_consistent = 0;
};

namespace detail {

inline ValueEstimate summarize_value(ValueEstimator kind, std::span<const double> summand,
                                     std::size_t n_consistent) {
    ValueEstimate est;
    est.estimator = kind;
    est.n_consistent = n_consistent;
    const double n = static_cast<double>(summand.size());
    double mean = 0.0;
    for (double s : summand) mean += s;
    mean /= n;
    double ss = 0.0;
    for (double s : summand) ss += (s - mean) * (s - mean);
    est.value = mean;
    est.se = summand.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return est;
}

} // namespace detail

// IPW value: mean over all n of I(T=D) Y / pi(D, X). Requires at least one
// rule-consistent unit.
inline ValueEstimate value_ipw(const Dataset& data, std::span<const double> pi,
                               const PolicyModel& policy) {
    if (pi.size() != data.n()) throw DataError("value_ipw: propensity length mismatch");
    std::vector<double> summand(data.n(), 0.0);
    std::size_t consistent = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        if (!(pi[i] > 0.0 && pi[i] < 1.0))
            throw DataError("value_ipw: propensity outside (0,1)");
        const int d = policy.decide(data.x.row(i));
        if (data.t[i] != d) continue;
        ++consistent;
        const double p_d = d == 1 ? pi[i] : 1.0 - pi[i];
        summand[i] = data.y[i] / p_d;
    }
    if (consistent == 0)
        throw DataError("value_ipw: no rule-consistent units, value undefined");
    return detail::summarize_value(ValueEstimator::Ipw, summand, consistent);
}

// Doubly robust AIPW value; uses information from every unit.
inline ValueEstimate value_aipw(const Dataset& data, const NuisanceFit& fit,
                                const PolicyModel& policy) {
    std::vector<double> summand(data.n());
    std::size_t consistent = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        const int d = policy.decide(data.x.row(i));
        const double pi_d = d == 1 ? fit.oof_pi[i] : 1.0 - fit.oof_pi[i];
        const double m_d = d == 1 ? fit.oof_m1[i] : fit.oof_m0[i];
        const double c = data.t[i] == d ? 1.0 : 0.0;
        consistent += static_cast<std::size_t>(c);
        summand[i] = c * data.y[i] / pi_d - (c - pi_d) / pi_d * m_d;
    }
    return detail::summarize_value(ValueEstimator::Aipw, summand, consistent);
}

// Contrast variant subtracting the inconsistent-arm expectation; reported as
// an optional metric, no equivalence with the plain value claimed.
inline double value_tilde_ipw(const Dataset& data, std::span<const double> pi,
                              const PolicyModel& policy) {
    if (pi.size() != data.n()) throw DataError("value_tilde_ipw: propensity length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        const int d = policy.decide(data.x.row(i));
        const double p_obs = data.t[i] == 1 ? pi[i] : 1.0 - pi[i];
        const double sign = data.t[i] == d ? 1.0 : -1.0;
        total += sign * data.y[i] / p_obs;
    }
    return total / static_cast<double>(data.n());
}

// Subgroup utility: true effect in the selected subgroup per subject of the
// whole population.
inline double eta_utility(double true_ate_in_selected, double selected_fraction) {
    if (selected_fraction < 0.0 || selected_fraction > 1.0)
        throw ConfigError("eta_utility: fraction must lie in [0,1]");
    if (selected_fraction == 0.0) return 0.0;
    return true_ate_in_selected * selected_fraction;
}

} // namespace hte
