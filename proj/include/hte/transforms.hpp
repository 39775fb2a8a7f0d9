#pragma once
#include <cmath>
#include <span>
#include <vector>

#include "hte/core/dataset.hpp"
#include "hte/core/error.hpp"
#include "hte/nuisance.hpp"

namespace hte {

enum class TransformKind { ModifiedOutcome, Mcm, Robinson, Aipw, Owl, Aol };

// Pseudo-outcomes, weights and classification labels produced by the outcome
// and loss transformations. The kind tags which downstream consumers are
// legal (e.g. OWL/AOL feed weighted classification, Robinson feeds weighted
// regression).
struct TransformedSample {
    std::vector<double> pseudo_outcome;
    std::vector<double> weights;
    std::vector<int> labels;   // empty, or entries in {-1,+1}
    TransformKind kind;
};

namespace detail {

inline void check_propensity(std::span<const double> pi, std::size_t n) {
    if (pi.size() != n) throw DataError("transform: propensity length mismatch");
    for (double p : pi)
        if (!(p > 0.0 && p < 1.0))
            throw DataError("transform: propensity outside (0,1)");
}

// Denominator of the {-1,+1}-coded IPW weight: A*pi + (1-A)/2, which equals
// pi for treated and 1-pi for controls.
inline double arm_prob(int a, double pi) {
    return a == 1 ? pi : 1.0 - pi;
}

} // namespace detail

// Y* = Y (T - pi) / (pi (1 - pi)); E[Y* | X] equals the CATE.
inline TransformedSample modified_outcome(const Dataset& data, std::span<const double> pi) {
    detail::check_propensity(pi, data.n());
    TransformedSample out;
    out.kind = TransformKind::ModifiedOutcome;
    out.pseudo_outcome.resize(data.n());
    out.weights.assign(data.n(), 1.0);
    for (std::size_t i = 0; i < data.n(); ++i)
        out.pseudo_outcome[i] =
            data.y[i] * (data.t[i] - pi[i]) / (pi[i] * (1.0 - pi[i]));
    return out;
}

// Modified-loss weights W = 1 / (A pi + (1-A)/2) with labels A; the consumer
// regresses 2A(Y - b) under these weights.
inline TransformedSample mcm_weights(const Dataset& data, std::span<const double> pi) {
    detail::check_propensity(pi, data.n());
    TransformedSample out;
    out.kind = TransformKind::Mcm;
    out.pseudo_outcome = data.y;
    out.weights.resize(data.n());
    out.labels.resize(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        const int a = data.a(i);
        out.weights[i] = 1.0 / detail::arm_prob(a, pi[i]);
        out.labels[i] = a;
    }
    return out;
}

// Variance-reducing augmentation term b(x): the estimated main effect h(x).
inline double augmentation_term(const NuisanceFit& fit, std::span<const double> x_row) {
    return fit.h_at(x_row);
}

// Robinson residualization: pseudo-outcome (Y - m)/(T - pi) with weights
// (T - pi)^2, both nuisances out-of-fold.
inline TransformedSample robinson_transform(const Dataset& data, const NuisanceFit& fit) {
    TransformedSample out;
    out.kind = TransformKind::Robinson;
    out.pseudo_outcome.resize(data.n());
    out.weights.resize(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        const double denom = data.t[i] - fit.oof_pi[i];
        if (denom == 0.0)
            throw NumericError("robinson_transform: zero T - pi denominator after clipping");
        out.pseudo_outcome[i] = (data.y[i] - fit.oof_m[i]) / denom;
        out.weights[i] = denom * denom;
    }
    return out;
}

// Doubly robust AIPW scores, all nuisances out-of-fold.
inline TransformedSample aipw_scores(const Dataset& data, const NuisanceFit& fit) {
    TransformedSample out;
    out.kind = TransformKind::Aipw;
    out.pseudo_outcome.resize(data.n());
    out.weights.assign(data.n(), 1.0);
    for (std::size_t i = 0; i < data.n(); ++i) {
        const double pi = fit.oof_pi[i];
        const double resid = data.y[i] - fit.oof_m_obs(i, data.t[i]);
        out.pseudo_outcome[i] = fit.oof_m1[i] - fit.oof_m0[i] +
                                (data.t[i] - pi) / (pi * (1.0 - pi)) * resid;
    }
    return out;
}

enum class OwlShift { Auto, None };

// Outcome-weighted learning weights W = Y / (A pi + (1-A)/2). Outcomes must
// be nonnegative; Auto shifts Y by -min(Y)+eps when needed. The resulting
// rule depends on constant shifts of Y, the defect AOL removes.
inline TransformedSample owl_weights(const Dataset& data, std::span<const double> pi,
                                     OwlShift shift = OwlShift::Auto) {
    detail::check_propensity(pi, data.n());
    TransformedSample out;
    out.kind = TransformKind::Owl;
    out.pseudo_outcome = data.y;
    if (shift == OwlShift::Auto) {
        double y_min = data.y[0];
        for (double v : data.y) y_min = std::min(y_min, v);
        if (y_min <= 0.0) {
            const double offset = -y_min + 1e-8;
            for (double& v : out.pseudo_outcome) v += offset;
        }
    }
    out.weights.resize(data.n());
    out.labels.resize(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        const int a = data.a(i);
        out.weights[i] = out.pseudo_outcome[i] / detail::arm_prob(a, pi[i]);
        out.labels[i] = a;
        if (out.weights[i] < 0.0)
            throw DataError("owl_weights: negative weight at row " + std::to_string(i) +
                            "; outcomes must be nonnegative after shifting");
    }
    return out;
}

// Augmented OWL: residualized outcomes make the weights shift-invariant.
// Labels flip where the residual is negative.
inline TransformedSample aol_weights(const Dataset& data, const NuisanceFit& fit) {
    TransformedSample out;
    out.kind = TransformKind::Aol;
    out.pseudo_outcome.resize(data.n());
    out.weights.resize(data.n());
    out.labels.resize(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        const int a = data.a(i);
        const double resid = data.y[i] - fit.oof_m[i];
        out.pseudo_outcome[i] = resid;
        out.weights[i] = std::abs(resid) / detail::arm_prob(a, fit.oof_pi[i]);
        out.labels[i] = resid >= 0.0 ? a : -a;
    }
    return out;
}

} // namespace hte
