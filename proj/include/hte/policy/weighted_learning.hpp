#pragma once
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hte/core/dataset.hpp"
#include "hte/learn/tune.hpp"
#include "hte/policy/policy_model.hpp"
#include "hte/transforms.hpp"

namespace hte {

enum class Surrogate { Logistic, SmoothedHinge };

namespace detail {

// L1-penalized linear fit of the weighted surrogate loss
//   (1/W) sum_i w_i phi(label_i * (b0 + x_i.b)) + lambda |b|_1
// for the smoothed-hinge surrogate, by proximal gradient with backtracking.
// The logistic surrogate goes through the elastic-net IRLS machinery instead.
inline void fit_smoothed_hinge(const Matrix& x, std::span<const int> labels,
                               std::span<const double> w, double lambda,
                               double& intercept, std::vector<double>& beta) {
    const std::size_t n = x.rows(), p = x.cols();
    double w_total = 0.0;
    for (double wi : w) w_total += wi;

    auto loss_value = [&](double b0, const std::vector<double>& b) {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double g = b0;
            const auto row = x.row(i);
            for (std::size_t j = 0; j < p; ++j) g += b[j] * row[j];
            const double u = labels[i] * g;
            if (u <= 0.0)
                loss += w[i] * (0.5 - u);
            else if (u < 1.0)
                loss += w[i] * 0.5 * (1.0 - u) * (1.0 - u);
        }
        return loss / w_total;
    };

    intercept = 0.0;
    beta.assign(p, 0.0);
    double step = 1.0;
    double current = loss_value(intercept, beta);
    std::vector<double> grad(p + 1);
    std::vector<double> trial_beta(p);
    for (int iter = 0; iter < 2000; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double g = intercept;
            const auto row = x.row(i);
            for (std::size_t j = 0; j < p; ++j) g += beta[j] * row[j];
            const double u = labels[i] * g;
            double dphi;
            if (u <= 0.0)
                dphi = -1.0;
            else if (u < 1.0)
                dphi = -(1.0 - u);
            else
                continue;
            const double scale = w[i] * dphi * labels[i] / w_total;
            grad[0] += scale;
            for (std::size_t j = 0; j < p; ++j) grad[1 + j] += scale * row[j];
        }

        bool accepted = false;
        for (int bt = 0; bt < 60 && !accepted; ++bt) {
            const double trial_int = intercept - step * grad[0];
            for (std::size_t j = 0; j < p; ++j) {
                const double z = beta[j] - step * grad[1 + j];
                trial_beta[j] = soft_threshold(z, step * lambda);
            }
            const double trial_loss = loss_value(trial_int, trial_beta);
            // Sufficient decrease on the smooth part's quadratic model.
            double quad = trial_loss;
            double dist = (trial_int - intercept) * (trial_int - intercept);
            for (std::size_t j = 0; j < p; ++j)
                dist += (trial_beta[j] - beta[j]) * (trial_beta[j] - beta[j]);
            double linear = (trial_int - intercept) * grad[0];
            for (std::size_t j = 0; j < p; ++j)
                linear += (trial_beta[j] - beta[j]) * grad[1 + j];
            if (quad <= current + linear + dist / (2.0 * step) + 1e-14) {
                double change = std::abs(trial_int - intercept);
                for (std::size_t j = 0; j < p; ++j)
                    change = std::max(change, std::abs(trial_beta[j] - beta[j]));
                intercept = trial_int;
                beta = trial_beta;
                current = trial_loss;
                accepted = true;
                if (change < 1e-9) return;
            } else {
                step *= 0.5;
            }
        }
        if (!accepted) return;
        step *= 1.25;
    }
}

inline PolicyModel fit_weighted_linear_rule(PolicyKind kind, const Matrix& x,
                                            std::span<const int> labels,
                                            std::span<const double> weights,
                                            Surrogate surrogate, double lambda) {
    PolicyModel pm;
    pm.kind = kind;
    if (surrogate == Surrogate::SmoothedHinge) {
        fit_smoothed_hinge(x, labels, weights, lambda, pm.intercept, pm.beta);
        return pm;
    }
    std::vector<double> y01(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y01[i] = labels[i] == 1 ? 1.0 : 0.0;
    ElasticNetOptions opt;
    opt.lambda = lambda;
    opt.alpha_mix = 1.0;
    opt.family = GlmFamily::Binomial;
    const ElasticNetModel net = fit_elastic_net(x, y01, weights, opt);
    pm.intercept = net.intercept;
    pm.beta = net.beta;
    return pm;
}

} // namespace detail

// Outcome-weighted learning: weighted classification of the received arm
// with weights proportional to the (shifted) outcomes.
inline PolicyModel fit_owl(const Dataset& data, std::span<const double> pi,
                           Surrogate surrogate, double lambda,
                           OwlShift shift = OwlShift::Auto) {
    const TransformedSample tw = owl_weights(data, pi, shift);
    return detail::fit_weighted_linear_rule(PolicyKind::LinearOwl, data.x, tw.labels,
                                            tw.weights, surrogate, lambda);
}

// Augmented OWL on residualized outcomes; invariant to constant outcome
// shifts once the mean model absorbs them.
inline PolicyModel fit_aol(const Dataset& data, const NuisanceFit& fit,
                           Surrogate surrogate, double lambda) {
    const TransformedSample tw = aol_weights(data, fit);
    return detail::fit_weighted_linear_rule(PolicyKind::LinearAol, data.x, tw.labels,
                                            tw.weights, surrogate, lambda);
}

// AIPW-score weighted classification: targets Z = I(score > 0) with weights
// |score|. An all-same-sign score vector yields the constant rule.
inline PolicyModel fit_aipw_classifier(const Dataset& data, const NuisanceFit& fit,
                                       const TunedLearnerSpec& final_spec, RngStream& rng) {
    const TransformedSample scores = aipw_scores(data, fit);
    const std::size_t n = data.n();
    std::vector<double> z(n), w(n);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = scores.pseudo_outcome[i] > 0.0 ? 1.0 : 0.0;
        w[i] = std::abs(scores.pseudo_outcome[i]);
        positives += static_cast<std::size_t>(z[i]);
    }

    PolicyModel pm;
    pm.kind = PolicyKind::AipwClassify;
    if (positives == 0 || positives == n) {
        pm.intercept = positives == n ? 1.0 : -1.0;
        pm.beta.assign(data.p(), 0.0);
        return pm;
    }

    RngStream tune_rng = rng.substream(0);
    const LearnerParams params = resolve_spec(final_spec, data.x, z, Family::Binomial,
                                              tune_rng);
    if (final_spec.kind == LearnerKind::ElasticNet) {
        ElasticNetOptions opt;
        opt.lambda = params.lambda;
        opt.alpha_mix = params.alpha_mix;
        opt.tol = params.tol;
        opt.max_iter = params.max_iter;
        opt.family = GlmFamily::Binomial;
        const ElasticNetModel net = fit_elastic_net(data.x, z, w, opt);
        pm.intercept = net.intercept;
        pm.beta = net.beta;
        return pm;
    }
    RngStream fit_rng = rng.substream(1);
    pm.classifier = fit_predictor(final_spec.kind, params, data.x, z, w, Family::Binomial,
                                  fit_rng);
    return pm;
}

} // namespace hte
