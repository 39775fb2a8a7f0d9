#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hte/core/error.hpp"
#include "hte/core/matrix.hpp"

namespace hte {

enum class GlmFamily { Gaussian, Binomial };

struct ElasticNetOptions {
    double lambda = 0.0;
    double alpha_mix = 1.0;    // 1 = pure L1, 0 = pure ridge
    GlmFamily family = GlmFamily::Gaussian;
    double tol = 1e-8;
    int max_iter = 100000;     // coordinate-descent sweeps
    bool fit_intercept = true;
    bool standardize = true;   // center/scale columns internally
};

// Penalized linear model fitted by cyclic coordinate descent with
// soft-thresholding; binomial family wraps the gaussian solver in an IRLS
// loop. Coefficients are reported on the original covariate scale. The
// objective is
//   (1/2W) sum_i w_i (y_i - b0 - x_i.b)^2 + lambda (alpha |b|_1 + (1-alpha)/2 |b|_2^2)
// on the standardized scale, W = sum of weights; the intercept is never
// penalized.
struct ElasticNetModel {
    double intercept = 0.0;
    std::vector<double> beta;          // original covariate scale
    double lambda = 0.0;
    double alpha_mix = 1.0;
    GlmFamily family = GlmFamily::Gaussian;
    std::vector<double> means, scales; // standardization used during fitting
    int sweeps_used = 0;

    double raw_score(std::span<const double> x) const {
        double eta = intercept;
        for (std::size_t j = 0; j < beta.size(); ++j) eta += beta[j] * x[j];
        return eta;
    }

    double predict_row(std::span<const double> x) const {
        const double eta = raw_score(x);
        return family == GlmFamily::Binomial ? 1.0 / (1.0 + std::exp(-eta)) : eta;
    }

    std::vector<double> predict(const Matrix& x) const {
        std::vector<double> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
        return out;
    }
};

namespace detail {

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

struct EnetWork {
    std::vector<double> beta;   // standardized scale
    double intercept = 0.0;
    int sweeps = 0;
};

// Weighted gaussian coordinate descent on pre-transformed columns. Columns
// are used as-is; `col_norm[j] = (1/W) sum_i w_i x_ij^2` must be supplied.
inline void cd_gaussian(const Matrix& x, std::span<const double> y,
                        std::span<const double> w, std::span<const double> col_norm,
                        const ElasticNetOptions& opt, bool with_intercept,
                        EnetWork& work) {
    const std::size_t n = x.rows(), p = x.cols();
    double w_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) w_total += w[i];
    if (w_total <= 0.0) throw DataError("fit_elastic_net: total weight must be positive");

    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) {
        double eta = work.intercept;
        const auto row = x.row(i);
        for (std::size_t j = 0; j < p; ++j) eta += work.beta[j] * row[j];
        resid[i] = y[i] - eta;
    }

    const double l1 = opt.lambda * opt.alpha_mix;
    const double l2 = opt.lambda * (1.0 - opt.alpha_mix);
    const double change_tol = opt.tol * 0.1;

    // KKT stationarity: active coordinates must zero the subgradient,
    // inactive ones must have gradients inside the l1 ball.
    auto kkt_violation = [&]() {
        double worst = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (col_norm[j] <= 0.0) continue;
            double g = 0.0;
            for (std::size_t i = 0; i < n; ++i) g += w[i] * x(i, j) * resid[i];
            g = -g / w_total + l2 * work.beta[j];
            if (work.beta[j] != 0.0)
                worst = std::max(worst, std::abs(g + l1 * (work.beta[j] > 0 ? 1.0 : -1.0)));
            else
                worst = std::max(worst, std::max(0.0, std::abs(g) - l1));
        }
        return worst;
    };

    for (int sweep = 1; sweep <= opt.max_iter; ++sweep) {
        double max_change = 0.0;
        if (with_intercept) {
            double rbar = 0.0;
            for (std::size_t i = 0; i < n; ++i) rbar += w[i] * resid[i];
            rbar /= w_total;
            if (rbar != 0.0) {
                work.intercept += rbar;
                for (std::size_t i = 0; i < n; ++i) resid[i] -= rbar;
                max_change = std::max(max_change, std::abs(rbar));
            }
        }
        for (std::size_t j = 0; j < p; ++j) {
            if (col_norm[j] <= 0.0) continue;
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += w[i] * x(i, j) * resid[i];
            rho = rho / w_total + col_norm[j] * work.beta[j];
            const double bj = soft_threshold(rho, l1) / (col_norm[j] + l2);
            const double delta = bj - work.beta[j];
            if (delta != 0.0) {
                work.beta[j] = bj;
                for (std::size_t i = 0; i < n; ++i) resid[i] -= delta * x(i, j);
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        ++work.sweeps;
        if (max_change < change_tol && kkt_violation() <= opt.tol) return;
    }
    throw NumericError("fit_elastic_net: no convergence after " +
                       std::to_string(opt.max_iter) + " sweeps, max KKT violation " +
                       std::to_string(kkt_violation()));
}

} // namespace detail

inline ElasticNetModel fit_elastic_net(const Matrix& x, std::span<const double> y,
                                       std::span<const double> weights,
                                       const ElasticNetOptions& opt) {
    const std::size_t n = x.rows(), p = x.cols();
    if (n != y.size()) throw DataError("fit_elastic_net: x/y length mismatch");
    if (opt.lambda < 0.0) throw ConfigError("fit_elastic_net: lambda must be >= 0");
    if (opt.alpha_mix < 0.0 || opt.alpha_mix > 1.0)
        throw ConfigError("fit_elastic_net: alpha_mix must lie in [0,1]");
    std::vector<double> w;
    if (weights.empty())
        w.assign(n, 1.0);
    else {
        if (weights.size() != n) throw DataError("fit_elastic_net: weight length mismatch");
        w.assign(weights.begin(), weights.end());
    }
    if (opt.family == GlmFamily::Binomial)
        for (std::size_t i = 0; i < n; ++i)
            if (y[i] != 0.0 && y[i] != 1.0)
                throw DataError("fit_elastic_net: binomial family requires y in {0,1}");

    double w_total = 0.0;
    for (double wi : w) w_total += wi;
    if (w_total <= 0.0) throw DataError("fit_elastic_net: total weight must be positive");

    // Standardization (weighted center/scale). Binary columns included.
    const bool standardize = opt.standardize && opt.fit_intercept;
    std::vector<double> means(p, 0.0), scales(p, 1.0);
    Matrix xs = x;
    if (standardize) {
        for (std::size_t j = 0; j < p; ++j) {
            double mu = 0.0;
            for (std::size_t i = 0; i < n; ++i) mu += w[i] * x(i, j);
            mu /= w_total;
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = x(i, j) - mu;
                ss += w[i] * d * d;
            }
            const double sd = std::sqrt(ss / w_total);
            means[j] = mu;
            scales[j] = sd > 0.0 ? sd : 1.0;
            for (std::size_t i = 0; i < n; ++i) xs(i, j) = (x(i, j) - mu) / scales[j];
        }
    }

    std::vector<double> col_norm(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += w[i] * xs(i, j) * xs(i, j);
        col_norm[j] = ss / w_total;
    }

    detail::EnetWork work;
    work.beta.assign(p, 0.0);

    ElasticNetModel model;
    model.lambda = opt.lambda;
    model.alpha_mix = opt.alpha_mix;
    model.family = opt.family;
    model.means = means;
    model.scales = scales;

    if (opt.family == GlmFamily::Gaussian) {
        detail::cd_gaussian(xs, y, w, col_norm, opt, opt.fit_intercept, work);
    } else {
        // IRLS: quadratic approximation around the current linear predictor.
        // Convergence is declared on coefficient stability or on an objective
        // plateau; the latter terminates quasi-separated fits where the
        // (clipped) likelihood flattens out while coefficients still creep.
        std::vector<double> eta(n, 0.0), z(n), w_irls(n);
        ElasticNetOptions inner = opt;
        inner.max_iter = std::max(1000, opt.max_iter / 50);
        auto penalized_deviance = [&]() {
            double loss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double e = work.intercept;
                const auto row = xs.row(i);
                for (std::size_t j = 0; j < p; ++j) e += work.beta[j] * row[j];
                const double prob = std::clamp(1.0 / (1.0 + std::exp(-e)), 1e-12,
                                               1.0 - 1e-12);
                loss -= w[i] * (y[i] * std::log(prob) + (1.0 - y[i]) * std::log(1.0 - prob));
            }
            loss /= w_total;
            for (std::size_t j = 0; j < p; ++j)
                loss += opt.lambda * (opt.alpha_mix * std::abs(work.beta[j]) +
                                      0.5 * (1.0 - opt.alpha_mix) * work.beta[j] * work.beta[j]);
            return loss;
        };
        double prev_obj = penalized_deviance();
        int outer = 0;
        const int max_outer = 100;
        for (; outer < max_outer; ++outer) {
            for (std::size_t i = 0; i < n; ++i) {
                double e = work.intercept;
                const auto row = xs.row(i);
                for (std::size_t j = 0; j < p; ++j) e += work.beta[j] * row[j];
                eta[i] = e;
                const double prob = std::clamp(1.0 / (1.0 + std::exp(-e)), 1e-8, 1.0 - 1e-8);
                const double var = prob * (1.0 - prob);
                z[i] = e + (y[i] - prob) / var;
                w_irls[i] = w[i] * var;
            }
            std::vector<double> irls_norm(p, 0.0);
            double w_irls_total = 0.0;
            for (std::size_t i = 0; i < n; ++i) w_irls_total += w_irls[i];
            if (w_irls_total <= 0.0)
                throw NumericError("fit_elastic_net: IRLS weights collapsed to zero");
            for (std::size_t j = 0; j < p; ++j) {
                double ss = 0.0;
                for (std::size_t i = 0; i < n; ++i) ss += w_irls[i] * xs(i, j) * xs(i, j);
                irls_norm[j] = ss / w_irls_total;
            }
            const std::vector<double> beta_prev = work.beta;
            const double int_prev = work.intercept;
            detail::cd_gaussian(xs, z, w_irls, irls_norm, inner, opt.fit_intercept, work);
            double change = std::abs(work.intercept - int_prev);
            for (std::size_t j = 0; j < p; ++j)
                change = std::max(change, std::abs(work.beta[j] - beta_prev[j]));
            if (change < std::max(opt.tol, 1e-9)) break;
            const double obj = penalized_deviance();
            if (prev_obj - obj < 1e-12 * (1.0 + std::abs(obj))) break;
            prev_obj = obj;
        }
        if (outer >= max_outer)
            throw NumericError("fit_elastic_net: IRLS failed to converge in " +
                               std::to_string(max_outer) + " iterations");
    }
    model.sweeps_used = work.sweeps;

    // Back to the original covariate scale.
    model.beta.assign(p, 0.0);
    double intercept = work.intercept;
    for (std::size_t j = 0; j < p; ++j) {
        if (standardize) {
            model.beta[j] = work.beta[j] / scales[j];
            intercept -= work.beta[j] * means[j] / scales[j];
        } else {
            model.beta[j] = work.beta[j];
        }
    }
    model.intercept = opt.fit_intercept ? intercept : 0.0;
    return model;
}

inline ElasticNetModel fit_elastic_net(const Matrix& x, std::span<const double> y,
                                       const ElasticNetOptions& opt) {
    return fit_elastic_net(x, y, std::span<const double>(), opt);
}

} // namespace hte
