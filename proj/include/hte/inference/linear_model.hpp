#pragma once
#include <cmath>
#include <span>
#include <vector>

#include "hte/core/error.hpp"
#include "hte/core/matrix.hpp"

namespace hte {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

namespace detail {

// Regularized incomplete gamma P(a,x) by series expansion; valid for x < a+1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper gamma Q(a,x) by Lentz continued fraction; for x >= a+1.
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

// Upper tail of the chi-squared distribution with df degrees of freedom.
inline double chi2_sf(double x, int df) {
    if (x <= 0.0) return 1.0;
    const double a = 0.5 * df, half_x = 0.5 * x;
    if (half_x < a + 1.0) return 1.0 - detail::gamma_p_series(a, half_x);
    return detail::gamma_q_cf(a, half_x);
}

// Gauss-Jordan inverse with partial pivoting; k is small everywhere we use it.
inline Matrix invert_spd(const Matrix& a) {
    const std::size_t k = a.rows();
    if (a.cols() != k) throw NumericError("invert: matrix not square");
    Matrix work = a;
    Matrix inv(k, k);
    for (std::size_t i = 0; i < k; ++i) inv(i, i) = 1.0;
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
        if (std::abs(work(pivot, col)) < 1e-12)
            throw NumericError("invert: singular design matrix");
        if (pivot != col)
            for (std::size_t j = 0; j < k; ++j) {
                std::swap(work(pivot, j), work(col, j));
                std::swap(inv(pivot, j), inv(col, j));
            }
        const double scale = work(col, col);
        for (std::size_t j = 0; j < k; ++j) {
            work(col, j) /= scale;
            inv(col, j) /= scale;
        }
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col) continue;
            const double f = work(r, col);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) {
                work(r, j) -= f * work(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

struct OlsFit {
    std::vector<double> beta;
    std::vector<double> se;      // heteroskedasticity-robust (HC1)
    Matrix cov;                  // robust coefficient covariance
    std::vector<double> residuals;
    std::size_t n = 0, k = 0;
};

// OLS with HC1 sandwich covariance. The design is taken as-is; add an
// all-ones column for an intercept.
inline OlsFit ols_robust(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows(), k = x.cols();
    if (y.size() != n) throw DataError("ols_robust: x/y length mismatch");
    if (n <= k) throw DataError("ols_robust: need n > k");

    Matrix xtx(k, k);
    std::vector<double> xty(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        for (std::size_t a = 0; a < k; ++a) {
            xty[a] += row[a] * y[i];
            for (std::size_t b = a; b < k; ++b) xtx(a, b) += row[a] * row[b];
        }
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < a; ++b) xtx(a, b) = xtx(b, a);

    const Matrix xtx_inv = invert_spd(xtx);
    OlsFit fit;
    fit.n = n;
    fit.k = k;
    fit.beta.assign(k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) fit.beta[a] += xtx_inv(a, b) * xty[b];

    fit.residuals.resize(n);
    Matrix meat(k, k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        double pred = 0.0;
        for (std::size_t a = 0; a < k; ++a) pred += row[a] * fit.beta[a];
        const double e = y[i] - pred;
        fit.residuals[i] = e;
        const double e2 = e * e;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a; b < k; ++b) meat(a, b) += e2 * row[a] * row[b];
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < a; ++b) meat(a, b) = meat(b, a);

    const double hc1 = static_cast<double>(n) / static_cast<double>(n - k);
    fit.cov = Matrix(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            double s = 0.0;
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t d = 0; d < k; ++d)
                    s += xtx_inv(a, c) * meat(c, d) * xtx_inv(d, b);
            fit.cov(a, b) = hc1 * s;
        }
    fit.se.resize(k);
    for (std::size_t a = 0; a < k; ++a) fit.se[a] = std::sqrt(std::max(0.0, fit.cov(a, a)));
    return fit;
}

inline double median_of(std::vector<double> values) {
    if (values.empty()) throw NumericError("median_of: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

} // namespace hte
