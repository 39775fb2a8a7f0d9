#pragma once
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hte/core/error.hpp"
#include "hte/core/matrix.hpp"

namespace hte {

// Observed sample: covariates, continuous outcome, binary treatment and an
// optional known propensity (randomized designs). Immutable after
// construction and safe to share across parallel tasks.
struct Dataset {
    Matrix x;
    std::vector<double> y;
    std::vector<int> t;              // {0,1}
    std::vector<double> pi_known;    // empty, or length n with entries in (0,1)
    std::vector<std::string> feature_names;

    std::size_t n() const { return y.size(); }
    std::size_t p() const { return x.cols(); }
    bool has_known_propensity() const { return !pi_known.empty(); }

    // {-1,+1} treatment coding used by the modified-loss formulas. Derived,
    // never stored.
    int a(std::size_t i) const { return 2 * t[i] - 1; }

    std::vector<std::size_t> arm_indices(int arm) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] == arm) idx.push_back(i);
        return idx;
    }

    Dataset take_rows(std::span<const std::size_t> idx) const {
        Dataset d;
        d.x = x.take_rows(idx);
        d.y = take(y, idx);
        d.t = take(t, idx);
        if (!pi_known.empty()) d.pi_known = take(pi_known, idx);
        d.feature_names = feature_names;
        return d;
    }

    void validate() const {
        const std::size_t nn = y.size();
        if (nn < 2) throw DataError("Dataset: need at least 2 observations");
        if (x.rows() != nn || t.size() != nn)
            throw DataError("Dataset: column lengths disagree");
        if (x.cols() < 1) throw DataError("Dataset: need at least one covariate");
        if (!pi_known.empty() && pi_known.size() != nn)
            throw DataError("Dataset: propensity length disagrees with n");
        if (feature_names.size() != x.cols())
            throw DataError("Dataset: feature name count disagrees with p");
        std::size_t n1 = 0;
        for (std::size_t i = 0; i < nn; ++i) {
            if (t[i] != 0 && t[i] != 1)
                throw DataError("Dataset: treatment outside {0,1} at row " + std::to_string(i));
            n1 += static_cast<std::size_t>(t[i]);
            if (!std::isfinite(y[i]))
                throw DataError("Dataset: non-finite outcome at row " + std::to_string(i));
            for (std::size_t j = 0; j < x.cols(); ++j)
                if (!std::isfinite(x(i, j)))
                    throw DataError("Dataset: non-finite covariate at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
            if (!pi_known.empty()) {
                const double pi = pi_known[i];
                if (!std::isfinite(pi) || pi <= 0.0 || pi >= 1.0)
                    throw DataError("Dataset: propensity outside (0,1) at row " +
                                    std::to_string(i));
            }
        }
        if (n1 == 0 || n1 == nn) throw DataError("Dataset: both treatment arms must be present");
    }

    static Dataset create(Matrix x, std::vector<double> y, std::vector<int> t,
                          std::vector<double> pi_known = {},
                          std::vector<std::string> feature_names = {}) {
        Dataset d;
        d.x = std::move(x);
        d.y = std::move(y);
        d.t = std::move(t);
        d.pi_known = std::move(pi_known);
        if (feature_names.empty()) {
            for (std::size_t j = 0; j < d.x.cols(); ++j)
                feature_names.push_back("x" + std::to_string(j + 1));
        }
        d.feature_names = std::move(feature_names);
        d.validate();
        return d;
    }
};

} // namespace hte
