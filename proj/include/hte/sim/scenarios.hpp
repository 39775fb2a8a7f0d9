#pragma once
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "hte/core/dataset.hpp"
#include "hte/core/error.hpp"
#include "hte/core/rng.hpp"

namespace hte {

enum class ScenarioId { S1, S2, S3, S4 };

inline std::string to_string(ScenarioId id) {
    switch (id) {
        case ScenarioId::S1: return "S1";
        case ScenarioId::S2: return "S2";
        case ScenarioId::S3: return "S3";
        case ScenarioId::S4: return "S4";
    }
    return "?";
}

inline ScenarioId scenario_from_string(const std::string& s) {
    if (s == "S1") return ScenarioId::S1;
    if (s == "S2") return ScenarioId::S2;
    if (s == "S3") return ScenarioId::S3;
    if (s == "S4") return ScenarioId::S4;
    throw ConfigError("unknown scenario '" + s + "'; valid ids are S1, S2, S3, S4");
}

// Benchmark data-generating processes. S1/S2 are randomized 3:1
// treated:control; S3/S4 are observational with roughly 1:3 allocation,
// propensity driven by the prognostic (S3) or predictive (S4) component.
// Overriding any calibrated constant watermarks the outputs.
struct ScenarioSpec {
    ScenarioId id = ScenarioId::S1;
    std::size_t n = 1000;
    int noise_covariates = 10;
    double a = 0.625, b = 5.0, c = 0.625, d = 20.0;
    double alpha1 = -2.4, beta1 = -0.2;    // S3 propensity
    double alpha2 = -1.64, beta2 = 4.2;    // S4 propensity
    double noise_sd = 1.0;
    double rct_treated_prob = 0.75;

    bool is_rct() const { return id == ScenarioId::S1 || id == ScenarioId::S2; }
    std::size_t n_signal() const { return id == ScenarioId::S1 ? 4 : 9; }
    std::size_t n_covariates() const {
        return n_signal() + static_cast<std::size_t>(noise_covariates);
    }

    bool overridden() const {
        const ScenarioSpec ref{id, n, noise_covariates};
        return a != ref.a || b != ref.b || c != ref.c || d != ref.d ||
               alpha1 != ref.alpha1 || beta1 != ref.beta1 || alpha2 != ref.alpha2 ||
               beta2 != ref.beta2 || noise_sd != ref.noise_sd ||
               rct_treated_prob != ref.rct_treated_prob;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"id", to_string(id)},
                              {"n", n},
                              {"noise_covariates", noise_covariates},
                              {"a", a},
                              {"b", b},
                              {"c", c},
                              {"d", d},
                              {"alpha1", alpha1},
                              {"beta1", beta1},
                              {"alpha2", alpha2},
                              {"beta2", beta2},
                              {"noise_sd", noise_sd},
                              {"rct_treated_prob", rct_treated_prob},
                              {"constants_overridden", overridden()}};
    }
};

// Non-monotone predictive component: an inverted parabola on [0,1] with flat
// plateaus outside.
inline double g1(double x, const ScenarioSpec& s) {
    if (x < 0.0 || x > 1.0) return s.a - 0.25 * s.b;
    return s.a - s.b * (x - 0.5) * (x - 0.5);
}

// Monotone predictive component: a steep logistic ramp on [0,1], clamped
// outside.
inline double g2(double x, const ScenarioSpec& s) {
    if (x < 0.0) return 0.0;
    if (x > 1.0) return s.c;
    return s.c / (1.0 + std::exp(-s.d * (x - 0.5)));
}

// Prognostic component. The 3-level covariate enters linearly as 5*x2 with
// levels coded {1,2,3}.
inline double k1(std::span<const double> x, const ScenarioSpec& s) {
    double value = -(x[0] + 5.0 * x[1]);
    if (s.id != ScenarioId::S1) value += 2.0 * (x[4] + x[5] + x[6] + x[7] + x[8]);
    return value;
}

// Predictive component, equal to the CATE.
inline double k2(std::span<const double> x, const ScenarioSpec& s) {
    return g1(x[2], s) + g2(x[3], s);
}

// A generated dataset plus its per-row ground truth.
struct GeneratedSample {
    Dataset data;
    std::vector<double> delta, m0, m1, pi, noise;
    std::vector<char> s_true;                     // delta > 0
    ScenarioSpec spec;
};

inline GeneratedSample generate(const ScenarioSpec& spec, RngStream& rng) {
    const std::size_t n = spec.n;
    const std::size_t p_signal = spec.n_signal();
    const std::size_t p = spec.n_covariates();

    GeneratedSample out;
    out.spec = spec;
    out.delta.resize(n);
    out.m0.resize(n);
    out.m1.resize(n);
    out.pi.resize(n);
    out.noise.resize(n);
    out.s_true.resize(n);

    Matrix x(n, p);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p_signal; ++j) {
            if (j == 1)
                x(i, j) = static_cast<double>(1 + rng.categorical_equal(3));
            else
                x(i, j) = 0.5 + rng.standard_normal();
        }
        for (std::size_t j = p_signal; j < p; ++j) x(i, j) = rng.standard_normal();

        const auto row = x.row(i);
        const double prog = k1(row, spec);
        const double pred = k2(row, spec);
        out.delta[i] = pred;
        out.m0[i] = 100.0 + prog;
        out.m1[i] = 100.0 + prog + pred;
        out.s_true[i] = pred > 0.0 ? 1 : 0;

        double pi;
        switch (spec.id) {
            case ScenarioId::S1:
            case ScenarioId::S2:
                pi = spec.rct_treated_prob;
                break;
            case ScenarioId::S3:
                pi = 1.0 / (1.0 + std::exp(-(spec.alpha1 + spec.beta1 * prog)));
                break;
            case ScenarioId::S4:
            default:
                pi = 1.0 / (1.0 + std::exp(-(spec.alpha2 + spec.beta2 * pred)));
                break;
        }
        out.pi[i] = pi;
        t[i] = rng.uniform() < pi ? 1 : 0;
        out.noise[i] = spec.noise_sd * rng.standard_normal();
        y[i] = (t[i] == 1 ? out.m1[i] : out.m0[i]) + out.noise[i];
    }

    std::vector<std::string> names;
    for (std::size_t j = 0; j < p_signal; ++j) names.push_back("x" + std::to_string(j + 1));
    for (std::size_t j = 0; j < p - p_signal; ++j)
        names.push_back("z" + std::to_string(j + 1));

    // Known propensities travel with the data only for the randomized
    // scenarios; the observational ones must be estimated.
    std::vector<double> pi_known;
    if (spec.is_rct()) pi_known.assign(n, spec.rct_treated_prob);
    out.data = Dataset::create(std::move(x), std::move(y), std::move(t),
                               std::move(pi_known), std::move(names));
    return out;
}

// Copy of the sample with the true propensities attached as known; used by
// oracle-mode diagnostics such as the overlap report.
inline Dataset with_true_propensity(const GeneratedSample& sample) {
    Dataset d = sample.data;
    d.pi_known = sample.pi;
    for (double& v : d.pi_known) v = std::clamp(v, 1e-12, 1.0 - 1e-12);
    d.validate();
    return d;
}

} // namespace hte
