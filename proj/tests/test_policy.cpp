#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hte/policy/policy_model.hpp"
#include "hte/policy/weighted_learning.hpp"

using namespace hte;

namespace {

CateModelPtr constant_cate(double value) {
    class ConstCate : public CateModel {
    public:
        explicit ConstCate(double v) : v_(v) { n_features_ = 1; }
        std::string method() const override { return "const"; }
        double predict_row(std::span<const double>) const override { return v_; }
        json to_json() const override { return json{{"method", "const"}, {"value", v_}}; }

    private:
        double v_;
    } const_model(value);
    return std::make_shared<ConstCate>(const_model);
}

TunedLearnerSpec enet_spec(double lambda = 0.0) {
    TunedLearnerSpec s;
    s.kind = LearnerKind::ElasticNet;
    s.grid[0].lambda = lambda;
    s.chosen = 0;
    return s;
}

} // namespace

TEST_CASE("threshold rules decide by strict inequality", "[policy]") {
    const std::vector<double> row = {0.0};
    REQUIRE(rule_from_cate(constant_cate(0.3), 0.0).decide(row) == 1);
    REQUIRE(rule_from_cate(constant_cate(0.3), 0.5).decide(row) == 0);
    // delta equal to the score itself: strict inequality keeps D = 0.
    REQUIRE(rule_from_cate(constant_cate(0.3), 0.3).decide(row) == 0);
}

TEST_CASE("ipw value arithmetic", "[policy]") {
    Matrix x = Matrix::from_rows({{0.0}, {1.0}});
    const Dataset data = Dataset::create(x, {1.0, 3.0}, {1, 1 - 1});
    const std::vector<double> pi = {0.5, 0.5};

    // Rule that reproduces the observed treatment: both units consistent.
    PolicyModel follow;
    follow.kind = PolicyKind::LinearOwl;
    follow.intercept = 1.0;
    follow.beta = {-2.0};   // g = 1 - 2 x1: unit 0 -> 1, unit 1 -> 0
    const ValueEstimate v = value_ipw(data, pi, follow);
    REQUIRE(v.n_consistent == 2);
    REQUIRE(v.value == Catch::Approx(4.0));   // (1/0.5 + 3/0.5)/2

    // Rule no unit follows: value undefined.
    PolicyModel opposite;
    opposite.kind = PolicyKind::LinearOwl;
    opposite.intercept = -1.0;
    opposite.beta = {2.0};
    REQUIRE_THROWS_AS(value_ipw(data, pi, opposite), DataError);
}

TEST_CASE("all-control value matches the control-arm mean on an RCT", "[policy]") {
    RngStream rng(2);
    const std::size_t n = 10000;
    Matrix x(n, 1);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        y[i] = 1.0 + 0.5 * x(i, 0) + 0.3 * t[i] + rng.standard_normal();
    }
    const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));
    const std::vector<double> pi(n, 0.5);

    PolicyModel all_control;
    all_control.kind = PolicyKind::LinearOwl;
    all_control.intercept = -1.0;
    all_control.beta = {0.0};
    const ValueEstimate v = value_ipw(data, pi, all_control);

    double control_mean = 0.0;
    std::size_t n0 = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (data.t[i] == 0) {
            control_mean += data.y[i];
            ++n0;
        }
    control_mean /= static_cast<double>(n0);
    REQUIRE(std::abs(v.value - control_mean) < 2.0 * v.se + 2.0 / std::sqrt(n0));
}

TEST_CASE("aipw value with a perfect outcome model", "[policy]") {
    RngStream rng(3);
    const std::size_t n = 500;
    Matrix x(n, 1);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        y[i] = 1.0 + x(i, 0) + 0.5 * t[i];   // no noise
    }
    const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));
    const auto oracle = make_oracle_nuisance(
        data, [](std::span<const double> r) { return 1.0 + r[0]; },
        [](std::span<const double> r) { return 1.5 + r[0]; },
        [](std::span<const double>) { return 0.5; });

    PolicyModel all_treat;
    all_treat.kind = PolicyKind::LinearOwl;
    all_treat.intercept = 1.0;
    all_treat.beta = {0.0};
    const ValueEstimate v = value_aipw(data, oracle, all_treat);
    double expected = 0.0;
    for (std::size_t i = 0; i < n; ++i) expected += oracle.oof_m1[i];
    expected /= static_cast<double>(n);
    REQUIRE(v.value == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("aipw value is no noisier than ipw value", "[policy]") {
    RngStream rng(5);
    std::vector<double> ipw_values, aipw_values;
    for (int rep = 0; rep < 120; ++rep) {
        const std::size_t n = 400;
        Matrix x(n, 1);
        std::vector<double> y(n);
        std::vector<int> t(n);
        RngStream rep_rng = rng.substream(rep);
        for (std::size_t i = 0; i < n; ++i) {
            x(i, 0) = rep_rng.standard_normal();
            t[i] = rep_rng.uniform() < 0.5 ? 1 : 0;
            y[i] = 1.0 + 2.0 * x(i, 0) + 0.5 * t[i] + rep_rng.standard_normal();
        }
        const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));
        const auto oracle = make_oracle_nuisance(
            data, [](std::span<const double> r) { return 1.0 + 2.0 * r[0]; },
            [](std::span<const double> r) { return 1.5 + 2.0 * r[0]; },
            [](std::span<const double>) { return 0.5; });
        PolicyModel all_treat;
        all_treat.kind = PolicyKind::LinearOwl;
        all_treat.intercept = 1.0;
        all_treat.beta = {0.0};
        ipw_values.push_back(value_ipw(data, oracle.oof_pi, all_treat).value);
        aipw_values.push_back(value_aipw(data, oracle, all_treat).value);
    }
    auto variance = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s / static_cast<double>(v.size() - 1);
    };
    REQUIRE(variance(aipw_values) <= variance(ipw_values));
}

TEST_CASE("positive rescaling of the score changes nothing", "[policy]") {
    RngStream rng(7);
    const std::size_t n = 300;
    Matrix x(n, 2);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = rng.standard_normal();
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        y[i] = 1.0 + x(i, 0) + rng.standard_normal();
    }
    const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));
    const std::vector<double> pi(n, 0.5);

    PolicyModel g;
    g.kind = PolicyKind::LinearOwl;
    g.intercept = 0.2;
    g.beta = {1.0, -0.5};
    PolicyModel scaled = g;
    scaled.intercept *= 37.0;
    for (double& b : scaled.beta) b *= 37.0;

    for (std::size_t i = 0; i < n; ++i)
        REQUIRE(g.decide(data.x.row(i)) == scaled.decide(data.x.row(i)));
    REQUIRE(value_ipw(data, pi, g).value == value_ipw(data, pi, scaled).value);
}

TEST_CASE("eta utility", "[policy]") {
    REQUIRE(eta_utility(0.5, 0.4) == Catch::Approx(0.2));
    REQUIRE(eta_utility(123.0, 0.0) == 0.0);
    REQUIRE_THROWS_AS(eta_utility(0.5, 1.2), ConfigError);
}

TEST_CASE("owl learns a planted sign rule", "[policy]") {
    RngStream rng(9);
    const std::size_t n = 2000;
    Matrix x(n, 2);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = rng.standard_normal();
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        const double benefit = x(i, 0) > 0.0 ? 1.0 : -1.0;
        y[i] = 5.0 + benefit * (t[i] == 1 ? 1.0 : -1.0) + 0.3 * rng.standard_normal();
    }
    const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));
    const std::vector<double> pi(n, 0.5);

    for (Surrogate surrogate : {Surrogate::Logistic, Surrogate::SmoothedHinge}) {
        const PolicyModel rule = fit_owl(data, pi, surrogate, 0.01);
        std::size_t agree = 0;
        for (std::size_t i = 0; i < n; ++i)
            agree += rule.decide(data.x.row(i)) == (data.x(i, 0) > 0.0 ? 1 : 0);
        INFO((surrogate == Surrogate::Logistic ? "logistic" : "smoothed hinge"));
        REQUIRE(static_cast<double>(agree) / static_cast<double>(n) > 0.95);
    }
}

TEST_CASE("owl without signal keeps a flat score", "[policy]") {
    RngStream rng(11);
    const std::size_t n = 1000;
    Matrix x(n, 2);
    std::vector<double> y(n, 2.0);   // equal weights
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = rng.standard_normal();
        t[i] = i % 2;                // balanced labels
    }
    const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));
    const std::vector<double> pi(n, 0.5);
    const PolicyModel rule = fit_owl(data, pi, Surrogate::Logistic, 0.01);
    for (double b : rule.beta) REQUIRE(std::abs(b) < 0.05);
}

TEST_CASE("outcome shifts move owl but not aol", "[policy]") {
    RngStream rng(13);
    const std::size_t n = 1200;
    Matrix x(n, 1);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        const double benefit = x(i, 0);
        y[i] = 4.0 + 0.5 * x(i, 0) + t[i] * benefit + 0.5 * rng.standard_normal();
    }
    const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t),
                                         std::vector<double>(n, 0.5));
    Dataset shifted = data;
    for (double& v : shifted.y) v += 10.0;

    const PolicyModel owl_a = fit_owl(data, data.pi_known, Surrogate::Logistic, 0.01);
    const PolicyModel owl_b = fit_owl(shifted, data.pi_known, Surrogate::Logistic, 0.01);
    REQUIRE(std::abs(owl_a.beta[0] - owl_b.beta[0]) > 0.05);

    const TunedLearnerSpec spec = enet_spec();
    NuisanceOptions nopt;
    RngStream na(14), nb(14);
    const NuisanceFit fit_a = fit_nuisance(data, spec, spec, nopt, na);
    const NuisanceFit fit_b = fit_nuisance(shifted, spec, spec, nopt, nb);
    const PolicyModel aol_a = fit_aol(data, fit_a, Surrogate::Logistic, 0.01);
    const PolicyModel aol_b = fit_aol(shifted, fit_b, Surrogate::Logistic, 0.01);
    REQUIRE(std::abs(aol_a.beta[0] - aol_b.beta[0]) < 1e-4);
}

TEST_CASE("aipw classifier covers the degenerate and planted cases", "[policy]") {
    RngStream rng(15);
    const std::size_t n = 2000;
    Matrix x(n, 2);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = rng.standard_normal();
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        y[i] = rng.standard_normal();
    }
    Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));

    SECTION("planted antisymmetric scores recover the sign rule") {
        // Oracle nuisances that make the AIPW score essentially +-1 by sign
        // of x1: zero outcomes, m1 - m0 = sign(x1).
        for (std::size_t i = 0; i < n; ++i)
            data.y[i] = data.t[i] == 1 ? (data.x(i, 0) > 0 ? 0.5 : -0.5)
                                       : (data.x(i, 0) > 0 ? -0.5 : 0.5);
        const auto oracle = make_oracle_nuisance(
            data,
            [](std::span<const double> r) { return r[0] > 0 ? -0.5 : 0.5; },
            [](std::span<const double> r) { return r[0] > 0 ? 0.5 : -0.5; },
            [](std::span<const double>) { return 0.5; });
        RngStream frng(16);
        const PolicyModel rule = fit_aipw_classifier(data, oracle, enet_spec(1e-4), frng);
        std::size_t agree = 0;
        for (std::size_t i = 0; i < n; ++i)
            agree += rule.decide(data.x.row(i)) == (data.x(i, 0) > 0.0 ? 1 : 0);
        REQUIRE(static_cast<double>(agree) / static_cast<double>(n) > 0.95);
    }
    SECTION("uniformly positive scores give the constant treat-all rule") {
        const auto oracle = make_oracle_nuisance(
            data, [](std::span<const double>) { return 0.0; },
            [](std::span<const double>) { return 1.0; },
            [](std::span<const double>) { return 0.5; });
        Dataset calm = data;
        for (std::size_t i = 0; i < n; ++i) calm.y[i] = calm.t[i] == 1 ? 1.0 : 0.0;
        RngStream frng(17);
        const PolicyModel rule = fit_aipw_classifier(calm, oracle, enet_spec(), frng);
        for (std::size_t i = 0; i < 50; ++i) REQUIRE(rule.decide(calm.x.row(i)) == 1);
    }
}

TEST_CASE("value tilde subtracts the inconsistent arm", "[policy]") {
    Matrix x = Matrix::from_rows({{0.0}, {1.0}});
    const Dataset data = Dataset::create(x, {2.0, 4.0}, {1, 0});
    const std::vector<double> pi = {0.5, 0.5};
    PolicyModel all_treat;
    all_treat.kind = PolicyKind::LinearOwl;
    all_treat.intercept = 1.0;
    all_treat.beta = {0.0};
    // Consistent: unit 0 (2/0.5); inconsistent: unit 1 (4/0.5).
    REQUIRE(value_tilde_ipw(data, pi, all_treat) == Catch::Approx((4.0 - 8.0) / 2.0));
}
