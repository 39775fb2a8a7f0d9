#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "hte/learn/elastic_net.hpp"
#include "hte/transforms.hpp"

using namespace hte;

namespace {

Dataset tiny(std::vector<double> y, std::vector<int> t) {
    Matrix x(y.size(), 1);
    for (std::size_t i = 0; i < y.size(); ++i) x(i, 0) = static_cast<double>(i);
    return Dataset::create(std::move(x), std::move(y), std::move(t));
}

// Constant-effect randomized DGP: Y = 1 + x + ate*T + noise.
Dataset constant_effect(std::size_t n, double ate, double pi, RngStream& rng) {
    Matrix x(n, 1);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        t[i] = rng.uniform() < pi ? 1 : 0;
        y[i] = 1.0 + x(i, 0) + ate * t[i] + rng.standard_normal();
    }
    return Dataset::create(std::move(x), std::move(y), std::move(t));
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double var_of(std::span<const double> v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

} // namespace

TEST_CASE("modified outcome arithmetic", "[transforms]") {
    const Dataset data = tiny({2.0, 2.0}, {1, 0});
    const std::vector<double> pi(2, 0.5);
    const auto ts = modified_outcome(data, pi);
    REQUIRE(ts.pseudo_outcome[0] == Catch::Approx(4.0));
    REQUIRE(ts.pseudo_outcome[1] == Catch::Approx(-4.0));
    REQUIRE(ts.weights == std::vector<double>{1.0, 1.0});
}

TEST_CASE("modified outcome mean recovers the ATE", "[transforms]") {
    RngStream rng(2);
    const double ate = 0.7;
    const Dataset data = constant_effect(100000, ate, 0.5, rng);
    const std::vector<double> pi(data.n(), 0.5);
    const auto ts = modified_outcome(data, pi);
    const double se = std::sqrt(var_of(ts.pseudo_outcome) / static_cast<double>(data.n()));
    REQUIRE(std::abs(mean_of(ts.pseudo_outcome) - ate) < 3.0 * se);
}

TEST_CASE("modified-loss weights", "[transforms]") {
    SECTION("formula cases") {
        const Dataset data = tiny({1.0, 1.0}, {1, 0});
        const auto ts = mcm_weights(data, std::vector<double>{0.5, 0.25});
        REQUIRE(ts.weights[0] == Catch::Approx(2.0));          // A=+1, pi=0.5
        REQUIRE(ts.weights[1] == Catch::Approx(4.0 / 3.0));    // A=-1, pi=0.25
        REQUIRE(ts.labels == std::vector<int>{1, -1});
    }
    SECTION("3:1 randomization") {
        const Dataset data = tiny({1.0, 1.0}, {1, 0});
        const auto ts = mcm_weights(data, std::vector<double>{0.75, 0.75});
        REQUIRE(ts.weights[0] == Catch::Approx(4.0 / 3.0));
        REQUIRE(ts.weights[1] == Catch::Approx(4.0));
    }
}

TEST_CASE("augmentation term is the main effect", "[transforms]") {
    RngStream rng(3);
    const Dataset data = constant_effect(50, 1.0, 0.5, rng);
    const auto fit = make_oracle_nuisance(
        data, [](std::span<const double>) { return 1.0; },
        [](std::span<const double>) { return 3.0; },
        [](std::span<const double>) { return 0.5; });
    REQUIRE(augmentation_term(fit, data.x.row(0)) == Catch::Approx(2.0));

    const auto sym = make_oracle_nuisance(
        data, [](std::span<const double>) { return 7.0; },
        [](std::span<const double>) { return 7.0; },
        [](std::span<const double>) { return 0.5; });
    REQUIRE(augmentation_term(sym, data.x.row(0)) == Catch::Approx(7.0));
}

TEST_CASE("augmentation halves the pseudo-target spread", "[transforms]") {
    // Noiseless-prognosis oracle: centering by h removes the large main
    // effect from the W-learning target.
    RngStream rng(5);
    const std::size_t n = 1000;
    Matrix x(n, 1);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        y[i] = 100.0 + 5.0 * x(i, 0) + t[i] * 0.5 + 0.5 * rng.standard_normal();
    }
    const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));
    const auto oracle = make_oracle_nuisance(
        data, [](std::span<const double> r) { return 100.0 + 5.0 * r[0]; },
        [](std::span<const double> r) { return 100.5 + 5.0 * r[0]; },
        [](std::span<const double>) { return 0.5; });

    std::vector<double> plain(n), augmented(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int a = data.a(i);
        plain[i] = 2.0 * a * data.y[i];
        augmented[i] = 2.0 * a * (data.y[i] - oracle.oof_h(i));
    }
    REQUIRE(var_of(plain) > 2.0 * var_of(augmented));
}

TEST_CASE("robinson transform", "[transforms]") {
    SECTION("arithmetic") {
        RngStream rng(4);
        Dataset data = tiny({1.0, 0.0}, {1, 0});
        auto fit = make_oracle_nuisance(
            data, [](std::span<const double>) { return 0.0; },
            [](std::span<const double>) { return 0.0; },
            [](std::span<const double>) { return 0.5; });
        const auto ts = robinson_transform(data, fit);
        REQUIRE(ts.pseudo_outcome[0] == Catch::Approx(2.0));   // (1-0)/(1-0.5)
        REQUIRE(ts.weights[0] == Catch::Approx(0.25));
        REQUIRE(ts.pseudo_outcome[1] == Catch::Approx(0.0));   // centered case
    }
    SECTION("weighted mean recovers the ATE") {
        RngStream rng(6);
        const double ate = -0.4;
        const Dataset data = constant_effect(100000, ate, 0.5, rng);
        const auto fit = make_oracle_nuisance(
            data,
            [](std::span<const double> r) { return 1.0 + r[0]; },
            [ate](std::span<const double> r) { return 1.0 + r[0] + ate; },
            [](std::span<const double>) { return 0.5; });
        const auto ts = robinson_transform(data, fit);
        double wsum = 0.0, wm = 0.0;
        for (std::size_t i = 0; i < data.n(); ++i) {
            wsum += ts.weights[i];
            wm += ts.weights[i] * ts.pseudo_outcome[i];
        }
        wm /= wsum;
        // Weighted-mean standard error on the weighted residuals.
        double ss = 0.0;
        for (std::size_t i = 0; i < data.n(); ++i) {
            const double d = ts.pseudo_outcome[i] - wm;
            ss += ts.weights[i] * ts.weights[i] * d * d;
        }
        const double se = std::sqrt(ss) / wsum;
        REQUIRE(std::abs(wm - ate) < 3.0 * se);
    }
}

TEST_CASE("aipw scores", "[transforms]") {
    SECTION("perfect outcome model removes the residual term") {
        RngStream rng(8);
        Dataset data = constant_effect(50, 1.0, 0.5, rng);
        const auto fit = make_oracle_nuisance(
            data, [&](std::span<const double> r) { return 1.0 + r[0]; },
            [&](std::span<const double> r) { return 2.0 + r[0]; },
            [](std::span<const double>) { return 0.5; });
        Dataset exact = data;
        for (std::size_t i = 0; i < exact.n(); ++i)
            exact.y[i] = exact.t[i] == 1 ? fit.oof_m1[i] : fit.oof_m0[i];
        const auto ts = aipw_scores(exact, fit);
        for (std::size_t i = 0; i < exact.n(); ++i)
            REQUIRE(ts.pseudo_outcome[i] == Catch::Approx(1.0));
    }
    SECTION("hand arithmetic") {
        Dataset data = tiny({1.0, 0.0}, {1, 0});
        const auto fit = make_oracle_nuisance(
            data, [](std::span<const double>) { return 0.0; },
            [](std::span<const double>) { return 0.0; },
            [](std::span<const double>) { return 0.5; });
        const auto ts = aipw_scores(data, fit);
        REQUIRE(ts.pseudo_outcome[0] == Catch::Approx(2.0));
    }
    SECTION("oracle AIPW variance does not exceed the modified outcome's") {
        RngStream rng(9);
        const Dataset data = constant_effect(20000, 0.5, 0.5, rng);
        const auto fit = make_oracle_nuisance(
            data, [](std::span<const double> r) { return 1.0 + r[0]; },
            [](std::span<const double> r) { return 1.5 + r[0]; },
            [](std::span<const double>) { return 0.5; });
        const auto aipw = aipw_scores(data, fit);
        const auto mo = modified_outcome(data, fit.oof_pi);
        REQUIRE(var_of(aipw.pseudo_outcome) <= var_of(mo.pseudo_outcome));
    }
}

TEST_CASE("owl and aol weights", "[transforms]") {
    SECTION("owl arithmetic") {
        Dataset data = tiny({3.0, 3.0}, {1, 0});
        const auto ts = owl_weights(data, std::vector<double>{0.5, 0.5});
        REQUIRE(ts.weights[0] == Catch::Approx(6.0));
        REQUIRE(ts.labels[0] == 1);
    }
    SECTION("negative outcomes without shifting are rejected") {
        Dataset data = tiny({-1.0, 2.0}, {1, 0});
        REQUIRE_THROWS_AS(owl_weights(data, std::vector<double>{0.5, 0.5}, OwlShift::None),
                          DataError);
    }
    SECTION("aol flips the label on negative residuals") {
        Dataset data = tiny({1.0, 5.0}, {1, 0});
        const auto fit = make_oracle_nuisance(
            data, [](std::span<const double>) { return 3.0; },
            [](std::span<const double>) { return 3.0; },
            [](std::span<const double>) { return 0.5; });
        const auto ts = aol_weights(data, fit);
        REQUIRE(ts.weights[0] == Catch::Approx(4.0));   // |1-3| / 0.5
        REQUIRE(ts.labels[0] == -1);                    // A=+1, resid < 0
        REQUIRE(ts.labels[1] == -1);                    // A=-1, resid > 0
    }
    SECTION("owl weights move under constant shift, aol weights do not") {
        RngStream rng(12);
        Dataset data = constant_effect(200, 0.3, 0.5, rng);
        for (double& v : data.y) v = std::abs(v) + 1.0;   // keep outcomes positive
        const std::vector<double> pi(data.n(), 0.5);
        const auto before = owl_weights(data, pi);
        Dataset shifted = data;
        for (double& v : shifted.y) v += 10.0;
        const auto after = owl_weights(shifted, pi);
        REQUIRE(std::abs(after.weights[0] - before.weights[0]) > 1.0);

        auto m_of = [](double c) {
            return [c](std::span<const double>) { return c; };
        };
        const auto fit0 = make_oracle_nuisance(data, m_of(2.0), m_of(2.0),
                                               m_of(0.5));
        const auto fit10 = make_oracle_nuisance(shifted, m_of(12.0), m_of(12.0),
                                                m_of(0.5));
        const auto aol0 = aol_weights(data, fit0);
        const auto aol10 = aol_weights(shifted, fit10);
        for (std::size_t i = 0; i < data.n(); ++i)
            REQUIRE(aol10.weights[i] == Catch::Approx(aol0.weights[i]).margin(1e-12));
    }
}

TEST_CASE("transforms are row-local", "[transforms]") {
    RngStream rng(14);
    const Dataset data = constant_effect(40, 0.5, 0.5, rng);
    const std::vector<double> pi(data.n(), 0.5);
    std::vector<std::size_t> perm(data.n());
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    const Dataset permuted = data.take_rows(perm);

    const auto a = modified_outcome(data, pi);
    const auto b = modified_outcome(permuted, pi);
    for (std::size_t i = 0; i < data.n(); ++i)
        REQUIRE(b.pseudo_outcome[i] == a.pseudo_outcome[perm[i]]);
}

TEST_CASE("modified outcome and mcm weighting target the same slope", "[transforms]") {
    // Linear CATE with known propensity: the regression of Y* and the
    // weighted regression of 2AY both estimate delta(x) = 1 + x.
    RngStream rng(15);
    const std::size_t n = 100000;
    Matrix x(n, 1);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        const double delta = 1.0 + x(i, 0);
        y[i] = 2.0 + 0.5 * x(i, 0) + t[i] * delta + rng.standard_normal();
    }
    const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));
    const std::vector<double> pi(n, 0.5);

    const auto mo = modified_outcome(data, pi);
    ElasticNetOptions opt;
    opt.lambda = 0.0;
    const ElasticNetModel fit_mo = fit_elastic_net(data.x, mo.pseudo_outcome, opt);

    const auto mcm = mcm_weights(data, pi);
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = 2.0 * data.a(i) * data.y[i];
    const ElasticNetModel fit_mcm = fit_elastic_net(data.x, target, mcm.weights, opt);

    // Agreement within Monte Carlo tolerance of the noisier route.
    REQUIRE(std::abs(fit_mo.beta[0] - fit_mcm.beta[0]) < 0.1);
    REQUIRE(std::abs(fit_mo.beta[0] - 1.0) < 0.1);
}
