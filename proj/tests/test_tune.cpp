#include <catch2/catch_amalgamated.hpp>

#include "hte/core/rng.hpp"
#include "hte/learn/tune.hpp"

using namespace hte;

namespace {

TunedLearnerSpec enet_spec(std::vector<double> lambdas) {
    TunedLearnerSpec spec;
    spec.kind = LearnerKind::ElasticNet;
    spec.grid.clear();
    for (double l : lambdas) {
        LearnerParams p;
        p.lambda = l;
        spec.grid.push_back(p);
    }
    return spec;
}

} // namespace

TEST_CASE("singleton grid is chosen without fitting", "[tune]") {
    TunedLearnerSpec spec = enet_spec({0.5});
    Matrix x(4, 1);
    std::vector<double> y = {1, 2, 3, 4};
    RngStream rng(1);
    const auto tuned = tune(spec, x, y, Family::Gaussian, rng);
    REQUIRE(tuned.chosen == 0);
}

TEST_CASE("strongly linear data rejects the huge penalty", "[tune]") {
    RngStream rng(10);
    Matrix x(200, 2);
    std::vector<double> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = rng.standard_normal();
        y[i] = 3.0 * x(i, 0) - 2.0 * x(i, 1) + 0.1 * rng.standard_normal();
    }
    TunedLearnerSpec spec = enet_spec({0.0, 1e6});
    RngStream trng(5);
    const auto tuned = tune(spec, x, y, Family::Gaussian, trng);
    REQUIRE(tuned.chosen == 0);
    REQUIRE(tuned.chosen_params().lambda == 0.0);
}

TEST_CASE("tuning is deterministic in the seed", "[tune]") {
    RngStream rng(20);
    Matrix x(100, 2);
    std::vector<double> y(100);
    for (std::size_t i = 0; i < 100; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = rng.standard_normal();
        y[i] = x(i, 0) + rng.standard_normal();
    }
    TunedLearnerSpec spec = enet_spec({0.0, 0.01, 0.1, 1.0});
    RngStream r1(7), r2(7);
    const auto a = tune(spec, x, y, Family::Gaussian, r1);
    const auto b = tune(spec, x, y, Family::Gaussian, r2);
    REQUIRE(a.chosen == b.chosen);
}

TEST_CASE("empty grid is rejected", "[tune]") {
    TunedLearnerSpec spec;
    spec.grid.clear();
    Matrix x(4, 1);
    std::vector<double> y = {1, 2, 3, 4};
    RngStream rng(1);
    REQUIRE_THROWS_AS(tune(spec, x, y, Family::Gaussian, rng), ConfigError);
}

TEST_CASE("log-loss tuning works for the binomial family", "[tune]") {
    RngStream rng(30);
    const std::size_t n = 400;
    Matrix x(n, 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-2.0 * x(i, 0))) ? 1.0 : 0.0;
    }
    TunedLearnerSpec spec = enet_spec({1e-4, 1e5});
    spec.scoring = Scoring::LogLoss;
    RngStream trng(3);
    const auto tuned = tune(spec, x, y, Family::Binomial, trng);
    REQUIRE(tuned.chosen == 0);
}
