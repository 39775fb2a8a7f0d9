#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "hte/cate/causal_tree.hpp"

using namespace hte;

namespace {

// Piecewise-constant effect with one jump at x1 = 0.
Dataset jump_dgp(std::size_t n, double noise_sd, RngStream& rng) {
    Matrix x(n, 2);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 2.0 * rng.uniform() - 1.0;
        x(i, 1) = rng.standard_normal();
        t[i] = rng.uniform() < 0.5 ? 1 : 0;
        const double delta = x(i, 0) > 0.0 ? 2.0 : 0.0;
        y[i] = 1.0 + t[i] * delta + noise_sd * rng.standard_normal();
    }
    return Dataset::create(std::move(x), std::move(y), std::move(t));
}

} // namespace

TEST_CASE("first split lands near the effect jump", "[causal_tree]") {
    RngStream rng(1);
    const Dataset data = jump_dgp(4000, 1.0, rng);
    CausalTreeOptions opt;
    opt.max_depth = 1;
    opt.min_leaf_per_arm = 25;
    RngStream frng(2);
    const auto model = fit_causal_tree(data, opt, frng);
    REQUIRE_FALSE(model->nodes[0].is_leaf());
    REQUIRE(model->nodes[0].feature == 0);
    REQUIRE(std::abs(model->nodes[0].threshold) < 0.1);
}

TEST_CASE("constant effect without noise grows no tree", "[causal_tree]") {
    RngStream rng(3);
    const std::size_t n = 400;
    Matrix x(n, 2);
    std::vector<double> y(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = rng.standard_normal();
        t[i] = i % 2;
        y[i] = 3.0 + 1.5 * t[i];   // exactly constant arms
    }
    const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));
    CausalTreeOptions opt;
    opt.max_depth = 3;
    opt.min_leaf_per_arm = 10;
    RngStream frng(4);
    const auto model = fit_causal_tree(data, opt, frng);
    REQUIRE(model->nodes.size() == 1);
    REQUIRE(model->nodes[0].effect == Catch::Approx(1.5));
}

TEST_CASE("leaf effects come exclusively from the estimation half", "[causal_tree]") {
    RngStream rng(5);
    const Dataset data = jump_dgp(2000, 1.0, rng);
    CausalTreeOptions opt;
    opt.max_depth = 2;
    opt.min_leaf_per_arm = 25;
    opt.honest_fraction = 0.5;
    RngStream frng(6);
    const auto model = fit_causal_tree(data, opt, frng);

    // The two halves partition the sample.
    std::set<std::size_t> split(model->split_half.begin(), model->split_half.end());
    std::set<std::size_t> est(model->estimation_half.begin(), model->estimation_half.end());
    REQUIRE(split.size() + est.size() == data.n());
    for (std::size_t i : est) REQUIRE(split.count(i) == 0);

    // Recompute every leaf effect from the estimation-half bookkeeping.
    for (std::size_t node_id = 0; node_id < model->nodes.size(); ++node_id) {
        const auto& node = model->nodes[node_id];
        if (!node.is_leaf()) continue;
        double s1 = 0.0, s0 = 0.0;
        std::size_t n1 = 0, n0 = 0;
        for (std::size_t i : model->estimation_half) {
            // Walk the tree to find the row's leaf.
            int cur = 0;
            while (!model->nodes[cur].is_leaf())
                cur = data.x(i, model->nodes[cur].feature) <= model->nodes[cur].threshold
                          ? model->nodes[cur].left
                          : model->nodes[cur].right;
            if (cur != static_cast<int>(node_id)) continue;
            if (data.t[i] == 1) {
                s1 += data.y[i];
                ++n1;
            } else {
                s0 += data.y[i];
                ++n0;
            }
        }
        REQUIRE(n1 >= 25);
        REQUIRE(n0 >= 25);
        REQUIRE(node.effect ==
                Catch::Approx(s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0)));
        REQUIRE(node.n_est == n1 + n0);
    }
}

TEST_CASE("an arm with a single unit breaks the honest split", "[causal_tree]") {
    RngStream rng(7);
    Matrix x(6, 1);
    std::vector<double> y(6);
    std::vector<int> t = {1, 0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < 6; ++i) {
        x(i, 0) = rng.standard_normal();
        y[i] = rng.standard_normal();
    }
    const Dataset data = Dataset::create(std::move(x), std::move(y), std::move(t));
    CausalTreeOptions opt;
    RngStream frng(8);
    REQUIRE_THROWS_AS(fit_causal_tree(data, opt, frng), DataError);
}

TEST_CASE("honest fraction outside (0,1) is rejected", "[causal_tree]") {
    RngStream rng(9);
    const Dataset data = jump_dgp(100, 1.0, rng);
    CausalTreeOptions opt;
    opt.honest_fraction = 1.0;
    RngStream frng(10);
    REQUIRE_THROWS_AS(fit_causal_tree(data, opt, frng), ConfigError);
}
