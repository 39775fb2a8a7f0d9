#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "hte/core/rng.hpp"

using namespace hte;

TEST_CASE("identical seeds give identical streams", "[rng]") {
    RngStream a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    RngStream c(42), d(42);
    for (int i = 0; i < 100; ++i) REQUIRE(c.standard_normal() == d.standard_normal());
}

TEST_CASE("substreams 0..999 have pairwise distinct first outputs", "[rng]") {
    RngStream base(7);
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        RngStream sub = base.substream(i);
        seen.insert(sub.next_u64());
    }
    REQUIRE(seen.size() == 1000);
}

TEST_CASE("uniform stays in [0,1)", "[rng]") {
    RngStream rng(11);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("standard normal moments over 1e6 draws", "[rng]") {
    RngStream rng(123);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.standard_normal();
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.004);                       // 4 standard errors
    REQUIRE(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("categorical_equal is uniform over levels", "[rng]") {
    RngStream rng(5);
    const int n = 300000;
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) ++counts[rng.categorical_equal(3)];
    for (int level = 0; level < 3; ++level) {
        const double freq = static_cast<double>(counts[level]) / n;
        REQUIRE(std::abs(freq - 1.0 / 3.0) < 0.005);
    }
}

TEST_CASE("uniform_below rejects invalid bounds and honors range", "[rng]") {
    RngStream rng(3);
    REQUIRE_THROWS_AS(rng.uniform_below(0), NumericError);
    for (int i = 0; i < 1000; ++i) REQUIRE(rng.uniform_below(7) < 7);
}
