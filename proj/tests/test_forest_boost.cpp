#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "hte/core/rng.hpp"
#include "hte/learn/boost.hpp"
#include "hte/learn/forest.hpp"

using namespace hte;

namespace {

void linear_dgp(std::size_t n, RngStream& rng, Matrix& x, std::vector<double>& y) {
    x = Matrix(n, 3);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.standard_normal();
        y[i] = 2.0 * x(i, 0) - x(i, 1) + 0.5 * x(i, 2) + 0.3 * rng.standard_normal();
    }
}

} // namespace

TEST_CASE("single tree forest without bootstrap equals the tree", "[forest]") {
    RngStream rng(5);
    Matrix x;
    std::vector<double> y;
    linear_dgp(60, rng, x, y);

    ForestOptions fopt;
    fopt.n_trees = 1;
    fopt.bootstrap = false;
    fopt.mtry = 3;
    fopt.min_leaf = 5;
    fopt.max_depth = 6;
    RngStream frng(10);
    const ForestModel forest = fit_forest(x, y, fopt, frng);

    TreeOptions topt;
    topt.max_depth = 6;
    topt.min_leaf = 5;
    const TreeModel tree = fit_tree(x, y, topt);
    for (std::size_t i = 0; i < x.rows(); ++i)
        REQUIRE(forest.predict_row(x.row(i)) == tree.predict_row(x.row(i)));
}

TEST_CASE("OOB error tracks held-out error on a linear DGP", "[forest]") {
    RngStream rng(77);
    Matrix x_train, x_test;
    std::vector<double> y_train, y_test;
    linear_dgp(200, rng, x_train, y_train);
    linear_dgp(200, rng, x_test, y_test);

    ForestOptions opt;
    opt.n_trees = 300;
    opt.min_leaf = 5;
    RngStream frng(11);
    const ForestModel forest = fit_forest(x_train, y_train, opt, frng);

    double oob_mse = 0.0;
    for (std::size_t i = 0; i < x_train.rows(); ++i) {
        const double e = forest.predict_oob(x_train, i) - y_train[i];
        oob_mse += e * e;
    }
    oob_mse /= static_cast<double>(x_train.rows());

    double test_mse = 0.0;
    for (std::size_t i = 0; i < x_test.rows(); ++i) {
        const double e = forest.predict_row(x_test.row(i)) - y_test[i];
        test_mse += e * e;
    }
    test_mse /= static_cast<double>(x_test.rows());
    REQUIRE(std::abs(oob_mse - test_mse) < 0.25 * test_mse);
}

TEST_CASE("same seed rebuilds the same forest", "[forest]") {
    RngStream rng(123);
    Matrix x;
    std::vector<double> y;
    linear_dgp(80, rng, x, y);
    ForestOptions opt;
    opt.n_trees = 25;
    RngStream r1(42), r2(42);
    const ForestModel a = fit_forest(x, y, opt, r1);
    const ForestModel b = fit_forest(x, y, opt, r2);
    for (std::size_t i = 0; i < x.rows(); ++i)
        REQUIRE(a.predict_row(x.row(i)) == b.predict_row(x.row(i)));
}

TEST_CASE("forest prediction ignores tree order", "[forest]") {
    RngStream rng(55);
    Matrix x;
    std::vector<double> y;
    linear_dgp(60, rng, x, y);
    ForestOptions opt;
    opt.n_trees = 12;
    RngStream frng(3);
    ForestModel forest = fit_forest(x, y, opt, frng);
    ForestModel reversed = forest;
    std::reverse(reversed.trees.begin(), reversed.trees.end());
    for (std::size_t i = 0; i < x.rows(); ++i)
        REQUIRE(forest.predict_row(x.row(i)) ==
                Catch::Approx(reversed.predict_row(x.row(i))).epsilon(1e-12));
}

TEST_CASE("OOB prediction fails when every tree saw the row", "[forest]") {
    RngStream rng(8);
    Matrix x;
    std::vector<double> y;
    linear_dgp(30, rng, x, y);
    ForestOptions opt;
    opt.n_trees = 5;
    RngStream frng(2);
    ForestModel forest = fit_forest(x, y, opt, frng);
    for (auto& bag : forest.in_bag) bag.assign(x.rows(), 1);
    REQUIRE_THROWS_AS(forest.predict_oob(x, 0), NumericError);
}

TEST_CASE("one stump round recovers a step function", "[boost]") {
    RngStream rng(31);
    Matrix x(200, 1);
    std::vector<double> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
        x(i, 0) = rng.standard_normal();
        y[i] = x(i, 0) > 0 ? 1.0 : 0.0;
    }
    BoostOptions opt;
    opt.n_rounds = 1;
    opt.max_depth = 1;
    opt.shrinkage = 1.0;
    opt.min_leaf = 5;
    RngStream brng(1);
    const BoostModel model = fit_boost(x, y, opt, brng);

    double mse = 0.0, mean = 0.0;
    for (double v : y) mean += v;
    mean /= 200.0;
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= 200.0;
    for (std::size_t i = 0; i < 200; ++i) {
        const double e = model.predict_row(x.row(i)) - y[i];
        mse += e * e;
    }
    mse /= 200.0;
    REQUIRE(mse < var / 4.0);
}

TEST_CASE("zero shrinkage leaves the base score", "[boost]") {
    RngStream rng(4);
    Matrix x(50, 2);
    std::vector<double> y(50);
    for (std::size_t i = 0; i < 50; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = rng.standard_normal();
        y[i] = x(i, 0) + rng.standard_normal();
    }
    BoostOptions opt;
    opt.n_rounds = 20;
    opt.shrinkage = 0.0;
    RngStream brng(1);
    const BoostModel model = fit_boost(x, y, opt, brng);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= 50.0;
    for (std::size_t i = 0; i < 50; ++i)
        REQUIRE(model.predict_row(x.row(i)) == Catch::Approx(mean));
}

TEST_CASE("one depth-0 round with unit shrinkage predicts the mean", "[boost]") {
    Matrix x = Matrix::from_rows({{1.0}, {2.0}, {3.0}, {4.0}});
    std::vector<double> y = {1, 2, 3, 6};
    BoostOptions opt;
    opt.n_rounds = 1;
    opt.max_depth = 0;
    opt.shrinkage = 1.0;
    RngStream rng(1);
    const BoostModel model = fit_boost(x, y, opt, rng);
    REQUIRE(model.predict_row(x.row(0)) == Catch::Approx(3.0));
}

TEST_CASE("staged prediction identity", "[boost]") {
    RngStream rng(9);
    Matrix x(120, 2);
    std::vector<double> y(120);
    for (std::size_t i = 0; i < 120; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = rng.standard_normal();
        y[i] = std::sin(x(i, 0)) + 0.2 * rng.standard_normal();
    }
    BoostOptions opt;
    opt.n_rounds = 30;
    opt.max_depth = 2;
    opt.shrinkage = 0.2;
    RngStream brng(6);
    const BoostModel model = fit_boost(x, y, opt, brng);

    const auto row = x.row(0);
    double f = model.base_score;
    for (std::size_t m = 0; m < model.trees.size(); ++m) {
        f += model.shrinkage * model.trees[m].predict_row(row);
        REQUIRE(model.raw_score(row, m + 1) == Catch::Approx(f).epsilon(1e-14));
    }
}

TEST_CASE("squared training loss is non-increasing in rounds", "[boost]") {
    RngStream rng(21);
    Matrix x(150, 2);
    std::vector<double> y(150);
    for (std::size_t i = 0; i < 150; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = rng.standard_normal();
        y[i] = x(i, 0) * x(i, 1) + 0.1 * rng.standard_normal();
    }
    BoostOptions opt;
    opt.n_rounds = 40;
    opt.max_depth = 2;
    opt.shrinkage = 0.05;
    opt.subsample = 1.0;
    RngStream brng(13);
    const BoostModel model = fit_boost(x, y, opt, brng);

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m <= model.trees.size(); ++m) {
        double loss = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double e = y[i] - model.raw_score(x.row(i), m);
            loss += e * e;
        }
        REQUIRE(loss <= prev + 1e-9);
        prev = loss;
    }
}

TEST_CASE("logistic gradient matches finite differences", "[boost]") {
    // L(F) = -(y log sigmoid(F) + (1-y) log(1-sigmoid(F))); the boosting
    // residual y - sigmoid(F) must equal -dL/dF.
    RngStream rng(17);
    auto loss = [](double y, double f) {
        const double p = sigmoid(f);
        return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    };
    const double h = 1e-4;
    for (int k = 0; k < 20; ++k) {
        const double f = 3.0 * (rng.uniform() - 0.5);
        const double y = k % 2 == 0 ? 1.0 : 0.0;
        const double numeric = -(loss(y, f + h) - loss(y, f - h)) / (2.0 * h);
        REQUIRE(std::abs((y - sigmoid(f)) - numeric) < 1e-5);
    }
    REQUIRE(1.0 - sigmoid(0.0) == Catch::Approx(0.5));
}

TEST_CASE("logistic family rejects non-binary outcomes", "[boost]") {
    Matrix x = Matrix::from_rows({{1.0}, {2.0}, {3.0}});
    std::vector<double> y = {0.0, 0.5, 1.0};
    BoostOptions opt;
    opt.loss = BoostLoss::Logistic;
    RngStream rng(1);
    REQUIRE_THROWS_AS(fit_boost(x, y, opt, rng), DataError);
}
