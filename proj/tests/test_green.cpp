#include "conewalk/errors.hpp"
#include "conewalk/green.hpp"
#include "conewalk/parallel.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace conewalk;
using namespace testing_support;

// Simple walk on {0..M}, killed at -1 and M+1: G(x,y) = 2 (min+1)(M+1-max) / (M+2).
static double ruin_green(int x, int y, int m) {
    int lo = std::min(x, y), hi = std::max(x, y);
    return 2.0 * (lo + 1) * (m + 1 - hi) / (m + 2);
}

TEST_CASE("1D symmetric Green function on a window") {
    const int m = 200;
    WindowModel model = make_model(walk_1d(Rational(1, 2)), half_line(), m);
    for (int x : {0, 3, 50, 200}) {
        GreenRow row = green_row(model, Point{x});
        for (int y : {0, 1, 7, 120, 200})
            CHECK(row.values[model.window().index_of(Point{y})] == doctest::Approx(ruin_green(x, y, m)).epsilon(1e-12));
    }
    CHECK(ruin_green(0, 0, m) == doctest::Approx(2.0 * (m + 1) / (m + 2)));
}

TEST_CASE("hitting probabilities match gambler's ruin") {
    // up 2/3: from n, reach 0 before M+1 with probability (r^n - r^(M+1)) / (1 - r^(M+1)), r = 1/2
    const int m = 80;
    WindowModel model = make_model(walk_1d(Rational(2, 3)), half_line(), m);
    for (int n : {1, 5, 20, 40}) {
        double r = 0.5;
        double want = (std::pow(r, n) - std::pow(r, m + 1)) / (1.0 - std::pow(r, m + 1));
        CHECK(hitting_probability(model, Point{n}, Point{0}) == doctest::Approx(want).epsilon(1e-10));
    }
    WindowModel sym = make_model(walk_1d(Rational(1, 2)), half_line(), m);
    CHECK(hitting_probability(sym, Point{4}, Point{0}) == doctest::Approx((m + 1.0 - 4.0) / (m + 1.0)));
    // Q(y,y) is the return probability 1 - 1/G(y,y)
    CHECK(hitting_probability(sym, Point{0}, Point{0}) == doctest::Approx(1.0 - 1.0 / ruin_green(0, 0, m)));
}

TEST_CASE("survival DP agrees with path enumeration") {
    KilledKernel k1 = build_killed_kernel(walk_1d(Rational(1, 2)), half_line(), 30);
    auto s = survival_sequence(k1, Point{0}, 3);
    CHECK(s[0] == 1.0);
    CHECK(s[1] == doctest::Approx(0.5));
    CHECK(s[3] == doctest::Approx(3.0 / 8.0));
    KilledKernel k2 = build_killed_kernel(product_2d(), quadrant(), 30);
    auto s2 = survival_sequence(k2, Point{1, 2}, 6);
    for (int n = 0; n <= 6; ++n)
        CHECK(s2[static_cast<std::size_t>(n)] ==
              doctest::Approx(brute_survival(product_2d(), quadrant(), Point{1, 2}, n)).epsilon(1e-13));
}

TEST_CASE("survival horizon must fit the window") {
    KilledKernel k = build_killed_kernel(walk_1d(Rational(1, 2)), half_line(), 10);
    CHECK_THROWS_AS(survival_sequence(k, Point{2}, 20), WindowTooSmallForHorizon);
}

TEST_CASE("parallel survival DP matches the serial reference bitwise") {
    set_threads(4);
    KilledKernel k = build_killed_kernel(simple_2d(), quadrant(), 60);
    std::vector<Point> xs = {{0, 0}, {1, 3}, {5, 5}, {2, 9}};
    auto a = survival_sequences(k, xs, 40);
    auto b = survival_sequences_serial(k, xs, 40);
    CHECK(a == b);
    set_threads(1);
}

TEST_CASE("the two formulas for A_u agree") {
    KilledKernel k = build_killed_kernel(simple_2d(), quadrant(), 10);
    const StateWindow& w = k.window();
    for (const Point& u : {Point{1, 0}, Point{1, 2}})
        for (const Point& x : {Point{0, 0}, Point{2, 1}, Point{4, 4}}) {
            auto a = a_row_general(k, u, w.index_of(x));
            auto b = a_row_homogeneous(k, u, w.index_of(x));
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            REQUIRE(a.size() == b.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                CHECK(a[i].first == b[i].first);
                CHECK(a[i].second == doctest::Approx(b[i].second).epsilon(1e-12));
            }
        }
}

TEST_CASE("Riesz split of E.(tau) for a drift toward the boundary") {
    // down 2/3: g(x) = E_x(tau) = 3 (x + 1), a pure potential
    const int m = 120;
    WindowModel model = make_model(walk_1d(Rational(1, 3)), half_line(), m);
    PotentialVector g{model.window_ptr(), model.green->apply(Eigen::VectorXd::Ones(model.window().size()))};
    for (int x : {0, 1, 5, 10}) CHECK(g.at(Point{x}) == doctest::Approx(3.0 * (x + 1)).epsilon(1e-9));
    RieszParts parts = riesz_decompose(model, g);
    for (int x : {0, 4, 9}) {
        CHECK(std::abs(parts.harmonic.at(Point{x})) < 1e-8);
        CHECK(parts.potential.at(Point{x}) == doctest::Approx(g.at(Point{x})));
    }
}
