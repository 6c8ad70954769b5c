#include "conewalk/errors.hpp"
#include "conewalk/tilting.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace conewalk;
using namespace testing_support;

TEST_CASE("moment generating function of the drift-up walk") {
    StepDistribution mu = walk_1d(Rational(2, 3));
    CHECK(jump_mgf(mu, {0.0}) == doctest::Approx(1.0));
    CHECK(jump_mgf(mu, {-std::log(2.0)}) == doctest::Approx(1.0));
    CHECK(jump_mgf(mu, {1.0}) == doctest::Approx(2.0 / 3.0 * std::exp(1.0) + 1.0 / 3.0 * std::exp(-1.0)));
}

TEST_CASE("gradient and Hessian against finite differences") {
    StepDistribution mu = StepDistribution::from_rationals(
        {{{1, 0}, Rational(1, 2)}, {{-1, 1}, Rational(1, 4)}, {{0, -1}, Rational(1, 4)}});
    std::vector<double> a = {0.3, -0.2};
    auto g = mgf_gradient(mu, a);
    auto h = mgf_hessian(mu, a);
    const double eps = 1e-6;
    for (int i = 0; i < 2; ++i) {
        auto ap = a, am = a;
        ap[static_cast<std::size_t>(i)] += eps;
        am[static_cast<std::size_t>(i)] -= eps;
        CHECK(g[static_cast<std::size_t>(i)] == doctest::Approx((jump_mgf(mu, ap) - jump_mgf(mu, am)) / (2 * eps)).epsilon(1e-7));
        auto gp = mgf_gradient(mu, ap), gm = mgf_gradient(mu, am);
        for (int j = 0; j < 2; ++j)
            CHECK(h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
                  doctest::Approx((gp[static_cast<std::size_t>(j)] - gm[static_cast<std::size_t>(j)]) / (2 * eps)).epsilon(1e-6));
    }
}

TEST_CASE("R is convex along random segments") {
    StepDistribution mu = product_2d();
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> a = {u(eng), u(eng)}, b = {u(eng), u(eng)}, m = {(a[0] + b[0]) / 2, (a[1] + b[1]) / 2};
        CHECK(jump_mgf(mu, m) <= 0.5 * (jump_mgf(mu, a) + jump_mgf(mu, b)) + 1e-12);
    }
}

TEST_CASE("support function") {
    StepDistribution up = walk_1d(Rational(2, 3));
    CHECK(support_function(up, {-1.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(std::abs(support_function(up, {1.0})) < 1e-9);
    for (const StepDistribution& mu : {walk_1d(Rational(1, 2)), simple_2d(), product_2d()}) {
        std::vector<std::vector<double>> dirs = mu.dim() == 1 ? std::vector<std::vector<double>>{{1.0}, {-1.0}}
                                                              : std::vector<std::vector<double>>{{1, 0}, {0, -1}, {1, 1}, {-2, 1}};
        for (const auto& d : dirs) CHECK(std::abs(support_function(mu, d)) <= 1e-10);
    }
    // theta = acosh(1/0.9) bounds D for the truncated symmetric law 0.9 cosh(alpha)
    StepDistribution t = truncate_measure(walk_1d(Rational(1, 2)), 10);
    CHECK(t.mass() == doctest::Approx(0.9));
    CHECK(support_function(t, {1.0}) == doctest::Approx(std::acosh(1.0 / 0.9)).epsilon(1e-9));
    CHECK(support_function(t, {-1.0}) == doctest::Approx(std::acosh(1.0 / 0.9)).epsilon(1e-9));
    std::vector<double> bp = boundary_point(t, {1.0});
    CHECK(jump_mgf(t, bp) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("tilting needs a boundary point") {
    StepDistribution up = walk_1d(Rational(2, 3));
    StepDistribution t = tilt(up, {-std::log(2.0)});
    CHECK(t.prob({1}) == doctest::Approx(1.0 / 3.0));
    CHECK(t.prob({-1}) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(tilt(up, {0.5}), MassNotOne);
    double a = std::acosh(1.0 / 0.9);
    StepDistribution tt = truncate_and_tilt(walk_1d(Rational(1, 2)), 10, {a});
    CHECK(tt.mass() == doctest::Approx(1.0));
}

TEST_CASE("rate extrapolation recovers the constant of a + b/n") {
    std::vector<int> n = {10, 20, 40, 80, 160};
    std::vector<double> v;
    for (int k : n) v.push_back(-0.5 + 3.0 / k);
    CHECK(extrapolate_rate(n, v) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("backward rate of the drift-up walk is -log 2") {
    WindowModel model = make_model(walk_1d(Rational(2, 3)), half_line(), 400);
    SlowVariation sv = slow_variation_check(model, Point{1}, {20, 40, 60}, {Point{0}});
    CHECK(sv.backward[0].values.back() == doctest::Approx(-std::log(2.0)).epsilon(1e-6));
    CHECK(sv.backward[0].predicted == doctest::Approx(-std::log(2.0)).epsilon(1e-9));
    CHECK_FALSE(sv.passed);
}

TEST_CASE("slow variation holds for the symmetric walk") {
    WindowModel model = make_model(walk_1d(Rational(1, 2)), half_line(), 20000);
    SlowVariation sv = slow_variation_check(model, Point{1}, {5, 10, 20, 40}, {Point{0}, Point{3}});
    CHECK(sv.max_abs_final < 0.15);
    CHECK(sv.monotone);
    CHECK(sv.passed);
}
