#include "conewalk/errors.hpp"
#include "conewalk/ladder.hpp"
#include "conewalk/parallel.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace conewalk;
using namespace testing_support;

static double entry(const LadderKernel& lk, int x, int y) {
    for (SparseRows::InnerIterator it(lk.rows, x); it; ++it)
        if (it.col() == y) return it.value();
    return 0.0;
}

TEST_CASE("1D symmetric ladder steps one unit down") {
    // the only exit offset is -1, with weight G_M(0,0)/2 = (M+1)/(M+2)
    const int m = 100;
    WindowModel model = make_model(walk_1d(Rational(1, 2)), half_line(), m);
    LadderKernel lk = ladder_kernel(model);
    const StateWindow& w = model.window();
    REQUIRE(lk.layer.size() == 1);
    CHECK(lk.layer[0].offset == Point{-1});
    CHECK(lk.layer[0].weight == doctest::Approx((m + 1.0) / (m + 2.0)));
    CHECK(entry(lk, w.index_of(Point{3}), w.index_of(Point{2})) == doctest::Approx((m + 1.0) / (m + 2.0)));
    CHECK(lk.rows.row(w.origin()).sum() == 0.0);
    CHECK(lk.theta[static_cast<std::size_t>(w.origin())] == doctest::Approx(1.0));
    CHECK(lk.max_row_sum <= 1.0 + 1e-12);
}

TEST_CASE("renewal function of the drift-up walk") {
    // ladder exits below x with probability 1/2, so V(x) = 1 + V(x-1)/2, V(0) = 1
    WindowModel model = make_model(walk_1d(Rational(2, 3)), half_line(), 200);
    RenewalTable t = renewal_function(ladder_kernel(model));
    for (int x = 0; x <= 30; ++x) CHECK(t.V.at(Point{x}) == doctest::Approx(2.0 - std::pow(2.0, -x)).epsilon(1e-10));
}

TEST_CASE("renewal function of the drift-down walk is the normalised expected exit time") {
    WindowModel model = make_model(walk_1d(Rational(1, 3)), half_line(), 200);
    RenewalTable t = renewal_function(ladder_kernel(model));
    for (int x = 0; x <= 20; ++x) CHECK(t.V.at(Point{x}) == doctest::Approx(x + 1.0).epsilon(1e-10));
}

TEST_CASE("window doubling with extrapolation for the symmetric walk") {
    RenewalOptions o;
    o.safe_bound = 20;
    o.extrapolate = true;
    RenewalStudy st = renewal_with_doubling(walk_1d(Rational(1, 2)), half_line(), 50000, o);
    for (int x = 0; x <= 20; ++x) CHECK(std::abs(st.table.V.at(Point{x}) - (x + 1.0)) < 1e-6);
    CHECK(st.table.diagnostics->extrapolated);
    CHECK(std::abs(st.fine.V.at(Point{20}) - 21.0) > 1e-4);
}

TEST_CASE("2D ladder rows live outside E + x and are substochastic") {
    WindowModel model = make_model(simple_2d(), quadrant(), 24);
    LadderKernel lk = ladder_kernel(model);
    const StateWindow& w = model.window();
    CHECK(lk.max_row_sum <= 1.0 + 1e-10);
    for (int x = 0; x < w.size(); x += 7) {
        Point px = w.point(x);
        double s = lk.theta[static_cast<std::size_t>(x)];
        for (SparseRows::InnerIterator it(lk.rows, x); it; ++it) {
            CHECK_FALSE(w.cone().contains(sub(w.point(static_cast<int>(it.col())), px)));
            CHECK(it.value() >= 0.0);
            s += it.value();
        }
        CHECK(s <= 1.0 + 1e-10);
    }
}

TEST_CASE("parallel ladder assembly matches the serial reference bitwise") {
    set_threads(4);
    WindowModel model = make_model(product_2d(), quadrant(), 20);
    LadderKernel a = ladder_kernel(model);
    LadderKernel b = ladder_kernel_serial(model);
    REQUIRE(a.rows.nonZeros() == b.rows.nonZeros());
    for (int i = 0; i < a.rows.nonZeros(); ++i) CHECK(a.rows.valuePtr()[i] == b.rows.valuePtr()[i]);
    CHECK(a.theta == b.theta);
    set_threads(1);
}

TEST_CASE("the iterative ladder solve matches LU on a large window") {
    WindowModel model = make_model(simple_2d(), quadrant(), 50);
    LadderKernel lk = ladder_kernel(model);
    REQUIRE(lk.size() >= LadderSolver::iterative_threshold);
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(lk.size());
    Eigen::VectorXd v = LadderSolver(lk).apply(rhs);
    Eigen::SparseMatrix<double> p = lk.rows;
    Eigen::SparseMatrix<double> id(lk.size(), lk.size());
    id.setIdentity();
    Eigen::SparseMatrix<double> a = id - p;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
    Eigen::VectorXd ref = lu.solve(rhs);
    CHECK((v - ref).lpNorm<Eigen::Infinity>() < 1e-8 * ref.lpNorm<Eigen::Infinity>());
}

TEST_CASE("ratio f_n(x) tends to V(x) for the symmetric walk") {
    KilledKernel surv = build_killed_kernel(walk_1d(Rational(1, 2)), half_line(), 2000);
    WindowModel g = make_model(walk_1d(Rational(1, 2)), half_line(), 1000);
    RatioReport r = ratio_vs_V(surv, g, 6.0, Point{5}, 1500);
    CHECK(r.final_rel_error < 0.05);
    CHECK(r.sandwich_ok);
    CHECK(r.f.front() == 1.0);
}

TEST_CASE("regime classification") {
    RegimeReport down = classify_regime(walk_1d(Rational(1, 3)), half_line(), 40, 3);
    CHECK(down.regime == Regime::integrable);
    CHECK(down.g_origin.back() == doctest::Approx(3.0).epsilon(1e-8));
    RegimeReport sym = classify_regime(walk_1d(Rational(1, 2)), half_line(), 40, 3);
    CHECK(sym.regime == Regime::non_integrable);
    CHECK(parse_regime("integrable") == Regime::integrable);
    CHECK(to_string(Regime::non_integrable) == "non-integrable");
}

TEST_CASE("renewal identity holds on the window it was solved on") {
    WindowModel model = make_model(walk_1d(Rational(1, 2)), half_line(), 50000);
    RenewalTable t = renewal_function(ladder_kernel(model));
    IdentityScan scan = scan_identity(model, t.V, 10);
    CHECK(scan.pairs > 0);
    CHECK(scan.max_abs < 1e-6);
}
