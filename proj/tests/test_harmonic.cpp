#include "conewalk/errors.hpp"
#include "conewalk/harmonic.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace conewalk;
using namespace testing_support;

static double wedge_formula(int a, int b) { return (a + 2.0) * (b + 1.0) * (a - b + 1.0) * (a + b + 3.0) / 6.0; }

TEST_CASE("closed forms and their logarithms") {
    ClosedForm lin = ClosedForm::product({Factor{1, 1, 0, 1}});
    CHECK(lin(Point{4}) == 5.0);
    ClosedForm ex = ClosedForm::product({Factor{-1, 0, 2, 2}});
    CHECK(ex(Point{3}) == 15.0);
    CHECK(ex.log_value(Point{3}) == doctest::Approx(std::log(15.0)));
    double big = ex.log_value(Point{5000});
    CHECK(std::isfinite(big));
    CHECK(big == doctest::Approx(5001 * std::log(2.0)).epsilon(1e-12));
    ClosedForm w = ClosedForm::wedge_b2();
    CHECK(w(Point{0, 0}) == 1.0);
    CHECK(w(Point{5, 2}) == doctest::Approx(wedge_formula(5, 2)));
}

TEST_CASE("the wedge function is harmonic for the killed simple walk") {
    ConeRegion wedge(std::vector<Point>{{0, 1}, {1, -1}});
    for (int a = 0; a <= 20; ++a)
        for (int b = 0; b <= a; ++b) {
            double s = 0.0;
            for (auto [da, db] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                Point y{a + da, b + db};
                if (wedge.contains(y)) s += 0.25 * wedge_formula(y[0], y[1]);
            }
            CHECK(s == doctest::Approx(wedge_formula(a, b)).epsilon(1e-13));
        }
}

TEST_CASE("Doob transform of x+1 for the symmetric walk") {
    WindowModel model = make_model(walk_1d(Rational(1, 2)), half_line(), 50);
    HarmonicCandidate h = candidate_from(model.window_ptr(), ClosedForm::product({Factor{1, 1, 0, 1}}));
    TransformKernel t = doob_transform(*model.kernel, h);
    const StateWindow& w = model.window();
    for (int x : {0, 1, 10, 40}) {
        for (SparseRows::InnerIterator it(t.rows, w.index_of(Point{x})); it; ++it) {
            int y = w.point(static_cast<int>(it.col()))[0];
            double want = y == x + 1 ? (x + 2.0) / (2.0 * (x + 1)) : x / (2.0 * (x + 1));
            CHECK(it.value() == doctest::Approx(want));
        }
    }
    CHECK(t.max_row_deviation < 1e-12);
    HarmonicCandidate bad = candidate_from(model.window_ptr(), ClosedForm::product({Factor{1, 2, 0, 1}}));
    CHECK_THROWS_AS(doob_transform(*model.kernel, bad), NotHarmonic);
}

TEST_CASE("harmonic residual check") {
    KilledKernel k = build_killed_kernel(product_2d(), quadrant(), 20);
    HarmonicCandidate h = candidate_from(k.window_ptr(), ClosedForm::product({Factor{1, 1, 0, 1}, Factor{1, 1, 0, 1}}));
    HarmonicReport r = verify_harmonic(k, h, 8);
    CHECK(r.states > 0);
    CHECK(r.max_abs < 1e-12);
}

TEST_CASE("never-exit prediction matches the linear algebra for the symmetric walk") {
    WindowModel coarse = make_model(walk_1d(Rational(1, 2)), half_line(), 2000);
    WindowModel fine = make_model(walk_1d(Rational(1, 2)), half_line(), 4000);
    NeverExit ne = never_exit_check(coarse, fine, ClosedForm::product({Factor{1, 1, 0, 1}}), Point{1}, Point{1});
    CHECK(ne.predicted == doctest::Approx(2.0 / 3.0));
    CHECK(std::abs(ne.computed_fine - ne.predicted) < 1e-3);
}

TEST_CASE("Theorem 3 split with h = V has no ladder-harmonic part") {
    WindowModel model = make_model(walk_1d(Rational(1, 2)), half_line(), 400);
    LadderKernel lk = ladder_kernel(model);
    RenewalTable t = renewal_function(lk);
    Theorem3Options o;
    o.iterate = true;
    Theorem3Result r = theorem3_decomposition(model, lk, t.V, candidate_from_V(t.V), o);
    CHECK(r.h_tilde_norm < 1e-12);
    CHECK(r.residual < 1e-12);
}

TEST_CASE("functional relation residual for h = x+1 shrinks with the window") {
    std::vector<double> res;
    for (int m : {2000, 20000}) {
        WindowModel model = make_model(walk_1d(Rational(1, 2)), half_line(), m);
        HarmonicCandidate h = candidate_from(model.window_ptr(), ClosedForm::product({Factor{1, 1, 0, 1}}));
        res.push_back(functional_relation_residual(model, h, Point{2}, 10).max_abs);
    }
    CHECK(res[1] < res[0] / 5.0);
    CHECK(res[1] < 2e-3);
}
