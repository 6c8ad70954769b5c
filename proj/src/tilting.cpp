#include "conewalk/tilting.hpp"

#include "conewalk/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace conewalk {

namespace {

double dot(const Point& s, const std::vector<double>& a) {
    double v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) v += s[i] * a[i];
    return v;
}

void check_dim(const StepDistribution& mu, std::size_t n, const char* what) {
    if (static_cast<int>(n) != mu.dim()) throw DimensionMismatch(what);
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }
std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// log R and its first two derivatives at alpha.
struct LogMgf {
    double value;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

LogMgf log_mgf(const StepDistribution& mu, const Eigen::VectorXd& a) {
    const int d = mu.dim();
    // shift exponents by their max to keep e^<a,s> finite
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& s : mu.steps()) top = std::max(top, dot(s.v, to_std(a)));
    double r = 0.0;
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : mu.steps()) {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = s.v[static_cast<std::size_t>(i)];
        double w = s.p * std::exp(v.dot(a) - top);
        r += w;
        m1 += w * v;
        m2 += w * v * v.transpose();
    }
    LogMgf out;
    out.value = std::log(r) + top;
    out.grad = m1 / r;
    out.hess = m2 / r - out.grad * out.grad.transpose();
    return out;
}

// argmin of log R(a) - t <a,u> by damped Newton from `a`.
Eigen::VectorXd tilted_minimizer(const StepDistribution& mu, const Eigen::VectorXd& u, double t, Eigen::VectorXd a) {
    auto obj = [&](const Eigen::VectorXd& b) { return log_mgf(mu, b).value - t * u.dot(b); };
    for (int it = 0; it < 200; ++it) {
        LogMgf f = log_mgf(mu, a);
        Eigen::VectorXd g = f.grad - t * u;
        if (g.lpNorm<Eigen::Infinity>() < 1e-14) return a;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(f.hess);
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
            throw NonConvergence("degenerate Hessian of log R; the support does not span the space");
        Eigen::VectorXd step = ldlt.solve(g);
        double f0 = f.value - t * u.dot(a);
        double lam = 1.0;
        while (lam > 1e-12 && !(obj(a - lam * step) <= f0 - 1e-4 * lam * g.dot(step))) lam *= 0.5;
        if (lam <= 1e-12) return a;  // at the floating-point floor
        a -= lam * step;
        if (lam * step.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + a.lpNorm<Eigen::Infinity>())) return a;
        if (a.lpNorm<Eigen::Infinity>() > 1e3) throw NonConvergence("D is unbounded in this direction");
    }
    throw NonConvergence("Newton on log R did not converge");
}

}  // namespace

double jump_mgf(const StepDistribution& mu, const std::vector<double>& alpha) {
    check_dim(mu, alpha.size(), "alpha");
    double r = 0.0;
    for (const auto& s : mu.steps()) r += s.p * std::exp(dot(s.v, alpha));
    return r;
}

std::vector<double> mgf_gradient(const StepDistribution& mu, const std::vector<double>& alpha) {
    check_dim(mu, alpha.size(), "alpha");
    std::vector<double> g(alpha.size(), 0.0);
    for (const auto& s : mu.steps()) {
        double w = s.p * std::exp(dot(s.v, alpha));
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * s.v[i];
    }
    return g;
}

std::vector<std::vector<double>> mgf_hessian(const StepDistribution& mu, const std::vector<double>& alpha) {
    check_dim(mu, alpha.size(), "alpha");
    const std::size_t d = alpha.size();
    std::vector<std::vector<double>> h(d, std::vector<double>(d, 0.0));
    for (const auto& s : mu.steps()) {
        double w = s.p * std::exp(dot(s.v, alpha));
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) h[i][j] += w * s.v[i] * s.v[j];
    }
    return h;
}

std::vector<double> boundary_point(const StepDistribution& mu, const std::vector<double>& u_in, double tol) {
    check_dim(mu, u_in.size(), "direction");
    Eigen::VectorXd u = to_eigen(u_in);
    if (u.norm() == 0.0) throw std::invalid_argument("direction must be nonzero");
    u /= u.norm();
    const int d = mu.dim();
    Eigen::VectorXd a0 = tilted_minimizer(mu, u, 0.0, Eigen::VectorXd::Zero(d));
    double g0 = log_mgf(mu, a0).value;
    if (g0 >= std::log1p(-tol)) throw NoBoundary("min R = " + std::to_string(std::exp(g0)) + ", D has no interior");
    // On the curve a(t) = argmin log R - t<a,u>, log R(a(t)) increases from g0; find its zero.
    Eigen::VectorXd warm = a0;
    auto g = [&](double t) {
        warm = tilted_minimizer(mu, u, t, warm);
        return log_mgf(mu, warm).value;
    };
    double lo = 0.0, hi = 0.25;
    while (g(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw NonConvergence("no boundary crossing along the tilt curve");
    }
    boost::uintmax_t iters = 200;
    auto [t_lo, t_hi] = boost::math::tools::toms748_solve(
        g, lo, hi, [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::max(1.0, std::abs(b)); }, iters);
    Eigen::VectorXd a = tilted_minimizer(mu, u, 0.5 * (t_lo + t_hi), warm);
    // polish R(a) = 1 along the gradient direction
    for (int it = 0; it < 20; ++it) {
        LogMgf f = log_mgf(mu, a);
        if (std::abs(f.value) < 1e-15) break;
        a -= f.value / f.grad.squaredNorm() * f.grad;
    }
    std::vector<double> out = to_std(a);
    double r = jump_mgf(mu, out);
    if (std::abs(r - 1.0) > tol) throw NonConvergence("R(alpha_u) = " + std::to_string(r));
    return out;
}

double support_function(const StepDistribution& mu, const std::vector<double>& u, double tol) {
    try {
        auto a = boundary_point(mu, u, tol);
        double v = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) v += a[i] * u[i];
        return v;
    } catch (const NoBoundary&) {
        return 0.0;
    }
}

StepDistribution truncate_measure(const StepDistribution& mu, int k) {
    if (k < 2) throw std::invalid_argument("truncation level must be >= 2");
    if (mu.exact()) {
        std::vector<std::pair<Point, Rational>> e;
        for (const auto& s : mu.steps()) e.emplace_back(s.v, s.exact * Rational(k - 1, k));
        return StepDistribution::from_rationals(e);
    }
    std::vector<std::pair<Point, double>> e;
    for (const auto& s : mu.steps()) e.emplace_back(s.v, s.p * (1.0 - 1.0 / k));
    return StepDistribution::from_doubles(e);
}

StepDistribution tilt(const StepDistribution& mu, const std::vector<double>& alpha, double tol) {
    check_dim(mu, alpha.size(), "alpha");
    double r = jump_mgf(mu, alpha);
    if (std::abs(r - 1.0) > tol) throw MassNotOne("tilted mass " + std::to_string(r));
    std::vector<std::pair<Point, double>> e;
    for (const auto& s : mu.steps()) e.emplace_back(s.v, s.p * std::exp(dot(s.v, alpha)) / r);
    return StepDistribution::from_doubles(e);
}

StepDistribution truncate_and_tilt(const StepDistribution& mu, int k, const std::vector<double>& alpha,
                                   double tol) {
    return tilt(truncate_measure(mu, k), alpha, tol);
}

double extrapolate_rate(const std::vector<int>& n, const std::vector<double>& values) {
    std::size_t start = n.size() / 2;
    if (n.size() - start < 2) return values.empty() ? 0.0 : values.back();
    const auto m = static_cast<Eigen::Index>(n.size() - start);
    Eigen::MatrixXd a(m, 2);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = 1.0 / n[start + static_cast<std::size_t>(i)];
        b[i] = values[start + static_cast<std::size_t>(i)];
    }
    return a.colPivHouseholderQr().solve(b)[0];
}

namespace {

void check_grid(const StateWindow& w, const std::vector<int>& grid, int reach, const std::string& what) {
    if (grid.empty()) throw std::invalid_argument("empty n grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw std::invalid_argument("n grid must be strictly increasing");
    if (reach > w.bound())
        throw WindowTooSmallForHorizon(what + " reaches " + std::to_string(reach) + " beyond window bound " +
                                       std::to_string(w.bound()));
}

int sup(const Point& p) {
    int m = 0;
    for (int c : p) m = std::max(m, std::abs(c));
    return m;
}

int state_of(const StateWindow& w, const Point& x) {
    int i = w.index_of(x);
    if (i < 0) throw OutOfWindow("rate point " + to_string(x) + " is not in the window");
    return i;
}

}  // namespace

RateReport green_decay_rate(const WindowModel& model, const Point& u_dir, const Point& v_dir,
                            const std::vector<int>& n_grid) {
    const StateWindow& w = model.window();
    check_grid(w, n_grid, n_grid.empty() ? 0 : n_grid.back() * std::max(sup(u_dir), sup(v_dir)), "green decay");
    RateReport rep;
    Point diff = sub(v_dir, u_dir);
    rep.direction.assign(diff.begin(), diff.end());
    rep.n = n_grid;
    for (int n : n_grid) {
        int ix = state_of(w, scale(u_dir, n));
        int iy = state_of(w, scale(v_dir, n));
        double g = model.green->column(iy)[ix];
        rep.values.push_back(std::log(g) / n);
    }
    const KilledKernel& k = *model.kernel;
    rep.predicted = k.homogeneous() ? -support_function(k.mu(), rep.direction) : std::nan("");
    rep.extrapolated = extrapolate_rate(rep.n, rep.values);
    return rep;
}

SlowVariation slow_variation_check(const WindowModel& model, const Point& u, const std::vector<int>& n_grid,
                                   const std::vector<Point>& bases, double rate_bound, double zero_floor) {
    const StateWindow& w = model.window();
    int reach = 0;
    for (const auto& x : bases) reach = std::max(reach, sup(x) + (n_grid.empty() ? 0 : n_grid.back()) * sup(u));
    check_grid(w, n_grid, reach, "slow variation");
    SlowVariation out;
    out.u = u;
    out.bases = bases;
    const KilledKernel& k = *model.kernel;
    std::vector<double> dir(u.begin(), u.end());
    auto finish = [&](RateReport& r, const std::vector<double>& pred_dir) {
        r.n = n_grid;
        r.predicted = k.homogeneous() ? -support_function(k.mu(), pred_dir) : std::nan("");
        r.extrapolated = extrapolate_rate(r.n, r.values);
        out.max_abs_final = std::max(out.max_abs_final, std::abs(r.values.back()));
        for (std::size_t i = 1; i < r.values.size(); ++i)
            if (std::abs(r.values[i]) > std::max(std::abs(r.values[i - 1]), zero_floor)) out.monotone = false;
    };
    std::vector<double> neg(dir.size());
    for (std::size_t i = 0; i < dir.size(); ++i) neg[i] = -dir[i];
    for (const auto& x : bases) {
        int ix = state_of(w, x);
        Eigen::VectorXd cx = model.green->column(ix);
        RateReport fwd, bwd;
        fwd.direction = dir;
        bwd.direction = neg;
        for (int n : n_grid) {
            int iy = state_of(w, add(x, scale(u, n)));
            Eigen::VectorXd cy = model.green->column(iy);
            fwd.values.push_back(std::log(cy[ix] / cy[iy]) / n);
            bwd.values.push_back(std::log(cx[iy] / cx[ix]) / n);
        }
        // Q(x, x+nu) ~ G(0, nu): prediction along +u; the backward one along -u
        finish(fwd, dir);
        finish(bwd, neg);
        out.forward.push_back(std::move(fwd));
        out.backward.push_back(std::move(bwd));
    }
    out.passed = out.monotone && out.max_abs_final < rate_bound;
    return out;
}

}  // namespace conewalk
