#include "conewalk/green.hpp"

#include "conewalk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace conewalk {

double PotentialVector::at(const Point& x) const {
    int i = window->index_of(x);
    if (i < 0) throw OutOfWindow("point " + to_string(x));
    return values[i];
}

GreenSolver::GreenSolver(const KilledKernel& kernel) : n_(kernel.size()) {
    Eigen::SparseMatrix<double> p = kernel.rows();
    Eigen::SparseMatrix<double> id(n_, n_);
    id.setIdentity();
    a_ = id - p;
    a_.makeCompressed();
    lu_.analyzePattern(a_);
    lu_.factorize(a_);
    if (lu_.info() != Eigen::Success)
        throw SolverFailure("I - P is singular on the window (closed class without killing?): " + lu_.lastErrorMessage());
}

void GreenSolver::check(const Eigen::VectorXd& rhs, const Eigen::VectorXd& sol, bool transposed) const {
    if (!sol.allFinite()) throw SolverFailure("non-finite Green solve");
    Eigen::VectorXd r = transposed ? Eigen::VectorXd(a_.transpose() * sol - rhs) : Eigen::VectorXd(a_ * sol - rhs);
    double scale = std::max({1.0, sol.lpNorm<Eigen::Infinity>(), rhs.lpNorm<Eigen::Infinity>()});
    if (r.lpNorm<Eigen::Infinity>() > 1e-10 * scale)
        throw SolverFailure("Green solve residual " + std::to_string(r.lpNorm<Eigen::Infinity>()));
}

Eigen::VectorXd GreenSolver::apply(const Eigen::VectorXd& phi) const {
    Eigen::VectorXd g = lu_.solve(phi);
    check(phi, g, false);
    return g;
}

Eigen::VectorXd GreenSolver::column(int y) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
    e[y] = 1.0;
    return apply(e);
}

Eigen::VectorXd GreenSolver::row(int x) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
    e[x] = 1.0;
    auto& lu = const_cast<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>&>(lu_);
    Eigen::VectorXd g = lu.transpose().solve(e);
    check(e, g, true);
    return g;
}

WindowModel make_model(KilledKernel kernel) {
    auto k = std::make_shared<const KilledKernel>(std::move(kernel));
    auto g = std::make_shared<const GreenSolver>(*k);
    return WindowModel{k, g};
}

WindowModel make_model(const StepDistribution& mu, const ConeRegion& cone, int bound) {
    return make_model(build_killed_kernel(mu, cone, bound));
}

namespace {

int require_index(const StateWindow& w, const Point& x) {
    int i = w.index_of(x);
    if (i < 0) throw OutOfWindow("point " + to_string(x) + " not in window [0," + std::to_string(w.bound()) + "]");
    return i;
}

}  // namespace

GreenRow green_row(const WindowModel& model, const Point& x) {
    int i = require_index(model.window(), x);
    return GreenRow{i, model.window_ptr(), model.green->row(i)};
}

double hitting_probability(const WindowModel& model, const Point& x, const Point& y) {
    int i = require_index(model.window(), x);
    int j = require_index(model.window(), y);
    Eigen::VectorXd col = model.green->column(j);
    if (i == j) return 1.0 - 1.0 / col[j];
    return col[i] / col[j];
}

namespace {

void matvec(const SparseRows& p, const Eigen::VectorXd& in, Eigen::VectorXd& out, bool parallel) {
    const int n = static_cast<int>(p.rows());
    const int* outer = p.outerIndexPtr();
    const int* inner = p.innerIndexPtr();
    const double* val = p.valuePtr();
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = outer[i]; k < outer[i + 1]; ++k) s += val[k] * in[inner[k]];
            out[i] = s;
        }
    } else {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = outer[i]; k < outer[i + 1]; ++k) s += val[k] * in[inner[k]];
            out[i] = s;
        }
    }
}

std::vector<std::vector<double>> survival_impl(const KilledKernel& kernel, const std::vector<Point>& xs, int n_max,
                                               bool parallel) {
    const StateWindow& w = kernel.window();
    if (n_max < 0) throw WindowTooSmallForHorizon("negative horizon");
    std::vector<int> idx;
    for (const auto& x : xs) {
        int i = require_index(w, x);
        if (kernel.homogeneous()) {
            long long reach = static_cast<long long>(n_max) * kernel.mu().max_step_norm();
            for (int c : x)
                if (c + reach > w.bound())
                    throw WindowTooSmallForHorizon("start " + to_string(x) + " with horizon " + std::to_string(n_max) +
                                                   " needs bound >= " + std::to_string(c + reach));
        }
        idx.push_back(i);
    }
    std::vector<std::vector<double>> out(xs.size(), std::vector<double>(static_cast<std::size_t>(n_max) + 1));
    Eigen::VectorXd cur = Eigen::VectorXd::Ones(kernel.size());
    Eigen::VectorXd next(kernel.size());
    for (int n = 0;; ++n) {
        for (std::size_t k = 0; k < idx.size(); ++k) out[k][static_cast<std::size_t>(n)] = cur[idx[k]];
        if (n == n_max) break;
        matvec(kernel.rows(), cur, next, parallel);
        cur.swap(next);
    }
    return out;
}

}  // namespace

std::vector<std::vector<double>> survival_sequences(const KilledKernel& kernel, const std::vector<Point>& xs,
                                                    int n_max) {
    return survival_impl(kernel, xs, n_max, true);
}

std::vector<std::vector<double>> survival_sequences_serial(const KilledKernel& kernel, const std::vector<Point>& xs,
                                                           int n_max) {
    return survival_impl(kernel, xs, n_max, false);
}

std::vector<double> survival_sequence(const KilledKernel& kernel, const Point& x, int n_max) {
    return survival_impl(kernel, {x}, n_max, true).front();
}

PotentialVector apply_T(const Point& u, const PotentialVector& phi) {
    const StateWindow& w = *phi.window;
    if (static_cast<int>(u.size()) != w.dim()) throw DimensionMismatch("shift " + to_string(u));
    PotentialVector out{phi.window, Eigen::VectorXd::Zero(w.size())};
    std::vector<int> y(static_cast<std::size_t>(w.dim()));
    for (int x = 0; x < w.size(); ++x) {
        const int* c = w.coords(x);
        for (int i = 0; i < w.dim(); ++i) y[static_cast<std::size_t>(i)] = c[i] + u[static_cast<std::size_t>(i)];
        int j = w.index_of(y.data());
        if (j >= 0) out.values[x] = phi.values[j];
    }
    return out;
}

double apply_T_at(const Point& u, const PotentialVector& phi, const Point& x) {
    return phi.values[require_index(*phi.window, add(x, u))];
}

std::vector<std::pair<int, double>> a_row_general(const KilledKernel& kernel, const Point& u, int x) {
    const StateWindow& w = kernel.window();
    const ConeRegion& cone = w.cone();
    const int d = w.dim();
    Point px = w.point(x);
    int xu = w.index_of(add(px, u));
    if (xu < 0) throw OutOfWindow("x+u = " + to_string(add(px, u)));
    std::vector<std::pair<int, double>> cand;
    for (SparseRows::InnerIterator it(kernel.rows(), xu); it; ++it) cand.emplace_back(static_cast<int>(it.col()), 0.0);
    for (SparseRows::InnerIterator it(kernel.rows(), x); it; ++it) {
        int yu = w.index_of(add(w.point(static_cast<int>(it.col())), u));
        if (yu >= 0) cand.emplace_back(yu, 0.0);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end(), [](auto& a, auto& b) { return a.first == b.first; }), cand.end());
    std::vector<std::pair<int, double>> out;
    std::vector<int> ymu(static_cast<std::size_t>(d));
    for (auto& [y, v] : cand) {
        const int* cy = w.coords(y);
        for (int i = 0; i < d; ++i) ymu[static_cast<std::size_t>(i)] = cy[i] - u[static_cast<std::size_t>(i)];
        double a = kernel.p(xu, y);
        if (cone.contains(ymu.data())) {
            int z = w.index_of(ymu.data());
            if (z >= 0) a -= kernel.p(x, z);
        }
        if (a < -1e-15)
            throw NegativeAEntry("a_u(" + to_string(px) + "," + to_string(w.point(y)) + ") = " + std::to_string(a));
        if (a > 0) out.emplace_back(y, a);
    }
    return out;
}

std::vector<std::pair<int, double>> a_row_homogeneous(const KilledKernel& kernel, const Point& u, int x) {
    const StateWindow& w = kernel.window();
    const int d = w.dim();
    const int* c = w.coords(x);
    std::vector<int> z(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d));
    std::vector<std::pair<int, double>> out;
    for (const auto& st : kernel.mu().steps()) {
        for (int i = 0; i < d; ++i) {
            z[static_cast<std::size_t>(i)] = c[i] + st.v[static_cast<std::size_t>(i)];
            y[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + u[static_cast<std::size_t>(i)];
        }
        if (w.cone().contains(z.data())) continue;
        int j = w.index_of(y.data());
        if (j >= 0) out.emplace_back(j, st.p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

void cross_check_shortcut(const KilledKernel& kernel, const Point& u) {
    const StateWindow& w = kernel.window();
    std::vector<int> eligible;
    for (int x = 0; x < w.size(); ++x)
        if (w.index_of(add(w.point(x), u)) >= 0) eligible.push_back(x);
    if (eligible.empty()) return;
    std::size_t stride = std::max<std::size_t>(1, eligible.size() / std::max<std::size_t>(1, eligible.size() / 100));
    for (std::size_t k = 0; k < eligible.size(); k += stride) {
        int x = eligible[k];
        auto g = a_row_general(kernel, u, x);
        auto h = a_row_homogeneous(kernel, u, x);
        // merge duplicates in the shortcut row
        std::vector<std::pair<int, double>> hm;
        for (auto& e : h) {
            if (!hm.empty() && hm.back().first == e.first)
                hm.back().second += e.second;
            else
                hm.push_back(e);
        }
        bool same = g.size() == hm.size();
        for (std::size_t i = 0; same && i < g.size(); ++i)
            same = g[i].first == hm[i].first && std::abs(g[i].second - hm[i].second) <= 1e-15;
        if (!same)
            throw std::logic_error("a_u shortcut disagrees with the two-term formula at x = " + to_string(w.point(x)));
    }
}

}  // namespace

PotentialVector apply_A(const KilledKernel& kernel, const Point& u, const PotentialVector& phi,
                        const FieldFn& exterior) {
    const StateWindow& w = kernel.window();
    const int d = w.dim();
    if (static_cast<int>(u.size()) != d) throw DimensionMismatch("shift " + to_string(u));
    if (!w.cone().contains(u)) throw OutOfWindow("shift " + to_string(u) + " is not in E");
    PotentialVector out{phi.window, Eigen::VectorXd::Zero(w.size())};
    bool zero_shift = std::all_of(u.begin(), u.end(), [](int c) { return c == 0; });
    if (zero_shift) return out;
    if (kernel.homogeneous()) {
        cross_check_shortcut(kernel, u);
        const auto& steps = kernel.mu().steps();
        std::vector<int> z(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d));
        for (int x = 0; x < w.size(); ++x) {
            const int* c = w.coords(x);
            double s = 0.0;
            for (const auto& st : steps) {
                for (int i = 0; i < d; ++i) {
                    z[static_cast<std::size_t>(i)] = c[i] + st.v[static_cast<std::size_t>(i)];
                    y[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + u[static_cast<std::size_t>(i)];
                }
                if (w.cone().contains(z.data())) continue;
                int j = w.index_of(y.data());
                if (j >= 0)
                    s += st.p * phi.values[j];
                else if (exterior && w.cone().contains(y.data()))
                    s += st.p * exterior(Point(y.begin(), y.end()));
            }
            out.values[x] = s;
        }
        return out;
    }
    for (int x = 0; x < w.size(); ++x) {
        if (w.index_of(add(w.point(x), u)) < 0) {
            out.values[x] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        double s = 0.0;
        for (const auto& [y, a] : a_row_general(kernel, u, x)) s += a * phi.values[y];
        out.values[x] = s;
    }
    return out;
}

PotentialVector green_apply(const WindowModel& model, const PotentialVector& phi) {
    return PotentialVector{model.window_ptr(), model.green->apply(phi.values)};
}

Eigen::VectorXd exterior_flux(const KilledKernel& kernel, const FieldFn& exterior) {
    const StateWindow& w = kernel.window();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(w.size());
    if (!exterior || !kernel.homogeneous()) return b;
    const int d = w.dim();
    std::vector<int> y(static_cast<std::size_t>(d));
    for (int x = 0; x < w.size(); ++x) {
        const int* c = w.coords(x);
        double s = 0.0;
        for (const auto& st : kernel.mu().steps()) {
            for (int i = 0; i < d; ++i) y[static_cast<std::size_t>(i)] = c[i] + st.v[static_cast<std::size_t>(i)];
            if (w.cone().contains(y.data()) && !w.in_box(y.data())) s += st.p * exterior(Point(y.begin(), y.end()));
        }
        b[x] = s;
    }
    return b;
}

Eigen::VectorXd apply_P(const KilledKernel& kernel, const Eigen::VectorXd& phi, const FieldFn& exterior) {
    Eigen::VectorXd out(kernel.size());
    matvec(kernel.rows(), phi, out, true);
    if (exterior) out += exterior_flux(kernel, exterior);
    return out;
}

RieszParts riesz_decompose(const WindowModel& model, const PotentialVector& f, const FieldFn& exterior,
                           const RieszOptions& opts) {
    const KilledKernel& k = *model.kernel;
    Eigen::VectorXd b = exterior_flux(k, exterior);
    Eigen::VectorXd pf(k.size());
    matvec(k.rows(), f.values, pf, true);
    pf += b;
    for (int x = 0; x < k.size(); ++x)
        if (pf[x] > f.values[x] + opts.superharmonic_slack * std::max(1.0, std::abs(f.values[x])))
            throw NotSuperharmonic("Pf > f at " + to_string(k.window().point(x)));
    RieszParts out{PotentialVector{f.window, {}}, PotentialVector{f.window, {}}, 0};
    out.potential.values = model.green->apply(f.values - pf);
    if (!opts.iterate) {
        // lim_n of psi_{n+1} = P psi_n + b is G b, since P^n f -> 0 on the finite window
        out.harmonic.values = model.green->apply(b);
        return out;
    }
    Eigen::VectorXd psi = f.values, next(k.size());
    double last = std::numeric_limits<double>::infinity();
    for (long n = 1; n <= opts.max_iterations; ++n) {
        matvec(k.rows(), psi, next, true);
        next += b;
        double inc = (next - psi).lpNorm<Eigen::Infinity>();
        psi.swap(next);
        out.iterations = n;
        if (inc < opts.tol) {
            out.harmonic.values = psi;
            return out;
        }
        if (!std::isfinite(inc) || (n > 1000 && inc > 10 * last)) break;
        if (n == 1000) last = inc;
    }
    throw IterationDivergence("Riesz iteration did not settle after " + std::to_string(out.iterations) + " steps");
}

PotentialVector potential_from(const WindowPtr& window, const FieldFn& f) {
    PotentialVector v{window, Eigen::VectorXd(window->size())};
    for (int i = 0; i < window->size(); ++i) v.values[i] = f(window->point(i));
    return v;
}

void write_csv(std::ostream& os, const PotentialVector& v, const std::string& value_name) {
    const StateWindow& w = *v.window;
    for (int i = 0; i < w.dim(); ++i) os << 'x' << (i + 1) << ',';
    os << value_name << '\n';
    os.precision(17);
    for (int s = 0; s < w.size(); ++s) {
        const int* c = w.coords(s);
        for (int i = 0; i < w.dim(); ++i) os << c[i] << ',';
        os << v.values[s] << '\n';
    }
}

void write_csv(std::ostream& os, const GreenRow& row) {
    write_csv(os, PotentialVector{row.window, row.values}, "G");
}

}  // namespace conewalk
