#include "conewalk/ladder.hpp"

#include "conewalk/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace conewalk {

std::string to_string(Regime r) {
    switch (r) {
        case Regime::integrable: return "integrable";
        case Regime::non_integrable: return "non-integrable";
        default: return "undetermined";
    }
}

Regime parse_regime(const std::string& s) {
    if (s == "integrable") return Regime::integrable;
    if (s == "non-integrable") return Regime::non_integrable;
    if (s == "undetermined") return Regime::undetermined;
    throw SchemaError("regime must be integrable, non-integrable or undetermined, got '" + s + "'");
}

namespace {

std::vector<LayerTerm> boundary_layer(const WindowModel& model) {
    const KilledKernel& k = *model.kernel;
    if (!k.homogeneous()) throw std::invalid_argument("ladder kernel needs a homogeneous walk");
    const StateWindow& w = k.window();
    const int d = w.dim();
    Eigen::VectorXd ge = model.green->row(w.origin());
    std::map<Point, double> agg;
    Point o(static_cast<std::size_t>(d));
    for (int z = 0; z < w.size(); ++z) {
        if (ge[z] == 0.0) continue;
        const int* c = w.coords(z);
        for (const auto& st : k.mu().steps()) {
            for (int i = 0; i < d; ++i) o[static_cast<std::size_t>(i)] = c[i] + st.v[static_cast<std::size_t>(i)];
            if (w.cone().contains(o)) continue;
            agg[o] += ge[z] * st.p;
        }
    }
    std::vector<LayerTerm> layer;
    layer.reserve(agg.size());
    for (auto& [off, wt] : agg) layer.push_back({off, wt});
    return layer;
}

std::vector<std::pair<int, double>> ladder_row(const StateWindow& w, const std::vector<LayerTerm>& layer, int x) {
    const int d = w.dim();
    const int* c = w.coords(x);
    std::vector<int> y(static_cast<std::size_t>(d));
    std::vector<std::pair<int, double>> row;
    for (const auto& t : layer) {
        for (int i = 0; i < d; ++i) y[static_cast<std::size_t>(i)] = c[i] + t.offset[static_cast<std::size_t>(i)];
        int j = w.index_of(y.data());
        if (j >= 0) row.emplace_back(j, t.weight);
    }
    return row;
}

LadderKernel finish_ladder(const WindowModel& model, std::vector<LayerTerm> layer,
                           std::vector<std::vector<std::pair<int, double>>>& rows) {
    const int n = model.window().size();
    LadderKernel out;
    out.window = model.window_ptr();
    out.rows = assemble_rows(n, rows);
    out.layer = std::move(layer);
    out.theta.assign(static_cast<std::size_t>(n), 0.0);
    for (int x = 0; x < n; ++x) {
        double s = 0.0;
        for (SparseRows::InnerIterator it(out.rows, x); it; ++it) s += it.value();
        out.max_row_sum = std::max(out.max_row_sum, s);
        if (s > 1.0 + 1e-10)
            throw RowSumExceedsOne("p_H row " + to_string(model.window().point(x)) + " sums to " + std::to_string(s));
        out.theta[static_cast<std::size_t>(x)] = std::max(0.0, 1.0 - s);
    }
    return out;
}

}  // namespace

LadderKernel ladder_kernel(const WindowModel& model) {
    auto layer = boundary_layer(model);
    const StateWindow& w = model.window();
    const int n = w.size();
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 64)
    for (int x = 0; x < n; ++x) rows[static_cast<std::size_t>(x)] = ladder_row(w, layer, x);
    return finish_ladder(model, std::move(layer), rows);
}

LadderKernel ladder_kernel_serial(const WindowModel& model) {
    auto layer = boundary_layer(model);
    const StateWindow& w = model.window();
    const int n = w.size();
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) rows[static_cast<std::size_t>(x)] = ladder_row(w, layer, x);
    return finish_ladder(model, std::move(layer), rows);
}

LadderSolver::LadderSolver(const LadderKernel& ladder) {
    const int n = ladder.size();
    Eigen::SparseMatrix<double> p = ladder.rows;
    Eigen::SparseMatrix<double> id(n, n);
    id.setIdentity();
    a_ = id - p;
    a_.makeCompressed();
    if (n < iterative_threshold) lu();
}

const Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>& LadderSolver::lu() const {
    if (!lu_) {
        auto f = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>();
        f->analyzePattern(a_);
        f->factorize(a_);
        if (f->info() != Eigen::Success) throw SolverFailure("I - P_H singular: " + f->lastErrorMessage());
        lu_ = std::move(f);
    }
    return *lu_;
}

bool LadderSolver::acceptable(const Eigen::VectorXd& v, const Eigen::VectorXd& rhs) const {
    if (!v.allFinite()) return false;
    double res = (a_ * v - rhs).lpNorm<Eigen::Infinity>();
    return res <= 1e-10 * std::max({1.0, v.lpNorm<Eigen::Infinity>(), rhs.lpNorm<Eigen::Infinity>()});
}

Eigen::VectorXd LadderSolver::apply(const Eigen::VectorXd& rhs) const {
    if (!lu_) {
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>> it;
        it.setTolerance(1e-15);
        it.setMaxIterations(20000);
        it.compute(a_);
        Eigen::VectorXd v = it.solve(rhs);
        if (acceptable(v, rhs)) return v;
    }
    Eigen::VectorXd v = lu().solve(rhs);
    if (!v.allFinite()) throw SolverFailure("non-finite ladder solve");
    if (!acceptable(v, rhs)) {
        double res = (a_ * v - rhs).lpNorm<Eigen::Infinity>();
        throw SolverFailure("ladder solve residual " + std::to_string(res));
    }
    return v;
}

RenewalTable renewal_function(const LadderKernel& ladder) {
    Eigen::VectorXd v = LadderSolver(ladder).apply(Eigen::VectorXd::Ones(ladder.size()));
    return RenewalTable{PotentialVector{ladder.window, v}, Regime::undetermined, std::nullopt};
}

std::vector<int> safe_states(const StateWindow& w, int safe_bound) {
    std::vector<int> out;
    for (int s = 0; s < w.size(); ++s)
        if (w.sup_norm(s) <= safe_bound) out.push_back(s);
    return out;
}

RenewalStudy renewal_with_doubling(const StepDistribution& mu, const ConeRegion& cone, int bound,
                                   const RenewalOptions& opts) {
    RenewalStudy st;
    st.coarse_model = make_model(mu, cone, bound);
    st.fine_model = make_model(mu, cone, 2 * bound);
    st.coarse_ladder = ladder_kernel(st.coarse_model);
    st.fine_ladder = ladder_kernel(st.fine_model);
    st.coarse = renewal_function(st.coarse_ladder);
    st.fine = renewal_function(st.fine_ladder);
    const StateWindow& cw = st.coarse_model.window();
    const StateWindow& fw = st.fine_model.window();
    PotentialVector v{st.coarse_model.window_ptr(), Eigen::VectorXd(cw.size())};
    for (int s = 0; s < cw.size(); ++s) {
        double f = st.fine.V.values[fw.index_of(cw.coords(s))];
        v.values[s] = opts.extrapolate ? 2.0 * f - st.coarse.V.values[s] : f;
    }
    RenewalDiagnostics dg;
    dg.bound = bound;
    dg.fine_bound = 2 * bound;
    dg.extrapolated = opts.extrapolate;
    for (int s : safe_states(cw, opts.safe_bound)) {
        double f = st.fine.V.values[fw.index_of(cw.coords(s))];
        dg.max_rel_delta = std::max(dg.max_rel_delta, std::abs(f - st.coarse.V.values[s]) / std::abs(f));
    }
    dg.converged = dg.max_rel_delta < opts.tol;
    st.table = RenewalTable{v, Regime::undetermined, dg};
    return st;
}

double renewal_identity_residual(const WindowModel& model, const PotentialVector& V, const Point& x, const Point& u) {
    const StateWindow& w = model.window();
    int ix = w.index_of(x);
    int ixu = w.index_of(add(x, u));
    if (ix < 0 || ixu < 0) throw OutOfWindow("x = " + to_string(x) + ", u = " + to_string(u));
    PotentialVector av = apply_A(*model.kernel, u, V);
    Eigen::VectorXd gav = model.green->apply(av.values);
    return V.values[ixu] - V.values[ix] - gav[ix];
}

IdentityScan scan_identity(const WindowModel& model, const PotentialVector& phi, int safe_bound,
                           const FieldFn& exterior) {
    const StateWindow& w = model.window();
    IdentityScan out;
    auto safe = safe_states(w, safe_bound);
    for (int us : safe) {
        Point u = w.point(us);
        PotentialVector av = apply_A(*model.kernel, u, phi, exterior);
        Eigen::VectorXd gav = model.green->apply(av.values);
        for (int xs : safe) {
            Point x = w.point(xs);
            Point xu = add(x, u);
            int j = w.index_of(xu);
            if (j < 0 || w.sup_norm(j) > safe_bound) continue;
            double r = phi.values[j] - phi.values[xs] - gav[xs];
            ++out.pairs;
            if (std::abs(r) > out.max_abs || out.worst_x.empty()) {
                out.max_abs = std::max(out.max_abs, std::abs(r));
                out.worst_x = x;
                out.worst_u = u;
            }
        }
    }
    return out;
}

RegimeReport classify_regime(const StepDistribution& mu, const ConeRegion& cone, int bound, int doublings,
                             double tol) {
    RegimeReport rep;
    for (int k = 0; k <= doublings; ++k) {
        int m = bound << k;
        WindowModel model = make_model(mu, cone, m);
        Eigen::VectorXd g = model.green->apply(Eigen::VectorXd::Ones(model.window().size()));
        rep.bounds.push_back(m);
        rep.g_origin.push_back(g[model.window().origin()]);
        if (k > 0) rep.rel_deltas.push_back((rep.g_origin[k] - rep.g_origin[k - 1]) / rep.g_origin[k]);
        if (k == doublings) rep.g = PotentialVector{model.window_ptr(), g};
    }
    if (rep.rel_deltas.empty()) return rep;
    double last = rep.rel_deltas.back();
    bool all_large = std::all_of(rep.rel_deltas.begin(), rep.rel_deltas.end(), [&](double d) { return d >= tol; });
    if (std::abs(last) < tol)
        rep.regime = Regime::integrable;
    else if (all_large && rep.rel_deltas.size() >= 3 && last > rep.rel_deltas.front() / 8.0)
        rep.regime = Regime::non_integrable;
    return rep;
}

RatioReport ratio_vs_V(const KilledKernel& survival_kernel, const WindowModel& green_model, double V_x,
                       const Point& x, int horizon) {
    RatioReport rep;
    rep.x = x;
    rep.horizon = horizon;
    rep.V = V_x;
    Point e = zero_point(static_cast<int>(x.size()));
    auto seqs = survival_sequences(survival_kernel, {x, e}, horizon);
    rep.f.resize(static_cast<std::size_t>(horizon) + 1);
    for (int n = 0; n <= horizon; ++n)
        rep.f[static_cast<std::size_t>(n)] = seqs[0][static_cast<std::size_t>(n)] / seqs[1][static_cast<std::size_t>(n)];
    const StateWindow& w = green_model.window();
    int ix = w.index_of(x);
    int ie = w.origin();
    if (ix < 0) throw OutOfWindow("ratio point " + to_string(x));
    Eigen::VectorXd ce = green_model.green->column(ie);
    Eigen::VectorXd cx = green_model.green->column(ix);
    rep.q_lower = ix == ie ? 1.0 : ce[ix] / ce[ie];
    // Q(e,x) = G(e,x)/G(x,x)
    rep.q_upper = ix == ie ? 1.0 : cx[ix] / cx[ie];
    rep.min_gap = rep.min_tail_gap = std::numeric_limits<double>::infinity();
    double last = rep.f.back();
    rep.sandwich_ok = last >= rep.q_lower - 1e-12 && last <= rep.q_upper + 1e-12;
    for (int n = 0; n <= horizon; ++n) {
        double f = rep.f[static_cast<std::size_t>(n)];
        rep.min_gap = std::min(rep.min_gap, f - V_x);
        if (2 * n >= horizon) rep.min_tail_gap = std::min(rep.min_tail_gap, f - V_x);
    }
    rep.final_rel_error = std::abs(rep.f.back() - V_x) / V_x;
    return rep;
}

}  // namespace conewalk
