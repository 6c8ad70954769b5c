#include "conewalk/harmonic.hpp"

#include "conewalk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conewalk {

double Factor::operator()(int x) const {
    double v = constant + linear * x;
    if (exp_coeff != 0.0) v += exp_coeff * std::pow(exp_base, x);
    return v;
}

double Factor::log_value(int x) const {
    if (exp_coeff > 0.0 && exp_base > 1.0) {
        double l = std::log(exp_coeff) + x * std::log(exp_base);
        return l + std::log1p((constant + linear * x) * std::exp(-l));
    }
    return std::log((*this)(x));
}

ClosedForm ClosedForm::product(std::vector<Factor> factors) {
    if (factors.empty()) throw SchemaError("product harmonic needs one factor per coordinate");
    ClosedForm f;
    f.kind_ = "product";
    f.dim_ = static_cast<int>(factors.size());
    f.factors_ = std::move(factors);
    return f;
}

ClosedForm ClosedForm::wedge_b2() {
    ClosedForm f;
    f.kind_ = "wedge_b2";
    f.dim_ = 2;
    return f;
}

double ClosedForm::operator()(const Point& x) const {
    if (static_cast<int>(x.size()) != dim_) throw DimensionMismatch("closed form at " + to_string(x));
    if (kind_ == "wedge_b2") {
        double a = x[0], b = x[1];
        return (a + 2) * (b + 1) * (a - b + 1) * (a + b + 3) / 6.0;
    }
    double v = 1.0;
    for (int i = 0; i < dim_; ++i) v *= factors_[static_cast<std::size_t>(i)](x[static_cast<std::size_t>(i)]);
    return v;
}

double ClosedForm::log_value(const Point& x) const {
    if (kind_ == "wedge_b2") return std::log((*this)(x));
    if (static_cast<int>(x.size()) != dim_) throw DimensionMismatch("closed form at " + to_string(x));
    double v = 0.0;
    for (int i = 0; i < dim_; ++i) v += factors_[static_cast<std::size_t>(i)].log_value(x[static_cast<std::size_t>(i)]);
    return v;
}

FieldFn ClosedForm::field() const {
    ClosedForm copy = *this;
    return [copy](const Point& x) { return copy(x); };
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::explicit_formula: return "explicit";
        case Provenance::ratio_limit: return "ratio-limit";
        default: return "V";
    }
}

HarmonicCandidate candidate_from(const WindowPtr& window, const ClosedForm& f) {
    HarmonicCandidate c;
    c.h = potential_from(window, f.field());
    c.h_e = c.h.values[window->origin()];
    c.provenance = Provenance::explicit_formula;
    c.exterior = f.field();
    return c;
}

HarmonicCandidate candidate_from_V(const PotentialVector& V) {
    HarmonicCandidate c;
    c.h = V;
    c.h_e = V.values[V.window->origin()];
    c.provenance = Provenance::renewal;
    return c;
}

HarmonicReport verify_harmonic(const KilledKernel& kernel, const HarmonicCandidate& h, int safe_bound) {
    HarmonicReport rep;
    Eigen::VectorXd ph = apply_P(kernel, h.h.values, h.exterior);
    const StateWindow& w = kernel.window();
    for (int s : safe_states(w, safe_bound)) {
        if (!h.exterior && !kernel.interior_row(s)) continue;
        double r = ph[s] - h.h.values[s];
        rep.checked.push_back(s);
        rep.residuals.push_back(r);
        ++rep.states;
        if (std::abs(r) >= rep.max_abs) {
            rep.max_abs = std::abs(r);
            rep.worst = w.point(s);
        }
    }
    return rep;
}

StateResiduals functional_relation_residual(const WindowModel& model, const HarmonicCandidate& h, const Point& u,
                                            int safe_bound) {
    const StateWindow& w = model.window();
    PotentialVector av = apply_A(*model.kernel, u, h.h, h.exterior);
    Eigen::VectorXd gav = model.green->apply(av.values);
    StateResiduals out;
    for (int y = 0; y < w.size(); ++y) {
        if (safe_bound >= 0 && w.sup_norm(y) > safe_bound) continue;
        int j = w.index_of(add(w.point(y), u));
        if (j < 0) continue;
        double r = h.h.values[j] - h.h.values[y] - gav[y];
        out.states.push_back(y);
        out.values.push_back(r);
        if (std::abs(r) >= out.max_abs) {
            out.max_abs = std::abs(r);
            out.worst = w.point(y);
        }
    }
    return out;
}

TransformKernel doob_transform(const KilledKernel& kernel, const HarmonicCandidate& h, double tol) {
    const StateWindow& w = kernel.window();
    for (int s = 0; s < w.size(); ++s)
        if (!(h.h.values[s] > 0.0)) throw NonPositiveH("h(" + to_string(w.point(s)) + ") <= 0");
    const int n = w.size();
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x)
        for (SparseRows::InnerIterator it(kernel.rows(), x); it; ++it)
            rows[static_cast<std::size_t>(x)].emplace_back(static_cast<int>(it.col()),
                                                           it.value() * h.h.values[it.col()] / h.h.values[x]);
    TransformKernel out;
    out.window = kernel.window_ptr();
    out.rows = assemble_rows(n, rows);
    Eigen::VectorXd flux = exterior_flux(kernel, h.exterior);
    for (int x = 0; x < n; ++x) {
        if (!h.exterior && !kernel.interior_row(x)) continue;
        double s = flux[x] / h.h.values[x];
        for (SparseRows::InnerIterator it(out.rows, x); it; ++it) s += it.value();
        out.max_row_deviation = std::max(out.max_row_deviation, std::abs(s - 1.0));
        ++out.checked_rows;
    }
    if (out.max_row_deviation > tol)
        throw NotHarmonic("transform rows deviate from 1 by " + std::to_string(out.max_row_deviation));
    return out;
}

NeverExit never_exit_check(const WindowModel& coarse, const WindowModel& fine, const ClosedForm& h, const Point& x,
                           const Point& u) {
    NeverExit out;
    Point xu = add(x, u);
    out.predicted = h(x) / h(xu);
    auto computed = [&](const WindowModel& m) {
        const StateWindow& w = m.window();
        int ix = w.index_of(x);
        if (ix < 0 || w.index_of(xu) < 0) throw OutOfWindow("never-exit start " + to_string(xu));
        PotentialVector hv = potential_from(m.window_ptr(), h.field());
        PotentialVector av = apply_A(*m.kernel, u, hv, h.field());
        Eigen::VectorXd gav = m.green->apply(av.values);
        return 1.0 - gav[ix] / h(xu);
    };
    out.computed_coarse = computed(coarse);
    out.computed_fine = computed(fine);
    out.computed_lower = std::min(out.computed_coarse, out.computed_fine);
    out.computed_upper = std::max(out.computed_coarse, out.computed_fine);
    return out;
}

Eigen::VectorXd ladder_exterior_flux(const LadderKernel& ladder, const FieldFn& exterior) {
    const StateWindow& w = *ladder.window;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(w.size());
    if (!exterior) return b;
    const int d = w.dim();
    std::vector<int> y(static_cast<std::size_t>(d));
    for (int x = 0; x < w.size(); ++x) {
        const int* c = w.coords(x);
        double s = 0.0;
        for (const auto& t : ladder.layer) {
            for (int i = 0; i < d; ++i) y[static_cast<std::size_t>(i)] = c[i] + t.offset[static_cast<std::size_t>(i)];
            if (w.cone().contains(y.data()) && !w.in_box(y.data())) s += t.weight * exterior(Point(y.begin(), y.end()));
        }
        b[x] = s;
    }
    return b;
}

Theorem3Result theorem3_decomposition(const WindowModel& model, const LadderKernel& ladder,
                                      const PotentialVector& V, const HarmonicCandidate& h,
                                      const Theorem3Options& opts) {
    (void)model;
    Theorem3Result out;
    out.scaled_V = PotentialVector{V.window, h.h_e * V.values};
    Eigen::VectorXd b = ladder_exterior_flux(ladder, h.exterior);
    Eigen::VectorXd ph = ladder.rows * h.h.values + b;
    Eigen::VectorXd tilde;
    if (!opts.iterate) {
        tilde = LadderSolver(ladder).apply(b);
    } else {
        Eigen::VectorXd psi = h.h.values;
        bool done = false;
        double prev = std::numeric_limits<double>::infinity();
        for (long it = 1; it <= opts.max_iterations; ++it) {
            Eigen::VectorXd next = ladder.rows * psi + b;
            double inc = (next - psi).lpNorm<Eigen::Infinity>();
            psi.swap(next);
            out.iterations = it;
            if (!std::isfinite(inc)) break;
            if (inc < opts.tol) {
                done = true;
                break;
            }
            // geometric decay: remaining change bounded by inc * q / (1 - q)
            double q = inc / prev;
            if (it > 10 && q < 1.0 && inc * q / (1.0 - q) < opts.tol) {
                done = true;
                break;
            }
            prev = inc;
        }
        if (!done) throw IterationDivergence("h_tilde iteration did not settle in " + std::to_string(out.iterations));
        tilde = psi;
    }
    out.h_tilde = PotentialVector{V.window, tilde};
    const StateWindow& w = *V.window;
    out.superharmonic_gap = -std::numeric_limits<double>::infinity();
    for (int s : safe_states(w, opts.safe_bound)) {
        out.residual = std::max(out.residual, std::abs(h.h.values[s] - out.scaled_V.values[s] - tilde[s]));
        out.h_tilde_norm = std::max(out.h_tilde_norm, std::abs(tilde[s]));
        double gap = ph[s] - h.h.values[s] + h.h_e;
        out.superharmonic_gap = std::max(out.superharmonic_gap, gap);
    }
    return out;
}

}  // namespace conewalk
