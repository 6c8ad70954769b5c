#include "conewalk/lattice.hpp"

#include "conewalk/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

namespace conewalk {

Point add(const Point& a, const Point& b) {
    if (a.size() != b.size()) throw DimensionMismatch("add: " + to_string(a) + " + " + to_string(b));
    Point r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Point sub(const Point& a, const Point& b) {
    if (a.size() != b.size()) throw DimensionMismatch("sub: " + to_string(a) + " - " + to_string(b));
    Point r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Point scale(const Point& a, int n) {
    Point r(a);
    for (auto& c : r) c *= n;
    return r;
}

Point zero_point(int d) { return Point(static_cast<std::size_t>(d), 0); }

std::string to_string(const Point& x) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    os << ')';
    return os.str();
}

Rational parse_rational(const std::string& raw) {
    std::string text;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) text.push_back(c);
    if (text.empty()) throw ParseError("empty probability");
    auto parse_int = [&](const std::string& s) -> long long {
        if (s.empty()) throw ParseError("bad number '" + raw + "'");
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &pos);
        } catch (const std::exception&) {
            throw ParseError("bad number '" + raw + "'");
        }
        if (pos != s.size()) throw ParseError("bad number '" + raw + "'");
        return v;
    };
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        long long den = parse_int(text.substr(slash + 1));
        if (den == 0) throw ParseError("zero denominator in '" + raw + "'");
        return Rational(parse_int(text.substr(0, slash)), den);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(parse_int(text));
    std::string whole = text.substr(0, dot);
    std::string frac = text.substr(dot + 1);
    if (frac.size() > 17) throw ParseError("too many decimals in '" + raw + "'");
    bool negative = !whole.empty() && whole[0] == '-';
    long long den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    long long w = (whole.empty() || whole == "-" || whole == "+") ? 0 : parse_int(whole);
    long long f = frac.empty() ? 0 : parse_int(frac);
    Rational r(std::llabs(w) * den + f, den);
    return negative ? -r : r;
}

namespace {

void check_dims(const std::vector<Point>& vs, int& dim) {
    if (vs.empty()) throw DimensionMismatch("empty step list");
    dim = static_cast<int>(vs.front().size());
    if (dim < 1) throw DimensionMismatch("zero-dimensional step");
    for (const auto& v : vs)
        if (static_cast<int>(v.size()) != dim)
            throw DimensionMismatch("step " + to_string(v) + " has dimension " + std::to_string(v.size()) +
                                    ", expected " + std::to_string(dim));
}

}  // namespace

StepDistribution StepDistribution::from_rationals(const std::vector<std::pair<Point, Rational>>& entries) {
    std::vector<Point> vs;
    for (const auto& e : entries) vs.push_back(e.first);
    StepDistribution out;
    check_dims(vs, out.dim_);
    std::map<Point, Rational> merged;
    for (const auto& [v, p] : entries) {
        if (p <= 0) throw NegativeProbability("step " + to_string(v) + " has non-positive probability");
        merged[v] += p;
    }
    Rational total(0);
    for (const auto& [v, p] : merged) {
        total += p;
        out.steps_.push_back(Step{v, boost::rational_cast<double>(p), p});
    }
    if (total > 1) throw MassExceedsOne("total mass " + std::to_string(boost::rational_cast<double>(total)));
    out.exact_ = true;
    out.exact_mass_ = total;
    out.mass_ = boost::rational_cast<double>(total);
    return out;
}

StepDistribution StepDistribution::from_doubles(const std::vector<std::pair<Point, double>>& entries) {
    std::vector<Point> vs;
    for (const auto& e : entries) vs.push_back(e.first);
    StepDistribution out;
    check_dims(vs, out.dim_);
    std::map<Point, double> merged;
    for (const auto& [v, p] : entries) {
        if (!(p > 0.0)) throw NegativeProbability("step " + to_string(v) + " has non-positive probability");
        merged[v] += p;
    }
    double total = 0.0;
    for (const auto& [v, p] : merged) {
        total += p;
        out.steps_.push_back(Step{v, p, Rational(0)});
    }
    if (total > 1.0 + 1e-12) throw MassExceedsOne("total mass " + std::to_string(total));
    out.exact_ = false;
    out.mass_ = std::min(total, 1.0);
    return out;
}

double StepDistribution::prob(const Point& s) const {
    auto it = std::lower_bound(steps_.begin(), steps_.end(), s,
                               [](const Step& a, const Point& b) { return a.v < b; });
    return (it != steps_.end() && it->v == s) ? it->p : 0.0;
}

int StepDistribution::max_step_norm() const {
    int m = 0;
    for (const auto& st : steps_)
        for (int c : st.v) m = std::max(m, std::abs(c));
    return m;
}

std::vector<double> StepDistribution::mean_vector() const {
    std::vector<double> m(static_cast<std::size_t>(dim_), 0.0);
    for (const auto& st : steps_)
        for (int i = 0; i < dim_; ++i) m[static_cast<std::size_t>(i)] += st.p * st.v[static_cast<std::size_t>(i)];
    return m;
}

ConeRegion::ConeRegion(std::vector<Point> normals) : normals_(std::move(normals)) {
    if (normals_.empty()) throw DimensionMismatch("cone needs at least one normal");
    dim_ = static_cast<int>(normals_.front().size());
    for (const auto& a : normals_)
        if (static_cast<int>(a.size()) != dim_) throw DimensionMismatch("normal " + to_string(a));
}

bool ConeRegion::contains(const int* x) const {
    for (const auto& a : normals_) {
        long long dot = 0;
        for (int i = 0; i < dim_; ++i) dot += static_cast<long long>(a[static_cast<std::size_t>(i)]) * x[i];
        if (dot < 0) return false;
    }
    return true;
}

bool ConeRegion::contains(const Point& x) const {
    if (static_cast<int>(x.size()) != dim_)
        throw DimensionMismatch("point " + to_string(x) + " in a " + std::to_string(dim_) + "-d cone");
    return contains(x.data());
}

bool cone_contains(const ConeRegion& cone, const Point& x) { return cone.contains(x); }

StateWindow::StateWindow(const ConeRegion& cone, int bound) : cone_(cone), dim_(cone.dim()), bound_(bound) {
    if (bound < 0) throw EmptyWindow("negative window bound");
    std::int64_t side = bound + 1;
    std::int64_t total = 1;
    for (int i = 0; i < dim_; ++i) total *= side;
    if (total > (std::int64_t(1) << 31)) throw EmptyWindow("window box too large");
    state_of_box_.assign(static_cast<std::size_t>(total), -1);
    Point x(static_cast<std::size_t>(dim_), 0);
    for (std::int64_t b = 0; b < total; ++b) {
        std::int64_t r = b;
        for (int i = dim_ - 1; i >= 0; --i) {
            x[static_cast<std::size_t>(i)] = static_cast<int>(r % side);
            r /= side;
        }
        if (!cone_.contains(x)) continue;
        state_of_box_[static_cast<std::size_t>(b)] = static_cast<int>(box_of_state_.size());
        box_of_state_.push_back(b);
        coords_.insert(coords_.end(), x.begin(), x.end());
    }
    if (box_of_state_.empty()) throw EmptyWindow("no cone states in [0," + std::to_string(bound) + "]^d");
    origin_ = index_of(zero_point(dim_));
    if (origin_ < 0) throw EmptyWindow("origin not in cone");
}

Point StateWindow::point(int state) const {
    const int* c = coords(state);
    return Point(c, c + dim_);
}

bool StateWindow::in_box(const int* x) const {
    for (int i = 0; i < dim_; ++i)
        if (x[i] < 0 || x[i] > bound_) return false;
    return true;
}

int StateWindow::index_of(const int* x) const {
    if (!in_box(x)) return -1;
    std::int64_t b = 0;
    for (int i = 0; i < dim_; ++i) b = b * (bound_ + 1) + x[i];
    return state_of_box_[static_cast<std::size_t>(b)];
}

int StateWindow::index_of(const Point& x) const {
    if (static_cast<int>(x.size()) != dim_) throw DimensionMismatch("point " + to_string(x));
    return index_of(x.data());
}

int StateWindow::sup_norm(int state) const {
    const int* c = coords(state);
    int m = 0;
    for (int i = 0; i < dim_; ++i) m = std::max(m, std::abs(c[i]));
    return m;
}

SparseRows assemble_rows(int n, std::vector<std::vector<std::pair<int, double>>>& rows) {
    SparseRows m(n, n);
    std::vector<int> counts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& r = rows[static_cast<std::size_t>(i)];
        std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t w = 0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (w > 0 && r[w - 1].first == r[k].first)
                r[w - 1].second += r[k].second;
            else
                r[w++] = r[k];
        }
        r.resize(w);
        counts[static_cast<std::size_t>(i)] = static_cast<int>(w);
    }
    m.reserve(counts);
    for (int i = 0; i < n; ++i)
        for (const auto& [j, v] : rows[static_cast<std::size_t>(i)]) m.insert(i, j) = v;
    m.makeCompressed();
    return m;
}

KilledKernel::KilledKernel(WindowPtr window, SparseRows rows, bool homogeneous, std::optional<StepDistribution> mu)
    : window_(std::move(window)), rows_(std::move(rows)), homogeneous_(homogeneous), mu_(std::move(mu)) {
    const int n = window_->size();
    theta_.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (SparseRows::InnerIterator it(rows_, i); it; ++it) s += it.value();
        theta_[static_cast<std::size_t>(i)] = std::max(0.0, 1.0 - s);
    }
}

double KilledKernel::p(int x, int y) const {
    const int* begin = rows_.innerIndexPtr() + rows_.outerIndexPtr()[x];
    const int* end = rows_.innerIndexPtr() + rows_.outerIndexPtr()[x + 1];
    const int* it = std::lower_bound(begin, end, y);
    if (it == end || *it != y) return 0.0;
    return rows_.valuePtr()[it - rows_.innerIndexPtr()];
}

bool KilledKernel::interior_row(int x) const {
    if (!homogeneous_) return true;
    const int d = window_->dim();
    const int* c = window_->coords(x);
    std::vector<int> y(static_cast<std::size_t>(d));
    for (const auto& st : mu_->steps()) {
        for (int i = 0; i < d; ++i) y[static_cast<std::size_t>(i)] = c[i] + st.v[static_cast<std::size_t>(i)];
        if (window_->cone().contains(y.data()) && !window_->in_box(y.data())) return false;
    }
    return true;
}

namespace {

std::vector<std::pair<int, double>> homogeneous_row(const StepDistribution& mu, const StateWindow& w, int x) {
    const int d = w.dim();
    const int* c = w.coords(x);
    std::vector<int> y(static_cast<std::size_t>(d));
    std::vector<std::pair<int, double>> row;
    row.reserve(mu.steps().size());
    for (const auto& st : mu.steps()) {
        for (int i = 0; i < d; ++i) y[static_cast<std::size_t>(i)] = c[i] + st.v[static_cast<std::size_t>(i)];
        int j = w.index_of(y.data());
        if (j >= 0) row.emplace_back(j, st.p);
    }
    return row;
}

void check_kernel_inputs(const StepDistribution& mu, const ConeRegion& cone, const StateWindow& w) {
    if (mu.dim() != cone.dim() || w.dim() != cone.dim())
        throw DimensionMismatch("step law, cone and window dimensions differ");
    if (w.size() == 0) throw EmptyWindow("window has no states");
}

}  // namespace

KilledKernel build_killed_kernel(const StepDistribution& mu, const ConeRegion& cone, WindowPtr window) {
    check_kernel_inputs(mu, cone, *window);
    const int n = window->size();
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (int x = 0; x < n; ++x) rows[static_cast<std::size_t>(x)] = homogeneous_row(mu, *window, x);
    SparseRows m = assemble_rows(n, rows);
    return KilledKernel(std::move(window), std::move(m), true, mu);
}

KilledKernel build_killed_kernel_serial(const StepDistribution& mu, const ConeRegion& cone, WindowPtr window) {
    check_kernel_inputs(mu, cone, *window);
    const int n = window->size();
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) rows[static_cast<std::size_t>(x)] = homogeneous_row(mu, *window, x);
    SparseRows m = assemble_rows(n, rows);
    return KilledKernel(std::move(window), std::move(m), true, mu);
}

KilledKernel build_killed_kernel(const StepDistribution& mu, const ConeRegion& cone, int bound) {
    return build_killed_kernel(mu, cone, std::make_shared<const StateWindow>(cone, bound));
}

KilledKernel kernel_from_rows(WindowPtr window, const std::vector<std::vector<std::pair<int, double>>>& rows) {
    const int n = window->size();
    if (static_cast<int>(rows.size()) != n) throw DimensionMismatch("row count differs from window size");
    auto copy = rows;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (const auto& [j, v] : copy[static_cast<std::size_t>(i)]) {
            if (j < 0 || j >= n) throw OutOfWindow("column " + std::to_string(j));
            if (v < 0) throw NegativeProbability("row " + std::to_string(i));
            s += v;
        }
        if (s > 1.0 + 1e-12) throw MassExceedsOne("row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
    SparseRows m = assemble_rows(n, copy);
    return KilledKernel(std::move(window), std::move(m), false, std::nullopt);
}

TranslationReport verify_translation_property(const KilledKernel& kernel, const Point& u) {
    const StateWindow& w = kernel.window();
    const int d = w.dim();
    if (static_cast<int>(u.size()) != d) throw DimensionMismatch("shift " + to_string(u));
    TranslationReport rep;
    const SparseRows& P = kernel.rows();
    std::vector<int> shifted(static_cast<std::size_t>(d));
    auto shift_index = [&](int s, int sign) {
        const int* c = w.coords(s);
        for (int i = 0; i < d; ++i) shifted[static_cast<std::size_t>(i)] = c[i] + sign * u[static_cast<std::size_t>(i)];
        return w.index_of(shifted.data());
    };
    for (int x = 0; x < w.size(); ++x) {
        int xu = shift_index(x, +1);
        if (xu < 0) continue;
        for (SparseRows::InnerIterator it(P, x); it; ++it) {
            int yu = shift_index(static_cast<int>(it.col()), +1);
            if (yu < 0) continue;
            ++rep.pairs_checked;
            double a = it.value();
            double b = kernel.p(xu, yu);
            if (b == a)
                ++rep.equalities;
            else if (b > a)
                ++rep.strict;
            else
                rep.violations.push_back({w.point(x), w.point(static_cast<int>(it.col())), a, b});
        }
        // pairs with p(x,y) = 0 < p(x+u,y+u)
        for (SparseRows::InnerIterator it(P, xu); it; ++it) {
            int y = shift_index(static_cast<int>(it.col()), -1);
            if (y < 0 || kernel.p(x, y) != 0.0) continue;
            ++rep.pairs_checked;
            ++rep.strict;
        }
    }
    return rep;
}

}  // namespace conewalk
