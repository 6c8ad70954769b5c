#pragma once

#include "conewalk/lattice.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace conewalk {

// A function on all of E; used to supply values beyond the window edge.
using FieldFn = std::function<double(const Point&)>;

struct PotentialVector {
    WindowPtr window;
    Eigen::VectorXd values;

    double at(const Point& x) const;
    double operator[](int state) const { return values[state]; }
};

struct GreenRow {
    int source = -1;
    WindowPtr window;
    Eigen::VectorXd values;
};

// Sparse LU factorization of I - P on the window.
class GreenSolver {
public:
    explicit GreenSolver(const KilledKernel& kernel);

    Eigen::VectorXd apply(const Eigen::VectorXd& phi) const;  // G phi, i.e. column action
    Eigen::VectorXd row(int x) const;                         // G(x, .)
    Eigen::VectorXd column(int y) const;                      // G(., y)
    int size() const { return n_; }

private:
    void check(const Eigen::VectorXd& rhs, const Eigen::VectorXd& sol, bool transposed) const;

    int n_ = 0;
    Eigen::SparseMatrix<double> a_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

// Kernel plus its factorization; the usual unit of work downstream.
struct WindowModel {
    std::shared_ptr<const KilledKernel> kernel;
    std::shared_ptr<const GreenSolver> green;

    const StateWindow& window() const { return kernel->window(); }
    WindowPtr window_ptr() const { return kernel->window_ptr(); }
};

WindowModel make_model(const StepDistribution& mu, const ConeRegion& cone, int bound);
WindowModel make_model(KilledKernel kernel);

GreenRow green_row(const WindowModel& model, const Point& x);
double hitting_probability(const WindowModel& model, const Point& x, const Point& y);

// P_x(tau > n) for n = 0..n_max by dynamic programming on the window.
std::vector<double> survival_sequence(const KilledKernel& kernel, const Point& x, int n_max);
std::vector<std::vector<double>> survival_sequences(const KilledKernel& kernel, const std::vector<Point>& xs,
                                                    int n_max);
std::vector<std::vector<double>> survival_sequences_serial(const KilledKernel& kernel,
                                                           const std::vector<Point>& xs, int n_max);

// (T_u phi)(x) = phi(x+u); entries with x+u outside the window read phi(theta) = 0.
PotentialVector apply_T(const Point& u, const PotentialVector& phi);
double apply_T_at(const Point& u, const PotentialVector& phi, const Point& x);

// Row x of a_u by the two-term formula; needs x+u in the window.
std::vector<std::pair<int, double>> a_row_general(const KilledKernel& kernel, const Point& u, int x);
// Row x of a_u for homogeneous kernels: mu(y-x-u) 1[y-u not in E], y in the window.
std::vector<std::pair<int, double>> a_row_homogeneous(const KilledKernel& kernel, const Point& u, int x);

// (A_u phi)(x). Homogeneous kernels use the shortcut (with a 1% sampled cross-check against
// the general formula) and accept an optional exterior field for phi beyond the window.
// General kernels: entries with x+u outside the window are NaN.
PotentialVector apply_A(const KilledKernel& kernel, const Point& u, const PotentialVector& phi,
                        const FieldFn& exterior = {});

PotentialVector green_apply(const WindowModel& model, const PotentialVector& phi);

struct RieszParts {
    PotentialVector harmonic;
    PotentialVector potential;
    long iterations = 0;
};

struct RieszOptions {
    double tol = 1e-10;
    long max_iterations = 1000000;
    double superharmonic_slack = 1e-9;
    bool iterate = false;  // run the Neumann iteration instead of the direct solve
};

// Splits superharmonic f into lim P^n f + G(f - Pf) for the chain stopped at the window edge.
// When `exterior` gives f on E beyond the window, mass leaving the window keeps its f-value;
// otherwise it is absorbed (f(theta) = 0).
RieszParts riesz_decompose(const WindowModel& model, const PotentialVector& f, const FieldFn& exterior = {},
                           const RieszOptions& opts = {});

// P phi on the window plus, when given, the exterior contribution sum_{y in E \ W} p(x,y) f(y).
Eigen::VectorXd apply_P(const KilledKernel& kernel, const Eigen::VectorXd& phi, const FieldFn& exterior = {});
Eigen::VectorXd exterior_flux(const KilledKernel& kernel, const FieldFn& exterior);

PotentialVector potential_from(const WindowPtr& window, const FieldFn& f);

void write_csv(std::ostream& os, const PotentialVector& v, const std::string& value_name = "value");
void write_csv(std::ostream& os, const GreenRow& row);

}  // namespace conewalk
