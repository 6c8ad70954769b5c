#pragma once

#include "conewalk/green.hpp"

#include <optional>
#include <vector>

namespace conewalk {

struct TiltSpec {
    std::vector<double> alpha;
    std::optional<int> truncation_level;
};

// R(alpha) = sum_x mu(x) e^<alpha,x>, with its gradient and Hessian.
double jump_mgf(const StepDistribution& mu, const std::vector<double>& alpha);
std::vector<double> mgf_gradient(const StepDistribution& mu, const std::vector<double>& alpha);
std::vector<std::vector<double>> mgf_hessian(const StepDistribution& mu, const std::vector<double>& alpha);

// The point of dD = {R = 1} maximizing <alpha,u>. Throws NoBoundary when min R >= 1 - tol.
std::vector<double> boundary_point(const StepDistribution& mu, const std::vector<double>& u, double tol = 1e-10);
// <alpha_u, u>, or 0 when D has no boundary.
double support_function(const StepDistribution& mu, const std::vector<double>& u, double tol = 1e-10);

// mu_k = (1 - 1/k) mu.
StepDistribution truncate_measure(const StepDistribution& mu, int k);
// e^<alpha,x> mu_k(x); throws MassNotOne unless the result is stochastic within tol.
StepDistribution truncate_and_tilt(const StepDistribution& mu, int k, const std::vector<double>& alpha,
                                   double tol = 1e-9);
StepDistribution tilt(const StepDistribution& mu, const std::vector<double>& alpha, double tol = 1e-9);

struct RateReport {
    std::vector<double> direction;
    std::vector<int> n;
    std::vector<double> values;  // (1/n) log of the measured quantity
    double predicted = 0.0;
    double extrapolated = 0.0;  // a in a least-squares fit a + b/n over the second half of the grid
};

double extrapolate_rate(const std::vector<int>& n, const std::vector<double>& values);

// (1/n) log G(n u, n v); predicted -sup_D <alpha, v - u>.
RateReport green_decay_rate(const WindowModel& model, const Point& u_dir, const Point& v_dir,
                            const std::vector<int>& n_grid);

struct SlowVariation {
    Point u;
    std::vector<Point> bases;
    std::vector<RateReport> forward;   // (1/n) log Q(x, x + n u)
    std::vector<RateReport> backward;  // (1/n) log Q(x + n u, x)
    double max_abs_final = 0.0;        // max |rate| at the last grid point
    bool monotone = true;              // |rate| non-increasing along the grid in every series
    bool passed = false;
};

// |rate| below `zero_floor` counts as zero in the monotonicity test (window truncation leaves ~1/M noise).
SlowVariation slow_variation_check(const WindowModel& model, const Point& u, const std::vector<int>& n_grid,
                                   const std::vector<Point>& bases, double rate_bound = 0.15,
                                   double zero_floor = 1e-4);

}  // namespace conewalk
