#pragma once

#include "conewalk/green.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace conewalk {

enum class Regime { integrable, non_integrable, undetermined };

std::string to_string(Regime r);
Regime parse_regime(const std::string& s);

// One aggregated exit offset o = z + s (z in W, z + s outside E) with weight sum G(e,z) mu(s);
// for homogeneous walks p_H(x, x+o) collects these weights.
struct LayerTerm {
    Point offset;
    double weight = 0.0;
};

struct LadderKernel {
    WindowPtr window;
    SparseRows rows;
    std::vector<double> theta;
    std::vector<LayerTerm> layer;
    double max_row_sum = 0.0;

    int size() const { return static_cast<int>(rows.rows()); }
};

LadderKernel ladder_kernel(const WindowModel& model);
LadderKernel ladder_kernel_serial(const WindowModel& model);

// Large windows go through BiCGSTAB first; SparseLU is built only when that misses the residual bound.
class LadderSolver {
public:
    explicit LadderSolver(const LadderKernel& ladder);
    Eigen::VectorXd apply(const Eigen::VectorXd& rhs) const;  // (I - P_H)^{-1} rhs

    static constexpr int iterative_threshold = 2048;

private:
    bool acceptable(const Eigen::VectorXd& v, const Eigen::VectorXd& rhs) const;
    const Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>& lu() const;

    Eigen::SparseMatrix<double> a_;
    mutable std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>> lu_;
};

struct RenewalDiagnostics {
    int bound = 0;
    int fine_bound = 0;
    double max_rel_delta = 0.0;  // over the safe sub-window, between the two windows
    bool converged = false;
    bool extrapolated = false;
};

struct RenewalTable {
    PotentialVector V;
    Regime regime = Regime::undetermined;
    std::optional<RenewalDiagnostics> diagnostics;
};

// Solves (I - P_H) V = 1 on one window.
RenewalTable renewal_function(const LadderKernel& ladder);

struct RenewalOptions {
    int safe_bound = 8;
    double tol = 1e-3;         // window-doubling relative change
    bool extrapolate = false;  // 2 V_{2M} - V_M, assuming an O(1/M) truncation bias
};

struct RenewalStudy {
    WindowModel coarse_model, fine_model;
    LadderKernel coarse_ladder, fine_ladder;
    RenewalTable coarse, fine;
    RenewalTable table;  // on the coarse window: fine values, or the extrapolation
};

// Computes V on windows M and 2M and reports their agreement on the safe sub-window.
RenewalStudy renewal_with_doubling(const StepDistribution& mu, const ConeRegion& cone, int bound,
                                   const RenewalOptions& opts);

std::vector<int> safe_states(const StateWindow& w, int safe_bound);

// V(x+u) - V(x) - (G A_u V)(x).
double renewal_identity_residual(const WindowModel& model, const PotentialVector& V, const Point& x, const Point& u);

struct IdentityScan {
    double max_abs = 0.0;
    Point worst_x, worst_u;
    std::size_t pairs = 0;
};

// All (x,u) with x, u, x+u in the safe sub-window. `exterior` optionally supplies phi beyond the window.
IdentityScan scan_identity(const WindowModel& model, const PotentialVector& phi, int safe_bound,
                           const FieldFn& exterior = {});

struct RegimeReport {
    Regime regime = Regime::undetermined;
    std::vector<int> bounds;
    std::vector<double> g_origin;  // E_e(tau) per window
    std::vector<double> rel_deltas;
    PotentialVector g;  // g = E.(tau) on the largest window
};

// Solves g = 1 + P g on windows bound * 2^k, k = 0..doublings.
RegimeReport classify_regime(const StepDistribution& mu, const ConeRegion& cone, int bound, int doublings = 3,
                             double tol = 1e-3);

struct RatioReport {
    Point x;
    int horizon = 0;
    std::vector<double> f;  // f_n(x), n = 0..horizon
    double V = 0.0;
    double q_lower = 0.0;  // Q(x,e)
    double q_upper = 0.0;  // 1/Q(e,x)
    bool sandwich_ok = true;  // Q(x,e) <= f_horizon(x) <= 1/Q(e,x)
    double final_rel_error = 0.0;
    double min_tail_gap = 0.0;  // min over n >= horizon/2 of f_n(x) - V(x)
    double min_gap = 0.0;       // min over all n of f_n(x) - V(x)
};

// f_n(x) = P_x(tau > n) / P_e(tau > n) by exact DP; `survival_kernel` must cover the horizon.
RatioReport ratio_vs_V(const KilledKernel& survival_kernel, const WindowModel& green_model, double V_x,
                       const Point& x, int horizon);

}  // namespace conewalk
