#pragma once

#include "conewalk/ladder.hpp"

#include <string>
#include <vector>

namespace conewalk {

// a + b x + c r^x, one coordinate of a product harmonic function.
struct Factor {
    double constant = 0.0;
    double linear = 0.0;
    double exp_coeff = 0.0;
    double exp_base = 1.0;

    double operator()(int x) const;
    double log_value(int x) const;  // stays finite where r^x overflows
};

// Closed-form candidate on all of E.
class ClosedForm {
public:
    static ClosedForm product(std::vector<Factor> factors);
    // (a+2)(b+1)(a-b+1)(a+b+3)/6 on {0 <= b <= a}, harmonic for the simple walk there.
    static ClosedForm wedge_b2();

    double operator()(const Point& x) const;
    double log_value(const Point& x) const;
    FieldFn field() const;
    int dim() const { return dim_; }
    const std::string& kind() const { return kind_; }
    const std::vector<Factor>& factors() const { return factors_; }

private:
    std::string kind_;
    int dim_ = 0;
    std::vector<Factor> factors_;
};

enum class Provenance { explicit_formula, ratio_limit, renewal };
std::string to_string(Provenance p);

struct HarmonicCandidate {
    PotentialVector h;
    double h_e = 1.0;
    Provenance provenance = Provenance::explicit_formula;
    FieldFn exterior;  // values beyond the window, when known
};

HarmonicCandidate candidate_from(const WindowPtr& window, const ClosedForm& f);
HarmonicCandidate candidate_from_V(const PotentialVector& V);

struct HarmonicReport {
    double max_abs = 0.0;
    Point worst;
    std::size_t states = 0;
    std::vector<double> residuals;  // per checked state, in `checked` order
    std::vector<int> checked;
};

// (P h - h)(x) over the safe sub-window. Rows cut by the box are skipped unless an exterior is known.
HarmonicReport verify_harmonic(const KilledKernel& kernel, const HarmonicCandidate& h, int safe_bound);

struct StateResiduals {
    std::vector<int> states;
    std::vector<double> values;
    double max_abs = 0.0;
    Point worst;
};

// h(y+u) - h(y) - (G A_u h)(y) for y with y+u in the window (restricted to the safe sub-window when >= 0).
StateResiduals functional_relation_residual(const WindowModel& model, const HarmonicCandidate& h, const Point& u,
                                            int safe_bound = -1);

struct TransformKernel {
    WindowPtr window;
    SparseRows rows;
    double max_row_deviation = 0.0;  // |sum_y p_h(x,y) - 1| over checked rows
    std::size_t checked_rows = 0;
};

TransformKernel doob_transform(const KilledKernel& kernel, const HarmonicCandidate& h, double tol = 1e-10);

struct NeverExit {
    double predicted = 0.0;
    double computed_coarse = 0.0;
    double computed_fine = 0.0;
    double computed_lower = 0.0;
    double computed_upper = 0.0;
};

// predicted h(x)/h(x+u) against 1 - (G A_u h)(x)/h(x+u) on two windows.
NeverExit never_exit_check(const WindowModel& coarse, const WindowModel& fine, const ClosedForm& h, const Point& x,
                           const Point& u);

struct Theorem3Options {
    int safe_bound = 8;
    bool iterate = false;
    long max_iterations = 100000;
    double tol = 1e-12;
};

struct Theorem3Result {
    PotentialVector scaled_V;  // h(e) V
    PotentialVector h_tilde;
    double residual = 0.0;           // max |h - h(e)V - h_tilde| on the safe sub-window
    double h_tilde_norm = 0.0;       // max |h_tilde| on the safe sub-window
    double superharmonic_gap = 0.0;  // max (P_H h - h + h(e)), should be <= 0
    long iterations = 0;
};

// h_tilde = lim_n E_x(h(H_n); T_theta > n) for the ladder chain; mass leaving the window keeps
// its exterior h value when the candidate carries one.
Theorem3Result theorem3_decomposition(const WindowModel& model, const LadderKernel& ladder,
                                      const PotentialVector& V, const HarmonicCandidate& h,
                                      const Theorem3Options& opts = {});

// sum over layer terms with x+o in E but outside the window of weight * h(x+o).
Eigen::VectorXd ladder_exterior_flux(const LadderKernel& ladder, const FieldFn& exterior);

}  // namespace conewalk
