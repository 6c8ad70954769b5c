#pragma once

#include <boost/rational.hpp>

#include <Eigen/SparseCore>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace conewalk {

using Point = std::vector<int>;
using Rational = boost::rational<long long>;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

Point add(const Point& a, const Point& b);
Point sub(const Point& a, const Point& b);
Point scale(const Point& a, int n);
Point zero_point(int d);
std::string to_string(const Point& x);

// Parses "1/3", "0.25", "2" into an exact rational.
Rational parse_rational(const std::string& text);

struct Step {
    Point v;
    double p = 0.0;
    Rational exact{0};
};

class StepDistribution {
public:
    static StepDistribution from_rationals(const std::vector<std::pair<Point, Rational>>& entries);
    static StepDistribution from_doubles(const std::vector<std::pair<Point, double>>& entries);

    int dim() const { return dim_; }
    const std::vector<Step>& steps() const { return steps_; }
    double mass() const { return mass_; }
    double defect() const { return 1.0 - mass_; }
    bool exact() const { return exact_; }
    Rational exact_mass() const { return exact_mass_; }
    double prob(const Point& s) const;
    int max_step_norm() const;  // max over the support of |s|_inf
    std::vector<double> mean_vector() const;

private:
    int dim_ = 0;
    std::vector<Step> steps_;  // sorted lexicographically by vector
    double mass_ = 0.0;
    Rational exact_mass_{0};
    bool exact_ = false;
};

class ConeRegion {
public:
    explicit ConeRegion(std::vector<Point> normals);
    int dim() const { return dim_; }
    const std::vector<Point>& normals() const { return normals_; }
    bool contains(const Point& x) const;
    bool contains(const int* x) const;

private:
    int dim_ = 0;
    std::vector<Point> normals_;
};

bool cone_contains(const ConeRegion& cone, const Point& x);

// Enumerates E ∩ [0,M]^d. States are ordered by box index, coordinate 0 slowest.
class StateWindow {
public:
    StateWindow(const ConeRegion& cone, int bound);

    int dim() const { return dim_; }
    int bound() const { return bound_; }
    int size() const { return static_cast<int>(box_of_state_.size()); }
    int origin() const { return origin_; }
    const ConeRegion& cone() const { return cone_; }

    const int* coords(int state) const { return coords_.data() + static_cast<std::size_t>(state) * dim_; }
    Point point(int state) const;
    // -1 when outside the box or outside the cone.
    int index_of(const Point& x) const;
    int index_of(const int* x) const;
    bool in_box(const int* x) const;
    // Largest coordinate, used for the safe sub-window |x|_inf <= s.
    int sup_norm(int state) const;

private:
    ConeRegion cone_;
    int dim_ = 0;
    int bound_ = 0;
    std::vector<int> coords_;
    std::vector<std::int64_t> box_of_state_;
    std::vector<int> state_of_box_;
    int origin_ = -1;
};

using WindowPtr = std::shared_ptr<const StateWindow>;

class KilledKernel {
public:
    KilledKernel(WindowPtr window, SparseRows rows, bool homogeneous,
                 std::optional<StepDistribution> mu);

    const StateWindow& window() const { return *window_; }
    WindowPtr window_ptr() const { return window_; }
    const SparseRows& rows() const { return rows_; }
    double theta_mass(int state) const { return theta_[static_cast<std::size_t>(state)]; }
    const std::vector<double>& theta() const { return theta_; }
    bool homogeneous() const { return homogeneous_; }
    // Present iff homogeneous.
    const StepDistribution& mu() const { return *mu_; }
    double p(int x, int y) const;
    int size() const { return window_->size(); }
    // Row x is interior when every reachable target of the full walk lies in the window,
    // i.e. the row is not cut by the box.
    bool interior_row(int x) const;

private:
    WindowPtr window_;
    SparseRows rows_;
    std::vector<double> theta_;
    bool homogeneous_ = false;
    std::optional<StepDistribution> mu_;
};

KilledKernel build_killed_kernel(const StepDistribution& mu, const ConeRegion& cone, WindowPtr window);
KilledKernel build_killed_kernel_serial(const StepDistribution& mu, const ConeRegion& cone, WindowPtr window);
KilledKernel build_killed_kernel(const StepDistribution& mu, const ConeRegion& cone, int bound);

// Kernel given by explicit rows (for perturbed, non-homogeneous test kernels).
KilledKernel kernel_from_rows(WindowPtr window, const std::vector<std::vector<std::pair<int, double>>>& rows);

struct TranslationViolation {
    Point x;
    Point y;
    double p_xy = 0.0;
    double p_shifted = 0.0;
};

struct TranslationReport {
    std::size_t pairs_checked = 0;
    std::size_t equalities = 0;
    std::size_t strict = 0;  // p(x+u,y+u) > p(x,y)
    std::vector<TranslationViolation> violations;
};

TranslationReport verify_translation_property(const KilledKernel& kernel, const Point& u);

// Assembles CSR rows from per-row (column, value) lists; duplicates are summed in list order.
SparseRows assemble_rows(int n, std::vector<std::vector<std::pair<int, double>>>& rows);

}  // namespace conewalk
