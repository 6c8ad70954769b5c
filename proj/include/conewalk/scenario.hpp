#pragma once

#include "conewalk/harmonic.hpp"
#include "conewalk/ladder.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace conewalk {

struct Tolerances {
    double substochastic = 1e-10;
    double v_origin = 1e-8;
    double identity = 1e-6;
    double renewal_doubling = 1e-3;
    double wald = 1e-6;
    double ratio = 0.05;
    double ratio_gap = 0.01;
    double theorem1 = 1e-6;
    double theorem3_zero = 1e-4;
    double theorem3_residual = 1e-5;
    double tv = 0.02;
    double never_exit_slack = 0.02;
    double never_exit_la = 1e-3;
    double support = 1e-10;
    double tilt_rel = 0.1;
    double slow_rate = 0.15;
};

// Per-check parameters; defaults are filled from the dimension when absent.
struct Probes {
    Point ratio_x;
    int ratio_horizon = 5000;
    Point ladder_start;
    long ladder_replicas = 100000;
    int ladder_max_steps = 100000;
    Point never_exit_x, never_exit_u;
    long never_exit_replicas = 10000;
    int never_exit_horizon = 10000;
    Point rate_direction;  // forward / backward along this vector from e
    std::vector<int> rate_grid;
    Point slow_u;
    std::vector<Point> slow_bases;
    std::vector<int> slow_grid;
    int regime_bound = 0;  // first window of the regime doubling; 0 means window_bound / 4
    bool extrapolate = false;
};

struct Scenario {
    std::string name;
    int dimension = 0;
    StepDistribution mu;
    std::vector<Point> cone_normals;
    int window_bound = 0;
    int safe_bound = 8;
    std::uint64_t seed = 0;
    std::optional<Regime> regime;
    std::string tag = "centered";  // or "drifted"
    Tolerances tol;
    std::optional<ClosedForm> harmonic;
    Probes probes;
    std::string source;

    ConeRegion cone() const { return ConeRegion(cone_normals); }
    bool drifted() const { return tag == "drifted"; }
    int regime_bound() const { return probes.regime_bound > 0 ? probes.regime_bound : std::max(1, window_bound / 4); }
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");

}  // namespace conewalk
