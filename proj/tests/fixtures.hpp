#pragma once

#include "conewalk/lattice.hpp"

#include <functional>
#include <vector>

namespace testing_support {

using conewalk::ConeRegion;
using conewalk::Point;
using conewalk::Rational;
using conewalk::StepDistribution;

inline StepDistribution walk_1d(Rational up) {
    return StepDistribution::from_rationals({{{1}, up}, {{-1}, Rational(1) - up}});
}

inline StepDistribution simple_2d() {
    Rational q(1, 4);
    return StepDistribution::from_rationals({{{1, 0}, q}, {{-1, 0}, q}, {{0, 1}, q}, {{0, -1}, q}});
}

inline StepDistribution product_2d() {
    Rational q(1, 4);
    return StepDistribution::from_rationals({{{1, 1}, q}, {{1, -1}, q}, {{-1, 1}, q}, {{-1, -1}, q}});
}

inline ConeRegion half_line() { return ConeRegion(std::vector<Point>{{1}}); }
inline ConeRegion quadrant() { return ConeRegion(std::vector<Point>{{1, 0}, {0, 1}}); }

// Brute force over all step sequences of length n: probability of staying in the cone.
inline double brute_survival(const StepDistribution& mu, const ConeRegion& cone, const Point& x, int n) {
    std::function<double(const Point&, int)> rec = [&](const Point& y, int left) -> double {
        if (left == 0) return 1.0;
        double s = 0.0;
        for (const auto& st : mu.steps()) {
            Point z = y;
            for (std::size_t k = 0; k < z.size(); ++k) z[k] += st.v[k];
            if (cone.contains(z)) s += st.p * rec(z, left - 1);
        }
        return s;
    };
    return rec(x, n);
}

}  // namespace testing_support
