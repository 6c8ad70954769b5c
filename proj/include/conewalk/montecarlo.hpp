#pragma once

#include "conewalk/harmonic.hpp"
#include "conewalk/lattice.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace conewalk {

// Independent stream for one replica: mt19937_64 seeded from (master, replica) through seed_seq.
class ReplicaRng {
public:
    ReplicaRng(std::uint64_t master, std::uint64_t replica);
    double uniform();  // [0, 1), 53 bits

private:
    std::mt19937_64 eng_;
};

// Cumulative table over the steps of mu; a draw past the last entry is the defect (killing).
class StepSampler {
public:
    explicit StepSampler(const StepDistribution& mu);
    int draw(ReplicaRng& rng) const;  // step index, or -1
    const Point& step(int i) const { return steps_[static_cast<std::size_t>(i)]; }
    int size() const { return static_cast<int>(steps_.size()); }

private:
    std::vector<Point> steps_;
    std::vector<double> cum_;
};

struct PathSample {
    Point start;
    std::vector<Point> steps;
    bool killed = false;
    int kill_time = -1;  // index of the step that left E, -1 if censored
};

// Walk from x killed at its first exit from the cone (no window), censored after max_steps.
PathSample sample_path(const StepDistribution& mu, const ConeRegion& cone, const Point& x, std::uint64_t seed,
                       int max_steps, std::uint64_t replica = 0);

struct SurvivalEstimate {
    std::vector<double> p;       // fraction alive after n steps, n = 0..n_max
    std::vector<double> stderr_;  // binomial standard error
    long replicas = 0;
};

SurvivalEstimate empirical_survival(const StepDistribution& mu, const ConeRegion& cone, const Point& x, long replicas,
                                    int n_max, std::uint64_t seed);

struct LadderEpochs {
    std::vector<std::pair<int, Point>> epochs;  // (t_k, X(t_k)), starting with (0, x)
    bool absorbed = false;                       // ended in theta; otherwise censored
};

LadderEpochs sample_ladder_epochs(const StepDistribution& mu, const ConeRegion& cone, const Point& x,
                                  std::uint64_t seed, int max_steps, std::uint64_t replica = 0);

struct LadderLaw {
    Point start;
    std::map<Point, long> counts;  // H_1
    long theta = 0;
    long censored = 0;
    long replicas = 0;
};

LadderLaw empirical_ladder_law(const StepDistribution& mu, const ConeRegion& cone, const Point& x, long replicas,
                               int max_steps, std::uint64_t seed);

// Total variation against an exact row. A censored path has t_1 > max_steps and is counted as
// t_1 = infinity, i.e. H_1 = theta.
double total_variation(const LadderLaw& law, const std::map<Point, double>& exact, double exact_theta);

struct NeverExitEstimate {
    double p = 0.0;
    double stderr_ = 0.0;
    long replicas = 0;
    int horizon = 0;
};

// Fraction of h-walks from x+u that stay in E+u for `horizon` steps. Censoring biases this upward.
NeverExitEstimate empirical_never_exit(const StepDistribution& mu, const ConeRegion& cone, const ClosedForm& h,
                                       const Point& x, const Point& u, long replicas, int horizon,
                                       std::uint64_t seed);

}  // namespace conewalk
