#include "conewalk/montecarlo.hpp"

#include "conewalk/errors.hpp"

#include <algorithm>
#include <cmath>

namespace conewalk {

ReplicaRng::ReplicaRng(std::uint64_t master, std::uint64_t replica) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32)};
    eng_.seed(seq);
}

double ReplicaRng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

StepSampler::StepSampler(const StepDistribution& mu) {
    double c = 0.0;
    for (const auto& s : mu.steps()) {
        steps_.push_back(s.v);
        c += s.p;
        cum_.push_back(c);
    }
    // a full-mass law must never produce the defect branch through rounding
    if (mu.exact() && mu.exact_mass() == Rational(1)) cum_.back() = 1.0;
}

int StepSampler::draw(ReplicaRng& rng) const {
    double u = rng.uniform();
    for (std::size_t i = 0; i < cum_.size(); ++i)
        if (u < cum_[i]) return static_cast<int>(i);
    return -1;
}

namespace {

void check_start(const ConeRegion& cone, const Point& x) {
    if (static_cast<int>(x.size()) != cone.dim()) throw DimensionMismatch("start " + to_string(x));
    if (!cone.contains(x)) throw OutOfWindow("start " + to_string(x) + " is not in E");
}

// Time of first exit from E (index of the exit step), or -1 if alive after max_steps.
int kill_time(const StepSampler& sampler, const ConeRegion& cone, Point y, ReplicaRng& rng, int max_steps) {
    for (int n = 1; n <= max_steps; ++n) {
        int i = sampler.draw(rng);
        if (i < 0) return n;
        const Point& s = sampler.step(i);
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += s[k];
        if (!cone.contains(y)) return n;
    }
    return -1;
}

}  // namespace

PathSample sample_path(const StepDistribution& mu, const ConeRegion& cone, const Point& x, std::uint64_t seed,
                       int max_steps, std::uint64_t replica) {
    check_start(cone, x);
    StepSampler sampler(mu);
    ReplicaRng rng(seed, replica);
    PathSample out;
    out.start = x;
    Point y = x;
    for (int n = 1; n <= max_steps; ++n) {
        int i = sampler.draw(rng);
        if (i < 0) {
            out.killed = true;
            out.kill_time = n;
            break;
        }
        const Point& s = sampler.step(i);
        out.steps.push_back(s);
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += s[k];
        if (!cone.contains(y)) {
            out.killed = true;
            out.kill_time = n;
            break;
        }
    }
    return out;
}

SurvivalEstimate empirical_survival(const StepDistribution& mu, const ConeRegion& cone, const Point& x, long replicas,
                                    int n_max, std::uint64_t seed) {
    check_start(cone, x);
    StepSampler sampler(mu);
    std::vector<int> t(static_cast<std::size_t>(replicas));
#pragma omp parallel for schedule(dynamic, 256)
    for (long r = 0; r < replicas; ++r) {
        ReplicaRng rng(seed, static_cast<std::uint64_t>(r));
        t[static_cast<std::size_t>(r)] = kill_time(sampler, cone, x, rng, n_max);
    }
    // killed at step k means alive for n < k
    std::vector<long> dead_at(static_cast<std::size_t>(n_max) + 2, 0);
    for (int k : t)
        if (k > 0) ++dead_at[static_cast<std::size_t>(k)];
    SurvivalEstimate out;
    out.replicas = replicas;
    long alive = replicas;
    for (int n = 0; n <= n_max; ++n) {
        alive -= dead_at[static_cast<std::size_t>(n)];
        double p = static_cast<double>(alive) / static_cast<double>(replicas);
        out.p.push_back(p);
        out.stderr_.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(replicas)));
    }
    return out;
}

namespace {

// Runs from `y` until X(n) - base leaves E. Returns the step count, 0 if censored; `y` holds X(n),
// `absorbed` is set when X(n) left E itself or the defect fired.
int next_epoch(const StepSampler& sampler, const ConeRegion& cone, const Point& base, Point& y, ReplicaRng& rng,
               int budget, bool& absorbed) {
    Point diff(y.size());
    for (int n = 1; n <= budget; ++n) {
        int i = sampler.draw(rng);
        if (i < 0) {
            absorbed = true;
            return n;
        }
        const Point& s = sampler.step(i);
        for (std::size_t k = 0; k < y.size(); ++k) {
            y[k] += s[k];
            diff[k] = y[k] - base[k];
        }
        if (!cone.contains(diff)) {
            absorbed = !cone.contains(y);
            return n;
        }
    }
    return 0;
}

}  // namespace

LadderEpochs sample_ladder_epochs(const StepDistribution& mu, const ConeRegion& cone, const Point& x,
                                  std::uint64_t seed, int max_steps, std::uint64_t replica) {
    check_start(cone, x);
    StepSampler sampler(mu);
    ReplicaRng rng(seed, replica);
    LadderEpochs out;
    out.epochs.emplace_back(0, x);
    Point y = x;
    int t = 0;
    while (t < max_steps) {
        bool absorbed = false;
        Point base = y;
        int n = next_epoch(sampler, cone, base, y, rng, max_steps - t, absorbed);
        if (n == 0) break;
        t += n;
        if (absorbed) {
            out.absorbed = true;
            break;
        }
        out.epochs.emplace_back(t, y);
    }
    return out;
}

LadderLaw empirical_ladder_law(const StepDistribution& mu, const ConeRegion& cone, const Point& x, long replicas,
                               int max_steps, std::uint64_t seed) {
    check_start(cone, x);
    StepSampler sampler(mu);
    const std::size_t d = x.size();
    // per replica: status 0 censored, 1 theta, 2 landed; landing point stored flat
    std::vector<char> status(static_cast<std::size_t>(replicas));
    std::vector<int> land(static_cast<std::size_t>(replicas) * d);
#pragma omp parallel for schedule(dynamic, 256)
    for (long r = 0; r < replicas; ++r) {
        ReplicaRng rng(seed, static_cast<std::uint64_t>(r));
        Point y = x;
        bool absorbed = false;
        int n = next_epoch(sampler, cone, x, y, rng, max_steps, absorbed);
        auto ri = static_cast<std::size_t>(r);
        status[ri] = n == 0 ? 0 : (absorbed ? 1 : 2);
        if (status[ri] == 2) std::copy(y.begin(), y.end(), land.begin() + static_cast<std::ptrdiff_t>(ri * d));
    }
    LadderLaw law;
    law.start = x;
    law.replicas = replicas;
    Point y(d);
    for (std::size_t r = 0; r < status.size(); ++r) {
        if (status[r] == 0) {
            ++law.censored;
        } else if (status[r] == 1) {
            ++law.theta;
        } else {
            std::copy(land.begin() + static_cast<std::ptrdiff_t>(r * d),
                      land.begin() + static_cast<std::ptrdiff_t>((r + 1) * d), y.begin());
            ++law.counts[y];
        }
    }
    return law;
}

double total_variation(const LadderLaw& law, const std::map<Point, double>& exact, double exact_theta) {
    const double n = static_cast<double>(law.replicas);
    double tv = std::abs(static_cast<double>(law.theta + law.censored) / n - exact_theta);
    for (const auto& [y, c] : law.counts) {
        auto it = exact.find(y);
        tv += std::abs(static_cast<double>(c) / n - (it == exact.end() ? 0.0 : it->second));
    }
    for (const auto& [y, p] : exact)
        if (!law.counts.count(y)) tv += p;
    return 0.5 * tv;
}

NeverExitEstimate empirical_never_exit(const StepDistribution& mu, const ConeRegion& cone, const ClosedForm& h,
                                       const Point& x, const Point& u, long replicas, int horizon,
                                       std::uint64_t seed) {
    check_start(cone, x);
    check_start(cone, u);
    const Point start = add(x, u);
    if (!(h(start) > 0.0)) throw NonPositiveH("h(" + to_string(start) + ") <= 0");
    std::vector<Point> steps;
    std::vector<double> probs;
    for (const auto& s : mu.steps()) {
        steps.push_back(s.v);
        probs.push_back(s.p);
    }
    const std::size_t d = x.size();
    std::vector<char> stayed(static_cast<std::size_t>(replicas));
#pragma omp parallel for schedule(dynamic, 16)
    for (long r = 0; r < replicas; ++r) {
        ReplicaRng rng(seed, static_cast<std::uint64_t>(r));
        Point y = start, z(d), rel(d);
        // transition weights mu(s) h(y+s)/h(y), formed in logs so exponential h cannot overflow
        double ly = h.log_value(y);
        bool ok = true;
        for (int n = 0; n < horizon && ok; ++n) {
            double v = rng.uniform();
            double acc = 0.0;
            bool moved = false;
            for (std::size_t i = 0; i < steps.size(); ++i) {
                for (std::size_t k = 0; k < d; ++k) z[k] = y[k] + steps[i][k];
                if (!cone.contains(z)) continue;
                double lz = h.log_value(z);
                acc += probs[i] * std::exp(lz - ly);
                if (v < acc) {
                    y = z;
                    ly = lz;
                    moved = true;
                    break;
                }
            }
            if (!moved) {
                ok = false;
                break;
            }
            for (std::size_t k = 0; k < d; ++k) rel[k] = y[k] - u[k];
            if (!cone.contains(rel)) ok = false;
        }
        stayed[static_cast<std::size_t>(r)] = ok ? 1 : 0;
    }
    long count = 0;
    for (char c : stayed) count += c;
    NeverExitEstimate out;
    out.replicas = replicas;
    out.horizon = horizon;
    out.p = static_cast<double>(count) / static_cast<double>(replicas);
    out.stderr_ = std::sqrt(out.p * (1.0 - out.p) / static_cast<double>(replicas));
    return out;
}

}  // namespace conewalk
