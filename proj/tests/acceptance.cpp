// Acceptance run over the shipped fixtures. One PASS/FAIL line per criterion; exit 1 if any fails.

#include "conewalk/errors.hpp"
#include "conewalk/ladder.hpp"
#include "conewalk/parallel.hpp"
#include "conewalk/scenario.hpp"
#include "conewalk/suite.hpp"
#include "conewalk/tilting.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef CONEWALK_SCENARIO_DIR
#define CONEWALK_SCENARIO_DIR "scenarios"
#endif

using namespace conewalk;
using ojson = nlohmann::ordered_json;

namespace {

const std::vector<std::string> kFixtures = {"1d_symmetric",        "1d_drift_down",      "1d_drift_up",
                                            "2d_quadrant_product", "2d_quadrant_simple", "2d_drift_negative"};
const std::vector<std::string> kCentered = {"1d_symmetric", "2d_quadrant_product", "2d_quadrant_simple"};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    if (!ok) ++failures;
    std::printf("%s %2d %s | %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Fixture {
    Scenario s;
    RunReport r;
};

const CheckResult& check(const Fixture& f, const std::string& name) {
    for (const auto& c : f.r.checks)
        if (c.name == name) return c;
    throw OutOfWindow("no check " + name + " in " + f.s.name);
}

double metric(const Fixture& f, const std::string& check_name, const std::string& key) {
    const CheckResult& c = check(f, check_name);
    if (!c.metrics.contains(key)) throw OutOfWindow(check_name + " on " + f.s.name + " has no metric " + key + ": " + c.message);
    return c.metrics[key].get<double>();
}

std::map<std::string, Fixture> run_all(int threads) {
    set_threads(threads);
    std::map<std::string, Fixture> out;
    for (const auto& name : kFixtures) {
        Fixture f;
        f.s = load_scenario(std::string(CONEWALK_SCENARIO_DIR) + "/" + name + ".json");
        SuiteOptions o;
        o.write_report = false;
        f.r = run_suite(f.s, registered_checks(), o);
        out.emplace(name, std::move(f));
    }
    return out;
}

RenewalStudy study_for(const Scenario& s) {
    RenewalOptions ro;
    ro.safe_bound = s.safe_bound;
    ro.tol = s.tol.renewal_doubling;
    ro.extrapolate = s.probes.extrapolate;
    return renewal_with_doubling(s.mu, s.cone(), s.window_bound, ro);
}

template <class F>
void guarded(int id, const std::string& what, F&& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, what, std::string("error: ") + e.what());
    }
}

}  // namespace

int main() {
    std::printf("fixtures: %s\n", CONEWALK_SCENARIO_DIR);
    auto t_suite = std::chrono::steady_clock::now();
    std::map<std::string, Fixture> fx;
    try {
        fx = run_all(1);
    } catch (const std::exception& e) {
        std::printf("FAIL  0 fixture suites | %s\n", e.what());
        return 1;
    }
    std::printf("suites on %zu fixtures: %.1f s\n", fx.size(), seconds_since(t_suite));

    guarded(1, "ladder rows substochastic at <= 1e4 states, < 60 s each", [&] {
        bool ok = true;
        std::ostringstream d;
        for (const auto& name : kFixtures) {
            const Scenario& s = fx.at(name).s;
            int bound = s.dimension == 1 ? 9999 : 99;
            auto t0 = std::chrono::steady_clock::now();
            WindowModel m = make_model(s.mu, s.cone(), bound);
            LadderKernel lk = ladder_kernel(m);
            double secs = seconds_since(t0);
            double suite_max = std::max(metric(fx.at(name), "substochastic_PH", "coarse_max_row_sum"),
                                        metric(fx.at(name), "substochastic_PH", "fine_max_row_sum"));
            bool here = m.window().size() <= 10000 && lk.max_row_sum <= 1.0 + 1e-10 && suite_max <= 1.0 + 1e-10 &&
                        secs < 60.0;
            ok = ok && here;
            d << name << " " << m.window().size() << " states max " << fmt("%.12g", lk.max_row_sum) << " "
              << fmt("%.1fs", secs) << "; ";
        }
        report(1, ok, "ladder rows substochastic at <= 1e4 states, < 60 s each", d.str());
    });

    guarded(2, "V(e) = 1 within 1e-8", [&] {
        bool ok = true;
        double worst = 0.0;
        for (const auto& name : kFixtures)
            for (const char* k : {"V_origin_coarse", "V_origin_fine", "V_origin_table"}) {
                double dv = std::abs(metric(fx.at(name), "renewal_identity", k) - 1.0);
                worst = std::max(worst, dv);
                ok = ok && dv <= 1e-8;
            }
        report(2, ok, "V(e) = 1 within 1e-8", "max |V(e) - 1| = " + fmt("%.3g", worst));
    });

    std::optional<RenewalStudy> sym;
    guarded(3, "1D symmetric V(x) = x+1 within 1e-6, x <= 20", [&] {
        sym = study_for(fx.at("1d_symmetric").s);
        double worst = 0.0;
        for (int x = 0; x <= 20; ++x) worst = std::max(worst, std::abs(sym->table.V.at(Point{x}) - (x + 1.0)));
        report(3, worst < 1e-6, "1D symmetric V(x) = x+1 within 1e-6, x <= 20", "max abs error " + fmt("%.3g", worst));
    });

    guarded(4, "2D product V = (x1+1)(x2+1) within 1e-2 rel, x <= 8, one doubling", [&] {
        RenewalStudy st = study_for(fx.at("2d_quadrant_product").s);
        double worst = 0.0;
        for (int a = 0; a <= 8; ++a)
            for (int b = 0; b <= 8; ++b) {
                double ref = (a + 1.0) * (b + 1.0);
                worst = std::max(worst, std::abs(st.table.V.at(Point{a, b}) - ref) / ref);
            }
        report(4, worst < 1e-2, "2D product V = (x1+1)(x2+1) within 1e-2 rel, x <= 8, one doubling",
               "max rel error " + fmt("%.4g", worst) + " (windows " + std::to_string(st.coarse_model.window().bound()) +
                   ", " + std::to_string(st.fine_model.window().bound()) + ")");
    });

    guarded(5, "renewal identity residual < 1e-6 on centered fixtures", [&] {
        bool ok = true;
        std::ostringstream d;
        for (const auto& name : kCentered) {
            double v = metric(fx.at(name), "renewal_identity", "identity_max_abs");
            ok = ok && v < 1e-6;
            d << name << " " << fmt("%.3g", v) << "; ";
        }
        report(5, ok, "renewal identity residual < 1e-6 on centered fixtures", d.str());
    });

    guarded(6, "1D symmetric |f_5000(5) - 6|/6 < 0.05, < 30 s", [&] {
        const Scenario& s = fx.at("1d_symmetric").s;
        auto t0 = std::chrono::steady_clock::now();
        KilledKernel surv = build_killed_kernel(s.mu, s.cone(), 5 + 5000 + 1);
        if (!sym) sym = study_for(s);
        RatioReport rep = ratio_vs_V(surv, sym->fine_model, 6.0, Point{5}, 5000);
        double secs = seconds_since(t0);
        double rel = std::abs(rep.f.back() - 6.0) / 6.0;
        report(6, rel < 0.05 && secs < 30.0, "1D symmetric |f_5000(5) - 6|/6 < 0.05, < 30 s",
               "f = " + fmt("%.6f", rep.f.back()) + " rel " + fmt("%.4g", rel) + " in " + fmt("%.2fs", secs));
    });

    guarded(7, "Wald ||V - g/g(e)|| < 1e-6 and f_n >= V - 0.01 on integrable drifted fixtures", [&] {
        bool ok = true;
        std::ostringstream d;
        for (const char* name : {"2d_drift_negative", "1d_drift_down"}) {
            double w = metric(fx.at(name), "regime", "wald_max_abs");
            double tail = metric(fx.at(name), "ratio_vs_V", "min_tail_gap");
            double all = metric(fx.at(name), "ratio_vs_V", "min_gap");
            ok = ok && w < 1e-6 && tail >= -0.01;
            d << name << " wald " << fmt("%.3g", w) << " tail gap " << fmt("%.4g", tail) << " (all n " << fmt("%.4g", all)
              << "); ";
        }
        report(7, ok, "Wald ||V - g/g(e)|| < 1e-6 and f_n >= V - 0.01 on integrable drifted fixtures", d.str());
    });

    guarded(8, "Theorem 1 residual < 1e-6 for h = V (centered); bounded away from 0 on 1d_drift_up", [&] {
        bool ok = true;
        std::ostringstream d;
        for (const auto& name : kCentered) {
            double v = metric(fx.at(name), "theorem1", "max_abs");
            ok = ok && v < 1e-6;
            d << name << " " << fmt("%.3g", v) << "; ";
        }
        double up = metric(fx.at("1d_drift_up"), "theorem1", "max_abs");
        ok = ok && up > 1e-3;
        d << "1d_drift_up " << fmt("%.3g", up) << " (needs > 1e-3)";
        report(8, ok, "Theorem 1 residual < 1e-6 for h = V (centered); bounded away from 0 on 1d_drift_up", d.str());
    });

    guarded(9, "Theorem 3: h_tilde ~ 0 when non-integrable; nonzero with residual < 1e-5 when integrable", [&] {
        bool ok = true;
        std::ostringstream d;
        for (const auto& name : kFixtures) {
            const CheckResult& c = check(fx.at(name), "theorem3");
            double norm = metric(fx.at(name), "theorem3", "h_tilde_norm");
            double res = metric(fx.at(name), "theorem3", "residual");
            bool integrable = c.metrics["regime"].get<std::string>() == "integrable";
            bool here = integrable ? (norm > 1e-4 && res < 1e-5) : norm < 1e-4;
            ok = ok && here;
            d << name << (integrable ? " [int]" : " [non]") << " norm " << fmt("%.3g", norm) << " res "
              << fmt("%.3g", res) << "; ";
        }
        report(9, ok, "Theorem 3: h_tilde ~ 0 when non-integrable; nonzero with residual < 1e-5 when integrable",
               d.str());
    });

    guarded(10, "ladder law TV < 0.02 at 1e5 replicas, < 2 min", [&] {
        bool ok = true;
        std::ostringstream d;
        for (const char* name : {"1d_symmetric", "2d_quadrant_product"}) {
            const CheckResult& c = check(fx.at(name), "ladder_mc_tv");
            double tv = metric(fx.at(name), "ladder_mc_tv", "tv");
            double reps = metric(fx.at(name), "ladder_mc_tv", "replicas");
            ok = ok && tv < 0.02 && reps >= 1e5 && c.seconds < 120.0;
            d << name << " start " << c.metrics["start"].dump() << " tv " << fmt("%.4g", tv) << " "
              << fmt("%.1fs", c.seconds) << "; ";
        }
        report(10, ok, "ladder law TV < 0.02 at 1e5 replicas, < 2 min", d.str());
    });

    guarded(11, "never-exit MC within [pred - 3 se, pred + 0.02], horizon 1e4", [&] {
        bool ok = true;
        std::ostringstream d;
        for (const char* name : {"1d_symmetric", "2d_quadrant_product"}) {
            double p = metric(fx.at(name), "never_exit", "mc_estimate");
            double se = metric(fx.at(name), "never_exit", "mc_stderr");
            double pred = metric(fx.at(name), "never_exit", "predicted");
            double hz = metric(fx.at(name), "never_exit", "mc_horizon");
            ok = ok && p >= pred - 3.0 * se && p <= pred + 0.02 && hz >= 1e4;
            d << name << " mc " << fmt("%.4f", p) << " se " << fmt("%.4f", se) << " pred " << fmt("%.4f", pred) << "; ";
        }
        report(11, ok, "never-exit MC within [pred - 3 se, pred + 0.02], horizon 1e4", d.str());
    });

    guarded(12, "support 0 when centered; drift-up backward rate at n=60 within 10% of -log 2; slow variation", [&] {
        bool ok = true;
        std::ostringstream d;
        for (const auto& name : kCentered) {
            const Scenario& s = fx.at(name).s;
            double worst = 0.0;
            std::vector<std::vector<double>> dirs;
            for (int i = 0; i < s.dimension; ++i)
                for (double sg : {1.0, -1.0}) {
                    std::vector<double> u(static_cast<std::size_t>(s.dimension), 0.0);
                    u[static_cast<std::size_t>(i)] = sg;
                    dirs.push_back(u);
                }
            if (s.dimension == 2) dirs.push_back({1.0, 1.0}), dirs.push_back({-1.0, -1.0}), dirs.push_back({1.0, -1.0});
            for (const auto& u : dirs) worst = std::max(worst, std::abs(support_function(s.mu, u)));
            bool slow = check(fx.at(name), "slow_variation").status == CheckStatus::pass;
            ok = ok && worst <= 1e-10 && slow;
            d << name << " |support| " << fmt("%.2g", worst) << " slow "
              << to_string(check(fx.at(name), "slow_variation").status) << " (max|rate| "
              << fmt("%.3g", metric(fx.at(name), "slow_variation", "max_abs_final")) << "); ";
        }
        const Scenario& up = fx.at("1d_drift_up").s;
        WindowModel m = make_model(up.mu, up.cone(), 4 * up.window_bound);
        double rate = std::log(hitting_probability(m, Point{60}, Point{0})) / 60.0;
        double rel = std::abs(rate + std::log(2.0)) / std::log(2.0);
        ok = ok && rel < 0.1;
        d << "1d_drift_up rate " << fmt("%.6f", rate) << " rel " << fmt("%.3g", rel);
        report(12, ok, "support 0 when centered; drift-up backward rate at n=60 within 10% of -log 2; slow variation",
               d.str());
    });

    guarded(13, "identical JSON reports from two runs with the same seed", [&] {
        auto t0 = std::chrono::steady_clock::now();
        auto again = run_all(2);
        set_threads(1);
        bool ok = true;
        std::ostringstream d;
        for (const auto& name : kFixtures) {
            bool same = fx.at(name).r.to_json(false).dump() == again.at(name).r.to_json(false).dump();
            ok = ok && same;
            if (!same) d << name << " differs; ";
        }
        d << "second run on 2 threads, " << fmt("%.1fs", seconds_since(t0));
        report(13, ok, "identical JSON reports from two runs with the same seed", d.str());
    });

    std::printf("%d of 13 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
