#include "conewalk/suite.hpp"

#include "conewalk/errors.hpp"
#include "conewalk/montecarlo.hpp"
#include "conewalk/tilting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

namespace conewalk {

using ojson = nlohmann::ordered_json;

std::string to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::expected_fail: return "expected-fail";
        default: return "undetermined";
    }
}

const std::vector<std::string>& registered_checks() {
    static const std::vector<std::string> names = {"substochastic_PH", "renewal_identity", "regime",
                                                   "ratio_vs_V",       "theorem1",         "theorem3",
                                                   "never_exit",       "ladder_mc_tv",     "tilt_rate",
                                                   "slow_variation"};
    return names;
}

bool expected_to_fail(const Scenario& s, const std::string& check) {
    static const std::vector<std::string> drifted = {"theorem1", "theorem3", "never_exit", "slow_variation"};
    return s.drifted() && std::find(drifted.begin(), drifted.end(), check) != drifted.end();
}

ojson RunReport::to_json(bool with_timing) const {
    ojson j;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["window_bound"] = window_bound;
    ojson cs = ojson::array();
    for (const auto& c : checks) {
        ojson e;
        e["name"] = c.name;
        e["status"] = to_string(c.status);
        e["expected_fail"] = c.expected_fail;
        if (!c.message.empty()) e["message"] = c.message;
        e["metrics"] = c.metrics;
        if (with_timing) e["seconds"] = c.seconds;
        cs.push_back(e);
    }
    j["checks"] = cs;
    j["artifacts"] = artifacts;
    j["ok"] = ok();
    if (with_timing) j["wall_time_s"] = wall_time;
    return j;
}

bool RunReport::ok() const {
    return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == CheckStatus::fail; });
}

int exit_code(const RunReport& r) { return r.ok() ? 0 : 1; }

namespace {

ojson vec_json(const std::vector<double>& v) { return ojson(v); }

CheckStatus verdict(bool ok) { return ok ? CheckStatus::pass : CheckStatus::fail; }

// Lazily shared computations for one suite run.
class Context {
public:
    Context(const Scenario& s, const SuiteOptions& o) : s_(s), opts_(o), cone_(s.cone()) {}

    const Scenario& scenario() const { return s_; }
    const ConeRegion& cone() const { return cone_; }
    const Tolerances& tol() const { return s_.tol; }

    const RenewalStudy& renewal() {
        if (!study_) {
            RenewalOptions ro;
            ro.safe_bound = s_.safe_bound;
            ro.tol = s_.tol.renewal_doubling;
            ro.extrapolate = s_.probes.extrapolate;
            study_ = renewal_with_doubling(s_.mu, cone_, s_.window_bound, ro);
        }
        return *study_;
    }

    const RegimeReport& regime_report() {
        if (!regime_) regime_ = classify_regime(s_.mu, cone_, s_.regime_bound(), 3, s_.tol.renewal_doubling);
        return *regime_;
    }

    // The pin wins; otherwise the classification.
    Regime regime() {
        if (s_.regime) return *s_.regime;
        return regime_report().regime;
    }

    const ClosedForm& harmonic() const {
        if (!s_.harmonic) throw SchemaError("scenario has no closed-form harmonic function");
        return *s_.harmonic;
    }

    std::string artifact(const std::string& file, const std::function<void(std::ostream&)>& write) {
        if (opts_.out_dir.empty()) return {};
        std::filesystem::create_directories(opts_.out_dir);
        std::ofstream out(std::filesystem::path(opts_.out_dir) / file);
        out.precision(17);
        write(out);
        artifacts_.push_back(file);
        return file;
    }

    std::vector<std::string>& artifacts() { return artifacts_; }

private:
    const Scenario& s_;
    const SuiteOptions& opts_;
    ConeRegion cone_;
    std::optional<RenewalStudy> study_;
    std::optional<RegimeReport> regime_;
    std::vector<std::string> artifacts_;
};

void write_coords_header(std::ostream& os, int d) {
    for (int i = 0; i < d; ++i) os << "x" << (i + 1) << ",";
}

void check_substochastic(Context& c, CheckResult& r) {
    const auto& st = c.renewal();
    double lim = 1.0 + c.tol().substochastic;
    r.metrics["coarse_bound"] = st.coarse_model.window().bound();
    r.metrics["coarse_states"] = st.coarse_model.window().size();
    r.metrics["coarse_max_row_sum"] = st.coarse_ladder.max_row_sum;
    r.metrics["fine_bound"] = st.fine_model.window().bound();
    r.metrics["fine_states"] = st.fine_model.window().size();
    r.metrics["fine_max_row_sum"] = st.fine_ladder.max_row_sum;
    r.metrics["layer_terms"] = st.fine_ladder.layer.size();
    r.status = verdict(st.coarse_ladder.max_row_sum <= lim && st.fine_ladder.max_row_sum <= lim);
}

void check_renewal_identity(Context& c, CheckResult& r) {
    const auto& st = c.renewal();
    const Scenario& s = c.scenario();
    const StateWindow& cw = st.coarse_model.window();
    const int e = cw.origin();
    double v_coarse = st.coarse.V.values[e], v_fine = st.fine.V.values[st.fine_model.window().origin()];
    double v_table = st.table.V.values[e];
    r.metrics["V_origin_coarse"] = v_coarse;
    r.metrics["V_origin_fine"] = v_fine;
    r.metrics["V_origin_table"] = v_table;
    const auto& dg = *st.table.diagnostics;
    r.metrics["doubling_max_rel_delta"] = dg.max_rel_delta;
    r.metrics["doubling_converged"] = dg.converged;
    r.metrics["extrapolated"] = dg.extrapolated;
    IdentityScan scan = scan_identity(st.fine_model, st.fine.V, s.safe_bound);
    r.metrics["identity_max_abs"] = scan.max_abs;
    r.metrics["identity_worst_x"] = scan.worst_x;
    r.metrics["identity_worst_u"] = scan.worst_u;
    r.metrics["identity_pairs"] = scan.pairs;
    if (s.harmonic) {
        // closed form normalized at e, against the table on the safe sub-window
        const ClosedForm& h = *s.harmonic;
        double he = h(zero_point(s.dimension));
        double worst = 0.0;
        for (int x : safe_states(cw, s.safe_bound)) {
            double ref = h(cw.point(x)) / he;
            worst = std::max(worst, std::abs(st.table.V.values[x] - ref) / std::abs(ref));
        }
        r.metrics["V_vs_normalized_h_max_rel"] = worst;
    }
    bool ok = std::abs(v_coarse - 1.0) <= c.tol().v_origin && std::abs(v_fine - 1.0) <= c.tol().v_origin &&
              std::abs(v_table - 1.0) <= c.tol().v_origin && scan.max_abs < c.tol().identity;
    r.status = verdict(ok);

    const RegimeReport& rg = c.regime_report();
    std::string regime = to_string(c.regime());
    c.artifact("renewal.csv", [&](std::ostream& os) {
        write_coords_header(os, s.dimension);
        os << "V,g,regime\n";
        for (int x = 0; x < cw.size(); ++x) {
            const int* xc = cw.coords(x);
            for (int i = 0; i < s.dimension; ++i) os << xc[i] << ",";
            int gi = rg.g.window->index_of(xc);
            os << st.table.V.values[x] << "," << (gi >= 0 ? rg.g.values[gi] : std::nan("")) << "," << regime << "\n";
        }
    });
}

void check_regime(Context& c, CheckResult& r) {
    const Scenario& s = c.scenario();
    const RegimeReport& rg = c.regime_report();
    r.metrics["bounds"] = rg.bounds;
    r.metrics["g_origin"] = vec_json(rg.g_origin);
    r.metrics["rel_deltas"] = vec_json(rg.rel_deltas);
    r.metrics["classified"] = to_string(rg.regime);
    r.metrics["pinned"] = s.regime ? to_string(*s.regime) : "none";
    Regime used = c.regime();
    const auto& st = c.renewal();
    bool detail_ok = true;
    if (used == Regime::integrable) {
        // Wald: V = g / g(e)
        const StateWindow& cw = st.coarse_model.window();
        double ge = rg.g.values[rg.g.window->origin()];
        double worst = 0.0;
        for (int x : safe_states(cw, s.safe_bound)) {
            double g = rg.g.values[rg.g.window->index_of(cw.coords(x))];
            worst = std::max(worst, std::abs(st.table.V.values[x] - g / ge));
        }
        r.metrics["wald_max_abs"] = worst;
        detail_ok = worst < c.tol().wald;
    } else {
        // harmonic case: P V = V away from the window edge
        const KilledKernel& k = *st.fine_model.kernel;
        Eigen::VectorXd pv = apply_P(k, st.fine.V.values);
        double worst = 0.0;
        for (int x : safe_states(k.window(), s.safe_bound))
            if (k.interior_row(x)) worst = std::max(worst, std::abs(pv[x] - st.fine.V.values[x]));
        r.metrics["PV_minus_V_max_abs"] = worst;
    }
    if (rg.regime == Regime::undetermined) {
        r.status = CheckStatus::undetermined;
        r.message = "window doubling inconclusive";
        if (used == Regime::integrable && !detail_ok) r.status = CheckStatus::fail;
    } else {
        bool agrees = !s.regime || *s.regime == rg.regime;
        if (!agrees) r.message = "classified " + to_string(rg.regime) + ", pinned " + to_string(*s.regime);
        r.status = verdict(agrees && detail_ok);
    }
}

void check_ratio(Context& c, CheckResult& r) {
    const Scenario& s = c.scenario();
    const Probes& p = s.probes;
    const auto& st = c.renewal();
    int reach = 0;
    for (int v : p.ratio_x) reach = std::max(reach, v);
    int bound = reach + p.ratio_horizon * s.mu.max_step_norm() + 1;
    KilledKernel surv = build_killed_kernel(s.mu, c.cone(), bound);
    double vx = st.table.V.at(p.ratio_x);
    RatioReport rep = ratio_vs_V(surv, st.fine_model, vx, p.ratio_x, p.ratio_horizon);
    r.metrics["x"] = p.ratio_x;
    r.metrics["horizon"] = p.ratio_horizon;
    r.metrics["survival_bound"] = bound;
    r.metrics["V_x"] = vx;
    r.metrics["f_final"] = rep.f.back();
    r.metrics["final_rel_error"] = rep.final_rel_error;
    r.metrics["q_lower"] = rep.q_lower;
    r.metrics["q_upper"] = rep.q_upper;
    r.metrics["sandwich_ok"] = rep.sandwich_ok;
    r.metrics["min_gap"] = rep.min_gap;
    r.metrics["min_tail_gap"] = rep.min_tail_gap;
    bool ok = rep.sandwich_ok;
    if (c.regime() == Regime::integrable)
        ok = ok && rep.min_tail_gap >= -c.tol().ratio_gap;
    else
        ok = ok && rep.final_rel_error < c.tol().ratio;
    r.status = verdict(ok);
    c.artifact("ratio.csv", [&](std::ostream& os) {
        os << "n,f_n,V\n";
        for (std::size_t n = 0; n < rep.f.size(); ++n) os << n << "," << rep.f[n] << "," << vx << "\n";
    });
}

void check_theorem1(Context& c, CheckResult& r) {
    const Scenario& s = c.scenario();
    const auto& st = c.renewal();
    IdentityScan scan;
    if (s.drifted()) {
        const ClosedForm& h = c.harmonic();
        r.metrics["h"] = "closed-form";
        scan = scan_identity(st.fine_model, potential_from(st.fine_model.window_ptr(), h.field()), s.safe_bound,
                             h.field());
    } else {
        r.metrics["h"] = "V";
        scan = scan_identity(st.fine_model, st.fine.V, s.safe_bound);
    }
    r.metrics["max_abs"] = scan.max_abs;
    r.metrics["worst_x"] = scan.worst_x;
    r.metrics["worst_u"] = scan.worst_u;
    r.metrics["pairs"] = scan.pairs;
    r.status = verdict(scan.max_abs < c.tol().theorem1);
}

void check_theorem3(Context& c, CheckResult& r) {
    const Scenario& s = c.scenario();
    const auto& st = c.renewal();
    const ClosedForm& h = c.harmonic();
    Theorem3Options o;
    o.safe_bound = s.safe_bound;
    HarmonicCandidate cand = candidate_from(st.fine_model.window_ptr(), h);
    Theorem3Result t3 = theorem3_decomposition(st.fine_model, st.fine_ladder, st.fine.V, cand, o);
    Regime reg = c.regime();
    r.metrics["regime"] = to_string(reg);
    r.metrics["h_e"] = cand.h_e;
    r.metrics["closed_form_h_tilde_norm"] = t3.h_tilde_norm;
    r.metrics["closed_form_residual"] = t3.residual;
    r.metrics["superharmonic_gap"] = t3.superharmonic_gap;
    if (reg == Regime::integrable) {
        r.metrics["h"] = "closed form";
        r.metrics["h_tilde_norm"] = t3.h_tilde_norm;
        r.metrics["residual"] = t3.residual;
        r.status = verdict(t3.residual < c.tol().theorem3_residual && t3.h_tilde_norm > c.tol().theorem3_zero);
        return;
    }
    // h = V, with the limit of P_H^n V taken by iteration
    o.iterate = true;
    Theorem3Result tv = theorem3_decomposition(st.coarse_model, st.coarse_ladder, st.coarse.V,
                                               candidate_from_V(st.coarse.V), o);
    r.metrics["h"] = "V";
    r.metrics["h_tilde_norm"] = tv.h_tilde_norm;
    r.metrics["residual"] = tv.residual;
    r.metrics["iterations"] = tv.iterations;
    r.status = verdict(tv.h_tilde_norm < c.tol().theorem3_zero && tv.residual < c.tol().theorem3_residual);
}

void check_never_exit(Context& c, CheckResult& r) {
    const Scenario& s = c.scenario();
    const Probes& p = s.probes;
    const auto& st = c.renewal();
    const ClosedForm& h = c.harmonic();
    NeverExit la = never_exit_check(st.coarse_model, st.fine_model, h, p.never_exit_x, p.never_exit_u);
    NeverExitEstimate mc = empirical_never_exit(s.mu, c.cone(), h, p.never_exit_x, p.never_exit_u,
                                                p.never_exit_replicas, p.never_exit_horizon, s.seed + 1);
    r.metrics["x"] = p.never_exit_x;
    r.metrics["u"] = p.never_exit_u;
    r.metrics["predicted"] = la.predicted;
    r.metrics["computed_coarse"] = la.computed_coarse;
    r.metrics["computed_fine"] = la.computed_fine;
    r.metrics["mc_estimate"] = mc.p;
    r.metrics["mc_stderr"] = mc.stderr_;
    r.metrics["mc_replicas"] = mc.replicas;
    r.metrics["mc_horizon"] = mc.horizon;
    bool la_ok = std::abs(la.computed_fine - la.predicted) <= c.tol().never_exit_la;
    bool mc_ok = mc.p >= la.predicted - 3.0 * mc.stderr_ && mc.p <= la.predicted + c.tol().never_exit_slack;
    r.metrics["linear_algebra_ok"] = la_ok;
    r.metrics["mc_ok"] = mc_ok;
    r.status = verdict(la_ok && mc_ok);
}

void check_ladder_mc(Context& c, CheckResult& r) {
    const Scenario& s = c.scenario();
    const Probes& p = s.probes;
    const auto& st = c.renewal();
    const StateWindow& fw = st.fine_model.window();
    int ix = fw.index_of(p.ladder_start);
    if (ix < 0) throw OutOfWindow("ladder start " + to_string(p.ladder_start));
    std::map<Point, double> exact;
    for (SparseRows::InnerIterator it(st.fine_ladder.rows, ix); it; ++it) exact[fw.point(it.col())] = it.value();
    double exact_theta = st.fine_ladder.theta[static_cast<std::size_t>(ix)];
    LadderLaw law = empirical_ladder_law(s.mu, c.cone(), p.ladder_start, p.ladder_replicas, p.ladder_max_steps, s.seed);
    double tv = total_variation(law, exact, exact_theta);
    // every landing point lies in E but outside E + x
    bool consistent = true;
    for (const auto& [y, n] : law.counts)
        if (!c.cone().contains(y) || c.cone().contains(sub(y, p.ladder_start))) consistent = false;
    r.metrics["start"] = p.ladder_start;
    r.metrics["replicas"] = law.replicas;
    r.metrics["tv"] = tv;
    r.metrics["empirical_theta"] = static_cast<double>(law.theta) / static_cast<double>(law.replicas);
    r.metrics["exact_theta"] = exact_theta;
    r.metrics["censored"] = law.censored;
    r.metrics["support_consistent"] = consistent;
    r.status = verdict(tv < c.tol().tv && consistent);
    c.artifact("ladder_mc.csv", [&](std::ostream& os) {
        write_coords_header(os, s.dimension);
        os << "empirical,exact\n";
        std::map<Point, std::pair<double, double>> rows;
        for (const auto& [y, n] : law.counts) rows[y].first = static_cast<double>(n) / static_cast<double>(law.replicas);
        for (const auto& [y, q] : exact) rows[y].second = q;
        for (const auto& [y, v] : rows) {
            for (int a : y) os << a << ",";
            os << v.first << "," << v.second << "\n";
        }
    });
}

void write_rate_csv(std::ostream& os, const RateReport& rep) {
    os << "n,log_quantity_over_n,predicted\n";
    for (std::size_t i = 0; i < rep.n.size(); ++i) os << rep.n[i] << "," << rep.values[i] << "," << rep.predicted << "\n";
}

void check_tilt_rate(Context& c, CheckResult& r) {
    const Scenario& s = c.scenario();
    const Probes& p = s.probes;
    const auto& st = c.renewal();
    std::vector<double> d(p.rate_direction.begin(), p.rate_direction.end()), nd(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) nd[i] = -d[i];
    double sf_fwd = support_function(s.mu, d), sf_bwd = support_function(s.mu, nd);
    SlowVariation sv = slow_variation_check(st.fine_model, p.rate_direction, p.rate_grid, {zero_point(s.dimension)});
    const RateReport& fwd = sv.forward.front();
    const RateReport& bwd = sv.backward.front();
    r.metrics["direction"] = p.rate_direction;
    r.metrics["support_forward"] = sf_fwd;
    r.metrics["support_backward"] = sf_bwd;
    r.metrics["n"] = fwd.n;
    r.metrics["forward_rates"] = vec_json(fwd.values);
    r.metrics["forward_predicted"] = fwd.predicted;
    r.metrics["forward_extrapolated"] = fwd.extrapolated;
    r.metrics["backward_rates"] = vec_json(bwd.values);
    r.metrics["backward_predicted"] = bwd.predicted;
    r.metrics["backward_extrapolated"] = bwd.extrapolated;
    bool ok;
    if (!s.drifted()) {
        ok = std::abs(sf_fwd) <= c.tol().support && std::abs(sf_bwd) <= c.tol().support;
    } else {
        ok = true;
        for (const RateReport* rep : {&fwd, &bwd}) {
            if (std::abs(rep->predicted) <= 1e-9) continue;
            ok = ok && std::abs(rep->values.back() - rep->predicted) <= c.tol().tilt_rel * std::abs(rep->predicted);
        }
    }
    r.status = verdict(ok);
    c.artifact("tilt_forward.csv", [&](std::ostream& os) { write_rate_csv(os, fwd); });
    c.artifact("tilt_backward.csv", [&](std::ostream& os) { write_rate_csv(os, bwd); });
}

void check_slow_variation(Context& c, CheckResult& r) {
    const Scenario& s = c.scenario();
    const Probes& p = s.probes;
    const auto& st = c.renewal();
    SlowVariation sv = slow_variation_check(st.fine_model, p.slow_u, p.slow_grid, p.slow_bases, c.tol().slow_rate);
    r.metrics["u"] = p.slow_u;
    r.metrics["n"] = p.slow_grid;
    ojson series = ojson::array();
    for (std::size_t b = 0; b < sv.bases.size(); ++b) {
        ojson e;
        e["base"] = sv.bases[b];
        e["forward"] = vec_json(sv.forward[b].values);
        e["backward"] = vec_json(sv.backward[b].values);
        e["forward_extrapolated"] = sv.forward[b].extrapolated;
        e["backward_extrapolated"] = sv.backward[b].extrapolated;
        series.push_back(e);
    }
    r.metrics["series"] = series;
    r.metrics["max_abs_final"] = sv.max_abs_final;
    r.metrics["monotone"] = sv.monotone;
    r.status = verdict(sv.passed);
}

using CheckFn = void (*)(Context&, CheckResult&);

const std::map<std::string, CheckFn>& check_table() {
    static const std::map<std::string, CheckFn> t = {
        {"substochastic_PH", check_substochastic}, {"renewal_identity", check_renewal_identity},
        {"regime", check_regime},                  {"ratio_vs_V", check_ratio},
        {"theorem1", check_theorem1},              {"theorem3", check_theorem3},
        {"never_exit", check_never_exit},          {"ladder_mc_tv", check_ladder_mc},
        {"tilt_rate", check_tilt_rate},            {"slow_variation", check_slow_variation}};
    return t;
}

}  // namespace

RunReport run_suite(const Scenario& s, const std::vector<std::string>& checks, const SuiteOptions& opts) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    for (const auto& name : checks)
        if (!check_table().count(name)) throw SchemaError("unknown check '" + name + "'");
    RunReport rep;
    rep.scenario = s.name;
    rep.seed = s.seed;
    rep.window_bound = s.window_bound;
    Context ctx(s, opts);
    for (const auto& name : checks) {
        if (std::any_of(rep.checks.begin(), rep.checks.end(), [&](const CheckResult& c) { return c.name == name; }))
            continue;  // each configured check appears once
        CheckResult r;
        r.name = name;
        r.expected_fail = expected_to_fail(s, name);
        auto c0 = clock::now();
        try {
            check_table().at(name)(ctx, r);
        } catch (const std::exception& e) {
            r.status = CheckStatus::fail;
            r.message = name + ": " + e.what();
        }
        if (r.status == CheckStatus::fail && r.expected_fail) r.status = CheckStatus::expected_fail;
        r.seconds = std::chrono::duration<double>(clock::now() - c0).count();
        rep.checks.push_back(std::move(r));
    }
    rep.artifacts = ctx.artifacts();
    rep.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
    if (!opts.out_dir.empty() && opts.write_report) {
        std::filesystem::create_directories(opts.out_dir);
        rep.artifacts.push_back("report.json");
        std::ofstream out(std::filesystem::path(opts.out_dir) / "report.json");
        out << rep.to_json().dump(2) << "\n";
    }
    return rep;
}

}  // namespace conewalk
