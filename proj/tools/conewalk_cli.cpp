// conewalk: scenario-driven runs of the cone-walk potential theory kernels.
#include "conewalk/errors.hpp"
#include "conewalk/montecarlo.hpp"
#include "conewalk/parallel.hpp"
#include "conewalk/suite.hpp"
#include "conewalk/tilting.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

using namespace conewalk;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<int> window;
    std::optional<double> tol;
};

Scenario load(const Globals& g) {
    if (g.scenario.empty()) throw SchemaError("--scenario is required");
    Scenario s = load_scenario(g.scenario);
    if (g.seed) s.seed = *g.seed;
    if (g.window) {
        if (*g.window < 1) throw SchemaError("--window must be positive");
        s.window_bound = *g.window;
    }
    return s;
}

// Opens `file` under the output directory, or stdout when neither is given.
class Sink {
public:
    Sink(const Globals& g, const std::string& emit, const std::string& fallback) {
        std::string name = emit.empty() ? (g.out_dir.empty() ? "" : fallback) : emit;
        if (name.empty()) return;
        fs::path p = name;
        if (!g.out_dir.empty() && p.is_relative()) {
            fs::create_directories(g.out_dir);
            p = fs::path(g.out_dir) / p;
        }
        file_.open(p);
        if (!file_) throw ParseError("cannot write " + p.string());
        file_.precision(17);
        path_ = p.string();
    }
    std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
    const std::string& path() const { return path_; }

private:
    std::ofstream file_;
    std::string path_;
};

Point parse_point(const std::vector<int>& v, int d, const char* what) {
    if (static_cast<int>(v.size()) != d) throw DimensionMismatch(std::string(what) + " needs " + std::to_string(d) + " coordinates");
    return v;
}

int cmd_renewal(const Globals& g, const std::string& emit) {
    Scenario s = load(g);
    RenewalOptions o;
    o.safe_bound = s.safe_bound;
    o.tol = g.tol.value_or(s.tol.renewal_doubling);
    o.extrapolate = s.probes.extrapolate;
    RenewalStudy st = renewal_with_doubling(s.mu, s.cone(), s.window_bound, o);
    RegimeReport rg = classify_regime(s.mu, s.cone(), s.regime_bound(), 3, o.tol);
    Regime used = s.regime.value_or(rg.regime);
    Sink sink(g, emit, "renewal.csv");
    const StateWindow& w = st.coarse_model.window();
    for (int i = 0; i < s.dimension; ++i) sink.os() << "x" << (i + 1) << ",";
    sink.os() << "V,g,regime\n";
    for (int x = 0; x < w.size(); ++x) {
        const int* c = w.coords(x);
        for (int i = 0; i < s.dimension; ++i) sink.os() << c[i] << ",";
        int gi = rg.g.window->index_of(c);
        sink.os() << st.table.V.values[x] << "," << (gi >= 0 ? rg.g.values[gi] : std::nan("")) << "," << to_string(used)
                  << "\n";
    }
    if (!sink.path().empty()) {
        const auto& dg = *st.table.diagnostics;
        nlohmann::ordered_json j = {{"scenario", s.name},
                                    {"bound", dg.bound},
                                    {"fine_bound", dg.fine_bound},
                                    {"max_rel_delta", dg.max_rel_delta},
                                    {"converged", dg.converged},
                                    {"V_origin", st.table.V.values[w.origin()]},
                                    {"classified", to_string(rg.regime)},
                                    {"regime", to_string(used)},
                                    {"csv", sink.path()}};
        std::cout << j.dump(2) << "\n";
    }
    return 0;
}

int cmd_ratio(const Globals& g, const std::vector<int>& start, int horizon, const std::string& emit) {
    Scenario s = load(g);
    Point x = start.empty() ? s.probes.ratio_x : parse_point(start, s.dimension, "--start");
    if (horizon <= 0) horizon = s.probes.ratio_horizon;
    RenewalOptions o;
    o.safe_bound = s.safe_bound;
    o.tol = g.tol.value_or(s.tol.renewal_doubling);
    o.extrapolate = s.probes.extrapolate;
    RenewalStudy st = renewal_with_doubling(s.mu, s.cone(), s.window_bound, o);
    int reach = *std::max_element(x.begin(), x.end());
    KilledKernel surv = build_killed_kernel(s.mu, s.cone(), reach + horizon * s.mu.max_step_norm() + 1);
    double vx = st.table.V.at(x);
    RatioReport rep = ratio_vs_V(surv, st.fine_model, vx, x, horizon);
    Sink sink(g, emit, "ratio.csv");
    sink.os() << "n,f_n,V\n";
    for (std::size_t n = 0; n < rep.f.size(); ++n) sink.os() << n << "," << rep.f[n] << "," << vx << "\n";
    if (!sink.path().empty())
        std::cout << nlohmann::ordered_json{{"x", x},
                                            {"horizon", horizon},
                                            {"V_x", vx},
                                            {"f_final", rep.f.back()},
                                            {"final_rel_error", rep.final_rel_error},
                                            {"sandwich_ok", rep.sandwich_ok},
                                            {"csv", sink.path()}}
                         .dump(2)
                  << "\n";
    return 0;
}

int cmd_ladder_mc(const Globals& g, const std::vector<int>& start, long replicas, int horizon,
                  const std::string& emit) {
    Scenario s = load(g);
    Point x = start.empty() ? s.probes.ladder_start : parse_point(start, s.dimension, "--start");
    if (replicas <= 0) replicas = s.probes.ladder_replicas;
    if (horizon <= 0) horizon = s.probes.ladder_max_steps;
    WindowModel m = make_model(s.mu, s.cone(), g.window.value_or(s.window_bound));
    LadderKernel lk = ladder_kernel(m);
    const StateWindow& w = m.window();
    int ix = w.index_of(x);
    if (ix < 0) throw OutOfWindow("start " + to_string(x));
    std::map<Point, double> exact;
    for (SparseRows::InnerIterator it(lk.rows, ix); it; ++it) exact[w.point(it.col())] = it.value();
    LadderLaw law = empirical_ladder_law(s.mu, s.cone(), x, replicas, horizon, s.seed);
    double tv = total_variation(law, exact, lk.theta[static_cast<std::size_t>(ix)]);
    Sink sink(g, emit, "ladder_mc.csv");
    for (int i = 0; i < s.dimension; ++i) sink.os() << "x" << (i + 1) << ",";
    sink.os() << "empirical,exact\n";
    std::map<Point, std::pair<double, double>> rows;
    for (const auto& [y, n] : law.counts) rows[y].first = static_cast<double>(n) / static_cast<double>(replicas);
    for (const auto& [y, q] : exact) rows[y].second = q;
    for (const auto& [y, v] : rows) {
        for (int a : y) sink.os() << a << ",";
        sink.os() << v.first << "," << v.second << "\n";
    }
    std::cerr << "tv " << tv << " theta " << static_cast<double>(law.theta) / static_cast<double>(replicas)
              << " censored " << law.censored << "\n";
    return 0;
}

int cmd_tilt_rate(const Globals& g, const std::vector<int>& direction, int nmax, const std::string& series,
                  const std::string& emit) {
    Scenario s = load(g);
    Point d = direction.empty() ? s.probes.rate_direction : parse_point(direction, s.dimension, "--direction");
    if (nmax <= 0) nmax = s.probes.rate_grid.back();
    std::vector<int> grid;
    for (int n = 1; n <= nmax; ++n) grid.push_back(n);
    int reach = 0;
    for (int c : d) reach = std::max(reach, std::abs(c));
    WindowModel m = make_model(s.mu, s.cone(), g.window.value_or(std::max(s.window_bound, reach * nmax)));
    SlowVariation sv = slow_variation_check(m, d, grid, {zero_point(s.dimension)});
    const RateReport& rep = series == "forward" ? sv.forward.front() : sv.backward.front();
    Sink sink(g, emit, "tilt_" + series + ".csv");
    sink.os() << "n,log_quantity_over_n,predicted\n";
    for (std::size_t i = 0; i < rep.n.size(); ++i)
        sink.os() << rep.n[i] << "," << rep.values[i] << "," << rep.predicted << "\n";
    std::cerr << "extrapolated " << rep.extrapolated << " predicted " << rep.predicted << "\n";
    return 0;
}

std::vector<std::string> expand_scenarios(const std::string& arg) {
    std::vector<std::string> out;
    if (fs::is_directory(arg)) {
        for (const auto& e : fs::directory_iterator(arg))
            if (e.path().extension() == ".json") out.push_back(e.path().string());
        std::sort(out.begin(), out.end());
    } else {
        out.push_back(arg);
    }
    return out;
}

int run_checks(const Globals& g, const std::vector<std::string>& checks, const std::string& check_for_tol) {
    if (g.scenario.empty()) throw SchemaError("--scenario is required");
    bool ok = true;
    nlohmann::ordered_json all = nlohmann::ordered_json::array();
    auto files = expand_scenarios(g.scenario);
    for (const auto& f : files) {
        Globals one = g;
        one.scenario = f;
        Scenario s = load(one);
        if (g.tol) {
            static const std::map<std::string, double Tolerances::*> primary = {
                {"substochastic_PH", &Tolerances::substochastic}, {"renewal_identity", &Tolerances::identity},
                {"regime", &Tolerances::wald},                    {"ratio_vs_V", &Tolerances::ratio},
                {"theorem1", &Tolerances::theorem1},              {"theorem3", &Tolerances::theorem3_residual},
                {"never_exit", &Tolerances::never_exit_slack},    {"ladder_mc_tv", &Tolerances::tv},
                {"tilt_rate", &Tolerances::tilt_rel},             {"slow_variation", &Tolerances::slow_rate}};
            if (*g.tol <= 0) throw SchemaError("--tol must be positive");
            auto it = primary.find(check_for_tol);
            if (it != primary.end())
                s.tol.*(it->second) = *g.tol;
            else
                s.tol.renewal_doubling = *g.tol;
        }
        SuiteOptions o;
        if (!g.out_dir.empty()) o.out_dir = files.size() > 1 ? (fs::path(g.out_dir) / s.name).string() : g.out_dir;
        RunReport rep = run_suite(s, checks, o);
        ok = ok && rep.ok();
        for (const auto& c : rep.checks)
            std::cerr << s.name << " " << c.name << " " << to_string(c.status)
                      << (c.message.empty() ? "" : " (" + c.message + ")") << "\n";
        all.push_back(rep.to_json());
    }
    std::cout << (all.size() == 1 ? all.front() : all).dump(2) << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_config();
    CLI::App app{"Potential theory of random walks killed outside a cone: renewal, ratio limits, ladder laws, tilting"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--scenario", g.scenario, "scenario JSON file (suite/verify: also a directory)");
    app.add_option("--seed", g.seed, "override the scenario seed");
    app.add_option("--out-dir", g.out_dir, "directory for CSV/JSON artifacts");
    app.add_option("--window", g.window, "override the window bound M");
    app.add_option("--tol", g.tol, "override the main tolerance of the command");

    std::string emit;
    std::vector<int> start, direction;
    long replicas = 0;
    int horizon = 0, nmax = 0;
    std::string series = "backward";
    std::vector<std::string> checks;

    auto* renewal = app.add_subcommand("renewal", "renewal function V on windows M and 2M, with the regime");
    renewal->add_option("--emit", emit, "CSV file: x1..xd,V,g,regime");

    auto* ratio = app.add_subcommand("ratio", "f_n(x) = P_x(tau>n)/P_e(tau>n) against V(x)");
    ratio->add_option("--start", start, "point x, e.g. 2,3")->delimiter(',');
    ratio->add_option("--horizon", horizon, "largest n");
    ratio->add_option("--emit", emit, "CSV file: n,f_n,V");

    auto* mc = app.add_subcommand("ladder-mc", "empirical law of the first ladder point against p_H(x,.)");
    mc->add_option("--start", start, "point x, e.g. 1,1")->delimiter(',');
    mc->add_option("--replicas", replicas, "number of paths");
    mc->add_option("--horizon", horizon, "censoring time");
    mc->add_option("--emit", emit, "CSV file: x1..xd,empirical,exact");

    auto* tilt = app.add_subcommand("tilt-rate", "(1/n) log Q along a direction, with the tilting prediction");
    tilt->add_option("--direction", direction, "vector u, e.g. 1,0")->delimiter(',');
    tilt->add_option("--nmax", nmax, "largest n");
    tilt->add_option("--series", series, "backward: Q(nu,0); forward: Q(0,nu)")
        ->check(CLI::IsMember({"backward", "forward"}));
    tilt->add_option("--emit", emit, "CSV file: n,log_quantity_over_n,predicted");

    auto* verify = app.add_subcommand("verify", "run selected checks and print the JSON report");
    verify->add_option("--check", checks, "check names (default: all)");

    auto* suite = app.add_subcommand("suite", "run every registered check");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*renewal) return cmd_renewal(g, emit);
        if (*ratio) return cmd_ratio(g, start, horizon, emit);
        if (*mc) return cmd_ladder_mc(g, start, replicas, horizon, emit);
        if (*tilt) return cmd_tilt_rate(g, direction, nmax, series, emit);
        if (*verify) {
            if (checks.empty()) checks = registered_checks();
            return run_checks(g, checks, checks.size() == 1 ? checks.front() : "");
        }
        if (*suite) return run_checks(g, registered_checks(), "");
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
