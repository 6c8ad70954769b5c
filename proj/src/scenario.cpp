#include "conewalk/scenario.hpp"

#include "conewalk/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace conewalk {

using nlohmann::json;

namespace {

void allow_keys(const json& obj, const std::set<std::string>& keys, const std::string& where) {
    if (!obj.is_object()) throw SchemaError(where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!keys.count(it.key())) throw SchemaError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get(const json& obj, const std::string& key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::out_of_range&) {
        throw SchemaError("missing key '" + key + "' in " + where);
    } catch (const json::type_error& e) {
        throw SchemaError("bad type for '" + key + "' in " + where + ": " + e.what());
    }
}

template <class T>
void get_opt(const json& obj, const std::string& key, T& out, const std::string& where) {
    if (obj.contains(key)) out = get<T>(obj, key, where);
}

Point point_of(const json& j, int d, const std::string& where) {
    Point p;
    try {
        p = j.get<Point>();
    } catch (const json::exception&) {
        throw SchemaError(where + " must be an integer vector");
    }
    if (static_cast<int>(p.size()) != d) throw SchemaError(where + " has dimension " + std::to_string(p.size()));
    return p;
}

Rational prob_of(const json& j, const std::string& where) {
    try {
        if (j.is_string()) return parse_rational(j.get<std::string>());
        if (j.is_number_integer()) return Rational(j.get<long long>());
        if (j.is_number()) return parse_rational(j.dump());
    } catch (const Error& e) {
        throw SchemaError(where + ": " + e.what());
    }
    throw SchemaError(where + " must be a rational string or a number");
}

Factor factor_of(const json& j, const std::string& where) {
    allow_keys(j, {"constant", "linear", "exp_coeff", "exp_base"}, where);
    Factor f;
    get_opt(j, "constant", f.constant, where);
    get_opt(j, "linear", f.linear, where);
    get_opt(j, "exp_coeff", f.exp_coeff, where);
    get_opt(j, "exp_base", f.exp_base, where);
    return f;
}

void read_tolerances(const json& j, Tolerances& t) {
    const std::string where = "tolerances";
    std::vector<std::pair<const char*, double*>> fields = {
        {"substochastic", &t.substochastic}, {"v_origin", &t.v_origin},
        {"identity", &t.identity},           {"renewal_doubling", &t.renewal_doubling},
        {"wald", &t.wald},                   {"ratio", &t.ratio},
        {"ratio_gap", &t.ratio_gap},         {"theorem1", &t.theorem1},
        {"theorem3_zero", &t.theorem3_zero}, {"theorem3_residual", &t.theorem3_residual},
        {"tv", &t.tv},                       {"never_exit_slack", &t.never_exit_slack},
        {"never_exit_la", &t.never_exit_la}, {"support", &t.support},
        {"tilt_rel", &t.tilt_rel},           {"slow_rate", &t.slow_rate}};
    std::set<std::string> keys;
    for (auto& [k, _] : fields) keys.insert(k);
    allow_keys(j, keys, where);
    for (auto& [k, p] : fields) {
        get_opt(j, k, *p, where);
        if (!(*p > 0.0)) throw SchemaError(std::string("tolerance '") + k + "' must be positive");
    }
}

void read_probes(const json& j, int d, Probes& p) {
    const std::string w = "probes";
    allow_keys(j,
               {"ratio_x", "ratio_horizon", "ladder_start", "ladder_replicas", "ladder_max_steps", "never_exit_x",
                "never_exit_u", "never_exit_replicas", "never_exit_horizon", "rate_direction", "rate_grid", "slow_u",
                "slow_bases", "slow_grid", "regime_bound", "extrapolate"},
               w);
    auto pt = [&](const char* k, Point& out) {
        if (j.contains(k)) out = point_of(j.at(k), d, w + "." + k);
    };
    pt("ratio_x", p.ratio_x);
    pt("ladder_start", p.ladder_start);
    pt("never_exit_x", p.never_exit_x);
    pt("never_exit_u", p.never_exit_u);
    pt("rate_direction", p.rate_direction);
    pt("slow_u", p.slow_u);
    get_opt(j, "ratio_horizon", p.ratio_horizon, w);
    get_opt(j, "ladder_replicas", p.ladder_replicas, w);
    get_opt(j, "ladder_max_steps", p.ladder_max_steps, w);
    get_opt(j, "never_exit_replicas", p.never_exit_replicas, w);
    get_opt(j, "never_exit_horizon", p.never_exit_horizon, w);
    get_opt(j, "rate_grid", p.rate_grid, w);
    get_opt(j, "slow_grid", p.slow_grid, w);
    get_opt(j, "regime_bound", p.regime_bound, w);
    get_opt(j, "extrapolate", p.extrapolate, w);
    if (j.contains("slow_bases")) {
        const json& b = j.at("slow_bases");
        if (!b.is_array()) throw SchemaError("probes.slow_bases must be an array");
        p.slow_bases.clear();
        for (const auto& x : b) p.slow_bases.push_back(point_of(x, d, "probes.slow_bases[]"));
    }
}

void fill_defaults(Scenario& s) {
    const int d = s.dimension;
    Probes& p = s.probes;
    Point ones(static_cast<std::size_t>(d), 1);
    if (p.ratio_x.empty()) p.ratio_x = d == 1 ? Point{5} : Point(static_cast<std::size_t>(d), 2);
    if (p.ladder_start.empty()) p.ladder_start = d == 1 ? Point{3} : ones;
    if (p.never_exit_x.empty()) p.never_exit_x = zero_point(d);
    if (p.never_exit_u.empty()) p.never_exit_u = ones;
    if (p.rate_direction.empty()) p.rate_direction = ones;
    if (p.rate_grid.empty()) p.rate_grid = d == 1 ? std::vector<int>{10, 20, 30, 40, 50, 60} : std::vector<int>{10, 20, 30, 40};
    if (p.slow_u.empty()) p.slow_u = ones;
    if (p.slow_grid.empty()) p.slow_grid = {5, 10, 20, 40};
    if (p.slow_bases.empty()) p.slow_bases = {zero_point(d)};
}

// Every cone here must sit inside the nonnegative orthant, since windows are boxes [0,M]^d.
void check_cone(const ConeRegion& cone) {
    const int d = cone.dim();
    const int k = 4;
    Point x(static_cast<std::size_t>(d), -k);
    while (true) {
        bool neg = false;
        for (int c : x) neg = neg || c < 0;
        if (neg && cone.contains(x))
            throw SchemaError("cone contains " + to_string(x) + " outside the nonnegative orthant");
        int i = 0;
        while (i < d && ++x[static_cast<std::size_t>(i)] > k) x[static_cast<std::size_t>(i++)] = -k;
        if (i == d) break;
    }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
    const std::string w = "scenario";
    allow_keys(j,
               {"name", "dimension", "steps", "cone_normals", "window_bound", "safe_bound", "seed", "regime", "tag",
                "tolerances", "harmonic", "probes"},
               w);
    Scenario s;
    s.source = source;
    s.name = get<std::string>(j, "name", w);
    s.dimension = get<int>(j, "dimension", w);
    if (s.dimension < 1 || s.dimension > 3) throw SchemaError("dimension must be 1, 2 or 3");
    const int d = s.dimension;

    if (!j.contains("steps")) throw SchemaError("missing key 'steps' in scenario");
    const json& steps = j.at("steps");
    if (!steps.is_array() || steps.empty()) throw SchemaError("steps must be a non-empty array");
    std::vector<std::pair<Point, Rational>> entries;
    for (const auto& st : steps) {
        allow_keys(st, {"step", "prob"}, "steps[]");
        if (!st.contains("step") || !st.contains("prob")) throw SchemaError("steps[] needs 'step' and 'prob'");
        entries.emplace_back(point_of(st.at("step"), d, "steps[].step"), prob_of(st.at("prob"), "steps[].prob"));
    }
    try {
        s.mu = StepDistribution::from_rationals(entries);
    } catch (const Error& e) {
        throw SchemaError(std::string("steps: ") + e.what());
    }

    if (!j.contains("cone_normals") || !j.at("cone_normals").is_array() || j.at("cone_normals").empty())
        throw SchemaError("cone_normals must be a non-empty array");
    for (const auto& a : j.at("cone_normals")) s.cone_normals.push_back(point_of(a, d, "cone_normals[]"));
    check_cone(s.cone());

    s.window_bound = get<int>(j, "window_bound", w);
    if (s.window_bound < 1) throw SchemaError("window_bound must be positive");
    get_opt(j, "safe_bound", s.safe_bound, w);
    if (s.safe_bound < 0 || s.safe_bound > s.window_bound) throw SchemaError("safe_bound must lie in [0, window_bound]");
    get_opt(j, "seed", s.seed, w);
    if (j.contains("regime")) s.regime = parse_regime(get<std::string>(j, "regime", w));
    get_opt(j, "tag", s.tag, w);
    if (s.tag != "centered" && s.tag != "drifted") throw SchemaError("tag must be 'centered' or 'drifted'");
    if (j.contains("tolerances")) read_tolerances(j.at("tolerances"), s.tol);
    if (j.contains("harmonic")) {
        const json& h = j.at("harmonic");
        allow_keys(h, {"kind", "factors"}, "harmonic");
        auto kind = get<std::string>(h, "kind", "harmonic");
        if (kind == "product") {
            std::vector<Factor> fs;
            if (!h.contains("factors") || !h.at("factors").is_array()) throw SchemaError("harmonic.factors missing");
            for (const auto& f : h.at("factors")) fs.push_back(factor_of(f, "harmonic.factors[]"));
            if (static_cast<int>(fs.size()) != d) throw SchemaError("harmonic.factors needs one entry per coordinate");
            s.harmonic = ClosedForm::product(fs);
        } else if (kind == "wedge_b2") {
            if (d != 2) throw SchemaError("wedge_b2 is two-dimensional");
            if (h.contains("factors")) throw SchemaError("wedge_b2 takes no factors");
            s.harmonic = ClosedForm::wedge_b2();
        } else {
            throw SchemaError("harmonic.kind must be 'product' or 'wedge_b2', got '" + kind + "'");
        }
    }
    if (j.contains("probes")) read_probes(j.at("probes"), d, s.probes);
    fill_defaults(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

}  // namespace conewalk
