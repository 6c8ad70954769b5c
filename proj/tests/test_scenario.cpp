#include "conewalk/errors.hpp"
#include "conewalk/scenario.hpp"

#include <doctest.h>

#include <filesystem>
#include <string>

using namespace conewalk;

static const char* kMinimal = R"({
  "name": "tiny",
  "dimension": 1,
  "steps": [{"step": [1], "prob": "1/2"}, {"step": [-1], "prob": "1/2"}],
  "cone_normals": [[1]],
  "window_bound": 200,
  "seed": 5
})";

static std::string with(const std::string& from, const std::string& to) {
    std::string s = kMinimal;
    s.replace(s.find(from), from.size(), to);
    return s;
}

TEST_CASE("a minimal scenario gets default probes") {
    Scenario s = parse_scenario(kMinimal);
    CHECK(s.name == "tiny");
    CHECK(s.dimension == 1);
    CHECK(s.mu.exact_mass() == Rational(1));
    CHECK_FALSE(s.drifted());
    CHECK(s.safe_bound == 8);
    CHECK(s.probes.ratio_x.size() == 1);
    CHECK(s.probes.ladder_start.size() == 1);
    CHECK_FALSE(s.probes.rate_grid.empty());
    CHECK_FALSE(s.harmonic.has_value());
    CHECK(s.regime_bound() == 50);
}

TEST_CASE("unknown keys are rejected by name") {
    std::string bad = with("\"seed\": 5", "\"seed\": 5, \"driftt\": 1");
    try {
        parse_scenario(bad);
        FAIL("accepted an unknown key");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("driftt") != std::string::npos);
    }
}

TEST_CASE("malformed scenarios") {
    CHECK_THROWS_AS(parse_scenario(with("\"prob\": \"1/2\"}, {", "\"prob\": \"7/10\"}, {")), SchemaError);
    CHECK_THROWS_AS(parse_scenario(with("\"dimension\": 1", "\"dimension\": 2")), SchemaError);
    CHECK_THROWS_AS(parse_scenario(with("[[1]]", "[[-1]]")), SchemaError);
    CHECK_THROWS_AS(parse_scenario(with("\"seed\": 5", "\"seed\": 5, \"tag\": \"sideways\"")), SchemaError);
    CHECK_THROWS_AS(parse_scenario("{\"name\": "), ParseError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/x.json"), ParseError);
}

TEST_CASE("tolerances and the regime pin are read") {
    Scenario s = parse_scenario(
        with("\"seed\": 5", "\"seed\": 5, \"regime\": \"integrable\", \"tolerances\": {\"tv\": 0.5}, \"tag\": \"drifted\""));
    CHECK(s.regime == Regime::integrable);
    CHECK(s.tol.tv == 0.5);
    CHECK(s.tol.wald == 1e-6);
    CHECK(s.drifted());
}

TEST_CASE("shipped fixtures load") {
    int n = 0;
    for (const auto& e : std::filesystem::directory_iterator(CONEWALK_SCENARIO_DIR)) {
        if (e.path().extension() != ".json") continue;
        Scenario s = load_scenario(e.path().string());
        CHECK(s.name == e.path().stem().string());
        CHECK(s.harmonic.has_value());
        ++n;
    }
    CHECK(n >= 6);
}
