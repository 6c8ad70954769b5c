#pragma once

#include "conewalk/scenario.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace conewalk {

enum class CheckStatus { pass, fail, expected_fail, undetermined };
std::string to_string(CheckStatus s);

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::undetermined;
    bool expected_fail = false;  // tagged by the scenario
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    std::string message;
    double seconds = 0.0;
};

struct RunReport {
    std::string scenario;
    std::uint64_t seed = 0;
    int window_bound = 0;
    std::vector<CheckResult> checks;
    std::vector<std::string> artifacts;  // relative to the output directory
    double wall_time = 0.0;

    // Everything except timings when `with_timing` is false.
    nlohmann::ordered_json to_json(bool with_timing = true) const;
    bool ok() const;  // no check with status fail
};

const std::vector<std::string>& registered_checks();
// Checks whose failure is anticipated on drifted scenarios.
bool expected_to_fail(const Scenario& s, const std::string& check);

struct SuiteOptions {
    std::string out_dir;  // empty: no artifacts
    bool write_report = true;
};

RunReport run_suite(const Scenario& s, const std::vector<std::string>& checks, const SuiteOptions& opts = {});

// CLI exit code for a report: 0 iff ok().
int exit_code(const RunReport& r);

}  // namespace conewalk
