#pragma once

#include <json.hpp>
#include <span>
#include <string>
#include <vector>

namespace stograph::report {

using json = nlohmann::ordered_json;

struct RateFit {
    double rate = 0.0;
    double r_squared = 0.0;
};

// Least-squares slope of log(history) over the trailing window of
// ceil(tail_fraction * n) points (at least 4); rate is the negated slope.
RateFit fit_exponential_rate(std::span<const double> history, double tail_fraction);

struct ProbeEntry {
    std::string name;
    json values;
    double threshold = 0.0;
    std::string verdict;  // pass | fail | skipped
};

// Single machine-readable report.  Field order is fixed by construction;
// every expected probe must appear exactly once.
json assemble_report(const json& config_echo, const json& solve, const std::vector<ProbeEntry>& probes,
                     const json& environment, const std::vector<std::string>& expected_probes);

// Canonical serialization: two-space indent, insertion order, doubles with
// 17 significant digits so that serialize -> parse -> serialize is
// byte-identical.
std::string dump_report(const json& j);
json parse_report(const std::string& text);

void write_report_file(const json& j, const std::string& path);

}  // namespace stograph::report
