#include "stograph/metrics_report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "stograph/errors.hpp"

namespace stograph::report {

RateFit fit_exponential_rate(std::span<const double> history, double tail_fraction) {
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw ParameterError("fit_exponential_rate: tail_fraction must lie in (0,1]");
    const int n = static_cast<int>(history.size());
    const int count = std::max(4, static_cast<int>(std::ceil(tail_fraction * n)));
    if (count > n) throw FitError("fit_exponential_rate: need at least 4 tail points");

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::vector<double> ys(count);
    for (int i = 0; i < count; ++i) {
        const double h = history[n - count + i];
        if (!(h > 0.0)) throw FitError("fit_exponential_rate: non-positive entry in tail");
        const double x = static_cast<double>(i);
        const double y = std::log(h);
        ys[i] = y;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = count * sxx - sx * sx;
    const double slope = (count * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / count;

    double ss_res = 0.0, ss_tot = 0.0;
    const double mean = sy / count;
    for (int i = 0; i < count; ++i) {
        const double fit = intercept + slope * i;
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - mean) * (ys[i] - mean);
    }
    RateFit out;
    out.rate = -slope;
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return out;
}

json assemble_report(const json& config_echo, const json& solve, const std::vector<ProbeEntry>& probes,
                     const json& environment, const std::vector<std::string>& expected_probes) {
    std::set<std::string> seen;
    json probe_block = json::object();
    for (const auto& p : probes) {
        if (!seen.insert(p.name).second) throw AssemblyError("duplicate probe: " + p.name);
        if (p.verdict != "pass" && p.verdict != "fail" && p.verdict != "skipped")
            throw AssemblyError("invalid verdict for probe " + p.name + ": " + p.verdict);
        json entry = json::object();
        entry["values"] = p.values;
        entry["threshold"] = p.threshold;
        entry["verdict"] = p.verdict;
        probe_block[p.name] = std::move(entry);
    }
    for (const auto& name : expected_probes)
        if (!seen.count(name)) throw AssemblyError("missing probe: " + name);

    json out = json::object();
    out["config"] = config_echo;
    out["solve"] = solve;
    out["probes"] = std::move(probe_block);
    out["environment"] = environment;
    return out;
}

namespace {

void escape_string(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void dump_value(const json& j, std::string& out, int indent) {
    const std::string pad(2 * static_cast<std::size_t>(indent), ' ');
    const std::string pad_in(2 * static_cast<std::size_t>(indent + 1), ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                escape_string(it.key(), out);
                out += ": ";
                dump_value(it.value(), out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += pad_in;
                dump_value(j[i], out, indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case json::value_t::string:
            escape_string(j.get<std::string>(), out);
            return;
        case json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            return;
        case json::value_t::number_integer:
            out += std::to_string(j.get<long long>());
            return;
        case json::value_t::number_unsigned:
            out += std::to_string(j.get<unsigned long long>());
            return;
        case json::value_t::number_float: {
            const double v = j.get<double>();
            if (!std::isfinite(v)) {
                out += "null";
                return;
            }
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out += buf;
            return;
        }
        default:
            out += "null";
            return;
    }
}

}  // namespace

std::string dump_report(const json& j) {
    std::string out;
    dump_value(j, out, 0);
    out += '\n';
    return out;
}

json parse_report(const std::string& text) { return json::parse(text); }

void write_report_file(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("write_report_file: cannot open " + path);
    out << dump_report(j);
}

}  // namespace stograph::report
