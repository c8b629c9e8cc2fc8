#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stograph/circle_maps.hpp"
#include "stograph/fibered.hpp"
#include "stograph/finite_sim.hpp"
#include "stograph/graphon.hpp"
#include "stograph/metrics_report.hpp"

namespace stograph::config {

enum class ConfigCode { Io, UnknownKey, TypeMismatch, UnresolvableName, BadValue, Missing };

class ConfigError : public std::runtime_error {
public:
    ConfigError(ConfigCode code, int line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          code_(code), line_(line) {}
    ConfigCode code() const { return code_; }
    int line() const { return line_; }

private:
    ConfigCode code_;
    int line_;
};

struct GraphonConfig {
    std::string type = "constant";  // constant | block | translation | step_er
    double p = 0.5;
    std::vector<double> cuts;
    std::vector<double> values;  // row-major
    std::string xi = "linear";
    int n = 200;
    std::uint64_t seed = 1;
};

struct SweepSettings {
    bool enabled = false;
    std::vector<int> n_list{100, 400, 1600};
    int t = 3;
    int r = 2000;
    std::vector<double> z_star{0.25, 0.75};
    int bootstrap = 200;
};

struct ProbeSettings {
    std::vector<std::string> names;
    int lasota_yorke_trials = 200;
    double lasota_yorke_threshold = -1e-8;  // min slack allowed
    int memory_loss_sequences = 5;
    int memory_loss_steps = 8;
    double memory_loss_margin = 0.05;  // allowed excess over 1/xi
    int lipschitz_pairs = 20;
    double lipschitz_threshold = 1e3;  // ratio sanity bound
    int hilbert_pairs = 20;
    double hilbert_threshold = 1.0;
    double ck_audit_threshold = 1.1;
    int invariance_burn_in = 5;
    double invariance_factor = 1.5;
    int concentration_n = 400;
    int concentration_r = 10000;
    double concentration_r2 = 0.9;
    std::vector<double> concentration_eps{0.004, 0.006, 0.008, 0.010, 0.012};
};

struct ExperimentConfig {
    std::string map = "doubling";
    double map_eps = 0.3;
    std::string coupling = "h1";
    std::optional<double> alpha;
    std::optional<double> alpha_frac;  // fraction of alpha_hat / ||W||
    GraphonConfig graphon;
    int nx = 256;
    int nz = 64;
    double tol = 1e-10;
    int max_iter = 500;
    bool uniqueness = true;
    std::string init_profile = "uniform";
    double p_exp = 1.0;
    ProbeSettings probes;
    SweepSettings sweep;
    std::uint64_t seed = 42;
    int threads = 1;
    std::string out_dir = "out";

    std::string preset_name;  // set when built from a preset
    bool alpha_warning = false;  // alpha above the certified threshold
};

/// Parse a config file (INI-like key = value, or JSON when the file starts
/// with '{' or ends in .json).  First error wins and carries line context.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, bool is_json);

/// Presets: "clustered", "decay", "er".
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Known probe names accepted in probes.names.
std::vector<std::string> known_probes();

report::json config_echo(const ExperimentConfig& cfg);

// Resolved experiment: catalog objects constructed, alpha made absolute and
// checked against the certified threshold, initial state built.
struct ResolvedExperiment {
    maps::ExpandingMap f;
    maps::CouplingFunction h;
    graphon::Graphon w = graphon::Graphon::constant(0.0);
    double alpha = 0.0;
    double alpha_hat = 0.0;
    bool alpha_warning = false;
    sim::Scenario scenario = sim::Scenario::Er;
};

ResolvedExperiment resolve(const ExperimentConfig& cfg);

/// Initial fibered state for the configured profile.
fibered::FiberedDensity initial_state(const ExperimentConfig& cfg);

/// Named z-profiles: uniform, sin, two_cluster, lipschitz.
fibered::FiberedDensity make_named_profile(const std::string& name, int nz, int nx);

}  // namespace stograph::config
