#include "stograph/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "stograph/errors.hpp"
#include "stograph/sto.hpp"

namespace stograph::config {

namespace {

struct RawEntry {
    std::string value;
    int line = 0;
};

using RawMap = std::map<std::string, RawEntry>;

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "map", "map_eps", "coupling", "alpha", "alpha_frac", "seed", "p_exp", "threads",
        "graphon.type", "graphon.p", "graphon.cuts", "graphon.values", "graphon.xi", "graphon.N",
        "graphon.seed",
        "grid.nx", "grid.nz",
        "solver.tol", "solver.max_iter", "solver.uniqueness",
        "init.profile",
        "probes.names", "probes.lasota_yorke_trials", "probes.lasota_yorke_threshold",
        "probes.memory_loss_sequences", "probes.memory_loss_steps", "probes.memory_loss_margin",
        "probes.lipschitz_pairs", "probes.lipschitz_threshold", "probes.hilbert_pairs",
        "probes.hilbert_threshold", "probes.ck_audit_threshold", "probes.invariance_burn_in",
        "probes.invariance_factor", "probes.concentration_N", "probes.concentration_R",
        "probes.concentration_r2", "probes.concentration_eps",
        "sweep.enabled", "sweep.N_list", "sweep.t", "sweep.R", "sweep.z_star", "sweep.bootstrap",
        "output.dir"};
    return keys;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

RawMap parse_ini(const std::string& text) {
    RawMap raw;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(ConfigCode::TypeMismatch, lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(ConfigCode::TypeMismatch, lineno, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(ConfigCode::TypeMismatch, lineno, "empty key");
        if (!section.empty()) key = section + "." + key;
        raw[key] = {value, lineno};
    }
    return raw;
}

void flatten_json(const report::json& j, const std::string& prefix, RawMap& raw) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        const auto& v = it.value();
        if (v.is_object()) {
            flatten_json(v, key, raw);
        } else if (v.is_array()) {
            std::string s;
            for (const auto& e : v) {
                if (!s.empty()) s += " ";
                s += e.is_string() ? e.get<std::string>() : e.dump();
            }
            raw[key] = {s, 0};
        } else if (v.is_string()) {
            raw[key] = {v.get<std::string>(), 0};
        } else {
            raw[key] = {v.dump(), 0};
        }
    }
}

double to_double(const RawEntry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(ConfigCode::TypeMismatch, e.line, key + ": expected a number, got '" + e.value + "'");
    }
}

long long to_int(const RawEntry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(ConfigCode::TypeMismatch, e.line, key + ": expected an integer, got '" + e.value + "'");
    }
}

bool to_bool(const RawEntry& e, const std::string& key) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw ConfigError(ConfigCode::TypeMismatch, e.line, key + ": expected a boolean, got '" + e.value + "'");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<double> to_double_list(const RawEntry& e, const std::string& key) {
    std::vector<double> out;
    for (const auto& tok : split_list(e.value)) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(ConfigCode::TypeMismatch, e.line, key + ": expected numbers, got '" + tok + "'");
        }
    }
    return out;
}

std::vector<int> to_int_list(const RawEntry& e, const std::string& key) {
    std::vector<int> out;
    for (double v : to_double_list(e, key)) out.push_back(static_cast<int>(v));
    return out;
}

ExperimentConfig from_raw(const RawMap& raw) {
    const auto& keys = known_keys();
    for (const auto& [key, entry] : raw)
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError(ConfigCode::UnknownKey, entry.line, "unknown key: " + key);

    ExperimentConfig cfg;
    auto get = [&](const std::string& key) -> const RawEntry* {
        auto it = raw.find(key);
        return it == raw.end() ? nullptr : &it->second;
    };

    if (auto* e = get("map")) cfg.map = e->value;
    if (auto* e = get("map_eps")) cfg.map_eps = to_double(*e, "map_eps");
    if (auto* e = get("coupling")) cfg.coupling = e->value;
    if (auto* e = get("alpha")) cfg.alpha = to_double(*e, "alpha");
    if (auto* e = get("alpha_frac")) cfg.alpha_frac = to_double(*e, "alpha_frac");
    if (auto* e = get("seed")) cfg.seed = static_cast<std::uint64_t>(to_int(*e, "seed"));
    if (auto* e = get("p_exp")) cfg.p_exp = to_double(*e, "p_exp");
    if (auto* e = get("threads")) cfg.threads = static_cast<int>(to_int(*e, "threads"));

    if (auto* e = get("graphon.type")) cfg.graphon.type = e->value;
    if (auto* e = get("graphon.p")) cfg.graphon.p = to_double(*e, "graphon.p");
    if (auto* e = get("graphon.cuts")) cfg.graphon.cuts = to_double_list(*e, "graphon.cuts");
    if (auto* e = get("graphon.values")) cfg.graphon.values = to_double_list(*e, "graphon.values");
    if (auto* e = get("graphon.xi")) cfg.graphon.xi = e->value;
    if (auto* e = get("graphon.N")) cfg.graphon.n = static_cast<int>(to_int(*e, "graphon.N"));
    if (auto* e = get("graphon.seed")) cfg.graphon.seed = static_cast<std::uint64_t>(to_int(*e, "graphon.seed"));

    if (auto* e = get("grid.nx")) cfg.nx = static_cast<int>(to_int(*e, "grid.nx"));
    if (auto* e = get("grid.nz")) cfg.nz = static_cast<int>(to_int(*e, "grid.nz"));

    if (auto* e = get("solver.tol")) cfg.tol = to_double(*e, "solver.tol");
    if (auto* e = get("solver.max_iter")) cfg.max_iter = static_cast<int>(to_int(*e, "solver.max_iter"));
    if (auto* e = get("solver.uniqueness")) cfg.uniqueness = to_bool(*e, "solver.uniqueness");

    if (auto* e = get("init.profile")) cfg.init_profile = e->value;

    if (auto* e = get("probes.names")) cfg.probes.names = split_list(e->value);
    if (auto* e = get("probes.lasota_yorke_trials"))
        cfg.probes.lasota_yorke_trials = static_cast<int>(to_int(*e, "probes.lasota_yorke_trials"));
    if (auto* e = get("probes.lasota_yorke_threshold"))
        cfg.probes.lasota_yorke_threshold = to_double(*e, "probes.lasota_yorke_threshold");
    if (auto* e = get("probes.memory_loss_sequences"))
        cfg.probes.memory_loss_sequences = static_cast<int>(to_int(*e, "probes.memory_loss_sequences"));
    if (auto* e = get("probes.memory_loss_steps"))
        cfg.probes.memory_loss_steps = static_cast<int>(to_int(*e, "probes.memory_loss_steps"));
    if (auto* e = get("probes.memory_loss_margin"))
        cfg.probes.memory_loss_margin = to_double(*e, "probes.memory_loss_margin");
    if (auto* e = get("probes.lipschitz_pairs"))
        cfg.probes.lipschitz_pairs = static_cast<int>(to_int(*e, "probes.lipschitz_pairs"));
    if (auto* e = get("probes.lipschitz_threshold"))
        cfg.probes.lipschitz_threshold = to_double(*e, "probes.lipschitz_threshold");
    if (auto* e = get("probes.hilbert_pairs"))
        cfg.probes.hilbert_pairs = static_cast<int>(to_int(*e, "probes.hilbert_pairs"));
    if (auto* e = get("probes.hilbert_threshold"))
        cfg.probes.hilbert_threshold = to_double(*e, "probes.hilbert_threshold");
    if (auto* e = get("probes.ck_audit_threshold"))
        cfg.probes.ck_audit_threshold = to_double(*e, "probes.ck_audit_threshold");
    if (auto* e = get("probes.invariance_burn_in"))
        cfg.probes.invariance_burn_in = static_cast<int>(to_int(*e, "probes.invariance_burn_in"));
    if (auto* e = get("probes.invariance_factor"))
        cfg.probes.invariance_factor = to_double(*e, "probes.invariance_factor");
    if (auto* e = get("probes.concentration_N"))
        cfg.probes.concentration_n = static_cast<int>(to_int(*e, "probes.concentration_N"));
    if (auto* e = get("probes.concentration_R"))
        cfg.probes.concentration_r = static_cast<int>(to_int(*e, "probes.concentration_R"));
    if (auto* e = get("probes.concentration_r2"))
        cfg.probes.concentration_r2 = to_double(*e, "probes.concentration_r2");
    if (auto* e = get("probes.concentration_eps"))
        cfg.probes.concentration_eps = to_double_list(*e, "probes.concentration_eps");

    if (auto* e = get("sweep.enabled")) cfg.sweep.enabled = to_bool(*e, "sweep.enabled");
    if (auto* e = get("sweep.N_list")) cfg.sweep.n_list = to_int_list(*e, "sweep.N_list");
    if (auto* e = get("sweep.t")) cfg.sweep.t = static_cast<int>(to_int(*e, "sweep.t"));
    if (auto* e = get("sweep.R")) cfg.sweep.r = static_cast<int>(to_int(*e, "sweep.R"));
    if (auto* e = get("sweep.z_star")) cfg.sweep.z_star = to_double_list(*e, "sweep.z_star");
    if (auto* e = get("sweep.bootstrap")) cfg.sweep.bootstrap = static_cast<int>(to_int(*e, "sweep.bootstrap"));

    if (auto* e = get("output.dir")) cfg.out_dir = e->value;

    // Structural validation with first-error semantics.
    auto line_of = [&](const std::string& key) {
        auto it = raw.find(key);
        return it == raw.end() ? 0 : it->second.line;
    };
    if (cfg.nx < 2) throw ConfigError(ConfigCode::BadValue, line_of("grid.nx"), "grid.nx must be >= 2");
    if (cfg.nz < 2) throw ConfigError(ConfigCode::BadValue, line_of("grid.nz"), "grid.nz must be >= 2");
    if (!(cfg.tol > 0.0)) throw ConfigError(ConfigCode::BadValue, line_of("solver.tol"), "solver.tol must be > 0");
    if (cfg.max_iter < 1)
        throw ConfigError(ConfigCode::BadValue, line_of("solver.max_iter"), "solver.max_iter must be >= 1");
    if (cfg.alpha && cfg.alpha_frac)
        throw ConfigError(ConfigCode::BadValue, line_of("alpha_frac"),
                          "alpha and alpha_frac are mutually exclusive");
    if (!(cfg.p_exp > 0.0 && cfg.p_exp <= 1.0))
        throw ConfigError(ConfigCode::BadValue, line_of("p_exp"), "p_exp must lie in (0,1]");

    const auto maps_list = maps::map_names();
    if (std::find(maps_list.begin(), maps_list.end(), cfg.map) == maps_list.end())
        throw ConfigError(ConfigCode::UnresolvableName, line_of("map"), "unknown map: " + cfg.map);
    const auto couplings = maps::coupling_names();
    if (std::find(couplings.begin(), couplings.end(), cfg.coupling) == couplings.end())
        throw ConfigError(ConfigCode::UnresolvableName, line_of("coupling"), "unknown coupling: " + cfg.coupling);
    static const std::vector<std::string> graphon_types = {"constant", "block", "translation", "step_er"};
    if (std::find(graphon_types.begin(), graphon_types.end(), cfg.graphon.type) == graphon_types.end())
        throw ConfigError(ConfigCode::UnresolvableName, line_of("graphon.type"),
                          "unknown graphon.type: " + cfg.graphon.type);
    static const std::vector<std::string> profiles = {"uniform", "sin", "two_cluster", "lipschitz"};
    if (std::find(profiles.begin(), profiles.end(), cfg.init_profile) == profiles.end())
        throw ConfigError(ConfigCode::UnresolvableName, line_of("init.profile"),
                          "unknown init.profile: " + cfg.init_profile);
    const auto probes = known_probes();
    for (const auto& name : cfg.probes.names)
        if (std::find(probes.begin(), probes.end(), name) == probes.end())
            throw ConfigError(ConfigCode::UnresolvableName, line_of("probes.names"),
                              "unknown probe: " + name);
    return cfg;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, bool is_json) {
    RawMap raw;
    if (is_json) {
        report::json j;
        try {
            j = report::json::parse(text);
        } catch (const std::exception& e) {
            throw ConfigError(ConfigCode::TypeMismatch, 0, std::string("invalid JSON: ") + e.what());
        }
        flatten_json(j, "", raw);
    } else {
        raw = parse_ini(text);
    }
    return from_raw(raw);
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(ConfigCode::Io, 0, "cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    const bool looks_json = first != std::string::npos && text[first] == '{';
    return parse_config_text(text, is_json || looks_json);
}

std::vector<std::string> known_probes() {
    return {"uniqueness", "lasota_yorke", "memory_loss", "lipschitz", "hilbert",
            "ck_audit",   "invariance",   "concentration"};
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.preset_name = name;
    cfg.alpha_frac = 0.5;
    // Perturbed local dynamics give the transfer operators a genuine
    // subleading spectrum; with the exact doubling map the grid operator is
    // close to nilpotent and the residual tail has no measurable slope.
    cfg.map = "perturbed_doubling";
    cfg.map_eps = 0.3;
    cfg.tol = 1e-15;
    cfg.max_iter = 80;
    cfg.probes.names = {"uniqueness", "lasota_yorke", "memory_loss", "hilbert", "ck_audit", "invariance"};
    if (name == "clustered") {
        cfg.graphon.type = "block";
        cfg.graphon.cuts = {0.5};
        cfg.graphon.values = {1.0, 0.2, 0.2, 0.5};
        cfg.init_profile = "two_cluster";
        cfg.sweep.z_star = {0.25, 0.75};
        return cfg;
    }
    if (name == "decay") {
        cfg.graphon.type = "translation";
        cfg.graphon.xi = "linear";
        cfg.init_profile = "lipschitz";
        cfg.sweep.z_star = {0.1, 0.5, 0.9};
        return cfg;
    }
    if (name == "er") {
        cfg.graphon.type = "constant";
        cfg.graphon.p = 0.5;
        cfg.init_profile = "sin";
        cfg.sweep.z_star = {0.1, 0.5, 0.9};
        return cfg;
    }
    throw stograph::LookupError("unknown preset: " + name);
}

std::vector<std::string> preset_names() { return {"clustered", "decay", "er"}; }

report::json config_echo(const ExperimentConfig& cfg) {
    report::json j = report::json::object();
    if (!cfg.preset_name.empty()) j["preset"] = cfg.preset_name;
    j["map"] = cfg.map;
    if (cfg.map == "perturbed_doubling") j["map_eps"] = cfg.map_eps;
    j["coupling"] = cfg.coupling;
    if (cfg.alpha) j["alpha"] = *cfg.alpha;
    if (cfg.alpha_frac) j["alpha_frac"] = *cfg.alpha_frac;
    report::json g = report::json::object();
    g["type"] = cfg.graphon.type;
    if (cfg.graphon.type == "constant") g["p"] = cfg.graphon.p;
    if (cfg.graphon.type == "block") {
        g["cuts"] = cfg.graphon.cuts;
        g["values"] = cfg.graphon.values;
    }
    if (cfg.graphon.type == "translation") g["xi"] = cfg.graphon.xi;
    if (cfg.graphon.type == "step_er") {
        g["p"] = cfg.graphon.p;
        g["N"] = cfg.graphon.n;
        g["seed"] = cfg.graphon.seed;
    }
    j["graphon"] = g;
    report::json grid = report::json::object();
    grid["nx"] = cfg.nx;
    grid["nz"] = cfg.nz;
    j["grid"] = grid;
    report::json solver = report::json::object();
    solver["tol"] = cfg.tol;
    solver["max_iter"] = cfg.max_iter;
    solver["uniqueness"] = cfg.uniqueness;
    j["solver"] = solver;
    j["init"] = cfg.init_profile;
    j["p_exp"] = cfg.p_exp;
    j["probes"] = cfg.probes.names;
    if (cfg.sweep.enabled) {
        report::json sw = report::json::object();
        sw["N_list"] = cfg.sweep.n_list;
        sw["t"] = cfg.sweep.t;
        sw["R"] = cfg.sweep.r;
        sw["z_star"] = cfg.sweep.z_star;
        sw["bootstrap"] = cfg.sweep.bootstrap;
        j["sweep"] = sw;
    }
    j["seed"] = cfg.seed;
    j["alpha_warning"] = cfg.alpha_warning;
    return j;
}

ResolvedExperiment resolve(const ExperimentConfig& cfg) {
    ResolvedExperiment r;
    r.f = maps::make_map(cfg.map, cfg.map_eps);
    r.h = maps::make_coupling(cfg.coupling);

    if (cfg.graphon.type == "constant") {
        r.w = graphon::Graphon::constant(cfg.graphon.p);
        r.scenario = sim::Scenario::Er;
    } else if (cfg.graphon.type == "block") {
        if (cfg.graphon.values.empty())
            throw ConfigError(ConfigCode::Missing, 0, "block graphon needs graphon.values");
        r.w = graphon::Graphon::block(cfg.graphon.cuts, cfg.graphon.values);
        r.scenario = sim::Scenario::Clustered;
    } else if (cfg.graphon.type == "translation") {
        r.w = graphon::Graphon::translation(cfg.graphon.xi);
        r.scenario = sim::Scenario::Decay;
    } else {  // step_er: a sampled finite graphon; the constant limit drives sweeps
        const auto adj = graphon::sample_er(cfg.graphon.n, cfg.graphon.p, cfg.graphon.seed);
        r.w = graphon::step_graphon_from_matrix(adj);
        r.scenario = sim::Scenario::Er;
    }

    r.alpha_hat = sto::alpha_hat(r.f, r.h);
    const double wnorm = r.w.linf_l1_bound();
    if (cfg.alpha_frac) {
        if (!std::isfinite(r.alpha_hat) || wnorm == 0.0)
            throw ConfigError(ConfigCode::BadValue, 0, "alpha_frac needs a finite alpha_hat and nonzero ||W||");
        r.alpha = *cfg.alpha_frac * r.alpha_hat / wnorm;
    } else if (cfg.alpha) {
        r.alpha = *cfg.alpha;
    } else {
        r.alpha = 0.0;
    }
    r.alpha_warning = std::fabs(r.alpha) * wnorm >= r.alpha_hat;
    return r;
}

fibered::FiberedDensity make_named_profile(const std::string& name, int nz, int nx) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    auto sin_row = [two_pi](double amp, int n) {
        std::vector<double> v(n);
        for (int j = 0; j < n; ++j) v[j] = 1.0 + amp * std::sin(two_pi * j / n);
        return dens::CircleDensity(n, std::move(v));
    };
    if (name == "uniform") return fibered::uniform_fibered(nz, nx);
    if (name == "sin")
        return fibered::make_profile(nz, nx, [&](double, int n) { return sin_row(0.5, n); });
    if (name == "two_cluster")
        return fibered::make_profile(nz, nx,
                                     [&](double z, int n) { return sin_row(z <= 0.5 ? 0.5 : -0.5, n); });
    if (name == "lipschitz")
        return fibered::make_profile(nz, nx,
                                     [&](double z, int n) { return sin_row(0.5 * (2.0 * z - 1.0), n); });
    throw stograph::LookupError("unknown init profile: " + name);
}

fibered::FiberedDensity initial_state(const ExperimentConfig& cfg) {
    return make_named_profile(cfg.init_profile, cfg.nz, cfg.nx);
}

}  // namespace stograph::config
