#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stograph/config.hpp"
#include "stograph/errors.hpp"
#include "stograph/metrics_report.hpp"
#include "stograph/rng.hpp"

using namespace stograph;

TEST_CASE("fit_exponential_rate") {
    const std::vector<double> geometric{1.0, std::exp(-1.0), std::exp(-2.0), std::exp(-3.0), std::exp(-4.0)};
    const auto fit = report::fit_exponential_rate(geometric, 1.0);
    CHECK(fit.rate == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> flat(8, 0.25);
    const auto fit_flat = report::fit_exponential_rate(flat, 1.0);
    CHECK(fit_flat.rate == doctest::Approx(0.0).epsilon(1e-12));

    // noisy geometric: 5% multiplicative noise, rate within 10% of truth
    for (int seed = 0; seed < 100; ++seed) {
        CounterRng rng = CounterRng::keyed(900 + seed, 0);
        std::vector<double> hist(20);
        for (int t = 0; t < 20; ++t) hist[t] = std::exp(-t) * (1.0 + 0.05 * (2 * rng.next_double() - 1));
        const auto f = report::fit_exponential_rate(hist, 1.0);
        CHECK(std::fabs(f.rate - 1.0) < 0.1);
    }

    CHECK_THROWS_AS(report::fit_exponential_rate(std::vector<double>{1, 2, 3}, 1.0), FitError);
    CHECK_THROWS_AS(report::fit_exponential_rate(std::vector<double>{1, 1, 0.0, 1, 1}, 1.0), FitError);
    CHECK_THROWS_AS(report::fit_exponential_rate(geometric, 0.0), ParameterError);
}

TEST_CASE("assemble_report validation") {
    report::json cfg = report::json::object();
    cfg["seed"] = 1;
    report::json solve = report::json::object();
    solve["converged"] = true;
    report::json env = report::json::object();

    const auto empty = report::assemble_report(cfg, solve, {}, env, {});
    CHECK(empty.at("probes").empty());
    CHECK(empty.at("solve").at("converged").get<bool>());

    std::vector<report::ProbeEntry> probes;
    probes.push_back({"a", report::json::object(), 0.5, "pass"});
    probes.push_back({"b", report::json::object(), 1.0, "skipped"});
    const auto full = report::assemble_report(cfg, solve, probes, env, {"a", "b"});
    CHECK(full.at("probes").size() == 2);
    CHECK(full.at("probes").at("b").at("verdict") == "skipped");

    probes.push_back({"a", report::json::object(), 0.0, "pass"});
    CHECK_THROWS_AS(report::assemble_report(cfg, solve, probes, env, {}), AssemblyError);
    probes.pop_back();
    CHECK_THROWS_AS(report::assemble_report(cfg, solve, probes, env, {"a", "b", "missing"}), AssemblyError);
    probes[0].verdict = "maybe";
    CHECK_THROWS_AS(report::assemble_report(cfg, solve, probes, env, {"a", "b"}), AssemblyError);
}

TEST_CASE("report serialization round-trips byte for byte") {
    report::json j = report::json::object();
    j["name"] = "run \"quoted\"\n";
    j["third"] = 1.0 / 3.0;
    j["tiny"] = 1e-15;
    j["negative"] = -0.125;
    j["whole_double"] = 2.0;
    j["int"] = 42;
    j["big_unsigned"] = std::uint64_t(18446744073709551615ULL);
    j["flag"] = false;
    report::json arr = report::json::array();
    for (double v : {0.1, 0.2, 0.30000000000000004}) arr.push_back(v);
    j["arr"] = arr;
    report::json nested = report::json::object();
    nested["x"] = 3.141592653589793;
    j["nested"] = nested;

    const std::string first = report::dump_report(j);
    const auto parsed = report::parse_report(first);
    const std::string second = report::dump_report(parsed);
    CHECK(first == second);
    CHECK(first.find("0.33333333333333331") != std::string::npos);  // 17 significant digits
}

TEST_CASE("config defaults and parsing") {
    const auto cfg = config::parse_config_text("map = doubling\n", false);
    CHECK(cfg.nx == 256);
    CHECK(cfg.nz == 64);
    CHECK(cfg.tol == 1e-10);
    CHECK(cfg.map == "doubling");

    const std::string ini = R"(
# experiment
seed = 9
map = perturbed_doubling
map_eps = 0.25
coupling = h1
alpha_frac = 0.5

[graphon]
type = block
cuts = 0.5
values = 1.0, 0.2, 0.2, 0.5

[grid]
nx = 64
nz = 8

[solver]
tol = 1e-9
max_iter = 70

[init]
profile = two_cluster

[probes]
names = uniqueness, hilbert

[sweep]
N_list = 100 400
z_star = 0.25 0.75
)";
    const auto full = config::parse_config_text(ini, false);
    CHECK(full.map_eps == 0.25);
    CHECK(full.graphon.type == "block");
    CHECK(full.graphon.values.size() == 4);
    CHECK(full.nx == 64);
    CHECK(full.tol == 1e-9);
    CHECK(full.init_profile == "two_cluster");
    CHECK(full.probes.names.size() == 2);
    CHECK(full.sweep.n_list == std::vector<int>{100, 400});
    CHECK(full.seed == 9);

    // JSON alternative maps to the same config
    const std::string json_text = R"({
      "map": "perturbed_doubling", "map_eps": 0.25, "coupling": "h1", "alpha_frac": 0.5,
      "graphon": {"type": "block", "cuts": [0.5], "values": [1.0, 0.2, 0.2, 0.5]},
      "grid": {"nx": 64, "nz": 8},
      "solver": {"tol": 1e-9, "max_iter": 70},
      "init": {"profile": "two_cluster"},
      "probes": {"names": ["uniqueness", "hilbert"]},
      "sweep": {"N_list": [100, 400], "z_star": [0.25, 0.75]},
      "seed": 9
    })";
    const auto fromjson = config::parse_config_text(json_text, true);
    CHECK(fromjson.map_eps == full.map_eps);
    CHECK(fromjson.graphon.values == full.graphon.values);
    CHECK(fromjson.sweep.n_list == full.sweep.n_list);
    CHECK(fromjson.seed == full.seed);
}

TEST_CASE("config errors carry codes and line context") {
    try {
        config::parse_config_text("map = doubling\nbogus_key = 1\n", false);
        FAIL("expected ConfigError");
    } catch (const config::ConfigError& e) {
        CHECK(e.code() == config::ConfigCode::UnknownKey);
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
    try {
        config::parse_config_text("map = rotation\n", false);
        FAIL("expected ConfigError");
    } catch (const config::ConfigError& e) {
        CHECK(e.code() == config::ConfigCode::UnresolvableName);
        CHECK(std::string(e.what()).find("rotation") != std::string::npos);
    }
    try {
        config::parse_config_text("[grid]\nnx = small\n", false);
        FAIL("expected ConfigError");
    } catch (const config::ConfigError& e) {
        CHECK(e.code() == config::ConfigCode::TypeMismatch);
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(config::parse_config_text("alpha = 0.1\nalpha_frac = 0.5\n", false),
                    config::ConfigError);
    CHECK_THROWS_AS(config::parse_config_text("[probes]\nnames = warp\n", false), config::ConfigError);
    CHECK_THROWS_AS(config::parse_config_text("[solver]\ntol = 0\n", false), config::ConfigError);
}

TEST_CASE("alpha threshold warning is set by resolve") {
    auto cfg = config::parse_config_text("map = doubling\ncoupling = h1\nalpha = 1.0\n", false);
    const auto exp = config::resolve(cfg);
    CHECK(exp.alpha_warning);

    auto mild = config::parse_config_text("map = doubling\ncoupling = h1\nalpha = 0.1\n", false);
    CHECK(!config::resolve(mild).alpha_warning);
}

TEST_CASE("presets resolve") {
    for (const auto& name : config::preset_names()) {
        const auto cfg = config::preset(name);
        const auto exp = config::resolve(cfg);
        CHECK(!exp.alpha_warning);
        CHECK(exp.alpha > 0.0);
        CHECK(exp.alpha * exp.w.linf_l1_bound() == doctest::Approx(0.5 * exp.alpha_hat).epsilon(1e-12));
        const auto echo = config::config_echo(cfg);
        CHECK(echo.at("preset").get<std::string>() == name);
    }
    CHECK_THROWS_AS(config::preset("nonesuch"), LookupError);
    CHECK_THROWS_AS(config::make_named_profile("nonesuch", 4, 16), LookupError);
}
