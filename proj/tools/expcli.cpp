#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "stograph/config.hpp"
#include "stograph/errors.hpp"
#include "stograph/finite_sim.hpp"
#include "stograph/graphon.hpp"
#include "stograph/metrics_report.hpp"
#include "stograph/rng.hpp"
#include "stograph/runner.hpp"

namespace {

using namespace stograph;

struct GlobalArgs {
    std::string config_path;
    std::string preset_name;
    std::string out_dir;
    std::int64_t seed = -1;
    int threads = 0;
    bool dry_run = false;
};

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("STO_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

config::ExperimentConfig load_config(const GlobalArgs& args) {
    if (!args.config_path.empty() && !args.preset_name.empty())
        throw config::ConfigError(config::ConfigCode::BadValue, 0, "--config and --preset are exclusive");
    config::ExperimentConfig cfg;
    if (!args.preset_name.empty())
        cfg = config::preset(args.preset_name);
    else if (!args.config_path.empty())
        cfg = config::parse_config(args.config_path);
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.threads > 0) cfg.threads = args.threads;
    return cfg;
}

void print_verdicts(const report::json& rep) {
    const auto& probes = rep.at("probes");
    for (auto it = probes.begin(); it != probes.end(); ++it)
        std::cout << "  probe " << it.key() << ": " << it.value().at("verdict").get<std::string>() << "\n";
}

int run_pipeline(const GlobalArgs& args, bool enable_sweep, const std::vector<std::string>& probe_filter) {
    config::ExperimentConfig cfg = load_config(args);
    cfg.sweep.enabled = enable_sweep;
    runner::RunOptions opts;
    opts.threads = resolve_threads(args.threads > 0 ? args.threads : cfg.threads);
    opts.probe_filter = probe_filter;
    if (args.dry_run) {
        std::cout << runner::execution_plan(cfg, opts);
        return 0;
    }
    const auto exp = config::resolve(cfg);
    if (exp.alpha_warning)
        std::cerr << "warning: |alpha|*||W|| = " << std::fabs(exp.alpha) * exp.w.linf_l1_bound()
                  << " is at or above the certified threshold alpha_hat = " << exp.alpha_hat << "\n";
    const auto outcome = runner::run_scenario(cfg, opts);
    std::cout << "solve: " << (outcome.report.at("solve").at("converged").get<bool>() ? "converged" : "NOT converged")
              << " in " << outcome.report.at("solve").at("iterations").get<int>() << " iterations, residual "
              << outcome.report.at("solve").at("final_residual").get<double>() << "\n";
    print_verdicts(outcome.report);
    std::cout << "report: " << cfg.out_dir << "/report.json\n";
    std::cout << (outcome.all_pass ? "PASS" : "FAIL") << "\n";
    return outcome.exit_code;
}

int run_simulate(const GlobalArgs& args, int n, int t, int r) {
    config::ExperimentConfig cfg = load_config(args);
    const int threads = resolve_threads(args.threads > 0 ? args.threads : cfg.threads);
    if (args.dry_run) {
        runner::RunOptions opts;
        opts.threads = threads;
        std::cout << runner::execution_plan(cfg, opts);
        std::cout << "  simulate: N " << n << ", t " << t << ", R " << r << "\n";
        return 0;
    }
    const auto exp = config::resolve(cfg);
    graphon::AdjacencyMatrix adj;
    switch (exp.scenario) {
        case sim::Scenario::Clustered:
        case sim::Scenario::Decay:
            adj = graphon::quantize_kernel(exp.w, n);
            break;
        case sim::Scenario::Er:
            adj = graphon::sample_er(n, cfg.graphon.p, CounterRng::keyed(cfg.seed, 0x4552ULL, n).next_u64());
            break;
    }
    sim::NetworkSystem system{n, std::move(adj.entries), exp.f, exp.h, exp.alpha};
    auto state = sim::sample_initial(config::initial_state(cfg), n, r,
                                     CounterRng::keyed(cfg.seed, 0x494e4954ULL, n).next_u64());
    for (int s = 0; s < t; ++s) sim::step_inplace(system, state, threads);
    std::filesystem::create_directories(cfg.out_dir);
    const std::string path = cfg.out_dir + "/trajectory.bin";
    sim::write_trajectory(state, path);
    std::cout << "simulated " << r << " realizations of N=" << n << " for " << t << " steps -> " << path
              << "\n";
    return 0;
}

int run_presets(const std::string& show) {
    if (!show.empty()) {
        const auto cfg = config::preset(show);
        std::cout << report::dump_report(config::config_echo(cfg));
        return 0;
    }
    std::cout << "presets:\n";
    std::cout << "  clustered  two-group block kernel, two-cluster initial state\n";
    std::cout << "  decay      spatially decaying kernel xi(|z-z'|), Lipschitz initial state\n";
    std::cout << "  er         constant kernel p=0.5 (Erdos-Renyi limit), sinusoidal initial state\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"expcli - self-consistent transfer operators on graphons"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs args;
    app.add_option("--config", args.config_path, "experiment config file (INI-like or JSON)");
    app.add_option("--preset", args.preset_name, "built-in preset: clustered, decay, er");
    app.add_option("--seed", args.seed, "override the config seed");
    app.add_option("--threads", args.threads, "worker threads (wall-clock only; STO_THREADS fallback)");
    app.add_option("--out", args.out_dir, "output directory override");
    app.add_flag("--dry-run", args.dry_run, "validate config and print the plan without computing");

    auto* fixed = app.add_subcommand("fixed-point", "solve for the STO fixed point and run probes");
    auto* simulate = app.add_subcommand("simulate", "run the finite-N coupled map ensemble");
    int sim_n = 400, sim_t = 3, sim_r = 1000;
    simulate->add_option("--N", sim_n, "node count");
    simulate->add_option("--t", sim_t, "steps");
    simulate->add_option("--R", sim_r, "realizations");
    auto* compare = app.add_subcommand("compare", "finite-N vs STO convergence sweep");
    auto* probe = app.add_subcommand("probe", "run a single named probe");
    std::string probe_name;
    probe->add_option("name", probe_name, "probe name")->required();
    auto* presets = app.add_subcommand("presets", "list built-in presets");
    std::string show;
    presets->add_option("--show", show, "print one preset's resolved config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (presets->parsed()) return run_presets(show);
        if (simulate->parsed()) return run_simulate(args, sim_n, sim_t, sim_r);
        if (fixed->parsed()) return run_pipeline(args, false, {});
        if (compare->parsed()) return run_pipeline(args, true, {});
        if (probe->parsed()) {
            config::ExperimentConfig cfg = load_config(args);
            const auto known = config::known_probes();
            if (std::find(known.begin(), known.end(), probe_name) == known.end())
                throw config::ConfigError(config::ConfigCode::UnresolvableName, 0,
                                          "unknown probe: " + probe_name);
            cfg.probes.names = {probe_name};
            runner::RunOptions opts;
            opts.threads = resolve_threads(args.threads > 0 ? args.threads : cfg.threads);
            if (args.dry_run) {
                std::cout << runner::execution_plan(cfg, opts);
                return 0;
            }
            const auto outcome = runner::run_scenario(cfg, opts);
            print_verdicts(outcome.report);
            return outcome.exit_code;
        }
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const stograph::LookupError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const stograph::ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const stograph::StepError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
