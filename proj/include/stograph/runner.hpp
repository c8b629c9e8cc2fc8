#pragma once

#include <string>
#include <vector>

#include "stograph/config.hpp"
#include "stograph/metrics_report.hpp"
#include "stograph/rng.hpp"
#include "stograph/sto.hpp"

namespace stograph::runner {

struct RunOptions {
    bool dry_run = false;
    int threads = 1;
    bool write_files = true;
    bool run_solve = true;
    bool run_sweep_if_enabled = true;
    std::vector<std::string> probe_filter;  // when nonempty, run only these
};

struct RunOutcome {
    report::json report;
    bool all_pass = true;
    int exit_code = 0;
    std::vector<sim::SweepRow> sweep_rows;
};

/// Full pipeline: solve, probes, optional sweep, files, verdicts.
RunOutcome run_scenario(const config::ExperimentConfig& cfg, const RunOptions& opts = {});

/// Human-readable plan for --dry-run.
std::string execution_plan(const config::ExperimentConfig& cfg, const RunOptions& opts);

report::json solve_report_to_json(const sto::SolveReport& rep);

void write_residuals_csv(const sto::SolveReport& rep, const std::string& path);
void write_sweep_csv(const std::vector<sim::SweepRow>& rows, const std::string& path);

// Randomized smooth inputs shared by probes and the acceptance suite.
dens::SignedCircleFunction random_zero_mean_trig(int nx, int max_mode, double amp, CounterRng& rng);
fibered::FiberedDensity random_smooth_fibered(int nz, int nx, double amp, CounterRng& rng);

}  // namespace stograph::runner
