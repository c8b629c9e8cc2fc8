#include "stograph/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "stograph/errors.hpp"
#include "stograph/grid.hpp"

namespace stograph::runner {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct ProbeContext {
    const config::ExperimentConfig& cfg;
    const config::ResolvedExperiment& exp;
    const fibered::FiberedDensity& initial;
    const fibered::FiberedDensity& solution;
    const sto::SolveReport& solve;
    int threads = 1;
};

report::ProbeEntry probe_uniqueness(const ProbeContext& ctx) {
    report::ProbeEntry entry;
    entry.name = "uniqueness";
    entry.threshold = 5.0 * ctx.cfg.tol;
    // Second admissible start, distinct from the configured one.
    const std::string other = ctx.cfg.init_profile == "uniform" ? "sin" : "uniform";
    const auto start = config::make_named_profile(other, ctx.cfg.nz, ctx.cfg.nx);
    auto [phi2, rep2] = sto::fixed_point(start, ctx.exp.w, ctx.exp.h, ctx.exp.f, ctx.exp.alpha, ctx.cfg.tol,
                                         ctx.cfg.max_iter, {ctx.cfg.p_exp, false});
    const double dist = fibered::weak_norm_distance(ctx.solution, phi2);
    entry.values = report::json::object();
    entry.values["distance"] = dist;
    entry.values["second_start"] = other;
    entry.values["second_converged"] = rep2.converged;
    entry.verdict = (rep2.converged && dist < entry.threshold) ? "pass" : "fail";
    return entry;
}

report::ProbeEntry probe_lasota_yorke(const ProbeContext& ctx) {
    report::ProbeEntry entry;
    entry.name = "lasota_yorke";
    entry.threshold = ctx.cfg.probes.lasota_yorke_threshold;
    const sto::StoOperator op(ctx.exp.w, ctx.exp.h, ctx.exp.f, ctx.exp.alpha, ctx.cfg.nz, ctx.cfg.nx);
    const sto::MeanFieldTable table = op.mean_field(ctx.solution);
    CounterRng rng = CounterRng::keyed(ctx.cfg.seed, 0x4c59ULL);
    double min_slack = std::numeric_limits<double>::infinity();
    const int trials = ctx.cfg.probes.lasota_yorke_trials;
    for (int t = 0; t < trials; ++t) {
        const int k = static_cast<int>(rng.next_below(ctx.cfg.nz));
        const auto fm = op.realize(table, k);
        const auto psi = random_zero_mean_trig(ctx.cfg.nx, 4, 1.0, rng);
        min_slack = std::min(min_slack, sto::lasota_yorke_probe(fm, psi).slack);
    }
    entry.values = report::json::object();
    entry.values["trials"] = trials;
    entry.values["min_slack"] = min_slack;
    entry.verdict = min_slack >= entry.threshold ? "pass" : "fail";
    return entry;
}

report::ProbeEntry probe_memory_loss(const ProbeContext& ctx) {
    report::ProbeEntry entry;
    entry.name = "memory_loss";
    const sto::StoOperator op(ctx.exp.w, ctx.exp.h, ctx.exp.f, ctx.exp.alpha, ctx.cfg.nz, ctx.cfg.nx);
    entry.threshold = 1.0 / op.certified_xi() + ctx.cfg.probes.memory_loss_margin;
    CounterRng rng = CounterRng::keyed(ctx.cfg.seed, 0x4d4cULL);
    const int steps = ctx.cfg.probes.memory_loss_steps;
    double max_ratio = 0.0;
    int measured = 0;
    for (int s = 0; s < ctx.cfg.probes.memory_loss_sequences; ++s) {
        std::vector<fibered::FiberedDensity> nus;
        nus.reserve(steps);
        for (int t = 0; t < steps; ++t)
            nus.push_back(random_smooth_fibered(ctx.cfg.nz, ctx.cfg.nx, 0.3, rng));
        const auto psi0 = random_zero_mean_trig(ctx.cfg.nx, 4, 1.0, rng);
        const int fiber = static_cast<int>(rng.next_below(ctx.cfg.nz));
        const auto norms = sto::memory_loss_probe(nus, fiber, psi0, steps, ctx.exp.w, ctx.exp.h, ctx.exp.f,
                                                  ctx.exp.alpha);
        for (std::size_t t = 2; t + 1 < norms.size(); ++t) {
            if (norms[t] < 1e-13) break;  // collapsed to zero
            max_ratio = std::max(max_ratio, norms[t + 1] / norms[t]);
            ++measured;
        }
    }
    entry.values = report::json::object();
    entry.values["sequences"] = ctx.cfg.probes.memory_loss_sequences;
    entry.values["steps"] = steps;
    entry.values["max_ratio"] = max_ratio;
    entry.values["ratios_measured"] = measured;
    entry.verdict = measured == 0 ? "skipped" : (max_ratio <= entry.threshold ? "pass" : "fail");
    return entry;
}

report::ProbeEntry probe_lipschitz(const ProbeContext& ctx) {
    report::ProbeEntry entry;
    entry.name = "lipschitz";
    entry.threshold = ctx.cfg.probes.lipschitz_threshold;
    CounterRng rng = CounterRng::keyed(ctx.cfg.seed, 0x4c50ULL);
    double max_ratio = 0.0;
    const int cells = 16;
    for (int p = 0; p < ctx.cfg.probes.lipschitz_pairs; ++p) {
        Eigen::MatrixXd cellvals(cells, cells);
        for (int i = 0; i < cells; ++i)
            for (int j = 0; j < cells; ++j)
                cellvals(i, j) = ctx.exp.w.eval(cell_midpoint(i, cells), cell_midpoint(j, cells)) +
                                 rng.uniform(-0.1, 0.1);
        const auto wt = graphon::Graphon::step(cellvals);
        fibered::FiberedDensity phit = ctx.solution;
        const double a1 = rng.uniform(-0.2, 0.2);
        const double a2 = rng.uniform(-0.2, 0.2);
        const double zphase = rng.next_double();
        for (int k = 0; k < phit.nz; ++k) {
            const double cz = std::sin(kTwoPi * (phit.z_mid(k) + zphase));
            std::vector<double> v = phit.rows[k].v;
            for (int j = 0; j < phit.nx; ++j) {
                const double x = static_cast<double>(j) / phit.nx;
                v[j] *= 1.0 + cz * (a1 * std::sin(kTwoPi * x) + a2 * std::cos(kTwoPi * x));
            }
            phit.rows[k] = dens::normalize(dens::SignedCircleFunction(phit.nx, std::move(v)));
        }
        max_ratio = std::max(max_ratio, sto::lipschitz_probe(ctx.exp.w, wt, ctx.solution, phit, ctx.exp.h,
                                                             ctx.exp.f, ctx.exp.alpha));
    }
    entry.values = report::json::object();
    entry.values["pairs"] = ctx.cfg.probes.lipschitz_pairs;
    entry.values["max_ratio"] = max_ratio;
    entry.verdict = (std::isfinite(max_ratio) && max_ratio <= entry.threshold) ? "pass" : "fail";
    return entry;
}

report::ProbeEntry probe_hilbert(const ProbeContext& ctx) {
    report::ProbeEntry entry;
    entry.name = "hilbert";
    entry.threshold = ctx.cfg.probes.hilbert_threshold;
    CounterRng rng = CounterRng::keyed(ctx.cfg.seed, 0x4843ULL);
    double max_gamma = 0.0;
    int skipped = 0;
    for (int p = 0; p < ctx.cfg.probes.hilbert_pairs; ++p) {
        const auto phi = random_smooth_fibered(ctx.cfg.nz, ctx.cfg.nx, 0.3, rng);
        const auto psi = random_smooth_fibered(ctx.cfg.nz, ctx.cfg.nx, 0.3, rng);
        const auto rec = sto::hilbert_contraction_probe(phi, psi, ctx.exp.w, ctx.exp.h, ctx.exp.f,
                                                        ctx.exp.alpha);
        max_gamma = std::max(max_gamma, rec.max_gamma);
        skipped += static_cast<int>(rec.skipped.size());
    }
    entry.values = report::json::object();
    entry.values["pairs"] = ctx.cfg.probes.hilbert_pairs;
    entry.values["max_gamma"] = max_gamma;
    entry.values["skipped_fibers"] = skipped;
    entry.verdict = max_gamma < entry.threshold ? "pass" : "fail";
    return entry;
}

report::ProbeEntry probe_ck_audit(const ProbeContext& ctx) {
    report::ProbeEntry entry;
    entry.name = "ck_audit";
    entry.threshold = ctx.cfg.probes.ck_audit_threshold;
    const sto::StoOperator op(ctx.exp.w, ctx.exp.h, ctx.exp.f, ctx.exp.alpha, ctx.cfg.nz, ctx.cfg.nx);
    const sto::MeanFieldTable table = op.mean_field(ctx.solution);
    const double h_c2 = maps::ck_norm(ctx.exp.h, 2);
    CounterRng rng = CounterRng::keyed(ctx.cfg.seed, 0x434bULL);
    double max_ratio = 0.0;
    int compared = 0;
    for (int p = 0; p < 32; ++p) {
        const int a = static_cast<int>(rng.next_below(ctx.cfg.nz));
        const int b = static_cast<int>(rng.next_below(ctx.cfg.nz));
        if (a == b) continue;
        const auto fa = op.realize(table, a);
        const auto fb = op.realize(table, b);
        const double dist = sto::fiber_map_ck_distance(fa, fb, 2);
        const double row_gap =
            graphon::row_l1_distance(ctx.exp.w, ctx.initial.z_mid(a), ctx.initial.z_mid(b), 512);
        const double bound = std::fabs(ctx.exp.alpha) * h_c2 * row_gap;
        if (bound < 1e-12) {
            if (dist > 1e-9) max_ratio = std::numeric_limits<double>::infinity();
            continue;
        }
        max_ratio = std::max(max_ratio, dist / bound);
        ++compared;
    }
    entry.values = report::json::object();
    entry.values["pairs_compared"] = compared;
    entry.values["max_ratio"] = max_ratio;
    entry.verdict = compared == 0 ? "skipped" : (max_ratio <= entry.threshold ? "pass" : "fail");
    return entry;
}

report::ProbeEntry probe_invariance(const ProbeContext& ctx) {
    report::ProbeEntry entry;
    entry.name = "invariance";
    entry.threshold = ctx.cfg.probes.invariance_factor;
    const int burn = ctx.cfg.probes.invariance_burn_in;
    const auto& m1 = ctx.solve.m1_history;
    entry.values = report::json::object();
    if (static_cast<int>(m1.size()) < burn + 2) {
        entry.values["note"] = "history shorter than burn-in";
        entry.verdict = "skipped";
        return entry;
    }
    auto check = [&](const std::vector<double>& hist, const char* label, bool& ok) {
        const double base = hist[burn - 1];
        double post_max = 0.0;
        for (std::size_t t = burn; t < hist.size(); ++t) post_max = std::max(post_max, hist[t]);
        report::json j = report::json::object();
        j["at_burn_in"] = base;
        j["post_max"] = post_max;
        entry.values[label] = j;
        ok = ok && post_max <= ctx.cfg.probes.invariance_factor * base + 1e-9;
    };
    bool ok = true;
    check(ctx.solve.m1_history, "m1", ok);
    check(ctx.solve.m2_history, "m2", ok);
    check(ctx.solve.var_p_history, "var_p", ok);
    entry.values["burn_in"] = burn;
    entry.verdict = ok ? "pass" : "fail";
    return entry;
}

report::ProbeEntry probe_concentration(const ProbeContext& ctx, sim::ConcentrationTable* table_out) {
    report::ProbeEntry entry;
    entry.name = "concentration";
    entry.threshold = ctx.cfg.probes.concentration_r2;
    const int n = ctx.cfg.probes.concentration_n;
    const int r = ctx.cfg.probes.concentration_r;
    double p = 0.5;
    if (ctx.cfg.graphon.type == "constant" || ctx.cfg.graphon.type == "step_er") p = ctx.cfg.graphon.p;

    auto adj = graphon::sample_er(n, p, CounterRng::keyed(ctx.cfg.seed, 0x434eULL).next_u64());
    sim::NetworkSystem system{n, std::move(adj.entries), ctx.exp.f, ctx.exp.h, ctx.exp.alpha};
    const auto state =
        sim::sample_initial(ctx.initial, n, r, CounterRng::keyed(ctx.cfg.seed, 0x434e49ULL).next_u64());
    const auto table = sim::concentration_probe(system, state, 0.25, ctx.cfg.probes.concentration_eps);

    bool dominated = true;
    report::json rows = report::json::array();
    for (const auto& row : table.rows) {
        report::json j = report::json::object();
        j["eps"] = row.eps;
        j["tail"] = row.tail;
        j["fitted"] = row.fitted;
        j["censored"] = row.censored;
        rows.push_back(j);
        if (!row.censored && row.tail > row.fitted * (1.0 + 1e-12)) dominated = false;
    }
    entry.values = report::json::object();
    entry.values["N"] = n;
    entry.values["R"] = r;
    entry.values["p"] = p;
    entry.values["slope"] = table.slope;
    entry.values["r_squared"] = table.r_squared;
    entry.values["rows"] = rows;
    if (table.degenerate)
        entry.verdict = "skipped";
    else
        entry.verdict =
            (table.slope < 0.0 && table.r_squared >= entry.threshold && dominated) ? "pass" : "fail";
    if (table_out) *table_out = table;
    return entry;
}

void write_concentration_csv(const sim::ConcentrationTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("cannot open " + path);
    out << "eps,tail,fit\n";
    for (const auto& row : table.rows)
        out << csv_num(row.eps) << "," << csv_num(row.tail) << "," << csv_num(row.fitted) << "\n";
}

}  // namespace

dens::SignedCircleFunction random_zero_mean_trig(int nx, int max_mode, double amp, CounterRng& rng) {
    std::vector<double> a(max_mode + 1), b(max_mode + 1);
    for (int m = 1; m <= max_mode; ++m) {
        a[m] = rng.uniform(-amp, amp);
        b[m] = rng.uniform(-amp, amp);
    }
    std::vector<double> v(nx, 0.0);
    for (int j = 0; j < nx; ++j) {
        const double x = static_cast<double>(j) / nx;
        double s = 0.0;
        for (int m = 1; m <= max_mode; ++m)
            s += a[m] * std::sin(kTwoPi * m * x) + b[m] * std::cos(kTwoPi * m * x);
        v[j] = s;
    }
    // A trig polynomial without constant term has an exactly zero node mean
    // whenever nx exceeds the top mode; subtract the tiny float residue.
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= nx;
    for (double& x : v) x -= mean;
    return dens::SignedCircleFunction(nx, std::move(v));
}

fibered::FiberedDensity random_smooth_fibered(int nz, int nx, double amp, CounterRng& rng) {
    const int max_mode = 3;
    std::vector<std::array<double, 2>> base(max_mode + 1), mod(max_mode + 1);
    for (int m = 1; m <= max_mode; ++m) {
        base[m] = {rng.uniform(-amp, amp), rng.uniform(-amp, amp)};
        mod[m] = {rng.uniform(-amp, amp), rng.next_double()};
    }
    std::vector<dens::CircleDensity> rows;
    rows.reserve(nz);
    for (int k = 0; k < nz; ++k) {
        const double z = (k + 0.5) / nz;
        std::vector<double> v(nx);
        for (int j = 0; j < nx; ++j) {
            const double x = static_cast<double>(j) / nx;
            double s = 1.0;
            for (int m = 1; m <= max_mode; ++m) {
                const double c = base[m][0] + mod[m][0] * std::sin(kTwoPi * (z + mod[m][1]));
                s += (c * std::sin(kTwoPi * m * x) + base[m][1] * std::cos(kTwoPi * m * x)) / (2.0 * m);
            }
            v[j] = std::max(s, 0.05);
        }
        rows.push_back(dens::normalize(dens::SignedCircleFunction(nx, std::move(v))));
    }
    return fibered::FiberedDensity(nz, nx, std::move(rows));
}

report::json solve_report_to_json(const sto::SolveReport& rep) {
    report::json j = report::json::object();
    j["iterations"] = rep.iterations;
    j["converged"] = rep.converged;
    j["tol"] = rep.tol;
    j["final_residual"] = rep.final_residual;
    j["rate"] = rep.rate;
    j["rate_r_squared"] = rep.rate_r_squared;
    j["alpha"] = rep.alpha;
    j["alpha_hat"] = rep.alpha_hat;
    j["w_linf_l1"] = rep.w_linf_l1;
    j["expansion_certified"] = rep.expansion_certified;
    j["all_steps_expanding"] = rep.all_steps_expanding;
    j["min_xi"] = rep.min_xi.empty() ? 0.0 : *std::min_element(rep.min_xi.begin(), rep.min_xi.end());
    j["max_distortion"] = rep.max_distortion.empty()
                              ? 0.0
                              : *std::max_element(rep.max_distortion.begin(), rep.max_distortion.end());
    j["max_mass_error"] =
        rep.mass_error.empty() ? 0.0 : *std::max_element(rep.mass_error.begin(), rep.mass_error.end());
    report::json d = report::json::object();
    d["m1"] = rep.final_diagnostics.m1;
    d["m2"] = rep.final_diagnostics.m2;
    d["var_p"] = rep.final_diagnostics.var_p;
    d["weak_norm"] = rep.final_diagnostics.weak_norm;
    d["c2_sup"] = rep.final_diagnostics.c2_sup;
    j["final_diagnostics"] = d;
    j["residual_weak"] = rep.residual_weak;
    return j;
}

void write_residuals_csv(const sto::SolveReport& rep, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("cannot open " + path);
    out << "iter,weak_residual,sup_residual,mass_error_max\n";
    for (std::size_t t = 0; t < rep.residual_weak.size(); ++t)
        out << (t + 1) << "," << csv_num(rep.residual_weak[t]) << "," << csv_num(rep.residual_sup[t]) << ","
            << csv_num(rep.mass_error[t]) << "\n";
}

void write_sweep_csv(const std::vector<sim::SweepRow>& rows, const std::string& path) {
    std::vector<sim::SweepRow> sorted(rows);
    std::stable_sort(sorted.begin(), sorted.end(), [](const sim::SweepRow& a, const sim::SweepRow& b) {
        if (a.scenario != b.scenario) return a.scenario < b.scenario;
        if (a.n != b.n) return a.n < b.n;
        return a.z_star < b.z_star;
    });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("cannot open " + path);
    out << "scenario,N,t,z_star,node,w1_error,bootstrap_se,seed\n";
    for (const auto& r : sorted)
        out << r.scenario << "," << r.n << "," << r.t << "," << csv_num(r.z_star) << "," << r.node << ","
            << csv_num(r.w1_error) << "," << csv_num(r.bootstrap_se) << "," << r.seed << "\n";
}

std::string execution_plan(const config::ExperimentConfig& cfg, const RunOptions& opts) {
    const auto exp = config::resolve(cfg);
    std::ostringstream out;
    out << "plan:\n";
    out << "  map: " << cfg.map;
    if (cfg.map == "perturbed_doubling") out << " (eps " << cfg.map_eps << ")";
    out << ", coupling: " << cfg.coupling << ", graphon: " << cfg.graphon.type << "\n";
    out << "  alpha: " << exp.alpha << " (alpha_hat " << exp.alpha_hat << ", ||W||_LinfL1 "
        << exp.w.linf_l1_bound() << (exp.alpha_warning ? ", WARNING above certified threshold" : "") << ")\n";
    out << "  grid: nz " << cfg.nz << ", nx " << cfg.nx << ", init " << cfg.init_profile << "\n";
    out << "  solve: tol " << cfg.tol << ", max_iter " << cfg.max_iter << "\n";
    out << "  probes:";
    for (const auto& p : cfg.probes.names) out << " " << p;
    if (cfg.probes.names.empty()) out << " (none)";
    out << "\n";
    if (cfg.sweep.enabled) {
        out << "  sweep: scenario " << sim::scenario_name(exp.scenario) << ", N";
        for (int n : cfg.sweep.n_list) out << " " << n;
        out << ", t " << cfg.sweep.t << ", R " << cfg.sweep.r << ", z*";
        for (double z : cfg.sweep.z_star) out << " " << z;
        out << "\n";
    }
    out << "  seed " << cfg.seed << ", threads " << opts.threads << ", out " << cfg.out_dir << "\n";
    return out.str();
}

RunOutcome run_scenario(const config::ExperimentConfig& cfg, const RunOptions& opts) {
    RunOutcome outcome;
    const auto t_start = Clock::now();
    config::ExperimentConfig cfg_resolved = cfg;
    const auto exp = config::resolve(cfg);
    cfg_resolved.alpha_warning = exp.alpha_warning;

    const auto initial = config::initial_state(cfg);
    double solve_seconds = 0.0;

    auto t0 = Clock::now();
    auto [solution, solve] = sto::fixed_point(initial, exp.w, exp.h, exp.f, exp.alpha, cfg.tol, cfg.max_iter,
                                              {cfg.p_exp, true});
    solve_seconds = seconds_since(t0);

    std::vector<report::ProbeEntry> probes;
    std::vector<std::string> expected;
    ProbeContext ctx{cfg_resolved, exp, initial, solution, solve, opts.threads};
    sim::ConcentrationTable concentration_table;
    bool have_concentration = false;

    t0 = Clock::now();
    for (const auto& name : cfg.probes.names) {
        if (!opts.probe_filter.empty() &&
            std::find(opts.probe_filter.begin(), opts.probe_filter.end(), name) == opts.probe_filter.end())
            continue;
        expected.push_back(name);
        if (name == "uniqueness")
            probes.push_back(probe_uniqueness(ctx));
        else if (name == "lasota_yorke")
            probes.push_back(probe_lasota_yorke(ctx));
        else if (name == "memory_loss")
            probes.push_back(probe_memory_loss(ctx));
        else if (name == "lipschitz")
            probes.push_back(probe_lipschitz(ctx));
        else if (name == "hilbert")
            probes.push_back(probe_hilbert(ctx));
        else if (name == "ck_audit")
            probes.push_back(probe_ck_audit(ctx));
        else if (name == "invariance")
            probes.push_back(probe_invariance(ctx));
        else if (name == "concentration") {
            probes.push_back(probe_concentration(ctx, &concentration_table));
            have_concentration = true;
        } else {
            throw LookupError("unknown probe: " + name);
        }
    }
    const double probes_seconds = seconds_since(t0);

    double sweep_seconds = 0.0;
    if (cfg.sweep.enabled && opts.run_sweep_if_enabled) {
        t0 = Clock::now();
        sim::SweepConfig sc;
        sc.n_list = cfg.sweep.n_list;
        sc.t = cfg.sweep.t;
        sc.r = cfg.sweep.r;
        sc.z_star = cfg.sweep.z_star;
        sc.bootstrap = cfg.sweep.bootstrap;
        sc.threads = opts.threads;
        outcome.sweep_rows = sim::convergence_sweep(initial, exp.scenario, exp.w, exp.h, exp.f, exp.alpha,
                                                    sc, cfg.seed);
        sweep_seconds = seconds_since(t0);

        // Monotone decrease beyond twice the combined bootstrap SE.
        report::ProbeEntry entry;
        entry.name = "sweep_monotone";
        entry.threshold = 2.0;
        bool ok = true;
        report::json checks = report::json::array();
        for (double z : cfg.sweep.z_star) {
            std::vector<const sim::SweepRow*> seq;
            for (const auto& r : outcome.sweep_rows)
                if (r.z_star == z) seq.push_back(&r);
            for (std::size_t q = 0; q + 1 < seq.size(); ++q) {
                const double gap = seq[q]->w1_error - seq[q + 1]->w1_error;
                const double se = 2.0 * std::sqrt(seq[q]->bootstrap_se * seq[q]->bootstrap_se +
                                                  seq[q + 1]->bootstrap_se * seq[q + 1]->bootstrap_se);
                report::json c = report::json::object();
                c["z_star"] = z;
                c["from_N"] = seq[q]->n;
                c["to_N"] = seq[q + 1]->n;
                c["decrease"] = gap;
                c["two_se"] = se;
                checks.push_back(c);
                ok = ok && gap > se;
            }
        }
        entry.values = report::json::object();
        entry.values["checks"] = checks;
        entry.verdict = ok ? "pass" : "fail";
        probes.push_back(entry);
        expected.push_back("sweep_monotone");
    }

    report::json environment = report::json::object();
    report::json grid = report::json::object();
    grid["nz"] = cfg.nz;
    grid["nx"] = cfg.nx;
    environment["grid"] = grid;
    environment["seed"] = cfg.seed;
    report::json timing = report::json::object();
    timing["threads"] = opts.threads;  // wall-clock metadata, excluded from byte comparisons
    timing["solve_s"] = solve_seconds;
    timing["probes_s"] = probes_seconds;
    timing["sweep_s"] = sweep_seconds;
    timing["total_s"] = seconds_since(t_start);
    environment["timing"] = timing;

    outcome.report = report::assemble_report(config::config_echo(cfg_resolved), solve_report_to_json(solve),
                                             probes, environment, expected);

    outcome.all_pass = solve.converged;
    for (const auto& p : probes) outcome.all_pass = outcome.all_pass && p.verdict != "fail";
    outcome.exit_code = outcome.all_pass ? 0 : 4;

    if (opts.write_files) {
        fs::create_directories(cfg.out_dir);
        report::write_report_file(outcome.report, cfg.out_dir + "/report.json");
        write_residuals_csv(solve, cfg.out_dir + "/residuals.csv");
        {
            std::ofstream heat(cfg.out_dir + "/fixed_point_heatmap.csv", std::ios::binary);
            fibered::write_csv(solution, heat);
        }
        fibered::write_binary_file(solution, cfg.out_dir + "/fixed_point.bin");
        if (!outcome.sweep_rows.empty()) write_sweep_csv(outcome.sweep_rows, cfg.out_dir + "/sweep.csv");
        if (have_concentration)
            write_concentration_csv(concentration_table, cfg.out_dir + "/concentration.csv");
    }
    return outcome;
}

}  // namespace stograph::runner
