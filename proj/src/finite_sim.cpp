#include "stograph/finite_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "stograph/errors.hpp"
#include "stograph/grid.hpp"
#include "stograph/rng.hpp"
#include "stograph/sto.hpp"

namespace stograph::sim {

namespace {

// Realizations are processed in fixed-size blocks pulled from a shared
// counter, so results do not depend on the worker count.
constexpr int kRealizationBlock = 256;

void parallel_blocks(int nblocks, int threads, const std::function<void(int)>& body) {
    if (threads <= 1 || nblocks <= 1) {
        for (int b = 0; b < nblocks; ++b) body(b);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int b = next.fetch_add(1);
            if (b >= nblocks) return;
            body(b);
        }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min(threads, nblocks);
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// Per-row inverse-CDF sampler with precomputed node CDF.
struct RowSampler {
    const dens::CircleDensity* row = nullptr;
    std::vector<double> cum;

    explicit RowSampler(const dens::CircleDensity& r) : row(&r), cum(r.nx + 1, 0.0) {
        for (int j = 0; j < r.nx; ++j) cum[j + 1] = cum[j] + (r.v[j] + r.v[(j + 1) % r.nx]) / (2.0 * r.nx);
    }

    double sample(double u) const {
        const double target = u * cum.back();
        int j = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), target) - cum.begin()) - 1;
        j = std::clamp(j, 0, row->nx - 1);
        const double a = row->v[j];
        const double b = row->v[(j + 1) % row->nx];
        const double r = (target - cum[j]) * row->nx;
        double t;
        if (std::fabs(b - a) < 1e-14 * (std::fabs(a) + 1.0)) {
            t = a > 0.0 ? r / a : 0.0;
        } else {
            const double disc = std::max(0.0, a * a + 2.0 * (b - a) * r);
            t = (-a + std::sqrt(disc)) / (b - a);
        }
        return wrap_unit((j + std::clamp(t, 0.0, 1.0)) / row->nx);
    }
};

}  // namespace

EnsembleState sample_initial(const fibered::FiberedDensity& nu, int n, int r, std::uint64_t seed) {
    if (n < 1 || r < 1) throw ParameterError("sample_initial: N and R must be >= 1");
    std::vector<RowSampler> samplers;
    samplers.reserve(nu.nz);
    for (const auto& row : nu.rows) samplers.emplace_back(row);

    EnsembleState state;
    state.r = r;
    state.n = n;
    state.seed = seed;
    state.t = 0;
    state.coords.resize(r, n);
    for (int rr = 0; rr < r; ++rr)
        for (int i = 0; i < n; ++i) {
            CounterRng rng = CounterRng::keyed(seed, static_cast<std::uint64_t>(rr),
                                               static_cast<std::uint64_t>(i));
            const double z = (i + rng.next_double()) / n;
            const int row = nearest_row(z, nu.nz);
            state.coords(rr, i) = samplers[row].sample(rng.next_double());
        }
    return state;
}

void step_inplace(const NetworkSystem& system, EnsembleState& state, int threads) {
    if (state.n != system.n) throw GridMismatchError("step: state and system node counts differ");
    const int n = system.n;
    const int r = state.r;
    const double scale = system.alpha / n;
    const int nblocks = (r + kRealizationBlock - 1) / kRealizationBlock;

    Eigen::MatrixXd next(r, n);
    if (!system.h.separable.empty()) {
        const auto& terms = system.h.separable;
        parallel_blocks(nblocks, threads, [&](int b) {
            const int lo = b * kRealizationBlock;
            const int hi = std::min(r, lo + kRealizationBlock);
            const int cols = hi - lo;
            Eigen::MatrixXd v(n, cols), av(n, cols);
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, cols);
            for (const auto& term : terms) {
                for (int c = 0; c < cols; ++c)
                    for (int i = 0; i < n; ++i) v(i, c) = term.v(state.coords(lo + c, i));
                av.noalias() = system.adjacency * v;
                for (int c = 0; c < cols; ++c)
                    for (int i = 0; i < n; ++i) acc(i, c) += term.u(state.coords(lo + c, i)) * av(i, c);
            }
            for (int c = 0; c < cols; ++c)
                for (int i = 0; i < n; ++i) {
                    const double x = state.coords(lo + c, i);
                    next(lo + c, i) = wrap_unit(system.f.lift(x) + scale * acc(i, c));
                }
        });
    } else {
        parallel_blocks(nblocks, threads, [&](int b) {
            const int lo = b * kRealizationBlock;
            const int hi = std::min(r, lo + kRealizationBlock);
            for (int rr = lo; rr < hi; ++rr)
                for (int i = 0; i < n; ++i) {
                    const double x = state.coords(rr, i);
                    double s = 0.0;
                    for (int j = 0; j < n; ++j) {
                        const double a = system.adjacency(i, j);
                        if (a != 0.0) s += a * system.h.eval(x, state.coords(rr, j));
                    }
                    next(rr, i) = wrap_unit(system.f.lift(x) + scale * s);
                }
        });
    }
    state.coords.swap(next);
    ++state.t;
}

EnsembleState step(const NetworkSystem& system, const EnsembleState& state, int threads) {
    EnsembleState out = state;
    step_inplace(system, out, threads);
    return out;
}

std::vector<double> node_marginal(const EnsembleState& state, int i) {
    if (i < 0 || i >= state.n) throw ParameterError("node_marginal: node index out of range");
    std::vector<double> out(state.r);
    for (int rr = 0; rr < state.r; ++rr) out[rr] = state.coords(rr, i);
    return out;
}

double marginal_error(const EnsembleState& state, int i, const dens::CircleDensity& reference) {
    return dens::w1_empirical(node_marginal(state, i), reference);
}

Scenario scenario_from_string(const std::string& name) {
    if (name == "clustered") return Scenario::Clustered;
    if (name == "decay") return Scenario::Decay;
    if (name == "er") return Scenario::Er;
    throw LookupError("unknown scenario: " + name);
}

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Clustered: return "clustered";
        case Scenario::Decay: return "decay";
        default: return "er";
    }
}

std::vector<SweepRow> convergence_sweep(const fibered::FiberedDensity& nu, Scenario scenario,
                                        const graphon::Graphon& limit, const maps::CouplingFunction& h,
                                        const maps::ExpandingMap& f, double alpha, const SweepConfig& config,
                                        std::uint64_t seed) {
    if (config.t < 1) throw ParameterError("convergence_sweep: t must be >= 1");
    if (!std::is_sorted(config.n_list.begin(), config.n_list.end()))
        throw ParameterError("convergence_sweep: N_list must be increasing");

    // Limit reference: evolve the STO state t steps under the limit graphon.
    fibered::FiberedDensity reference = nu;
    const sto::StoOperator op(limit, h, f, alpha, nu.nz, nu.nx);
    for (int s = 0; s < config.t; ++s) reference = op.step(reference);

    std::vector<SweepRow> rows;
    for (int n : config.n_list) {
        graphon::AdjacencyMatrix adj;
        switch (scenario) {
            case Scenario::Clustered:
            case Scenario::Decay:
                adj = graphon::quantize_kernel(limit, n);
                break;
            case Scenario::Er: {
                const double p = limit.eval(0.5, 0.5);
                adj = graphon::sample_er(n, p, CounterRng::keyed(seed, 0x4552ULL, n).next_u64());
                break;
            }
        }
        NetworkSystem system{n, std::move(adj.entries), f, h, alpha};

        const std::uint64_t init_seed = CounterRng::keyed(seed, 0x494e4954ULL, n).next_u64();
        EnsembleState state = sample_initial(nu, n, config.r, init_seed);
        for (int s = 0; s < config.t; ++s) step_inplace(system, state, config.threads);

        for (double z_star : config.z_star) {
            const int node = std::min(n, static_cast<int>(std::ceil(z_star * n)));  // 1-based
            const double node_mid = (node - 0.5) / n;
            const dens::CircleDensity& ref_row = reference.rows[nearest_row(node_mid, nu.nz)];
            const auto samples = node_marginal(state, node - 1);
            SweepRow row;
            row.scenario = scenario_name(scenario);
            row.n = n;
            row.t = config.t;
            row.z_star = z_star;
            row.node = node;
            row.seed = seed;
            row.w1_error = dens::w1_empirical(samples, ref_row);

            // Bootstrap SE over realizations.
            CounterRng boot = CounterRng::keyed(seed, 0x424f4f54ULL,
                                                static_cast<std::uint64_t>(n) * 1000 + node);
            std::vector<double> resample(samples.size());
            double sum = 0.0, sum_sq = 0.0;
            for (int b = 0; b < config.bootstrap; ++b) {
                for (std::size_t q = 0; q < samples.size(); ++q)
                    resample[q] = samples[boot.next_below(samples.size())];
                const double w = dens::w1_empirical(resample, ref_row);
                sum += w;
                sum_sq += w * w;
            }
            const double mean = sum / config.bootstrap;
            row.bootstrap_se = std::sqrt(std::max(0.0, sum_sq / config.bootstrap - mean * mean));
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

ConcentrationTable concentration_probe(const NetworkSystem& system, const EnsembleState& state, double x,
                                       std::span<const double> eps_list, int node) {
    if (node < 0 || node >= system.n) throw ParameterError("concentration_probe: node out of range");
    if (eps_list.empty()) throw ParameterError("concentration_probe: empty eps list");

    const int r = state.r;
    std::vector<double> psi(r, 0.0);
    for (int rr = 0; rr < r; ++rr) {
        double s = 0.0;
        for (int j = 0; j < system.n; ++j) {
            const double a = system.adjacency(node, j);
            if (a != 0.0) s += a * system.h.eval(x, state.coords(rr, j));
        }
        psi[rr] = s / system.n;
    }
    double mean = 0.0;
    for (double p : psi) mean += p;
    mean /= r;

    ConcentrationTable table;
    table.node = node;
    double spread = 0.0;
    for (double p : psi) spread = std::max(spread, std::fabs(p - mean));
    if (spread == 0.0) {
        table.degenerate = true;
        for (double eps : eps_list) table.rows.push_back({eps, 0.0, 0.0, true});
        return table;
    }

    for (double eps : eps_list) {
        int hits = 0;
        for (double p : psi)
            if (std::fabs(p - mean) > eps) ++hits;
        ConcentrationRow row;
        row.eps = eps;
        row.tail = static_cast<double>(hits) / r;
        row.censored = hits < 10;
        table.rows.push_back(row);
    }

    // Least squares of log tail against eps^2 N over the uncensored rows.
    std::vector<double> xs, ys;
    for (const auto& row : table.rows)
        if (!row.censored) {
            xs.push_back(row.eps * row.eps * system.n);
            ys.push_back(std::log(row.tail));
        }
    if (xs.size() < 2) {
        table.degenerate = true;
        return table;
    }
    const int m = static_cast<int>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = m * sxx - sx * sx;
    table.slope = (m * sxy - sx * sy) / denom;
    table.intercept = (sy - table.slope * sx) / m;
    double ss_res = 0, ss_tot = 0, max_resid = 0;
    const double ymean = sy / m;
    for (int i = 0; i < m; ++i) {
        const double resid = ys[i] - (table.intercept + table.slope * xs[i]);
        ss_res += resid * resid;
        ss_tot += (ys[i] - ymean) * (ys[i] - ymean);
        max_resid = std::max(max_resid, resid);
    }
    table.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    // Envelope constant lifted so the fitted curve covers every uncensored
    // point: the smallest C1 compatible with the fitted C2.
    table.envelope_log_c = table.intercept + max_resid;
    for (auto& row : table.rows)
        row.fitted = std::exp(table.envelope_log_c + table.slope * row.eps * row.eps * system.n);
    return table;
}

void write_trajectory(const EnsembleState& state, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("write_trajectory: cannot open " + path);
    const std::uint64_t header[3] = {static_cast<std::uint64_t>(state.r), static_cast<std::uint64_t>(state.n),
                                     static_cast<std::uint64_t>(state.t)};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    std::vector<double> row(state.n);
    for (int rr = 0; rr < state.r; ++rr) {
        for (int i = 0; i < state.n; ++i) row[i] = state.coords(rr, i);
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(state.n * 8));
    }
}

}  // namespace stograph::sim
