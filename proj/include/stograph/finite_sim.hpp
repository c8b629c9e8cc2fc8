#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stograph/circle_maps.hpp"
#include "stograph/fibered.hpp"
#include "stograph/graphon.hpp"

namespace stograph::sim {

struct NetworkSystem {
    int n = 0;
    Eigen::MatrixXd adjacency;  // n x n, 0/1 for sampled graphs, weights otherwise
    maps::ExpandingMap f;
    maps::CouplingFunction h;
    double alpha = 0.0;
};

// R independent realizations of the N-node state.  coords(r, i) is node i of
// realization r; every random draw comes from a counter stream keyed by
// (seed, realization, node), so trajectories are reproducible bit for bit
// regardless of scheduling.
struct EnsembleState {
    int r = 0;
    int n = 0;
    std::uint64_t seed = 0;
    int t = 0;
    Eigen::MatrixXd coords;
};

// Initial data per the disintegration: node i draws z uniformly from its
// cell ((i-1)/N, i/N] and x from the nearest fiber density by inverse CDF.
EnsembleState sample_initial(const fibered::FiberedDensity& nu, int n, int r, std::uint64_t seed);

/// Synchronous update x_i <- f(x_i) + (alpha/N) sum_j A_ij h(x_i, x_j) mod 1.
void step_inplace(const NetworkSystem& system, EnsembleState& state, int threads = 1);
EnsembleState step(const NetworkSystem& system, const EnsembleState& state, int threads = 1);

/// Column i across realizations.
std::vector<double> node_marginal(const EnsembleState& state, int i);

/// W1 between the empirical node marginal and a reference fiber density.
double marginal_error(const EnsembleState& state, int i, const dens::CircleDensity& reference);

enum class Scenario { Clustered, Decay, Er };
Scenario scenario_from_string(const std::string& name);
std::string scenario_name(Scenario s);

struct SweepRow {
    std::string scenario;
    int n = 0;
    int t = 0;
    double z_star = 0.0;
    int node = 0;  // 1-based paper convention ceil(z* N)
    double w1_error = 0.0;
    double bootstrap_se = 0.0;
    std::uint64_t seed = 0;
};

struct SweepConfig {
    std::vector<int> n_list;
    int t = 3;
    int r = 2000;
    std::vector<double> z_star;
    int bootstrap = 200;
    int threads = 1;
};

// Theorem-1 comparison: for each N the finite network is built from the
// scenario (block quantization, xi quantization, or an ER sample), run t
// steps from nu, and the node ceil(z* N) marginal is compared in W1 with
// the STO state evolved t steps under the limit graphon.
std::vector<SweepRow> convergence_sweep(const fibered::FiberedDensity& nu, Scenario scenario,
                                        const graphon::Graphon& limit, const maps::CouplingFunction& h,
                                        const maps::ExpandingMap& f, double alpha, const SweepConfig& config,
                                        std::uint64_t seed);

struct ConcentrationRow {
    double eps = 0.0;
    double tail = 0.0;    // empirical P(|psi - mean| > eps)
    double fitted = 0.0;  // envelope curve value at this eps
    bool censored = false;  // fewer than 10 exceedances: excluded from fit
};

struct ConcentrationTable {
    std::vector<ConcentrationRow> rows;
    double slope = 0.0;      // d log(tail) / d(eps^2 N); negative under (H1)
    double intercept = 0.0;
    double envelope_log_c = 0.0;  // intercept + 2 residual sd
    double r_squared = 0.0;
    bool degenerate = false;  // constant observable, no fit
    int node = 0;
};

// Tail table of psi_r = N^-1 sum_j A_nj h(x, x_j^(r)) against the
// sub-Gaussian form C1 exp(-C2 eps^2 N), fitted by least squares on the
// uncensored rows.
ConcentrationTable concentration_probe(const NetworkSystem& system, const EnsembleState& state, double x,
                                       std::span<const double> eps_list, int node = 0);

// Trajectory dump: uint64 R, N, t, then R*N float64 coordinates row-major.
void write_trajectory(const EnsembleState& state, const std::string& path);

}  // namespace stograph::sim
