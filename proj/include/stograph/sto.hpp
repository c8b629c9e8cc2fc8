#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stograph/circle_maps.hpp"
#include "stograph/densities.hpp"
#include "stograph/fibered.hpp"
#include "stograph/graphon.hpp"

namespace stograph::sto {

// Mean-field tables at the collocation nodes:
//   m(k,j)   = int dz' W(z_k,z') int h(x_j,y)  phi_{z'}(y) dy
//   mx, mxx  = same with d1 h and d1^2 h.
struct MeanFieldTable {
    int nz = 0;
    int nx = 0;
    Eigen::MatrixXd m, mx, mxx;
};

/// Expansion threshold (min f' - 1)/||h||_C1; +infinity for h == 0.
double alpha_hat(const maps::ExpandingMap& f, const maps::CouplingFunction& h);

// Realized fiber map F(x) = f(x) + alpha * P(x), with P the cubic Hermite
// interpolant of the mean-field row matching values (m) and slopes (mx) at
// the nodes; the second derivative is evaluated from the mxx table.  The
// lift keeps the degree of f, and xi() is a fine-grid lower bound of F'.
class FiberMapRealization {
public:
    FiberMapRealization(const maps::ExpandingMap& f, double alpha, int fiber, std::vector<double> m_row,
                        std::vector<double> mx_row, std::vector<double> mxx_row);

    double lift(double x) const;    // F̂(x), any real x
    double value(double x) const;   // F̂(x) mod 1
    double deriv(double x) const;   // F'(x)
    double second(double x) const;  // F''(x)

    int degree() const { return f_.degree; }
    int nx() const { return nx_; }
    int fiber() const { return fiber_; }
    double alpha() const { return alpha_; }
    double xi() const { return xi_; }
    bool expanding() const { return xi_ > 1.0; }
    /// Fine-grid sup of |F''| / (F')^2.
    double max_distortion() const { return max_distortion_; }
    const maps::ExpandingMap& base_map() const { return f_; }

private:
    double mean_field_value(double x) const;
    double mean_field_deriv(double x) const;
    double mean_field_second(double x) const;

    maps::ExpandingMap f_;
    double alpha_;
    int fiber_;
    int nx_;
    std::vector<double> m_, mx_, mxx_;
    double xi_ = 0.0;
    double max_distortion_ = 0.0;
};

/// The d preimages of x under the realized map, sorted, each solving
/// |F̂(y) - (x + k)| < 1e-12 by bisection-bracketed Newton on the lift.
std::vector<double> inverse_branches(const FiberMapRealization& f, double x);

// Collocation transfer (L phi)(x_j) = sum_branches phi(y)/F'(y), with the
// input evaluated by periodic linear interpolation.  The density version
// renormalizes and can report the pre-normalization mass defect.
dens::CircleDensity fiber_pushforward(const FiberMapRealization& f, const dens::CircleDensity& phi,
                                      double* mass_error = nullptr);

/// Same transfer without renormalization, for signed test functions.
dens::SignedCircleFunction push_signed(const FiberMapRealization& f, const dens::SignedCircleFunction& psi);

struct StepCertificates {
    double min_xi = 0.0;
    double max_distortion = 0.0;
    double max_mass_error = 0.0;
    bool certified_alpha = false;  // |alpha| * ||W||_LinfL1 < alpha_hat
    bool all_expanding = false;
};

// One application of the self-consistent operator with cached coupling and
// graphon tables.  A single step is a pure function of its input state.
class StoOperator {
public:
    StoOperator(graphon::Graphon w, maps::CouplingFunction h, maps::ExpandingMap f, double alpha, int nz,
                int nx);

    MeanFieldTable mean_field(const fibered::FiberedDensity& phi) const;
    FiberMapRealization realize(const MeanFieldTable& table, int k) const;
    fibered::FiberedDensity step(const fibered::FiberedDensity& phi, StepCertificates* certs = nullptr) const;

    double alpha() const { return alpha_; }
    double alpha_hat() const { return alpha_hat_; }
    /// Lower bound sigma - |alpha| ||W|| ||h||_C1 on every fiber expansion.
    double certified_xi() const;
    bool within_certified_regime() const;
    const graphon::Graphon& graphon_kernel() const { return w_; }
    const maps::ExpandingMap& map() const { return f_; }
    const maps::CouplingFunction& coupling() const { return h_; }
    int nz() const { return nz_; }
    int nx() const { return nx_; }

private:
    graphon::Graphon w_;
    maps::CouplingFunction h_;
    maps::ExpandingMap f_;
    double alpha_;
    int nz_, nx_;
    double alpha_hat_;
    double h_c1_;
    Eigen::MatrixXd g0_, g1_, g2_;  // h tables at (x_j, y_i)
    Eigen::MatrixXd wmat_;          // W at (z_k, z_k')
};

MeanFieldTable mean_field(const graphon::Graphon& w, const maps::CouplingFunction& h,
                          const fibered::FiberedDensity& phi);

FiberMapRealization realize_fiber_map(const maps::ExpandingMap& f, double alpha, const MeanFieldTable& table,
                                      int k);

/// One STO step; throws StepError naming the first non-expanding fiber.
fibered::FiberedDensity sto_step(const fibered::FiberedDensity& phi, const graphon::Graphon& w,
                                 const maps::CouplingFunction& h, const maps::ExpandingMap& f, double alpha,
                                 StepCertificates* certs = nullptr);

struct SolveReport {
    int iterations = 0;
    bool converged = false;
    double tol = 0.0;
    double final_residual = 0.0;
    std::vector<double> residual_weak;
    std::vector<double> residual_sup;
    std::vector<double> mass_error;
    std::vector<double> min_xi;
    std::vector<double> max_distortion;
    std::vector<double> m1_history;
    std::vector<double> m2_history;
    std::vector<double> var_p_history;
    double rate = 0.0;            // fitted exponential rate over the tail
    double rate_r_squared = 0.0;
    bool expansion_certified = false;  // alpha regime certificate
    bool all_steps_expanding = false;
    double alpha = 0.0;
    double alpha_hat = 0.0;
    double w_linf_l1 = 0.0;
    fibered::AdmissibleDiagnostics final_diagnostics;
};

struct SolveOptions {
    double p_exp = 1.0;
    bool track_diagnostics = true;
};

// Plain fixed-point iteration of the STO, stopping when the weak-norm
// residual drops below tol.  Non-convergence is reported, not thrown.
std::pair<fibered::FiberedDensity, SolveReport> fixed_point(const fibered::FiberedDensity& phi0,
                                                            const graphon::Graphon& w,
                                                            const maps::CouplingFunction& h,
                                                            const maps::ExpandingMap& f, double alpha,
                                                            double tol, int max_iter,
                                                            const SolveOptions& options = {});

/// ||F phi - F~ phi~||_1 / (||W - W~||_L1 + ||phi - phi~||_1).
double lipschitz_probe(const graphon::Graphon& w, const graphon::Graphon& wt,
                       const fibered::FiberedDensity& phi, const fibered::FiberedDensity& phit,
                       const maps::CouplingFunction& h, const maps::ExpandingMap& f, double alpha);

struct LasotaYorkeRecord {
    double lhs = 0.0;      // |F_* psi|_BV1
    double lambda1 = 0.0;  // 1/xi
    double d_coeff = 0.0;  // sup |F''|/(F')^2
    double rhs = 0.0;      // lambda1 |psi|_BV1 + D ||psi||_L1
    double slack = 0.0;    // rhs - lhs
};

LasotaYorkeRecord lasota_yorke_probe(const FiberMapRealization& f, const dens::SignedCircleFunction& psi);

// BV1 norms |.|_BV1 + ||.||_L1 of psi0 pushed through the fiber maps
// realized from the given state sequence; n + 1 entries.
std::vector<double> memory_loss_probe(std::span<const fibered::FiberedDensity> nu_sequence, int fiber,
                                      const dens::SignedCircleFunction& psi0, int n,
                                      const graphon::Graphon& w, const maps::CouplingFunction& h,
                                      const maps::ExpandingMap& f, double alpha);

struct HilbertContractionRecord {
    std::vector<double> gamma;      // per fiber; NaN where skipped
    std::vector<int> skipped;       // fibers with zero input metric
    double max_gamma = 0.0;
};

HilbertContractionRecord hilbert_contraction_probe(const fibered::FiberedDensity& phi,
                                                   const fibered::FiberedDensity& psi,
                                                   const graphon::Graphon& w,
                                                   const maps::CouplingFunction& h,
                                                   const maps::ExpandingMap& f, double alpha);

/// sum_{i<=k_order} sup-grid |F1^(i) - F2^(i)|, k_order in {0,1,2}.
double fiber_map_ck_distance(const FiberMapRealization& f1, const FiberMapRealization& f2, int k_order);

// Small-scale Ulam oracle: row-stochastic cell-to-cell matrix built by
// subdividing each source cell, and the corresponding histogram transfer.
// Kept independent of the collocation path on purpose.
Eigen::MatrixXd ulam_matrix(const FiberMapRealization& f, int subdivisions);
std::vector<double> ulam_push(const FiberMapRealization& f, const dens::CircleDensity& phi,
                              int subdivisions);

}  // namespace stograph::sto
