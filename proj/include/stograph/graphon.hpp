#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace stograph::graphon {

struct AdjacencyMatrix {
    int n = 0;
    Eigen::MatrixXd entries;
    std::uint64_t seed = 0;
};

// Interaction kernel W(z,z') on [0,1]^2.  Four kinds: constant(p),
// block(cuts, values), translation(xi profile), and step (piecewise constant
// on the N-cell paper partition, the W^(N) representation of a graph).
class Graphon {
public:
    enum class Kind { Constant, Block, Translation, Step };

    static Graphon constant(double p);
    /// cuts strictly increasing inside (0,1); values is (B x B) row-major
    /// with B = cuts.size() + 1.  Cells are right-closed, first cell closed.
    static Graphon block(std::vector<double> cuts, std::vector<double> values_row_major);
    /// Named Lipschitz profiles: "linear" -> 1-u, "exp" -> exp(-2u).
    static Graphon translation(const std::string& xi_name);
    static Graphon translation(std::string label, std::function<double(double)> xi, double lip_bound);
    static Graphon step(Eigen::MatrixXd cell_values);

    Kind kind() const { return kind_; }
    const std::string& label() const { return label_; }
    int step_size() const { return static_cast<int>(cells_.rows()); }
    const Eigen::MatrixXd& step_cells() const { return cells_; }
    const std::vector<double>& cuts() const { return cuts_; }
    double block_value(int i, int j) const;
    double xi(double u) const;
    double xi_lip() const { return lip_bound_; }

    /// Kernel value; coordinates must lie in [0,1].
    double eval(double z, double zp) const;
    double operator()(double z, double zp) const { return eval(z, zp); }

    /// Cached ess-sup over z of ||W(z,.)||_L1 (grid max of row quadratures).
    double linf_l1_bound() const { return linf_l1_bound_; }
    /// Cached sup |W|.
    double sup_bound() const { return sup_bound_; }

private:
    Graphon() = default;
    void finalize_bounds();

    Kind kind_ = Kind::Constant;
    std::string label_;
    double p_ = 0.0;
    std::vector<double> cuts_;
    std::vector<double> block_values_;
    std::function<double(double)> xi_;
    double lip_bound_ = 0.0;
    Eigen::MatrixXd cells_;
    double linf_l1_bound_ = 0.0;
    double sup_bound_ = 0.0;
};

double graphon_eval(const Graphon& w, double z, double zp);

/// The W^(N) step graphon of an adjacency (or weight) matrix.
Graphon step_graphon_from_matrix(const AdjacencyMatrix& a);

/// i.i.d. Bernoulli(p) entries, deterministic in seed.
AdjacencyMatrix sample_er(int n, double p, std::uint64_t seed);

/// Finite-N weight matrix from a block or translation kernel:
/// A_ij = xi(|i-j|/N) for translation, cell value at node midpoints for block.
AdjacencyMatrix quantize_kernel(const Graphon& w, int n);

/// Midpoint-rule quadrature of ||W(z,.)||_L1.
double row_l1_norm(const Graphon& w, double z, int quad_points);

/// 2-D midpoint quadrature of the L1 distance on [0,1]^2.
double graphon_l1_distance(const Graphon& w, const Graphon& wt, int grid);

/// Midpoint quadrature of ||W(z,.) - W(zbar,.)||_L1 on one pair of rows.
double row_l1_distance(const Graphon& w, double z, double zbar, int quad_points);

// p-variation in L1: max over the supplied radii r of
// r^-p int osc_L1(W, omega, r) domega, oscillation maximized over grid pairs.
double var_p_l1(const Graphon& w, double p_exp, int z_grid, std::span<const double> radii);

/// Default dyadic radius list {2^-1, ..., 2^-8}.
std::vector<double> dyadic_radii();

}  // namespace stograph::graphon
