#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stograph/densities.hpp"

namespace stograph::fibered {

// Gridded disintegration {phi_z}: nz fibers at midpoints z_k = (k+1/2)/nz,
// each a probability density on the circle.  The Lebesgue marginal in z
// holds by construction since every row integrates to one.
struct FiberedDensity {
    int nz = 0;
    int nx = 0;
    std::vector<dens::CircleDensity> rows;

    FiberedDensity() = default;
    FiberedDensity(int nz_, int nx_, std::vector<dens::CircleDensity> rows_);

    double z_mid(int k) const { return (k + 0.5) / nz; }
};

struct AdmissibleDiagnostics {
    double m1 = 0.0;        // max_k |phi_k|_BV1
    double m2 = 0.0;        // max_k |phi_k|_BV2
    double var_p = 0.0;     // var_{p,BV1} over the default dyadic radii
    double weak_norm = 0.0; // integral of the fiberwise W1 norm (row masses)
    double c2_sup = 0.0;    // max_k sup of second-difference curvature
};

FiberedDensity uniform_fibered(int nz, int nx);

/// Rows sampled from a z-profile at the fiber midpoints, each normalized.
FiberedDensity make_profile(int nz, int nx,
                            const std::function<dens::CircleDensity(double z, int nx)>& profile);

/// (1/nz) sum_k W1(phi_k, psi_k).
double weak_norm_distance(const FiberedDensity& phi, const FiberedDensity& psi);

/// Max over midpoint pairs z, zbar in B(omega, r) of |phi_z - phi_zbar|_BV1.
double osc_bv1(const FiberedDensity& phi, double omega, double r);

/// Max over radii r of r^-p (1/nz) sum_k osc_bv1(phi, z_k, r).
double var_p_bv1(const FiberedDensity& phi, double p_exp, std::span<const double> radii);

AdmissibleDiagnostics admissible_diagnostics(const FiberedDensity& phi, double p_exp);

/// Max over rows of sup |phi_k - psi_k|.
double sup_distance(const FiberedDensity& phi, const FiberedDensity& psi);

// Serialization: CSV rows "z,x,value"; binary dump is uint64 nz, uint64 nx
// then nz*nx float64 node values, row-major, little-endian.
void write_csv(const FiberedDensity& phi, std::ostream& out);
void write_binary(const FiberedDensity& phi, std::ostream& out);
FiberedDensity read_binary(std::istream& in);
void write_binary_file(const FiberedDensity& phi, const std::string& path);
FiberedDensity read_binary_file(const std::string& path);

}  // namespace stograph::fibered
