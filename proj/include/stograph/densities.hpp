#pragma once

#include <functional>
#include <span>
#include <vector>

namespace stograph::dens {

// Real function on the circle sampled at nodes x_j = j/nx and interpreted as
// a periodic piecewise-linear function.  No sign or mass constraint.
struct SignedCircleFunction {
    int nx = 0;
    std::vector<double> v;

    SignedCircleFunction() = default;
    SignedCircleFunction(int nx_, std::vector<double> values);

    /// Periodic linear interpolation at x (any real).
    double eval(double x) const;
    /// Riemann mass (1/nx) sum v_j, exact for the periodic PL interpolant.
    double mass() const;
};

// Probability density on the circle: nonnegative nodes, Riemann mass 1
// within 1e-10 (checked at construction).
struct CircleDensity {
    int nx = 0;
    std::vector<double> v;

    CircleDensity() = default;
    CircleDensity(int nx_, std::vector<double> values);  // validates

    double eval(double x) const;
    SignedCircleFunction as_signed() const { return SignedCircleFunction(nx, v); }
};

/// Sample a closed-form function at the nx nodes.
SignedCircleFunction sample_function(int nx, const std::function<double(double)>& f);

/// Scale a nonnegative function to unit mass.  Throws DomainError on a
/// negative node or zero mass.
CircleDensity normalize(const SignedCircleFunction& raw);

double l1_norm(const SignedCircleFunction& f);

/// First-difference total variation sum_j |v_{j+1} - v_j| (periodic).
double bv1_seminorm(const SignedCircleFunction& f);

/// Second-difference variation nx * sum_j |v_{j+1} - 2 v_j + v_{j-1}|,
/// i.e. the total variation of the PL derivative.
double bv2_seminorm(const SignedCircleFunction& f);

SignedCircleFunction subtract(const SignedCircleFunction& f, const SignedCircleFunction& g);
SignedCircleFunction subtract(const CircleDensity& f, const CircleDensity& g);

/// Resample onto a new grid by periodic linear interpolation, renormalizing.
CircleDensity resample(const CircleDensity& f, int nx);

// Circle Wasserstein distance via the min-over-shift CDF formula
// min_c int |Phi(x) - c| dx, Phi = cumulative of f - g, c = grid median.
double w1_distance(const CircleDensity& f, const CircleDensity& g);

/// Same formula for a zero-mass signed difference on one grid.
double w1_of_difference(const SignedCircleFunction& diff);

/// W1 between the empirical measure of the samples and g.
double w1_empirical(std::span<const double> samples, const CircleDensity& g);

/// Hilbert projective metric of the positivity cone:
/// log( max_j f_j/g_j * max_j g_j/f_j ).  Requires strictly positive nodes.
double hilbert_metric_positive(const CircleDensity& f, const CircleDensity& g);
/// Raw-cone version (no normalization constraint); projectively invariant.
double hilbert_metric_positive(const SignedCircleFunction& f, const SignedCircleFunction& g);

double sup_distance(const SignedCircleFunction& f, const SignedCircleFunction& g);
double sup_distance(const CircleDensity& f, const CircleDensity& g);

/// Inverse-CDF draw from the PL density; u in [0,1).
double inverse_cdf(const CircleDensity& f, double u);

}  // namespace stograph::dens
