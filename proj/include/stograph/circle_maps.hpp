#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace stograph::maps {

// Uniformly expanding circle map given by its lift and exact derivatives.
// The lift satisfies f̂(x+1) = f̂(x) + degree, and f' >= min_slope > 1 on all
// of the circle.  Maps are supplied in closed form; derivative_eval returns
// f^(order) for order in {1,2,3}.
struct ExpandingMap {
    std::string name;
    int degree = 2;
    double min_slope = 2.0;
    double c3_bound = 0.0;  // upper bound on |f| + |f'| + |f''| + |f'''|
    std::function<double(double)> lift;
    std::function<double(double, int)> derivative_eval;
};

/// f̂(x) mod 1.
double eval_map(const ExpandingMap& map, double x);

/// f^(order)(x), order in {1,2,3}.
double map_derivative(const ExpandingMap& map, double x, int order);

// Pair interaction h(x,y), biperiodic in both arguments, with closed-form
// partial derivatives up to total order 3 and certified C^k bounds.
struct CouplingFunction {
    std::string name;
    std::array<double, 4> ck_bounds{};             // C^0..C^3 upper bounds
    std::function<double(double, double, int, int)> partial;  // d1^a d2^b h

    // Optional separable representation h(x,y) = sum_m u_m(x) v_m(y); used
    // by the ensemble kernel to turn the coupling sum into matrix products.
    struct Term {
        std::function<double(double)> u;
        std::function<double(double)> v;
    };
    std::vector<Term> separable;

    double eval(double x, double y) const { return partial(x, y, 0, 0); }
    double d1(double x, double y, int order) const { return partial(x, y, order, 0); }
};

/// Partial derivative d1^order h(x,y), order in {0,1,2,3}.
double coupling_eval(const CouplingFunction& h, double x, double y, int d1_order);

// C^k norm by the dominating convention: sum over all partials of total
// order <= k of gridded sup moduli, on a 512-points-per-axis grid refined x2
// until stable to 1e-6.
double ck_norm(const CouplingFunction& h, int k);

// Catalog.  Maps: "doubling", "tripling", "perturbed_doubling" (needs eps).
// Couplings: "h1" = sin(2pi(y-x))/2pi, "h2" = sin(2pi y)cos(2pi x)/2pi,
// "zero".  Unknown names throw LookupError.
ExpandingMap make_map(const std::string& name, double eps = 0.0);
CouplingFunction make_coupling(const std::string& name);
std::vector<std::string> map_names();
std::vector<std::string> coupling_names();

}  // namespace stograph::maps
