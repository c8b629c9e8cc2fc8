#include "stograph/densities.hpp"

#include <algorithm>
#include <cmath>

#include "stograph/errors.hpp"
#include "stograph/grid.hpp"

namespace stograph::dens {

namespace {

void check_same_grid(int a, int b, const char* op) {
    if (a != b) throw GridMismatchError(std::string(op) + ": grids differ (" + std::to_string(a) + " vs " +
                                        std::to_string(b) + ")");
}

double median_inplace(std::vector<double>& x) {
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    return n % 2 == 1 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

// Node CDF of a PL density by trapezoid cumsum; cum[0] = 0, cum[nx] = mass.
std::vector<double> node_cdf(const SignedCircleFunction& f) {
    std::vector<double> cum(f.nx + 1, 0.0);
    for (int j = 0; j < f.nx; ++j) {
        const double next = f.v[(j + 1) % f.nx];
        cum[j + 1] = cum[j] + (f.v[j] + next) / (2.0 * f.nx);
    }
    return cum;
}

double eval_cdf(const SignedCircleFunction& f, const std::vector<double>& cum, double x) {
    const double t = std::clamp(x, 0.0, 1.0) * f.nx;
    int j = std::min(static_cast<int>(t), f.nx - 1);
    const double s = t - j;
    const double a = f.v[j];
    const double b = f.v[(j + 1) % f.nx];
    return cum[j] + (a * s + 0.5 * (b - a) * s * s) / f.nx;
}

}  // namespace

SignedCircleFunction::SignedCircleFunction(int nx_, std::vector<double> values) : nx(nx_), v(std::move(values)) {
    if (nx < 2) throw ParameterError("SignedCircleFunction: nx must be >= 2");
    if (static_cast<int>(v.size()) != nx) throw ParameterError("SignedCircleFunction: size mismatch");
    for (double x : v)
        if (!std::isfinite(x)) throw ParameterError("SignedCircleFunction: non-finite value");
}

double SignedCircleFunction::eval(double x) const {
    const double t = wrap_unit(x) * nx;
    int j = static_cast<int>(t);
    if (j >= nx) j = nx - 1;
    const double frac = t - j;
    return v[j] * (1.0 - frac) + v[(j + 1) % nx] * frac;
}

double SignedCircleFunction::mass() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s / nx;
}

CircleDensity::CircleDensity(int nx_, std::vector<double> values) : nx(nx_), v(std::move(values)) {
    if (nx < 2) throw ParameterError("CircleDensity: nx must be >= 2");
    if (static_cast<int>(v.size()) != nx) throw ParameterError("CircleDensity: size mismatch");
    double s = 0.0;
    for (double x : v) {
        if (!(x >= 0.0)) throw DomainError("CircleDensity: negative or non-finite value");
        s += x;
    }
    if (std::fabs(s / nx - 1.0) > 1e-10) throw DomainError("CircleDensity: mass deviates from 1 beyond 1e-10");
}

double CircleDensity::eval(double x) const {
    const double t = wrap_unit(x) * nx;
    int j = static_cast<int>(t);
    if (j >= nx) j = nx - 1;
    const double frac = t - j;
    return v[j] * (1.0 - frac) + v[(j + 1) % nx] * frac;
}

SignedCircleFunction sample_function(int nx, const std::function<double(double)>& f) {
    std::vector<double> v(nx);
    for (int j = 0; j < nx; ++j) v[j] = f(static_cast<double>(j) / nx);
    return SignedCircleFunction(nx, std::move(v));
}

CircleDensity normalize(const SignedCircleFunction& raw) {
    double s = 0.0;
    for (double x : raw.v) {
        if (x < 0.0) throw DomainError("normalize: negative value");
        s += x;
    }
    s /= raw.nx;
    if (!(s > 0.0)) throw DomainError("normalize: zero mass");
    std::vector<double> v(raw.v);
    for (double& x : v) x /= s;
    return CircleDensity(raw.nx, std::move(v));
}

double l1_norm(const SignedCircleFunction& f) {
    double s = 0.0;
    for (double x : f.v) s += std::fabs(x);
    return s / f.nx;
}

double bv1_seminorm(const SignedCircleFunction& f) {
    double s = 0.0;
    for (int j = 0; j < f.nx; ++j) s += std::fabs(f.v[(j + 1) % f.nx] - f.v[j]);
    return s;
}

double bv2_seminorm(const SignedCircleFunction& f) {
    if (f.nx < 3) throw ParameterError("bv2_seminorm: nx must be >= 3");
    double s = 0.0;
    for (int j = 0; j < f.nx; ++j) {
        const double prev = f.v[(j + f.nx - 1) % f.nx];
        const double next = f.v[(j + 1) % f.nx];
        s += std::fabs(next - 2.0 * f.v[j] + prev);
    }
    return s * f.nx;
}

SignedCircleFunction subtract(const SignedCircleFunction& f, const SignedCircleFunction& g) {
    check_same_grid(f.nx, g.nx, "subtract");
    std::vector<double> v(f.nx);
    for (int j = 0; j < f.nx; ++j) v[j] = f.v[j] - g.v[j];
    return SignedCircleFunction(f.nx, std::move(v));
}

SignedCircleFunction subtract(const CircleDensity& f, const CircleDensity& g) {
    return subtract(f.as_signed(), g.as_signed());
}

CircleDensity resample(const CircleDensity& f, int nx) {
    if (nx == f.nx) return f;
    std::vector<double> v(nx);
    for (int j = 0; j < nx; ++j) v[j] = f.eval(static_cast<double>(j) / nx);
    return normalize(SignedCircleFunction(nx, std::move(v)));
}

double w1_of_difference(const SignedCircleFunction& diff) {
    std::vector<double> phi(diff.nx);
    double acc = 0.0;
    for (int j = 0; j < diff.nx; ++j) {
        phi[j] = acc;
        acc += (diff.v[j] + diff.v[(j + 1) % diff.nx]) / (2.0 * diff.nx);
    }
    std::vector<double> sorted(phi);
    const double c = median_inplace(sorted);
    double s = 0.0;
    for (double p : phi) s += std::fabs(p - c);
    return s / diff.nx;
}

double w1_distance(const CircleDensity& f, const CircleDensity& g) {
    if (f.nx == g.nx) return w1_of_difference(subtract(f, g));
    const int nx = std::max(f.nx, g.nx);
    return w1_of_difference(subtract(resample(f, nx), resample(g, nx)));
}

double w1_empirical(std::span<const double> samples, const CircleDensity& g) {
    if (samples.empty()) throw ParameterError("w1_empirical: empty sample list");
    std::vector<double> sorted(samples.begin(), samples.end());
    for (double& s : sorted) s = wrap_unit(s);
    std::sort(sorted.begin(), sorted.end());
    const double r = static_cast<double>(sorted.size());

    const SignedCircleFunction gs = g.as_signed();
    const auto cum = node_cdf(gs);
    const int m = std::clamp(std::max(4 * g.nx, 2 * static_cast<int>(sorted.size())), 1024, 65536);

    std::vector<double> d(m);
    for (int q = 0; q < m; ++q) {
        const double x = (q + 0.5) / m;
        const double femp =
            static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) / r;
        d[q] = femp - eval_cdf(gs, cum, x);
    }
    std::vector<double> tmp(d);
    const double c = median_inplace(tmp);
    double s = 0.0;
    for (double x : d) s += std::fabs(x - c);
    return s / m;
}

double hilbert_metric_positive(const SignedCircleFunction& f, const SignedCircleFunction& g) {
    check_same_grid(f.nx, g.nx, "hilbert_metric_positive");
    double max_fg = 0.0, max_gf = 0.0;
    for (int j = 0; j < f.nx; ++j) {
        if (!(f.v[j] > 0.0) || !(g.v[j] > 0.0))
            throw DomainError("hilbert_metric_positive: non-positive node value");
        max_fg = std::max(max_fg, f.v[j] / g.v[j]);
        max_gf = std::max(max_gf, g.v[j] / f.v[j]);
    }
    return std::log(max_fg * max_gf);
}

double hilbert_metric_positive(const CircleDensity& f, const CircleDensity& g) {
    return hilbert_metric_positive(f.as_signed(), g.as_signed());
}

double sup_distance(const SignedCircleFunction& f, const SignedCircleFunction& g) {
    check_same_grid(f.nx, g.nx, "sup_distance");
    double s = 0.0;
    for (int j = 0; j < f.nx; ++j) s = std::max(s, std::fabs(f.v[j] - g.v[j]));
    return s;
}

double sup_distance(const CircleDensity& f, const CircleDensity& g) {
    return sup_distance(f.as_signed(), g.as_signed());
}

double inverse_cdf(const CircleDensity& f, double u) {
    if (!(u >= 0.0 && u < 1.0)) throw ParameterError("inverse_cdf: u must lie in [0,1)");
    const auto cum = node_cdf(f.as_signed());
    const double target = u * cum[f.nx];
    int j = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), target) - cum.begin()) - 1;
    j = std::clamp(j, 0, f.nx - 1);
    const double a = f.v[j];
    const double b = f.v[(j + 1) % f.nx];
    const double r = (target - cum[j]) * f.nx;
    double t;
    if (std::fabs(b - a) < 1e-14 * (std::fabs(a) + 1.0)) {
        t = a > 0.0 ? r / a : 0.0;
    } else {
        const double disc = std::max(0.0, a * a + 2.0 * (b - a) * r);
        t = (-a + std::sqrt(disc)) / (b - a);
    }
    return wrap_unit((j + std::clamp(t, 0.0, 1.0)) / f.nx);
}

}  // namespace stograph::dens
