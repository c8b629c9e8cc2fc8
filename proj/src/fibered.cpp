#include "stograph/fibered.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>

#include "stograph/errors.hpp"
#include "stograph/graphon.hpp"
#include "stograph/grid.hpp"

namespace stograph::fibered {

namespace {

void check_same_grids(const FiberedDensity& a, const FiberedDensity& b, const char* op) {
    if (a.nz != b.nz || a.nx != b.nx)
        throw GridMismatchError(std::string(op) + ": fibered grids differ");
}

double bv1_of_row_difference(const dens::CircleDensity& a, const dens::CircleDensity& b) {
    const int nx = a.nx;
    double s = 0.0;
    for (int j = 0; j < nx; ++j) {
        const int jn = (j + 1) % nx;
        s += std::fabs((a.v[jn] - b.v[jn]) - (a.v[j] - b.v[j]));
    }
    return s;
}

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

}  // namespace

FiberedDensity::FiberedDensity(int nz_, int nx_, std::vector<dens::CircleDensity> rows_)
    : nz(nz_), nx(nx_), rows(std::move(rows_)) {
    if (nz < 2 || nx < 2) throw ParameterError("FiberedDensity: nz and nx must be >= 2");
    if (static_cast<int>(rows.size()) != nz) throw ParameterError("FiberedDensity: row count mismatch");
    for (const auto& r : rows)
        if (r.nx != nx) throw GridMismatchError("FiberedDensity: row grid mismatch");
}

FiberedDensity uniform_fibered(int nz, int nx) {
    std::vector<dens::CircleDensity> rows;
    rows.reserve(nz);
    for (int k = 0; k < nz; ++k) rows.emplace_back(nx, std::vector<double>(nx, 1.0));
    return FiberedDensity(nz, nx, std::move(rows));
}

FiberedDensity make_profile(int nz, int nx,
                            const std::function<dens::CircleDensity(double, int)>& profile) {
    std::vector<dens::CircleDensity> rows;
    rows.reserve(nz);
    for (int k = 0; k < nz; ++k) {
        dens::CircleDensity row = profile((k + 0.5) / nz, nx);
        if (row.nx != nx) throw GridMismatchError("make_profile: profile returned wrong nx");
        rows.push_back(dens::normalize(row.as_signed()));
    }
    return FiberedDensity(nz, nx, std::move(rows));
}

double weak_norm_distance(const FiberedDensity& phi, const FiberedDensity& psi) {
    check_same_grids(phi, psi, "weak_norm_distance");
    double s = 0.0;
    for (int k = 0; k < phi.nz; ++k) s += dens::w1_distance(phi.rows[k], psi.rows[k]);
    return s / phi.nz;
}

double osc_bv1(const FiberedDensity& phi, double omega, double r) {
    if (!(r > 0.0)) throw ParameterError("osc_bv1: r must be positive");
    const int lo = std::max(0, static_cast<int>(std::ceil((omega - r) * phi.nz - 0.5)));
    const int hi = std::min(phi.nz - 1, static_cast<int>(std::floor((omega + r) * phi.nz - 0.5)));
    double osc = 0.0;
    for (int a = lo; a <= hi; ++a)
        for (int b = a + 1; b <= hi; ++b)
            osc = std::max(osc, bv1_of_row_difference(phi.rows[a], phi.rows[b]));
    return osc;
}

double var_p_bv1(const FiberedDensity& phi, double p_exp, std::span<const double> radii) {
    if (!(p_exp > 0.0 && p_exp <= 1.0)) throw ParameterError("var_p_bv1: p_exp must lie in (0,1]");
    if (radii.empty()) throw ParameterError("var_p_bv1: empty radius list");

    // Same window-max structure as the graphon variation, over BV1 distances.
    const int nz = phi.nz;
    std::vector<double> dist(static_cast<std::size_t>(nz) * nz, 0.0);
    for (int a = 0; a < nz; ++a)
        for (int b = a + 1; b < nz; ++b) {
            const double d = bv1_of_row_difference(phi.rows[a], phi.rows[b]);
            dist[static_cast<std::size_t>(a) * nz + b] = d;
            dist[static_cast<std::size_t>(b) * nz + a] = d;
        }

    double best = 0.0;
    for (double r : radii) {
        if (!(r > 0.0)) throw ParameterError("var_p_bv1: radii must be positive");
        double integral = 0.0;
        for (int k = 0; k < nz; ++k) {
            const double omega = (k + 0.5) / nz;
            const int lo = std::max(0, static_cast<int>(std::ceil((omega - r) * nz - 0.5)));
            const int hi = std::min(nz - 1, static_cast<int>(std::floor((omega + r) * nz - 0.5)));
            double osc = 0.0;
            for (int a = lo; a <= hi; ++a)
                for (int b = a + 1; b <= hi; ++b) osc = std::max(osc, dist[static_cast<std::size_t>(a) * nz + b]);
            integral += osc;
        }
        integral /= nz;
        best = std::max(best, integral / std::pow(r, p_exp));
    }
    return best;
}

AdmissibleDiagnostics admissible_diagnostics(const FiberedDensity& phi, double p_exp) {
    AdmissibleDiagnostics d;
    double mass_sum = 0.0;
    for (const auto& row : phi.rows) {
        const auto s = row.as_signed();
        d.m1 = std::max(d.m1, dens::bv1_seminorm(s));
        d.m2 = std::max(d.m2, dens::bv2_seminorm(s));
        mass_sum += s.mass();
        for (int j = 0; j < row.nx; ++j) {
            const double prev = row.v[(j + row.nx - 1) % row.nx];
            const double next = row.v[(j + 1) % row.nx];
            const double curv = std::fabs(next - 2.0 * row.v[j] + prev) * row.nx * row.nx;
            d.c2_sup = std::max(d.c2_sup, curv);
        }
    }
    d.weak_norm = mass_sum / phi.nz;
    const auto radii = graphon::dyadic_radii();
    d.var_p = var_p_bv1(phi, p_exp, radii);
    return d;
}

double sup_distance(const FiberedDensity& phi, const FiberedDensity& psi) {
    check_same_grids(phi, psi, "sup_distance");
    double s = 0.0;
    for (int k = 0; k < phi.nz; ++k) s = std::max(s, dens::sup_distance(phi.rows[k], psi.rows[k]));
    return s;
}

void write_csv(const FiberedDensity& phi, std::ostream& out) {
    out << "z,x,value\n";
    char buf[96];
    for (int k = 0; k < phi.nz; ++k)
        for (int j = 0; j < phi.nx; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", phi.z_mid(k),
                          static_cast<double>(j) / phi.nx, phi.rows[k].v[j]);
            out << buf;
        }
}

void write_binary(const FiberedDensity& phi, std::ostream& out) {
    const std::uint64_t nz = static_cast<std::uint64_t>(phi.nz);
    const std::uint64_t nx = static_cast<std::uint64_t>(phi.nx);
    out.write(reinterpret_cast<const char*>(&nz), sizeof nz);
    out.write(reinterpret_cast<const char*>(&nx), sizeof nx);
    for (const auto& row : phi.rows)
        out.write(reinterpret_cast<const char*>(row.v.data()), static_cast<std::streamsize>(row.v.size() * 8));
}

FiberedDensity read_binary(std::istream& in) {
    std::uint64_t nz = 0, nx = 0;
    in.read(reinterpret_cast<char*>(&nz), sizeof nz);
    in.read(reinterpret_cast<char*>(&nx), sizeof nx);
    if (!in || nz < 2 || nx < 2 || nz > (1u << 24) || nx > (1u << 24))
        throw ParameterError("read_binary: corrupt fibered density header");
    std::vector<dens::CircleDensity> rows;
    rows.reserve(nz);
    for (std::uint64_t k = 0; k < nz; ++k) {
        std::vector<double> v(nx);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(nx * 8));
        if (!in) throw ParameterError("read_binary: truncated payload");
        rows.emplace_back(static_cast<int>(nx), std::move(v));
    }
    return FiberedDensity(static_cast<int>(nz), static_cast<int>(nx), std::move(rows));
}

void write_binary_file(const FiberedDensity& phi, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("write_binary_file: cannot open " + path);
    write_binary(phi, out);
}

FiberedDensity read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NumericError("read_binary_file: cannot open " + path);
    return read_binary(in);
}

}  // namespace stograph::fibered
