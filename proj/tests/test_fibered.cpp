#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "stograph/errors.hpp"
#include "stograph/fibered.hpp"
#include "stograph/graphon.hpp"
#include "stograph/rng.hpp"
#include "stograph/runner.hpp"

using namespace stograph;
using fibered::FiberedDensity;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

dens::CircleDensity sin_row(int nx, double amp) {
    std::vector<double> v(nx);
    for (int j = 0; j < nx; ++j) v[j] = 1.0 + amp * std::sin(kTwoPi * j / nx);
    return dens::CircleDensity(nx, std::move(v));
}

FiberedDensity two_cluster(int nz, int nx, double amp1, double amp2) {
    return fibered::make_profile(
        nz, nx, [&](double z, int n) { return sin_row(n, z <= 0.5 ? amp1 : amp2); });
}

}  // namespace

TEST_CASE("uniform fibered state") {
    const auto u = fibered::uniform_fibered(8, 32);
    for (const auto& row : u.rows)
        for (double v : row.v) CHECK(v == 1.0);
    const auto d = fibered::admissible_diagnostics(u, 1.0);
    CHECK(d.m1 == 0.0);
    CHECK(d.m2 == 0.0);
    CHECK(d.var_p == 0.0);
    CHECK(d.c2_sup == 0.0);
    CHECK(d.weak_norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dens::w1_distance(u.rows[0], u.rows[5]) == 0.0);
}

TEST_CASE("make_profile samples at midpoints and normalizes") {
    const int nz = 16, nx = 64;
    const auto tc = two_cluster(nz, nx, 0.5, -0.5);
    // rows depend only on the side of 1/2
    for (int k = 1; k < nz / 2; ++k) CHECK(dens::sup_distance(tc.rows[k], tc.rows[0]) == 0.0);
    for (int k = nz / 2 + 1; k < nz; ++k) CHECK(dens::sup_distance(tc.rows[k], tc.rows[nz / 2]) == 0.0);
    CHECK(dens::sup_distance(tc.rows[0], tc.rows[nz - 1]) == doctest::Approx(1.0).epsilon(1e-12));

    // constant Lebesgue profile equals the uniform state
    const auto flat = fibered::make_profile(nz, nx, [](double, int n) {
        return dens::CircleDensity(n, std::vector<double>(n, 1.0));
    });
    CHECK(fibered::sup_distance(flat, fibered::uniform_fibered(nz, nx)) == 0.0);

    // Lipschitz-in-z profile: adjacent rows differ in W1 by O(1/nz)
    const auto lip = fibered::make_profile(
        nz, nx, [](double z, int n) { return sin_row(n, 0.5 * z); });
    for (int k = 0; k + 1 < nz; ++k) {
        const double d = dens::w1_distance(lip.rows[k], lip.rows[k + 1]);
        CHECK(d < 1.0 / nz);
        CHECK(d > 0.0);
    }

    // marginal constraint: every row mass exactly one
    for (const auto& row : tc.rows) CHECK(std::fabs(row.as_signed().mass() - 1.0) < 1e-12);
}

TEST_CASE("weak norm distance") {
    const int nz = 16, nx = 256;
    const auto u = fibered::uniform_fibered(nz, nx);
    const auto s = fibered::make_profile(nz, nx, [](double, int n) { return sin_row(n, 0.5); });
    CHECK(fibered::weak_norm_distance(u, u) == 0.0);

    const double single = 1.0 / (2.0 * std::numbers::pi * std::numbers::pi);
    CHECK(fibered::weak_norm_distance(u, s) == doctest::Approx(single).epsilon(2e-3));

    // half the rows uniform: half the single-fiber distance
    const auto half = two_cluster(nz, nx, 0.0, 0.5);
    CHECK(fibered::weak_norm_distance(u, half) == doctest::Approx(single / 2).epsilon(2e-3));

    CHECK_THROWS_AS(fibered::weak_norm_distance(u, fibered::uniform_fibered(nz, 2 * nx)),
                    GridMismatchError);
}

TEST_CASE("weak norm distance is a metric on fixed grids") {
    CounterRng rng = CounterRng::keyed(21, 0);
    for (int trial = 0; trial < 6; ++trial) {
        const auto a = runner::random_smooth_fibered(8, 64, 0.3, rng);
        const auto b = runner::random_smooth_fibered(8, 64, 0.3, rng);
        const auto c = runner::random_smooth_fibered(8, 64, 0.3, rng);
        const double ab = fibered::weak_norm_distance(a, b);
        CHECK(ab == doctest::Approx(fibered::weak_norm_distance(b, a)).epsilon(1e-12));
        CHECK(fibered::weak_norm_distance(a, c) <= ab + fibered::weak_norm_distance(b, c) + 1e-12);
    }
}

TEST_CASE("osc_bv1") {
    const int nz = 16, nx = 128;
    const auto u = fibered::uniform_fibered(nz, nx);
    CHECK(fibered::osc_bv1(u, 0.5, 0.25) == 0.0);

    const auto tc = two_cluster(nz, nx, 0.5, -0.5);
    const double jump = dens::bv1_seminorm(dens::subtract(tc.rows[0], tc.rows[nz - 1]));
    CHECK(fibered::osc_bv1(tc, 0.5, 2.0 / nz) == doctest::Approx(jump).epsilon(1e-12));

    // ball inside one cluster sees a single row
    CHECK(fibered::osc_bv1(tc, 0.25, 0.4 / nz) == 0.0);

    // monotone in r
    double prev = 0.0;
    for (double r : {0.02, 0.05, 0.1, 0.3, 0.6}) {
        const double o = fibered::osc_bv1(tc, 0.3, r);
        CHECK(o >= prev - 1e-15);
        prev = o;
    }
    CHECK_THROWS_AS(fibered::osc_bv1(tc, 0.5, 0.0), ParameterError);
}

TEST_CASE("var_p_bv1") {
    const int nz = 64, nx = 128;
    const auto radii = graphon::dyadic_radii();
    CHECK(fibered::var_p_bv1(fibered::uniform_fibered(nz, nx), 1.0, radii) == 0.0);

    // two-cluster plateau: 2 * bv1(nu1 - nu2)
    const auto tc = two_cluster(nz, nx, 0.5, -0.5);
    const double jump = dens::bv1_seminorm(dens::subtract(tc.rows[0], tc.rows[nz - 1]));
    CHECK(fibered::var_p_bv1(tc, 1.0, radii) == doctest::Approx(2.0 * jump).epsilon(0.03));

    // Lipschitz profile: finite and stable under z-grid refinement
    auto lip_profile = [](double z, int n) { return sin_row(n, 0.5 * (2.0 * z - 1.0)); };
    const auto lip_c = fibered::make_profile(nz, nx, lip_profile);
    const auto lip_f = fibered::make_profile(2 * nz, nx, lip_profile);
    const double vc = fibered::var_p_bv1(lip_c, 1.0, radii);
    const double vf = fibered::var_p_bv1(lip_f, 1.0, radii);
    CHECK(vc > 0.0);
    CHECK(std::fabs(vf - vc) / vc < 0.05);

    CHECK_THROWS_AS(fibered::var_p_bv1(tc, 0.0, radii), ParameterError);
    CHECK_THROWS_AS(fibered::var_p_bv1(tc, 1.0, std::vector<double>{}), ParameterError);
}

TEST_CASE("admissible diagnostics of sinusoidal rows") {
    const auto s = fibered::make_profile(8, 1024, [](double, int n) { return sin_row(n, 0.5); });
    const auto d = fibered::admissible_diagnostics(s, 1.0);
    CHECK(d.m1 == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(d.m2 == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-3));
    CHECK(d.weak_norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.var_p == doctest::Approx(0.0).epsilon(1e-9));  // identical rows
    CHECK(d.c2_sup == doctest::Approx(0.5 * kTwoPi * kTwoPi).epsilon(1e-3));
}

TEST_CASE("csv serialization shape") {
    const auto u = fibered::uniform_fibered(4, 8);
    std::ostringstream out;
    fibered::write_csv(u, out);
    const std::string text = out.str();
    CHECK(text.substr(0, 10) == "z,x,value\n");
    int lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + 4 * 8);
}

TEST_CASE("binary round trip is exact") {
    CounterRng rng = CounterRng::keyed(5, 0);
    const auto phi = runner::random_smooth_fibered(6, 32, 0.3, rng);
    std::stringstream buf;
    fibered::write_binary(phi, buf);
    const auto back = fibered::read_binary(buf);
    REQUIRE(back.nz == phi.nz);
    REQUIRE(back.nx == phi.nx);
    CHECK(fibered::sup_distance(phi, back) == 0.0);
}

TEST_CASE("construction guards") {
    CHECK_THROWS_AS(fibered::FiberedDensity(1, 8, {}), ParameterError);
    std::vector<dens::CircleDensity> rows{sin_row(8, 0.2), sin_row(16, 0.2)};
    CHECK_THROWS_AS(fibered::FiberedDensity(2, 8, rows), GridMismatchError);
}
