#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stograph/circle_maps.hpp"
#include "stograph/errors.hpp"

using namespace stograph;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("eval_map") {
    const auto doubling = maps::make_map("doubling");
    CHECK(maps::eval_map(doubling, 0.75) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(maps::eval_map(doubling, 0.0) == 0.0);

    const auto pd = maps::make_map("perturbed_doubling", 0.3);
    const double expected = std::fmod(2.0 * 0.25 + 0.3 * std::sin(kTwoPi * 0.25) / kTwoPi, 1.0);
    CHECK(maps::eval_map(pd, 0.25) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("map_derivative") {
    const auto doubling = maps::make_map("doubling");
    CHECK(maps::map_derivative(doubling, 0.3, 1) == 2.0);
    CHECK(maps::map_derivative(doubling, 0.3, 2) == 0.0);
    const auto pd = maps::make_map("perturbed_doubling", 0.3);
    CHECK(maps::map_derivative(pd, 0.0, 1) == doctest::Approx(2.3).epsilon(1e-15));
    CHECK_THROWS_AS(maps::map_derivative(doubling, 0.0, 4), ParameterError);
    CHECK_THROWS_AS(maps::map_derivative(doubling, 0.0, 0), ParameterError);
}

TEST_CASE("coupling_eval for h1") {
    const auto h1 = maps::make_coupling("h1");
    CHECK(h1.eval(0.3, 0.3) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(maps::coupling_eval(h1, 0.3, 0.3, 1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(maps::coupling_eval(h1, 0.0, 0.25, 0) == doctest::Approx(1.0 / kTwoPi).epsilon(1e-12));
    CHECK_THROWS_AS(maps::coupling_eval(h1, 0, 0, 4), ParameterError);

    // symbolic derivative checked by central finite differences
    for (int order = 1; order <= 3; ++order) {
        const double dx = 1e-5;
        for (double x : {0.1, 0.37, 0.9}) {
            const double fd =
                (h1.partial(x + dx, 0.4, order - 1, 0) - h1.partial(x - dx, 0.4, order - 1, 0)) / (2 * dx);
            CHECK(h1.partial(x, 0.4, order, 0) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("ck_norm convention") {
    const auto h1 = maps::make_coupling("h1");
    CHECK(maps::ck_norm(h1, 0) == doctest::Approx(1.0 / kTwoPi).epsilon(1e-6));
    CHECK(maps::ck_norm(h1, 1) == doctest::Approx(1.0 / kTwoPi + 2.0).epsilon(1e-6));
    const auto zero = maps::make_coupling("zero");
    for (int k = 0; k <= 3; ++k) CHECK(maps::ck_norm(zero, k) == 0.0);

    // monotone in k and dominated by the certified bounds
    const auto h2 = maps::make_coupling("h2");
    for (const auto& h : {h1, h2}) {
        double prev = -1.0;
        for (int k = 0; k <= 3; ++k) {
            const double n = maps::ck_norm(h, k);
            CHECK(n >= prev);
            CHECK(h.ck_bounds[static_cast<std::size_t>(k)] >= n - 1e-9);
            prev = n;
        }
    }
}

TEST_CASE("catalog entries and bounds") {
    CHECK(maps::make_map("doubling").degree == 2);
    CHECK(maps::make_map("doubling").min_slope == 2.0);
    CHECK(maps::make_map("tripling").degree == 3);
    CHECK(maps::make_map("perturbed_doubling", 0.3).min_slope == doctest::Approx(1.7));
    CHECK(maps::make_coupling("h1").ck_bounds[1] == doctest::Approx(2.1592).epsilon(1e-4));
    CHECK_THROWS_AS(maps::make_map("rotation"), LookupError);
    CHECK_THROWS_AS(maps::make_coupling("h9"), LookupError);
    CHECK_THROWS_AS(maps::make_map("perturbed_doubling", 1.5), ParameterError);
}

TEST_CASE("lift periodicity and expansion on a fine grid") {
    for (const auto& m : {maps::make_map("doubling"), maps::make_map("tripling"),
                          maps::make_map("perturbed_doubling", 0.3)}) {
        double max_resid = 0.0;
        double min_slope_seen = 1e300;
        for (int i = 0; i < 10000; ++i) {
            const double x = static_cast<double>(i) / 10000;
            max_resid = std::max(max_resid, std::fabs(m.lift(x + 1.0) - m.lift(x) - m.degree));
            min_slope_seen = std::min(min_slope_seen, m.derivative_eval(x, 1));
        }
        CHECK(max_resid < 1e-12);
        CHECK(min_slope_seen >= m.min_slope - 1e-12);
        CHECK(min_slope_seen > 1.0);
    }
}

TEST_CASE("derivatives match finite differences at second order") {
    const auto pd = maps::make_map("perturbed_doubling", 0.4);
    auto fd_error = [&](double dx) {
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const double x = static_cast<double>(i) / 200;
            const double fd = (pd.lift(x + dx) - pd.lift(x - dx)) / (2 * dx);
            worst = std::max(worst, std::fabs(fd - pd.derivative_eval(x, 1)));
        }
        return worst;
    };
    const double coarse = fd_error(1e-3);
    const double fine = fd_error(5e-4);
    CHECK(coarse / fine >= 3.5);  // O(dx^2) halving behavior
}

TEST_CASE("separable representations reproduce the couplings") {
    for (const char* name : {"h1", "h2"}) {
        const auto h = maps::make_coupling(name);
        REQUIRE(!h.separable.empty());
        for (double x : {0.0, 0.21, 0.68}) {
            for (double y : {0.1, 0.55, 0.93}) {
                double s = 0.0;
                for (const auto& term : h.separable) s += term.u(x) * term.v(y);
                CHECK(s == doctest::Approx(h.eval(x, y)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("biperiodicity of the couplings") {
    const auto h1 = maps::make_coupling("h1");
    const auto h2 = maps::make_coupling("h2");
    double worst = 0.0;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            const double x = static_cast<double>(i) / 100;
            const double y = static_cast<double>(j) / 100;
            for (const auto& h : {h1, h2}) {
                worst = std::max(worst, std::fabs(h.eval(x + 1.0, y) - h.eval(x, y)));
                worst = std::max(worst, std::fabs(h.eval(x, y + 1.0) - h.eval(x, y)));
            }
        }
    CHECK(worst < 1e-12);
}
