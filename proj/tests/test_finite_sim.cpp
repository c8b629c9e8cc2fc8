#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "stograph/config.hpp"
#include "stograph/errors.hpp"
#include "stograph/finite_sim.hpp"
#include "stograph/grid.hpp"
#include "stograph/rng.hpp"
#include "stograph/sto.hpp"

using namespace stograph;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

dens::CircleDensity sin_row(int nx, double amp) {
    std::vector<double> v(nx);
    for (int j = 0; j < nx; ++j) v[j] = 1.0 + amp * std::sin(kTwoPi * j / nx);
    return dens::CircleDensity(nx, std::move(v));
}

// One-sided asymptotic Kolmogorov-Smirnov test against a CDF callable;
// returns the KS lambda statistic (reject at 1% when above ~1.628).
double ks_lambda(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double c = cdf(samples[i]);
        d = std::max(d, std::fabs((i + 1) / n - c));
        d = std::max(d, std::fabs(c - i / n));
    }
    return (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
}

constexpr double kKs1Percent = 1.628;

sim::NetworkSystem all_to_all(int n, const maps::ExpandingMap& f, const maps::CouplingFunction& h,
                              double alpha) {
    return sim::NetworkSystem{n, Eigen::MatrixXd::Ones(n, n), f, h, alpha};
}

}  // namespace

TEST_CASE("sample_initial determinism and distribution") {
    const auto uniform = fibered::uniform_fibered(8, 64);

    const auto s1 = sim::sample_initial(uniform, 5, 3, 77);
    const auto s2 = sim::sample_initial(uniform, 5, 3, 77);
    CHECK((s1.coords - s2.coords).cwiseAbs().maxCoeff() == 0.0);
    const auto s3 = sim::sample_initial(uniform, 1, 1, 123);
    const auto s4 = sim::sample_initial(uniform, 1, 1, 123);
    CHECK(s3.coords(0, 0) == s4.coords(0, 0));

    // pooled uniform draws pass KS at 1% in at least 46 of 50 seeds
    int rejects = 0;
    for (int seed = 0; seed < 50; ++seed) {
        const auto st = sim::sample_initial(uniform, 40, 50, 1000 + seed);
        std::vector<double> pooled;
        pooled.reserve(2000);
        for (int r = 0; r < st.r; ++r)
            for (int i = 0; i < st.n; ++i) pooled.push_back(st.coords(r, i));
        if (ks_lambda(pooled, [](double x) { return x; }) > kKs1Percent) ++rejects;
    }
    CHECK(rejects <= 4);
}

TEST_CASE("sample_initial respects a two-cluster disintegration") {
    const int nz = 16, nx = 128, n = 40, r = 400;
    const auto tc = fibered::make_profile(
        nz, nx, [&](double z, int m) { return sin_row(m, z <= 0.5 ? 0.5 : -0.5); });
    const auto st = sim::sample_initial(tc, n, r, 5);

    std::vector<double> first, second;
    for (int rr = 0; rr < r; ++rr)
        for (int i = 0; i < n; ++i) {
            if (i < n / 2)
                first.push_back(st.coords(rr, i));
            else
                second.push_back(st.coords(rr, i));
        }
    // match the own cluster density, fail against the other one
    CHECK(dens::w1_empirical(first, sin_row(nx, 0.5)) < 0.02);
    CHECK(dens::w1_empirical(second, sin_row(nx, -0.5)) < 0.02);
    CHECK(dens::w1_empirical(first, sin_row(nx, -0.5)) > 0.03);
}

TEST_CASE("step: uncoupled doubling and synchrony preservation") {
    const auto f = maps::make_map("doubling");
    const auto h1 = maps::make_coupling("h1");

    auto system = all_to_all(4, f, h1, 0.0);
    sim::EnsembleState st;
    st.r = 1;
    st.n = 4;
    st.coords.resize(1, 4);
    st.coords << 0.25, 0.1, 0.6, 0.9;
    const auto out = sim::step(system, st);
    CHECK(out.coords(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(out.t == 1);
    CHECK(st.t == 0);  // input untouched

    // identical nodes stay identical under h1 (h1(x,x) = 0)
    auto coupled = all_to_all(8, f, h1, 0.4);
    sim::EnsembleState sync;
    sync.r = 1;
    sync.n = 8;
    sync.coords = Eigen::MatrixXd::Constant(1, 8, 0.37);
    const auto out2 = sim::step(coupled, sync);
    for (int i = 0; i < 8; ++i) CHECK(out2.coords(0, i) == doctest::Approx(out2.coords(0, 0)).epsilon(1e-15));
}

TEST_CASE("step agrees with the direct quadratic-cost evaluation") {
    // the separable fast path must match a hand-rolled O(N^2) update
    const auto f = maps::make_map("perturbed_doubling", 0.3);
    const auto h1 = maps::make_coupling("h1");
    const int n = 24;
    CounterRng rng = CounterRng::keyed(3, 1);
    Eigen::MatrixXd adj(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) adj(i, j) = rng.next_double() < 0.5 ? 1.0 : 0.0;
    sim::NetworkSystem system{n, adj, f, h1, 0.2};

    sim::EnsembleState st;
    st.r = 2;
    st.n = n;
    st.coords.resize(2, n);
    for (int r = 0; r < 2; ++r)
        for (int i = 0; i < n; ++i) st.coords(r, i) = rng.next_double();

    const auto fast = sim::step(system, st);
    for (int r = 0; r < 2; ++r)
        for (int i = 0; i < n; ++i) {
            const double x = st.coords(r, i);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += adj(i, j) * h1.eval(x, st.coords(r, j));
            const double expected = wrap_unit(f.lift(x) + 0.2 / n * s);
            CHECK(fast.coords(r, i) == doctest::Approx(expected).epsilon(1e-12));
        }
}

TEST_CASE("permutation equivariance") {
    const auto f = maps::make_map("perturbed_doubling", 0.3);
    const auto h1 = maps::make_coupling("h1");
    const int n = 48;
    CounterRng rng = CounterRng::keyed(9, 2);
    Eigen::MatrixXd adj(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) adj(i, j) = rng.next_double() < 0.4 ? 1.0 : 0.0;

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.next_below(i + 1)]);

    sim::EnsembleState st;
    st.r = 1;
    st.n = n;
    st.coords.resize(1, n);
    for (int i = 0; i < n; ++i) st.coords(0, i) = rng.next_double();

    sim::NetworkSystem system{n, adj, f, h1, 0.3};
    const auto stepped = sim::step(system, st);

    // permuted system
    Eigen::MatrixXd padj(n, n);
    sim::EnsembleState pst = st;
    for (int i = 0; i < n; ++i) {
        pst.coords(0, i) = st.coords(0, perm[i]);
        for (int j = 0; j < n; ++j) padj(i, j) = adj(perm[i], perm[j]);
    }
    sim::NetworkSystem psystem{n, padj, f, h1, 0.3};
    const auto pstepped = sim::step(psystem, pst);
    for (int i = 0; i < n; ++i)
        CHECK(pstepped.coords(0, i) == doctest::Approx(stepped.coords(0, perm[i])).epsilon(1e-12));
}

TEST_CASE("worker count does not change trajectories") {
    const auto f = maps::make_map("perturbed_doubling", 0.3);
    const auto h1 = maps::make_coupling("h1");
    const int n = 32, r = 700;  // spans multiple realization blocks
    auto system = all_to_all(n, f, h1, 0.25);
    const auto init = sim::sample_initial(fibered::uniform_fibered(8, 64), n, r, 11);

    auto a = init, b = init, c = init;
    sim::step_inplace(system, a, 1);
    sim::step_inplace(system, b, 3);
    sim::step_inplace(system, c, 8);
    CHECK((a.coords - b.coords).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.coords - c.coords).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("node_marginal and mixing of the uncoupled system") {
    const auto f = maps::make_map("doubling");
    const auto h1 = maps::make_coupling("h1");
    const auto init = sim::sample_initial(fibered::uniform_fibered(8, 64), 10, 3, 202);
    const auto col = sim::node_marginal(init, 4);
    CHECK(col.size() == 3);
    CHECK(col[0] == init.coords(0, 4));
    CHECK_THROWS_AS(sim::node_marginal(init, 10), ParameterError);

    // alpha = 0 doubling mixes any smooth initial data toward uniform
    const int n = 20, r = 600;
    const auto sin_state = fibered::make_profile(8, 128, [](double, int m) { return sin_row(m, 0.5); });
    auto st = sim::sample_initial(sin_state, n, r, 31);
    auto system = all_to_all(n, f, h1, 0.0);
    for (int t = 0; t < 20; ++t) sim::step_inplace(system, st, 1);
    std::vector<double> pooled;
    for (int rr = 0; rr < r; ++rr)
        for (int i = 0; i < n; ++i) pooled.push_back(st.coords(rr, i));
    CHECK(ks_lambda(pooled, [](double x) { return x; }) < kKs1Percent);
}

TEST_CASE("marginal_error against evolved references") {
    const auto f = maps::make_map("doubling");
    const auto h1 = maps::make_coupling("h1");
    const int n = 50, r = 2000, nx = 128;
    const auto sin_state = fibered::make_profile(16, nx, [](double, int m) { return sin_row(m, 0.5); });

    // t = 0: reference is the initial fiber itself
    auto st = sim::sample_initial(sin_state, n, r, 91);
    CHECK(sim::marginal_error(st, 24, sin_state.rows[7]) < 0.03);

    // t = 1, alpha = 0: reference is the pushforward through f (uniform)
    auto system = all_to_all(n, f, h1, 0.0);
    sim::step_inplace(system, st, 1);
    const auto uniform_row = dens::CircleDensity(nx, std::vector<double>(nx, 1.0));
    CHECK(sim::marginal_error(st, 24, uniform_row) < 0.03);

    // negative control: deliberately wrong reference stays bounded away
    CHECK(sim::marginal_error(st, 24, sin_row(nx, 0.9)) > 0.035);
}

TEST_CASE("convergence sweep smoke run") {
    const auto f = maps::make_map("perturbed_doubling", 0.3);
    const auto h1 = maps::make_coupling("h1");
    const auto w = graphon::Graphon::block({0.5}, {1.0, 0.2, 0.2, 0.5});
    const auto tc = fibered::make_profile(
        16, 64, [&](double z, int m) { return sin_row(m, z <= 0.5 ? 0.5 : -0.5); });

    sim::SweepConfig sc;
    sc.n_list = {40, 80};
    sc.t = 2;
    sc.r = 200;
    sc.z_star = {0.25, 0.75};
    sc.bootstrap = 50;
    const auto rows = sim::convergence_sweep(tc, sim::Scenario::Clustered, w, h1, f, 0.2, sc, 7);
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) {
        CHECK(row.scenario == "clustered");
        CHECK(std::isfinite(row.w1_error));
        CHECK(row.w1_error >= 0.0);
        CHECK(row.bootstrap_se > 0.0);
        CHECK(row.node == static_cast<int>(std::ceil(row.z_star * row.n)));
    }

    // deterministic given the seed
    const auto rows2 = sim::convergence_sweep(tc, sim::Scenario::Clustered, w, h1, f, 0.2, sc, 7);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].w1_error == rows2[i].w1_error);

    sim::SweepConfig bad = sc;
    bad.n_list = {80, 40};
    bool threw = false;
    try {
        sim::convergence_sweep(tc, sim::Scenario::Clustered, w, h1, f, 0.2, bad, 7);
    } catch (const ParameterError&) {
        threw = true;
    }
    CHECK(threw);
}

TEST_CASE("concentration probe on an ER network") {
    const auto f = maps::make_map("doubling");
    const auto h1 = maps::make_coupling("h1");
    const int n = 200, r = 4000;
    auto adj = graphon::sample_er(n, 0.5, 17);
    sim::NetworkSystem system{n, std::move(adj.entries), f, h1, 0.2};
    const auto st = sim::sample_initial(fibered::uniform_fibered(8, 64), n, r, 18);

    const std::vector<double> eps{0.006, 0.008, 0.011, 0.015};
    const auto table = sim::concentration_probe(system, st, 0.25, eps);
    REQUIRE(table.rows.size() == eps.size());
    CHECK(!table.degenerate);
    CHECK(table.slope < 0.0);
    CHECK(table.r_squared > 0.8);
    for (const auto& row : table.rows)
        if (!row.censored) CHECK(row.tail <= row.fitted * (1.0 + 1e-12));

    // eps beyond the coupling range: exactly zero tail, censored
    const std::vector<double> huge{1.0};
    const auto t2 = sim::concentration_probe(system, st, 0.25, huge);
    CHECK(t2.rows[0].tail == 0.0);
    CHECK(t2.rows[0].censored);

    // degenerate observable: empty adjacency row
    sim::NetworkSystem zero{n, Eigen::MatrixXd::Zero(n, n), f, h1, 0.2};
    CHECK(sim::concentration_probe(zero, st, 0.25, eps).degenerate);
}

TEST_CASE("trajectory dump layout") {
    const auto st = sim::sample_initial(fibered::uniform_fibered(4, 32), 6, 3, 5);
    const std::string path = std::filesystem::temp_directory_path() / "stograph_traj_test.bin";
    sim::write_trajectory(st, path);
    CHECK(std::filesystem::file_size(path) == 3 * 8 + 3 * 6 * 8);
    std::filesystem::remove(path);
}
