#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stograph/circle_maps.hpp"
#include "stograph/config.hpp"
#include "stograph/densities.hpp"
#include "stograph/errors.hpp"
#include "stograph/fibered.hpp"
#include "stograph/finite_sim.hpp"
#include "stograph/graphon.hpp"
#include "stograph/metrics_report.hpp"
#include "stograph/runner.hpp"
#include "stograph/sto.hpp"

namespace py = pybind11;
using namespace stograph;

namespace {

fibered::FiberedDensity fibered_from_matrix(const Eigen::MatrixXd& rows) {
    const int nz = static_cast<int>(rows.rows());
    const int nx = static_cast<int>(rows.cols());
    std::vector<dens::CircleDensity> out;
    out.reserve(nz);
    for (int k = 0; k < nz; ++k) {
        std::vector<double> v(nx);
        for (int j = 0; j < nx; ++j) v[j] = rows(k, j);
        out.push_back(dens::normalize(dens::SignedCircleFunction(nx, std::move(v))));
    }
    return fibered::FiberedDensity(nz, nx, std::move(out));
}

Eigen::MatrixXd fibered_to_matrix(const fibered::FiberedDensity& phi) {
    Eigen::MatrixXd rows(phi.nz, phi.nx);
    for (int k = 0; k < phi.nz; ++k)
        for (int j = 0; j < phi.nx; ++j) rows(k, j) = phi.rows[k].v[j];
    return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Self-consistent transfer operators for heterogeneous coupled maps on graphons";

    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<LookupError>(m, "CatalogError", PyExc_KeyError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

    // --- circle maps --------------------------------------------------------
    py::class_<maps::ExpandingMap>(m, "ExpandingMap")
        .def_readonly("name", &maps::ExpandingMap::name)
        .def_readonly("degree", &maps::ExpandingMap::degree)
        .def_readonly("min_slope", &maps::ExpandingMap::min_slope)
        .def_readonly("c3_bound", &maps::ExpandingMap::c3_bound)
        .def("__call__", [](const maps::ExpandingMap& f, double x) { return maps::eval_map(f, x); });
    py::class_<maps::CouplingFunction>(m, "CouplingFunction")
        .def_readonly("name", &maps::CouplingFunction::name)
        .def_readonly("ck_bounds", &maps::CouplingFunction::ck_bounds)
        .def("__call__", [](const maps::CouplingFunction& h, double x, double y) { return h.eval(x, y); });
    m.def("make_map", &maps::make_map, py::arg("name"), py::arg("eps") = 0.0);
    m.def("make_coupling", &maps::make_coupling, py::arg("name"));
    m.def("map_names", &maps::map_names);
    m.def("coupling_names", &maps::coupling_names);
    m.def("eval_map", &maps::eval_map);
    m.def("map_derivative", &maps::map_derivative);
    m.def("coupling_eval", &maps::coupling_eval);
    m.def("ck_norm", &maps::ck_norm);

    // --- graphons ------------------------------------------------------------
    py::class_<graphon::Graphon>(m, "Graphon")
        .def_static("constant", &graphon::Graphon::constant)
        .def_static("block",
                    [](std::vector<double> cuts, std::vector<double> values) {
                        return graphon::Graphon::block(std::move(cuts), std::move(values));
                    })
        .def_static("translation", [](const std::string& xi) { return graphon::Graphon::translation(xi); })
        .def_static("step", [](const Eigen::MatrixXd& cells) { return graphon::Graphon::step(cells); })
        .def("__call__", &graphon::Graphon::eval)
        .def_property_readonly("linf_l1_bound", &graphon::Graphon::linf_l1_bound)
        .def_property_readonly("sup_bound", &graphon::Graphon::sup_bound);
    m.def("sample_er",
          [](int n, double p, std::uint64_t seed) { return graphon::sample_er(n, p, seed).entries; });
    m.def("step_graphon_from_matrix", [](const Eigen::MatrixXd& a) {
        graphon::AdjacencyMatrix adj;
        adj.n = static_cast<int>(a.rows());
        adj.entries = a;
        return graphon::step_graphon_from_matrix(adj);
    });
    m.def("quantize_kernel",
          [](const graphon::Graphon& w, int n) { return graphon::quantize_kernel(w, n).entries; });
    m.def("row_l1_norm", &graphon::row_l1_norm);
    m.def("graphon_l1_distance", &graphon::graphon_l1_distance);
    m.def("var_p_l1", [](const graphon::Graphon& w, double p_exp, int z_grid, std::vector<double> radii) {
        return graphon::var_p_l1(w, p_exp, z_grid, radii);
    });
    m.def("dyadic_radii", &graphon::dyadic_radii);

    // --- densities -----------------------------------------------------------
    py::class_<dens::CircleDensity>(m, "CircleDensity")
        .def(py::init<int, std::vector<double>>())
        .def_readonly("nx", &dens::CircleDensity::nx)
        .def_readonly("values", &dens::CircleDensity::v)
        .def("__call__", &dens::CircleDensity::eval);
    m.def("normalize_density", [](std::vector<double> values) {
        const int nx = static_cast<int>(values.size());
        return dens::normalize(dens::SignedCircleFunction(nx, std::move(values)));
    });
    m.def("l1_norm", [](std::vector<double> v) {
        const int nx = static_cast<int>(v.size());
        return dens::l1_norm(dens::SignedCircleFunction(nx, std::move(v)));
    });
    m.def("bv1_seminorm", [](std::vector<double> v) {
        const int nx = static_cast<int>(v.size());
        return dens::bv1_seminorm(dens::SignedCircleFunction(nx, std::move(v)));
    });
    m.def("bv2_seminorm", [](std::vector<double> v) {
        const int nx = static_cast<int>(v.size());
        return dens::bv2_seminorm(dens::SignedCircleFunction(nx, std::move(v)));
    });
    m.def("w1_distance", &dens::w1_distance);
    m.def("w1_empirical", [](std::vector<double> samples, const dens::CircleDensity& g) {
        return dens::w1_empirical(samples, g);
    });
    m.def("hilbert_metric_positive",
          py::overload_cast<const dens::CircleDensity&, const dens::CircleDensity&>(
              &dens::hilbert_metric_positive));
    m.def("sup_distance",
          py::overload_cast<const dens::CircleDensity&, const dens::CircleDensity&>(&dens::sup_distance));
    m.def("inverse_cdf", &dens::inverse_cdf);

    // --- fibered states --------------------------------------------------------
    py::class_<fibered::FiberedDensity>(m, "FiberedDensity")
        .def(py::init(&fibered_from_matrix), py::arg("rows"),
             "rows: (nz, nx) array of nonnegative node values; each row is normalized")
        .def_readonly("nz", &fibered::FiberedDensity::nz)
        .def_readonly("nx", &fibered::FiberedDensity::nx)
        .def_property_readonly("values", &fibered_to_matrix)
        .def("row", [](const fibered::FiberedDensity& phi, int k) { return phi.rows.at(k); })
        .def("z_mid", &fibered::FiberedDensity::z_mid);
    m.def("uniform_fibered", &fibered::uniform_fibered);
    m.def("weak_norm_distance", &fibered::weak_norm_distance);
    m.def("osc_bv1", &fibered::osc_bv1);
    m.def("var_p_bv1", [](const fibered::FiberedDensity& phi, double p_exp, std::vector<double> radii) {
        return fibered::var_p_bv1(phi, p_exp, radii);
    });
    py::class_<fibered::AdmissibleDiagnostics>(m, "AdmissibleDiagnostics")
        .def_readonly("m1", &fibered::AdmissibleDiagnostics::m1)
        .def_readonly("m2", &fibered::AdmissibleDiagnostics::m2)
        .def_readonly("var_p", &fibered::AdmissibleDiagnostics::var_p)
        .def_readonly("weak_norm", &fibered::AdmissibleDiagnostics::weak_norm)
        .def_readonly("c2_sup", &fibered::AdmissibleDiagnostics::c2_sup);
    m.def("admissible_diagnostics", &fibered::admissible_diagnostics);
    m.def("write_fibered", &fibered::write_binary_file);
    m.def("read_fibered", &fibered::read_binary_file);

    // --- the operator -----------------------------------------------------------
    m.def("alpha_hat", &sto::alpha_hat);
    py::class_<sto::MeanFieldTable>(m, "MeanFieldTable")
        .def_readonly("m", &sto::MeanFieldTable::m)
        .def_readonly("mx", &sto::MeanFieldTable::mx)
        .def_readonly("mxx", &sto::MeanFieldTable::mxx);
    m.def("mean_field", &sto::mean_field);
    py::class_<sto::FiberMapRealization>(m, "FiberMapRealization")
        .def("__call__", &sto::FiberMapRealization::value)
        .def("lift", &sto::FiberMapRealization::lift)
        .def("deriv", &sto::FiberMapRealization::deriv)
        .def_property_readonly("xi", &sto::FiberMapRealization::xi)
        .def_property_readonly("expanding", &sto::FiberMapRealization::expanding)
        .def_property_readonly("max_distortion", &sto::FiberMapRealization::max_distortion)
        .def_property_readonly("degree", &sto::FiberMapRealization::degree);
    m.def("realize_fiber_map", &sto::realize_fiber_map);
    m.def("inverse_branches", &sto::inverse_branches);
    m.def("fiber_pushforward", [](const sto::FiberMapRealization& f, const dens::CircleDensity& phi) {
        double mass_err = 0.0;
        auto out = sto::fiber_pushforward(f, phi, &mass_err);
        return py::make_tuple(out, mass_err);
    });
    m.def("sto_step", [](const fibered::FiberedDensity& phi, const graphon::Graphon& w,
                         const maps::CouplingFunction& h, const maps::ExpandingMap& f, double alpha) {
        return sto::sto_step(phi, w, h, f, alpha);
    });
    py::class_<sto::SolveReport>(m, "SolveReport")
        .def_readonly("iterations", &sto::SolveReport::iterations)
        .def_readonly("converged", &sto::SolveReport::converged)
        .def_readonly("final_residual", &sto::SolveReport::final_residual)
        .def_readonly("residual_weak", &sto::SolveReport::residual_weak)
        .def_readonly("residual_sup", &sto::SolveReport::residual_sup)
        .def_readonly("mass_error", &sto::SolveReport::mass_error)
        .def_readonly("min_xi", &sto::SolveReport::min_xi)
        .def_readonly("max_distortion", &sto::SolveReport::max_distortion)
        .def_readonly("rate", &sto::SolveReport::rate)
        .def_readonly("rate_r_squared", &sto::SolveReport::rate_r_squared)
        .def_readonly("expansion_certified", &sto::SolveReport::expansion_certified)
        .def_readonly("all_steps_expanding", &sto::SolveReport::all_steps_expanding)
        .def_readonly("alpha", &sto::SolveReport::alpha)
        .def_readonly("alpha_hat", &sto::SolveReport::alpha_hat)
        .def_readonly("final_diagnostics", &sto::SolveReport::final_diagnostics);
    m.def(
        "fixed_point",
        [](const fibered::FiberedDensity& phi0, const graphon::Graphon& w, const maps::CouplingFunction& h,
           const maps::ExpandingMap& f, double alpha, double tol, int max_iter) {
            auto [sol, rep] = sto::fixed_point(phi0, w, h, f, alpha, tol, max_iter);
            return py::make_tuple(sol, rep);
        },
        py::arg("phi0"), py::arg("w"), py::arg("h"), py::arg("f"), py::arg("alpha"), py::arg("tol") = 1e-10,
        py::arg("max_iter") = 500);
    m.def("lipschitz_probe", &sto::lipschitz_probe);
    py::class_<sto::LasotaYorkeRecord>(m, "LasotaYorkeRecord")
        .def_readonly("lhs", &sto::LasotaYorkeRecord::lhs)
        .def_readonly("lambda1", &sto::LasotaYorkeRecord::lambda1)
        .def_readonly("d_coeff", &sto::LasotaYorkeRecord::d_coeff)
        .def_readonly("rhs", &sto::LasotaYorkeRecord::rhs)
        .def_readonly("slack", &sto::LasotaYorkeRecord::slack);
    m.def("lasota_yorke_probe", [](const sto::FiberMapRealization& f, std::vector<double> psi) {
        const int nx = static_cast<int>(psi.size());
        return sto::lasota_yorke_probe(f, dens::SignedCircleFunction(nx, std::move(psi)));
    });
    py::class_<sto::HilbertContractionRecord>(m, "HilbertContractionRecord")
        .def_readonly("gamma", &sto::HilbertContractionRecord::gamma)
        .def_readonly("skipped", &sto::HilbertContractionRecord::skipped)
        .def_readonly("max_gamma", &sto::HilbertContractionRecord::max_gamma);
    m.def("hilbert_contraction_probe", &sto::hilbert_contraction_probe);
    m.def("fiber_map_ck_distance", &sto::fiber_map_ck_distance);
    m.def("ulam_matrix", &sto::ulam_matrix);

    // --- finite simulation --------------------------------------------------------
    py::class_<sim::EnsembleState>(m, "EnsembleState")
        .def_readonly("r", &sim::EnsembleState::r)
        .def_readonly("n", &sim::EnsembleState::n)
        .def_readonly("t", &sim::EnsembleState::t)
        .def_readonly("coords", &sim::EnsembleState::coords);
    m.def("sample_initial", &sim::sample_initial);
    m.def(
        "simulate_steps",
        [](const Eigen::MatrixXd& adjacency, const maps::ExpandingMap& f, const maps::CouplingFunction& h,
           double alpha, sim::EnsembleState state, int steps, int threads) {
            sim::NetworkSystem system{static_cast<int>(adjacency.rows()), adjacency, f, h, alpha};
            for (int s = 0; s < steps; ++s) sim::step_inplace(system, state, threads);
            return state;
        },
        py::arg("adjacency"), py::arg("f"), py::arg("h"), py::arg("alpha"), py::arg("state"),
        py::arg("steps") = 1, py::arg("threads") = 1);
    m.def("node_marginal", &sim::node_marginal);
    m.def("marginal_error", &sim::marginal_error);

    // --- experiment presets ----------------------------------------------------
    m.def("preset_names", &config::preset_names);
    m.def("make_named_profile", &config::make_named_profile);
    m.def(
        "run_preset",
        [](const std::string& name, const std::string& out_dir, std::int64_t seed) {
            auto cfg = config::preset(name);
            if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
            cfg.out_dir = out_dir;
            runner::RunOptions opts;
            opts.threads = 1;
            const auto outcome = runner::run_scenario(cfg, opts);
            return py::make_tuple(outcome.all_pass, outcome.report.dump());
        },
        py::arg("name"), py::arg("out_dir"), py::arg("seed") = -1,
        "Run a preset end to end; returns (all_pass, report_json_text)");
}
