#include "stograph/graphon.hpp"

#include <algorithm>
#include <cmath>

#include "stograph/errors.hpp"
#include "stograph/grid.hpp"
#include "stograph/rng.hpp"

namespace stograph::graphon {

namespace {

// Block cell lookup: first cell [0, c_1] closed, then (c_i, c_{i+1}].
int block_cell(const std::vector<double>& cuts, double z) {
    return static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), z) - cuts.begin());
}

void check_coord(double z, const char* op) {
    if (!(z >= 0.0 && z <= 1.0)) throw ParameterError(std::string(op) + ": coordinate outside [0,1]");
}

}  // namespace

Graphon Graphon::constant(double p) {
    Graphon w;
    w.kind_ = Kind::Constant;
    w.label_ = "constant";
    w.p_ = p;
    w.finalize_bounds();
    return w;
}

Graphon Graphon::block(std::vector<double> cuts, std::vector<double> values_row_major) {
    const int b = static_cast<int>(cuts.size()) + 1;
    if (!std::is_sorted(cuts.begin(), cuts.end())) throw ParameterError("block graphon: cuts must be sorted");
    for (double c : cuts)
        if (!(c > 0.0 && c < 1.0)) throw ParameterError("block graphon: cuts must lie in (0,1)");
    if (static_cast<int>(values_row_major.size()) != b * b)
        throw ParameterError("block graphon: values must be BxB row-major");
    Graphon w;
    w.kind_ = Kind::Block;
    w.label_ = "block";
    w.cuts_ = std::move(cuts);
    w.block_values_ = std::move(values_row_major);
    w.finalize_bounds();
    return w;
}

Graphon Graphon::translation(const std::string& xi_name) {
    if (xi_name == "linear")
        return translation("translation:linear", [](double u) { return 1.0 - u; }, 1.0);
    if (xi_name == "exp")
        return translation("translation:exp", [](double u) { return std::exp(-2.0 * u); }, 2.0);
    throw LookupError("unknown xi profile: " + xi_name);
}

Graphon Graphon::translation(std::string label, std::function<double(double)> xi, double lip_bound) {
    Graphon w;
    w.kind_ = Kind::Translation;
    w.label_ = std::move(label);
    w.xi_ = std::move(xi);
    w.lip_bound_ = lip_bound;
    w.finalize_bounds();
    return w;
}

Graphon Graphon::step(Eigen::MatrixXd cell_values) {
    if (cell_values.rows() != cell_values.cols() || cell_values.rows() < 1)
        throw ParameterError("step graphon: matrix must be square and nonempty");
    Graphon w;
    w.kind_ = Kind::Step;
    w.label_ = "step";
    w.cells_ = std::move(cell_values);
    w.finalize_bounds();
    return w;
}

double Graphon::block_value(int i, int j) const {
    const int b = static_cast<int>(cuts_.size()) + 1;
    return block_values_[static_cast<std::size_t>(i) * b + j];
}

double Graphon::xi(double u) const { return xi_(std::fabs(u)); }

double Graphon::eval(double z, double zp) const {
    check_coord(z, "graphon_eval");
    check_coord(zp, "graphon_eval");
    switch (kind_) {
        case Kind::Constant:
            return p_;
        case Kind::Block:
            return block_value(block_cell(cuts_, z), block_cell(cuts_, zp));
        case Kind::Translation:
            return xi_(std::fabs(z - zp));
        case Kind::Step: {
            const int n = step_size();
            return cells_(paper_cell(z, n), paper_cell(zp, n));
        }
    }
    return 0.0;
}

void Graphon::finalize_bounds() {
    switch (kind_) {
        case Kind::Constant:
            linf_l1_bound_ = sup_bound_ = std::fabs(p_);
            return;
        case Kind::Block: {
            const int b = static_cast<int>(cuts_.size()) + 1;
            std::vector<double> width(b);
            double lo = 0.0;
            for (int j = 0; j < b; ++j) {
                const double hi = j < b - 1 ? cuts_[j] : 1.0;
                width[j] = hi - lo;
                lo = hi;
            }
            double max_row = 0.0, sup = 0.0;
            for (int i = 0; i < b; ++i) {
                double row = 0.0;
                for (int j = 0; j < b; ++j) {
                    row += width[j] * std::fabs(block_value(i, j));
                    sup = std::max(sup, std::fabs(block_value(i, j)));
                }
                max_row = std::max(max_row, row);
            }
            linf_l1_bound_ = max_row;
            sup_bound_ = sup;
            return;
        }
        case Kind::Step: {
            const int n = step_size();
            linf_l1_bound_ = cells_.cwiseAbs().rowwise().sum().maxCoeff() / n;
            sup_bound_ = cells_.cwiseAbs().maxCoeff();
            return;
        }
        case Kind::Translation: {
            // Fine midpoint quadrature over z with a kink-safe margin.
            const int n = 4096;
            double max_row = 0.0, sup = 0.0;
            for (int i = 0; i <= n; ++i) {
                const double z = static_cast<double>(i) / n;
                double row = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double v = xi_(std::fabs(z - cell_midpoint(j, n)));
                    row += std::fabs(v);
                }
                max_row = std::max(max_row, row / n);
                sup = std::max(sup, std::fabs(xi_(z)));
            }
            linf_l1_bound_ = max_row + (1.0 + lip_bound_) * 1e-6;
            sup_bound_ = sup;
            return;
        }
    }
}

double graphon_eval(const Graphon& w, double z, double zp) { return w.eval(z, zp); }

Graphon step_graphon_from_matrix(const AdjacencyMatrix& a) {
    if (a.n < 1 || a.entries.rows() != a.n || a.entries.cols() != a.n)
        throw ParameterError("step_graphon_from_matrix: bad matrix shape");
    return Graphon::step(a.entries);
}

AdjacencyMatrix sample_er(int n, double p, std::uint64_t seed) {
    if (n < 1) throw ParameterError("sample_er: N must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("sample_er: p must lie in [0,1]");
    AdjacencyMatrix a;
    a.n = n;
    a.seed = seed;
    a.entries.resize(n, n);
    for (int i = 0; i < n; ++i) {
        CounterRng rng = CounterRng::keyed(seed, 0x45525f524f57ULL, static_cast<std::uint64_t>(i));
        for (int j = 0; j < n; ++j) a.entries(i, j) = rng.next_double() < p ? 1.0 : 0.0;
    }
    return a;
}

AdjacencyMatrix quantize_kernel(const Graphon& w, int n) {
    if (n < 1) throw ParameterError("quantize_kernel: N must be >= 1");
    AdjacencyMatrix a;
    a.n = n;
    a.entries.resize(n, n);
    switch (w.kind()) {
        case Graphon::Kind::Translation:
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) a.entries(i, j) = w.xi(static_cast<double>(std::abs(i - j)) / n);
            break;
        case Graphon::Kind::Block:
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) a.entries(i, j) = w.eval(cell_midpoint(i, n), cell_midpoint(j, n));
            break;
        default:
            throw ParameterError("quantize_kernel: only block and translation kinds are supported");
    }
    return a;
}

double row_l1_norm(const Graphon& w, double z, int quad_points) {
    if (quad_points < 2) throw ParameterError("row_l1_norm: quad_points must be >= 2");
    check_coord(z, "row_l1_norm");
    double s = 0.0;
    for (int j = 0; j < quad_points; ++j) s += std::fabs(w.eval(z, cell_midpoint(j, quad_points)));
    return s / quad_points;
}

double graphon_l1_distance(const Graphon& w, const Graphon& wt, int grid) {
    if (grid < 2) throw ParameterError("graphon_l1_distance: grid must be >= 2");
    double s = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double z = cell_midpoint(i, grid);
        for (int j = 0; j < grid; ++j) {
            const double zp = cell_midpoint(j, grid);
            s += std::fabs(w.eval(z, zp) - wt.eval(z, zp));
        }
    }
    return s / (static_cast<double>(grid) * grid);
}

double row_l1_distance(const Graphon& w, double z, double zbar, int quad_points) {
    double s = 0.0;
    for (int j = 0; j < quad_points; ++j) {
        const double zp = cell_midpoint(j, quad_points);
        s += std::fabs(w.eval(z, zp) - w.eval(zbar, zp));
    }
    return s / quad_points;
}

double var_p_l1(const Graphon& w, double p_exp, int z_grid, std::span<const double> radii) {
    if (!(p_exp > 0.0 && p_exp <= 1.0)) throw ParameterError("var_p_l1: p_exp must lie in (0,1]");
    if (radii.empty()) throw ParameterError("var_p_l1: empty radius list");
    for (double r : radii)
        if (!(r > 0.0)) throw ParameterError("var_p_l1: radii must be positive");
    if (z_grid < 2) throw ParameterError("var_p_l1: z_grid must be >= 2");

    // Pairwise row distances once; oscillations are window maxima over them.
    Eigen::MatrixXd dist(z_grid, z_grid);
    dist.setZero();
    for (int a = 0; a < z_grid; ++a)
        for (int b = a + 1; b < z_grid; ++b) {
            const double d = row_l1_distance(w, cell_midpoint(a, z_grid), cell_midpoint(b, z_grid), z_grid);
            dist(a, b) = dist(b, a) = d;
        }

    double best = 0.0;
    for (double r : radii) {
        double integral = 0.0;
        for (int k = 0; k < z_grid; ++k) {
            const double omega = cell_midpoint(k, z_grid);
            const int lo = std::max(0, static_cast<int>(std::ceil((omega - r) * z_grid - 0.5)));
            const int hi = std::min(z_grid - 1, static_cast<int>(std::floor((omega + r) * z_grid - 0.5)));
            double osc = 0.0;
            for (int a = lo; a <= hi; ++a)
                for (int b = a + 1; b <= hi; ++b) osc = std::max(osc, dist(a, b));
            integral += osc;
        }
        integral /= z_grid;
        best = std::max(best, integral / std::pow(r, p_exp));
    }
    return best;
}

std::vector<double> dyadic_radii() {
    std::vector<double> r;
    for (int k = 1; k <= 8; ++k) r.push_back(std::ldexp(1.0, -k));
    return r;
}

}  // namespace stograph::graphon
