#include "stograph/sto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "stograph/errors.hpp"
#include "stograph/grid.hpp"
#include "stograph/metrics_report.hpp"

namespace stograph::sto {

namespace {

constexpr double kBranchTol = 1e-12;

struct CouplingGrid {
    Eigen::MatrixXd g0, g1, g2;
};

// Node tables of h and its first two x-partials depend only on (h, nx);
// named catalog couplings share them across operator instances.
std::shared_ptr<const CouplingGrid> coupling_grid(const maps::CouplingFunction& h, int nx) {
    static std::map<std::pair<std::string, int>, std::shared_ptr<const CouplingGrid>> cache;
    static std::mutex cache_mutex;
    if (!h.name.empty()) {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find({h.name, nx});
        if (it != cache.end()) return it->second;
    }
    auto grid = std::make_shared<CouplingGrid>();
    grid->g0.resize(nx, nx);
    grid->g1.resize(nx, nx);
    grid->g2.resize(nx, nx);
    for (int j = 0; j < nx; ++j) {
        const double x = static_cast<double>(j) / nx;
        for (int i = 0; i < nx; ++i) {
            const double y = static_cast<double>(i) / nx;
            grid->g0(j, i) = h.partial(x, y, 0, 0);
            grid->g1(j, i) = h.partial(x, y, 1, 0);
            grid->g2(j, i) = h.partial(x, y, 2, 0);
        }
    }
    if (!h.name.empty()) {
        std::lock_guard<std::mutex> lock(cache_mutex);
        cache[{h.name, nx}] = grid;
    }
    return grid;
}

}  // namespace

double alpha_hat(const maps::ExpandingMap& f, const maps::CouplingFunction& h) {
    const double c1 = maps::ck_norm(h, 1);
    if (c1 == 0.0) return std::numeric_limits<double>::infinity();
    return (f.min_slope - 1.0) / c1;
}

FiberMapRealization::FiberMapRealization(const maps::ExpandingMap& f, double alpha, int fiber,
                                         std::vector<double> m_row, std::vector<double> mx_row,
                                         std::vector<double> mxx_row)
    : f_(f), alpha_(alpha), fiber_(fiber), nx_(static_cast<int>(m_row.size())), m_(std::move(m_row)),
      mx_(std::move(mx_row)), mxx_(std::move(mxx_row)) {
    if (nx_ < 2 || static_cast<int>(mx_.size()) != nx_ || static_cast<int>(mxx_.size()) != nx_)
        throw ParameterError("FiberMapRealization: inconsistent mean-field rows");

    // Certified grid bounds: 8 probe points per cell plus the nodes.
    double min_deriv = std::numeric_limits<double>::infinity();
    double max_dist = 0.0;
    const int per_cell = 8;
    for (int j = 0; j < nx_; ++j)
        for (int s = 0; s <= per_cell; ++s) {
            const double x = (j + static_cast<double>(s) / per_cell) / nx_;
            const double d1 = deriv(x);
            min_deriv = std::min(min_deriv, d1);
            max_dist = std::max(max_dist, std::fabs(second(x)) / (d1 * d1));
        }
    xi_ = min_deriv;
    max_distortion_ = max_dist;
}

double FiberMapRealization::mean_field_value(double x) const {
    const double t = wrap_unit(x) * nx_;
    int j = static_cast<int>(t);
    if (j >= nx_) j = nx_ - 1;
    const double u = t - j;
    const int jn = (j + 1) % nx_;
    const double dx = 1.0 / nx_;
    const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    const double h10 = u * (1.0 - u) * (1.0 - u);
    const double h01 = u * u * (3.0 - 2.0 * u);
    const double h11 = u * u * (u - 1.0);
    return h00 * m_[j] + h10 * dx * mx_[j] + h01 * m_[jn] + h11 * dx * mx_[jn];
}

double FiberMapRealization::mean_field_deriv(double x) const {
    const double t = wrap_unit(x) * nx_;
    int j = static_cast<int>(t);
    if (j >= nx_) j = nx_ - 1;
    const double u = t - j;
    const int jn = (j + 1) % nx_;
    const double inv_dx = static_cast<double>(nx_);
    const double d00 = 6.0 * u * (u - 1.0);
    const double d10 = 3.0 * u * u - 4.0 * u + 1.0;
    const double d01 = -d00;
    const double d11 = 3.0 * u * u - 2.0 * u;
    return d00 * inv_dx * m_[j] + d10 * mx_[j] + d01 * inv_dx * m_[jn] + d11 * mx_[jn];
}

double FiberMapRealization::mean_field_second(double x) const {
    // Diagnostic second derivative from the mxx table (linear interpolation).
    const double t = wrap_unit(x) * nx_;
    int j = static_cast<int>(t);
    if (j >= nx_) j = nx_ - 1;
    const double u = t - j;
    return mxx_[j] * (1.0 - u) + mxx_[(j + 1) % nx_] * u;
}

double FiberMapRealization::lift(double x) const { return f_.lift(x) + alpha_ * mean_field_value(x); }

double FiberMapRealization::value(double x) const { return wrap_unit(lift(x)); }

double FiberMapRealization::deriv(double x) const {
    return f_.derivative_eval(x, 1) + alpha_ * mean_field_deriv(x);
}

double FiberMapRealization::second(double x) const {
    return f_.derivative_eval(x, 2) + alpha_ * mean_field_second(x);
}

std::vector<double> inverse_branches(const FiberMapRealization& f, double x) {
    if (!f.expanding()) throw DomainError("inverse_branches: fiber map is not expanding (xi <= 1)");
    const int d = f.degree();
    const double lift0 = f.lift(0.0);
    const double x0 = wrap_unit(x);
    const int k0 = static_cast<int>(std::ceil(lift0 - x0 - 1e-15));

    std::vector<double> out;
    out.reserve(d);
    for (int b = 0; b < d; ++b) {
        const double target = x0 + k0 + b;
        double lo = 0.0, hi = 1.0;
        double y = std::clamp((target - lift0) / d, 0.0, 1.0);
        bool done = false;
        for (int it = 0; it < 100; ++it) {
            const double fy = f.lift(y) - target;
            if (std::fabs(fy) < kBranchTol) {
                done = true;
                break;
            }
            if (fy > 0.0)
                hi = y;
            else
                lo = y;
            const double step = fy / f.deriv(y);
            double yn = y - step;
            if (!(yn > lo && yn < hi)) yn = 0.5 * (lo + hi);
            if (hi - lo < 1e-16) {
                done = true;
                y = yn;
                break;
            }
            y = yn;
        }
        if (!done) throw NumericError("inverse_branches: Newton did not converge");
        out.push_back(y >= 1.0 ? 0.0 : y);
    }
    std::sort(out.begin(), out.end());
    return out;
}

dens::CircleDensity fiber_pushforward(const FiberMapRealization& f, const dens::CircleDensity& phi,
                                      double* mass_error) {
    if (!f.expanding()) throw DomainError("fiber_pushforward: fiber map is not expanding");
    const int nx = phi.nx;
    std::vector<double> out(nx, 0.0);
    for (int j = 0; j < nx; ++j) {
        const auto ys = inverse_branches(f, static_cast<double>(j) / nx);
        double s = 0.0;
        for (double y : ys) s += phi.eval(y) / f.deriv(y);
        out[j] = s;
    }
    double mass = 0.0;
    for (double v : out) mass += v;
    mass /= nx;
    if (!(mass > 0.0)) throw NumericError("fiber_pushforward: non-positive image mass");
    if (mass_error) *mass_error = std::fabs(mass - 1.0);
    for (double& v : out) v /= mass;
    return dens::CircleDensity(nx, std::move(out));
}

dens::SignedCircleFunction push_signed(const FiberMapRealization& f, const dens::SignedCircleFunction& psi) {
    if (!f.expanding()) throw DomainError("push_signed: fiber map is not expanding");
    const int nx = psi.nx;
    std::vector<double> out(nx, 0.0);
    for (int j = 0; j < nx; ++j) {
        const auto ys = inverse_branches(f, static_cast<double>(j) / nx);
        double s = 0.0;
        for (double y : ys) s += psi.eval(y) / f.deriv(y);
        out[j] = s;
    }
    return dens::SignedCircleFunction(nx, std::move(out));
}

StoOperator::StoOperator(graphon::Graphon w, maps::CouplingFunction h, maps::ExpandingMap f, double alpha,
                         int nz, int nx)
    : w_(std::move(w)), h_(std::move(h)), f_(std::move(f)), alpha_(alpha), nz_(nz), nx_(nx) {
    if (nz_ < 2 || nx_ < 2) throw ParameterError("StoOperator: nz and nx must be >= 2");
    h_c1_ = maps::ck_norm(h_, 1);
    alpha_hat_ = h_c1_ == 0.0 ? std::numeric_limits<double>::infinity() : (f_.min_slope - 1.0) / h_c1_;

    const auto grid = coupling_grid(h_, nx_);
    g0_ = grid->g0;
    g1_ = grid->g1;
    g2_ = grid->g2;
    wmat_.resize(nz_, nz_);
    for (int k = 0; k < nz_; ++k)
        for (int kp = 0; kp < nz_; ++kp) wmat_(k, kp) = w_.eval(cell_midpoint(k, nz_), cell_midpoint(kp, nz_));
}

double StoOperator::certified_xi() const { return f_.min_slope - std::fabs(alpha_) * w_.linf_l1_bound() * h_c1_; }

bool StoOperator::within_certified_regime() const {
    return std::fabs(alpha_) * w_.linf_l1_bound() < alpha_hat_;
}

MeanFieldTable StoOperator::mean_field(const fibered::FiberedDensity& phi) const {
    if (phi.nz != nz_ || phi.nx != nx_) throw GridMismatchError("mean_field: state grids differ from operator");
    Eigen::MatrixXd rows(nz_, nx_);
    for (int k = 0; k < nz_; ++k)
        for (int i = 0; i < nx_; ++i) rows(k, i) = phi.rows[k].v[i];

    MeanFieldTable t;
    t.nz = nz_;
    t.nx = nx_;
    // Two-stage contraction: fiber integrals first, then the graphon row.
    const double inv_nx = 1.0 / nx_;
    const double inv_nz = 1.0 / nz_;
    Eigen::MatrixXd hphi = rows * g0_.transpose() * inv_nx;  // (k', j)
    t.m.noalias() = wmat_ * hphi * inv_nz;
    hphi.noalias() = rows * g1_.transpose() * inv_nx;
    t.mx.noalias() = wmat_ * hphi * inv_nz;
    hphi.noalias() = rows * g2_.transpose() * inv_nx;
    t.mxx.noalias() = wmat_ * hphi * inv_nz;
    return t;
}

FiberMapRealization StoOperator::realize(const MeanFieldTable& table, int k) const {
    if (k < 0 || k >= table.nz) throw ParameterError("realize: fiber index out of range");
    std::vector<double> m(nx_), mx(nx_), mxx(nx_);
    for (int j = 0; j < nx_; ++j) {
        m[j] = table.m(k, j);
        mx[j] = table.mx(k, j);
        mxx[j] = table.mxx(k, j);
    }
    return FiberMapRealization(f_, alpha_, k, std::move(m), std::move(mx), std::move(mxx));
}

fibered::FiberedDensity StoOperator::step(const fibered::FiberedDensity& phi, StepCertificates* certs) const {
    const MeanFieldTable table = mean_field(phi);
    StepCertificates c;
    c.min_xi = std::numeric_limits<double>::infinity();
    c.certified_alpha = within_certified_regime();
    c.all_expanding = true;

    std::vector<dens::CircleDensity> rows;
    rows.reserve(nz_);
    for (int k = 0; k < nz_; ++k) {
        const FiberMapRealization fm = realize(table, k);
        c.min_xi = std::min(c.min_xi, fm.xi());
        c.max_distortion = std::max(c.max_distortion, fm.max_distortion());
        if (!fm.expanding()) {
            c.all_expanding = false;
            throw StepError(k, "realized fiber map is not expanding (xi = " + std::to_string(fm.xi()) + ")");
        }
        double mass_err = 0.0;
        rows.push_back(fiber_pushforward(fm, phi.rows[k], &mass_err));
        c.max_mass_error = std::max(c.max_mass_error, mass_err);
    }
    if (certs) *certs = c;
    return fibered::FiberedDensity(nz_, nx_, std::move(rows));
}

MeanFieldTable mean_field(const graphon::Graphon& w, const maps::CouplingFunction& h,
                          const fibered::FiberedDensity& phi) {
    return StoOperator(w, h, maps::make_map("doubling"), 0.0, phi.nz, phi.nx).mean_field(phi);
}

FiberMapRealization realize_fiber_map(const maps::ExpandingMap& f, double alpha, const MeanFieldTable& table,
                                      int k) {
    if (k < 0 || k >= table.nz) throw ParameterError("realize_fiber_map: fiber index out of range");
    std::vector<double> m(table.nx), mx(table.nx), mxx(table.nx);
    for (int j = 0; j < table.nx; ++j) {
        m[j] = table.m(k, j);
        mx[j] = table.mx(k, j);
        mxx[j] = table.mxx(k, j);
    }
    return FiberMapRealization(f, alpha, k, std::move(m), std::move(mx), std::move(mxx));
}

fibered::FiberedDensity sto_step(const fibered::FiberedDensity& phi, const graphon::Graphon& w,
                                 const maps::CouplingFunction& h, const maps::ExpandingMap& f, double alpha,
                                 StepCertificates* certs) {
    return StoOperator(w, h, f, alpha, phi.nz, phi.nx).step(phi, certs);
}

std::pair<fibered::FiberedDensity, SolveReport> fixed_point(const fibered::FiberedDensity& phi0,
                                                            const graphon::Graphon& w,
                                                            const maps::CouplingFunction& h,
                                                            const maps::ExpandingMap& f, double alpha,
                                                            double tol, int max_iter,
                                                            const SolveOptions& options) {
    if (!(tol > 0.0)) throw ParameterError("fixed_point: tol must be positive");
    const StoOperator op(w, h, f, alpha, phi0.nz, phi0.nx);

    SolveReport rep;
    rep.tol = tol;
    rep.alpha = alpha;
    rep.alpha_hat = op.alpha_hat();
    rep.w_linf_l1 = w.linf_l1_bound();
    rep.expansion_certified = op.within_certified_regime();
    rep.all_steps_expanding = true;

    fibered::FiberedDensity cur = phi0;
    for (int t = 1; t <= max_iter; ++t) {
        StepCertificates certs;
        fibered::FiberedDensity next = op.step(cur, &certs);
        const double res_w = fibered::weak_norm_distance(next, cur);
        const double res_s = fibered::sup_distance(next, cur);
        rep.residual_weak.push_back(res_w);
        rep.residual_sup.push_back(res_s);
        rep.mass_error.push_back(certs.max_mass_error);
        rep.min_xi.push_back(certs.min_xi);
        rep.max_distortion.push_back(certs.max_distortion);
        rep.all_steps_expanding = rep.all_steps_expanding && certs.all_expanding;
        if (options.track_diagnostics) {
            const auto d = fibered::admissible_diagnostics(next, options.p_exp);
            rep.m1_history.push_back(d.m1);
            rep.m2_history.push_back(d.m2);
            rep.var_p_history.push_back(d.var_p);
        }
        cur = std::move(next);
        rep.iterations = t;
        if (res_w < tol) {
            rep.converged = true;
            break;
        }
    }
    rep.final_residual = rep.residual_weak.empty() ? 0.0 : rep.residual_weak.back();
    rep.final_diagnostics = fibered::admissible_diagnostics(cur, options.p_exp);

    // Rate over the positive tail of the weak residuals (last half).
    std::vector<double> positive;
    for (double r : rep.residual_weak) {
        if (!(r > 0.0)) break;
        positive.push_back(r);
    }
    if (positive.size() >= 8) {
        try {
            const auto fit = report::fit_exponential_rate(positive, 0.5);
            rep.rate = fit.rate;
            rep.rate_r_squared = fit.r_squared;
        } catch (const FitError&) {
            rep.rate = 0.0;
            rep.rate_r_squared = 0.0;
        }
    }
    return {std::move(cur), std::move(rep)};
}

double lipschitz_probe(const graphon::Graphon& w, const graphon::Graphon& wt,
                       const fibered::FiberedDensity& phi, const fibered::FiberedDensity& phit,
                       const maps::CouplingFunction& h, const maps::ExpandingMap& f, double alpha) {
    const double dw = graphon::graphon_l1_distance(w, wt, 256);
    const double dphi = fibered::weak_norm_distance(phi, phit);
    const double den = dw + dphi;
    if (!(den > 0.0)) throw NumericError("lipschitz_probe: identical inputs give an undefined ratio");
    const fibered::FiberedDensity a = sto_step(phi, w, h, f, alpha);
    const fibered::FiberedDensity b = sto_step(phit, wt, h, f, alpha);
    return fibered::weak_norm_distance(a, b) / den;
}

LasotaYorkeRecord lasota_yorke_probe(const FiberMapRealization& f, const dens::SignedCircleFunction& psi) {
    if (!f.expanding()) throw DomainError("lasota_yorke_probe: fiber map is not expanding");
    LasotaYorkeRecord rec;
    rec.lhs = dens::bv1_seminorm(push_signed(f, psi));
    rec.lambda1 = 1.0 / f.xi();
    rec.d_coeff = f.max_distortion();
    rec.rhs = rec.lambda1 * dens::bv1_seminorm(psi) + rec.d_coeff * dens::l1_norm(psi);
    rec.slack = rec.rhs - rec.lhs;
    return rec;
}

std::vector<double> memory_loss_probe(std::span<const fibered::FiberedDensity> nu_sequence, int fiber,
                                      const dens::SignedCircleFunction& psi0, int n,
                                      const graphon::Graphon& w, const maps::CouplingFunction& h,
                                      const maps::ExpandingMap& f, double alpha) {
    if (std::fabs(psi0.mass()) > 1e-10)
        throw ParameterError("memory_loss_probe: test function must have zero mean");
    if (n < 0 || n > static_cast<int>(nu_sequence.size()))
        throw ParameterError("memory_loss_probe: need one state per step");

    std::vector<double> norms;
    norms.reserve(n + 1);
    auto bv1_norm = [](const dens::SignedCircleFunction& g) {
        return dens::bv1_seminorm(g) + dens::l1_norm(g);
    };
    norms.push_back(bv1_norm(psi0));
    if (n == 0) return norms;

    const StoOperator op(w, h, f, alpha, nu_sequence[0].nz, nu_sequence[0].nx);
    dens::SignedCircleFunction cur = psi0;
    for (int t = 0; t < n; ++t) {
        const MeanFieldTable table = op.mean_field(nu_sequence[t]);
        const FiberMapRealization fm = op.realize(table, fiber);
        cur = push_signed(fm, cur);
        norms.push_back(bv1_norm(cur));
    }
    return norms;
}

HilbertContractionRecord hilbert_contraction_probe(const fibered::FiberedDensity& phi,
                                                   const fibered::FiberedDensity& psi,
                                                   const graphon::Graphon& w,
                                                   const maps::CouplingFunction& h,
                                                   const maps::ExpandingMap& f, double alpha) {
    const fibered::FiberedDensity fphi = sto_step(phi, w, h, f, alpha);
    const fibered::FiberedDensity fpsi = sto_step(psi, w, h, f, alpha);
    HilbertContractionRecord rec;
    rec.gamma.assign(phi.nz, std::numeric_limits<double>::quiet_NaN());
    for (int k = 0; k < phi.nz; ++k) {
        const double before = dens::hilbert_metric_positive(phi.rows[k], psi.rows[k]);
        if (!(before > 1e-14)) {
            rec.skipped.push_back(k);
            continue;
        }
        const double after = dens::hilbert_metric_positive(fphi.rows[k], fpsi.rows[k]);
        rec.gamma[k] = after / before;
        rec.max_gamma = std::max(rec.max_gamma, rec.gamma[k]);
    }
    return rec;
}

double fiber_map_ck_distance(const FiberMapRealization& f1, const FiberMapRealization& f2, int k_order) {
    if (k_order < 0 || k_order > 2) throw ParameterError("fiber_map_ck_distance: k_order must be in {0,1,2}");
    if (f1.nx() != f2.nx() || f1.degree() != f2.degree())
        throw GridMismatchError("fiber_map_ck_distance: incompatible realizations");
    const int m = 4 * f1.nx();
    double total = 0.0;
    for (int order = 0; order <= k_order; ++order) {
        double sup = 0.0;
        for (int q = 0; q < m; ++q) {
            const double x = static_cast<double>(q) / m;
            double d;
            if (order == 0)
                d = f1.lift(x) - f2.lift(x);
            else if (order == 1)
                d = f1.deriv(x) - f2.deriv(x);
            else
                d = f1.second(x) - f2.second(x);
            sup = std::max(sup, std::fabs(d));
        }
        total += sup;
    }
    return total;
}

Eigen::MatrixXd ulam_matrix(const FiberMapRealization& f, int subdivisions) {
    if (subdivisions < 1) throw ParameterError("ulam_matrix: subdivisions must be >= 1");
    if (!f.expanding()) throw DomainError("ulam_matrix: fiber map is not expanding");
    const int nx = f.nx();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(nx, nx);
    const double weight = 1.0 / subdivisions;
    for (int j = 0; j < nx; ++j)
        for (int s = 0; s < subdivisions; ++s) {
            const double y = (j + (s + 0.5) / subdivisions) / nx;
            const int dest = std::min(static_cast<int>(f.value(y) * nx), nx - 1);
            p(j, dest) += weight;
        }
    return p;
}

std::vector<double> ulam_push(const FiberMapRealization& f, const dens::CircleDensity& phi,
                              int subdivisions) {
    const int nx = phi.nx;
    if (nx != f.nx()) throw GridMismatchError("ulam_push: density grid differs from realization");
    const Eigen::MatrixXd p = ulam_matrix(f, subdivisions);
    Eigen::VectorXd mass(nx);
    for (int j = 0; j < nx; ++j) mass(j) = (phi.v[j] + phi.v[(j + 1) % nx]) / (2.0 * nx);
    Eigen::VectorXd out = p.transpose() * mass;
    std::vector<double> values(nx);
    for (int i = 0; i < nx; ++i) values[i] = out(i) * nx;
    return values;
}

}  // namespace stograph::sto
