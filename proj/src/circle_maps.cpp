#include "stograph/circle_maps.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "stograph/errors.hpp"
#include "stograph/grid.hpp"

namespace stograph::maps {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double grid_sup_partial(const CouplingFunction& h, int a, int b, int n) {
    double sup = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / n;
        for (int j = 0; j < n; ++j) {
            const double y = static_cast<double>(j) / n;
            sup = std::max(sup, std::fabs(h.partial(x, y, a, b)));
        }
    }
    return sup;
}

}  // namespace

double eval_map(const ExpandingMap& map, double x) { return wrap_unit(map.lift(x)); }

double map_derivative(const ExpandingMap& map, double x, int order) {
    if (order < 1 || order > 3) throw ParameterError("map_derivative: order must be in {1,2,3}");
    return map.derivative_eval(x, order);
}

double coupling_eval(const CouplingFunction& h, double x, double y, int d1_order) {
    if (d1_order < 0 || d1_order > 3) throw ParameterError("coupling_eval: order must be in {0,1,2,3}");
    return h.partial(x, y, d1_order, 0);
}

double ck_norm(const CouplingFunction& h, int k) {
    if (k < 0 || k > 3) throw ParameterError("ck_norm: k must be in {0,1,2,3}");

    // Named couplings are catalog entries, so the grid sup can be memoized.
    static std::map<std::pair<std::string, int>, double> cache;
    static std::mutex cache_mutex;
    if (!h.name.empty()) {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find({h.name, k});
        if (it != cache.end()) return it->second;
    }

    double prev = -1.0;
    for (int n = 512; n <= 8192; n *= 2) {
        double total = 0.0;
        for (int a = 0; a <= k; ++a)
            for (int b = 0; a + b <= k; ++b) total += grid_sup_partial(h, a, b, n);
        if (prev >= 0.0 && std::fabs(total - prev) <= 1e-6) {
            prev = total;
            break;
        }
        prev = total;
    }
    if (!h.name.empty()) {
        std::lock_guard<std::mutex> lock(cache_mutex);
        cache[{h.name, k}] = prev;
    }
    return prev;
}

ExpandingMap make_map(const std::string& name, double eps) {
    if (name == "doubling") {
        ExpandingMap m;
        m.name = "doubling";
        m.degree = 2;
        m.min_slope = 2.0;
        m.c3_bound = 1.0 + 2.0;
        m.lift = [](double x) { return 2.0 * x; };
        m.derivative_eval = [](double, int order) { return order == 1 ? 2.0 : 0.0; };
        return m;
    }
    if (name == "tripling") {
        ExpandingMap m;
        m.name = "tripling";
        m.degree = 3;
        m.min_slope = 3.0;
        m.c3_bound = 1.0 + 3.0;
        m.lift = [](double x) { return 3.0 * x; };
        m.derivative_eval = [](double, int order) { return order == 1 ? 3.0 : 0.0; };
        return m;
    }
    if (name == "perturbed_doubling") {
        if (!(eps >= 0.0 && eps < 1.0))
            throw ParameterError("perturbed_doubling: eps must lie in [0,1) to stay expanding");
        ExpandingMap m;
        m.name = "perturbed_doubling";
        m.degree = 2;
        m.min_slope = 2.0 - eps;
        m.c3_bound = 1.0 + (2.0 + eps) + kTwoPi * eps + kTwoPi * kTwoPi * eps;
        m.lift = [eps](double x) { return 2.0 * x + eps * std::sin(kTwoPi * x) / kTwoPi; };
        m.derivative_eval = [eps](double x, int order) {
            switch (order) {
                case 1: return 2.0 + eps * std::cos(kTwoPi * x);
                case 2: return -eps * kTwoPi * std::sin(kTwoPi * x);
                default: return -eps * kTwoPi * kTwoPi * std::cos(kTwoPi * x);
            }
        };
        return m;
    }
    throw LookupError("unknown map: " + name);
}

CouplingFunction make_coupling(const std::string& name) {
    if (name == "h1") {
        // h(x,y) = sin(2pi(y-x)) / 2pi
        CouplingFunction h;
        h.name = "h1";
        h.partial = [](double x, double y, int a, int b) {
            // d1^a d2^b h = (-1)^a (2pi)^(a+b-1) * {sin or cos}(2pi(y-x))
            const int order = a + b;
            const double t = kTwoPi * (y - x);
            const double scale = (a % 2 == 0 ? 1.0 : -1.0) * std::pow(kTwoPi, order - 1);
            switch (order % 4) {
                case 0: return scale * std::sin(t);
                case 1: return scale * std::cos(t);
                case 2: return -scale * std::sin(t);
                default: return -scale * std::cos(t);
            }
        };
        const double p = std::numbers::pi;
        h.ck_bounds = {1.0 / kTwoPi, 1.0 / kTwoPi + 2.0, 1.0 / kTwoPi + 2.0 + 3.0 * kTwoPi,
                       1.0 / kTwoPi + 2.0 + 3.0 * kTwoPi + 4.0 * 4.0 * p * p};
        h.separable.push_back({[](double x) { return std::cos(kTwoPi * x) / kTwoPi; },
                               [](double y) { return std::sin(kTwoPi * y); }});
        h.separable.push_back({[](double x) { return -std::sin(kTwoPi * x) / kTwoPi; },
                               [](double y) { return std::cos(kTwoPi * y); }});
        return h;
    }
    if (name == "h2") {
        // h(x,y) = sin(2pi y) cos(2pi x) / 2pi
        CouplingFunction h;
        h.name = "h2";
        h.partial = [](double x, double y, int a, int b) {
            const double cx[4] = {std::cos(kTwoPi * x), -std::sin(kTwoPi * x), -std::cos(kTwoPi * x),
                                  std::sin(kTwoPi * x)};
            const double sy[4] = {std::sin(kTwoPi * y), std::cos(kTwoPi * y), -std::sin(kTwoPi * y),
                                  -std::cos(kTwoPi * y)};
            return std::pow(kTwoPi, a + b - 1) * cx[a % 4] * sy[b % 4];
        };
        const double p = std::numbers::pi;
        h.ck_bounds = {1.0 / kTwoPi, 1.0 / kTwoPi + 2.0, 1.0 / kTwoPi + 2.0 + 3.0 * kTwoPi,
                       1.0 / kTwoPi + 2.0 + 3.0 * kTwoPi + 4.0 * 4.0 * p * p};
        h.separable.push_back({[](double x) { return std::cos(kTwoPi * x) / kTwoPi; },
                               [](double y) { return std::sin(kTwoPi * y); }});
        return h;
    }
    if (name == "zero") {
        CouplingFunction h;
        h.name = "zero";
        h.partial = [](double, double, int, int) { return 0.0; };
        h.ck_bounds = {0.0, 0.0, 0.0, 0.0};
        return h;
    }
    throw LookupError("unknown coupling: " + name);
}

std::vector<std::string> map_names() { return {"doubling", "tripling", "perturbed_doubling"}; }

std::vector<std::string> coupling_names() { return {"h1", "h2", "zero"}; }

}  // namespace stograph::maps
