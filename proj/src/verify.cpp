#include "hslab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fmt/format.h>

#include "hslab/detail/q1.hpp"
#include "hslab/weights.hpp"

namespace hslab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Point measure: each cell split into sub^d boxes, value from the multilinear
// interpolant at the box centre, mass = box volume (x^alpha-weighted on request).
template <class Fn>
void for_each_sample(const Field& values, int sub, bool mu_weighted, Fn&& fn) {
    if (sub < 1) throw std::invalid_argument("subsampling factor must be positive");
    const auto& g = values.grid();
    const int d = g.dims(), n = g.n();
    const double alpha = g.alpha();
    const auto& ys = g.y_nodes();
    auto moment = [&](double a, double b) {
        if (!mu_weighted) return b - a;
        return (std::pow(b, alpha + 1) - std::pow(a, alpha + 1)) / (alpha + 1);
    };
    const int nloc = 1 << d;
    int total = 1;
    for (int a = 0; a < d; ++a) total *= sub;
    detail::for_each_cell(g, [&](const detail::Cell& c) {
        std::array<double, 8> v{};
        for (int k = 0; k < nloc; ++k) v[k] = values[c.node[k]];
        for (int q = 0; q < total; ++q) {
            std::array<int, 3> s{};
            int rest = q;
            for (int a = 0; a < d; ++a) {
                s[a] = rest % sub;
                rest /= sub;
            }
            std::array<double, 3> t{};
            double r2 = 0.0, lat = 1.0;
            for (int a = 0; a < n; ++a) {
                t[a] = (s[a] + 0.5) / sub;
                const double y = ys[c.lo[a]] + t[a] * c.h[a];
                r2 += y * y;
                lat *= c.h[a] / sub;
            }
            const double xa = c.x0 + c.h[d - 1] * s[d - 1] / sub;
            const double xb = c.x0 + c.h[d - 1] * (s[d - 1] + 1) / sub;
            t[d - 1] = (s[d - 1] + 0.5) / sub;
            const double xm = 0.5 * (xa + xb);
            r2 += xm * xm;
            double val = 0.0;
            for (int k = 0; k < nloc; ++k) {
                double w = 1.0;
                for (int a = 0; a < d; ++a) w *= ((k >> a) & 1) ? t[a] : 1.0 - t[a];
                val += w * v[k];
            }
            fn(std::sqrt(r2), lat * moment(xa, xb), val);
        }
    });
}

double max_radius_inside(const HalfSpaceGrid& g) { return std::min(g.y_extent(), g.x_extent()); }

}  // namespace

PoincareReport poincare_sides(const Field& u, const Field& phi, const Scenario& s, const GeometryOptions& opt) {
    if (phi.size() != u.size()) throw std::invalid_argument("poincare_sides: phi does not match the grid");
    const auto& g = u.grid();
    const int n = g.n(), d = g.dims();
    const auto gf = compute_geometry(u, opt);
    NodalDifferences D(g);
    const auto& W = g.weighted_volume_weights();
    const auto& w = s.weight;
    auto pv = phi.values();

    std::array<std::vector<double>, 3> comp;
    for (int a = 0; a < d; ++a) {
        comp[a].resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) comp[a][i] = gf.grad[i][a];
    }

    PoincareReport r;
    r.min_lambda = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto& G = gf.grad[i];
        double t2 = 0.0;
        for (int a = 0; a < d; ++a) t2 += G[a] * G[a];
        const double A = w.profile(std::sqrt(t2));
        const double sy = gf.grad_y_norm[i];

        // regularity integrals use every node
        double second = 0.0;
        for (int j = 0; j < n; ++j) {
            for (int a = 0; a < d; ++a) second += std::pow(D.at(std::span<const double>(comp[j]), i, a), 2);
            second += comp[j][i] * comp[j][i];
        }
        double ds2 = 0.0;
        for (int a = 0; a < d; ++a) ds2 += std::pow(D.at(std::span<const double>(gf.grad_y_norm), i, a), 2);
        r.sa3_provv += W[i] * A * second;
        r.sa3 += W[i] * A * (ds2 + sy * sy);

        if (!gf.regular_mask[i]) continue;
        ++r.regular_nodes;
        const std::span<const double> eta(G.data(), d);
        const double lam = profile_ellipticity(w, eta).h2_lambda;
        r.min_lambda = std::min(r.min_lambda, lam);

        std::array<double, 3> dphi{};
        for (int a = 0; a < d; ++a) dphi[a] = D.at(pv, i, a);
        const std::span<const double> sp(dphi.data(), d);
        r.rhs += W[i] * sy * sy * profile_B_form(w, eta, sp, sp);

        if (!gf.trusted[i]) continue;
        ++r.evaluated_nodes;
        const double K = gf.total_curvature[i];
        const double lt = gf.tangential_grad_norm[i];
        r.lhs += W[i] * pv[i] * pv[i] * (A * K * K * sy * sy + std::max(lam, 0.0) * lt * lt);
    }
    r.skipped_nodes = r.regular_nodes - r.evaluated_nodes;
    if (r.regular_nodes == 0) {
        r.min_lambda = kNaN;
        r.flags.push_back("empty regular set");
    } else if (r.min_lambda < 0.0) {
        r.flags.push_back("lambda is negative somewhere on the regular set");
    }
    if (r.skipped_nodes > 0) r.flags.push_back(fmt::format("{} regular nodes skipped near the singular set", r.skipped_nodes));
    r.margin = r.rhs - r.lhs;
    r.tol_poin = 1e-6 * std::abs(r.rhs);
    r.holds = r.margin >= -r.tol_poin;
    return r;
}

double capacity_phi_value(double R, double r) {
    const double lr = std::log(R);
    if (r <= std::sqrt(R)) return lr;
    if (r < R) return 2.0 * std::log(R / r);
    return 0.0;
}

CapacityCutoff capacity_phi(double R, const GridPtr& grid) {
    if (!(R >= std::numbers::e)) throw std::invalid_argument("capacity cutoff needs R >= e");
    CapacityCutoff c{sample(grid, [R](const Point& p) { return capacity_phi_value(R, p.norm()); }), false, {}};
    if (R > max_radius_inside(*grid)) {
        c.truncated = true;
        c.warnings.push_back(fmt::format("R = {:.6g} exceeds the grid extent {:.6g}; cutoff truncated", R,
                                         max_radius_inside(*grid)));
    }
    return c;
}

CapacityScan capacity_scan(const Field& u, const Scenario& s, const std::vector<double>& radii,
                           const GeometryOptions& opt) {
    for (std::size_t k = 1; k < radii.size(); ++k) {
        if (!(radii[k] > radii[k - 1])) throw std::invalid_argument("radii must increase strictly");
    }
    CapacityScan c;
    c.radii = radii;
    for (double R : radii) {
        auto cut = capacity_phi(R, u.grid_ptr());
        for (auto& w : cut.warnings) c.flags.push_back(std::move(w));
        const auto p = poincare_sides(u, cut.phi, s, opt);
        const double l2 = std::pow(std::log(R), 2);
        c.lhs.push_back(p.lhs);
        c.rhs.push_back(p.rhs);
        c.ratios.push_back(p.lhs / l2);
        c.bound_ratios.push_back(p.rhs / l2);
    }
    double scale = 0.0;
    for (double b : c.bound_ratios) scale = std::max(scale, std::abs(b));
    c.tol = 1e-6 * scale;
    c.floor = c.ratios.empty() ? kNaN : *std::min_element(c.ratios.begin(), c.ratios.end());
    c.ratios_nonincreasing = true;
    c.bounds_decreasing = true;
    for (std::size_t k = 1; k < c.ratios.size(); ++k) {
        if (c.ratios[k] > c.ratios[k - 1] + c.tol) c.ratios_nonincreasing = false;
        if (!(c.bound_ratios[k] < c.bound_ratios[k - 1])) c.bounds_decreasing = false;
    }
    return c;
}

TatayResult tatay_bound_check(const Field& h, double R, int sub) {
    if (!(R > 1.0)) throw std::invalid_argument("tatay_bound_check needs R > 1");
    for (double v : h.values()) {
        if (!(v >= 0.0)) throw std::invalid_argument("h must be nonnegative");
    }
    const double r0 = std::sqrt(R);
    TatayResult t;
    // for a point measure eta is a step function and int t^-3 eta has a closed form
    for_each_sample(h, sub, false, [&](double r, double w, double v) {
        if (r >= R) return;
        const double m = w * v;
        if (r >= r0) t.lhs += m / (r * r);
        const double a = std::max(r, r0);
        t.rhs += m * (1.0 / (a * a) - 1.0 / (R * R)) + m / (R * R);
    });
    return t;
}

double weight_annulus_volume(double R, int n, double alpha) {
    if (!(R > 0.0)) throw std::invalid_argument("radius must be positive");
    if (n != 1 && n != 2) throw std::invalid_argument("n must be 1 or 2");
    // lateral measure of the slice {y : R^2 - x^2 <= |y|^2 <= 4R^2 - x^2}
    auto slice = [&](double x) {
        const double outer = std::max(4 * R * R - x * x, 0.0);
        const double inner = std::max(R * R - x * x, 0.0);
        if (n == 1) return 2.0 * (std::sqrt(outer) - std::sqrt(inner));
        return std::numbers::pi * (outer - inner);
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [&](double x) { return std::pow(x, alpha) * slice(x); };
    return ts.integrate(f, 0.0, R) + ts.integrate(f, R, 2 * R);
}

double log_log_slope(const std::vector<double>& radii, const std::vector<double>& values) {
    if (radii.size() != values.size()) throw std::invalid_argument("radii and values differ in length");
    if (radii.size() < 3) throw std::invalid_argument("a growth fit needs at least three radii");
    const double m = static_cast<double>(radii.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double x = std::log(radii[k]), y = std::log(values[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

EnergyScanReport energy_growth_scan(const Field& u, const Scenario& s, const std::vector<double>& radii, int sub) {
    if (radii.size() < 3) throw std::invalid_argument("a growth fit needs at least three radii");
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] > radii[k - 1])))
            throw std::invalid_argument("radii must be positive and increase strictly");
    }
    const auto& g = u.grid();
    const int d = g.dims();
    const auto gf = compute_gradients(u);
    Field h(u.grid_ptr());
    for (std::size_t i = 0; i < u.size(); ++i) {
        double t2 = 0.0;
        for (int a = 0; a < d; ++a) t2 += gf.grad[i][a] * gf.grad[i][a];
        const double t = std::sqrt(t2);
        h[i] = (s.weight.profile(t) + std::abs(s.weight.profile_derivative(t)) * t) * t2;
    }

    EnergyScanReport r;
    r.radii = radii;
    r.energies.assign(radii.size(), 0.0);
    for_each_sample(h, sub, true, [&](double rr, double w, double v) {
        for (std::size_t k = 0; k < radii.size(); ++k) {
            if (rr <= radii[k]) r.energies[k] += w * v;
        }
    });
    if (radii.back() > max_radius_inside(g)) {
        r.flags.push_back(fmt::format("largest radius {:.6g} exceeds the grid extent {:.6g}", radii.back(),
                                      max_radius_inside(g)));
    }
    r.energies_nondecreasing = std::is_sorted(r.energies.begin(), r.energies.end());
    r.degenerate = std::any_of(r.energies.begin(), r.energies.end(), [](double e) { return !(e > 0.0); });
    if (r.degenerate) {
        r.fitted_exponent = kNaN;
        r.flags.push_back("degenerate: zero energy on some ball");
    } else {
        r.fitted_exponent = log_log_slope(radii, r.energies);
    }
    for (double R : radii) r.weight_volumes.push_back(weight_annulus_volume(R, g.n(), g.alpha()));
    r.weight_exponent = log_log_slope(radii, r.weight_volumes);
    return r;
}

SymmetryReport symmetry_detect(const Field& u, double tol_sym) {
    const auto& g = u.grid();
    const int n = g.n();
    const auto gf = compute_gradients(u);
    SymmetryReport r;
    r.tol_sym = tol_sym;
    const int mx = g.nx() + 1;
    const std::size_t lat = g.lateral_count();
    // lateral faces carry one-sided differences; keep to centred stencils
    std::vector<char> inner(lat, 1);
    for (std::size_t l = 0; l < lat; ++l) {
        const NodeIndex idx = g.unflatten(l * static_cast<std::size_t>(mx));
        for (int a = 0; a < n; ++a) {
            if (idx.iy[a] == 0 || idx.iy[a] == g.ny()) inner[l] = 0;
        }
    }
    for (int ix = 0; ix < mx; ++ix) {
        Eigen::Matrix2d T = Eigen::Matrix2d::Zero();
        std::size_t count = 0;
        for (std::size_t l = 0; l < lat; ++l) {
            const std::size_t i = l * static_cast<std::size_t>(mx) + ix;
            if (!gf.regular_mask[i] || !inner[l]) continue;
            ++count;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) T(a, b) += gf.grad[i][a] * gf.grad[i][b];
        }
        if (count == 0) {
            ++r.empty_slices;
            continue;
        }
        std::array<double, 2> om{1.0, 0.0};
        if (n == 2) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(T);
            Eigen::Vector2d v = es.eigenvectors().col(1);
            if (v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0)) v = -v;
            v.normalize();
            om = {v[0], v[1]};
        }
        double worst = 0.0;
        for (std::size_t l = 0; l < lat && n == 2; ++l) {
            const std::size_t i = l * static_cast<std::size_t>(mx) + ix;
            if (!gf.regular_mask[i] || !inner[l]) continue;
            const double gy0 = gf.grad[i][0], gy1 = gf.grad[i][1];
            const double cross = std::abs(gy0 * om[1] - gy1 * om[0]);
            const double dot = std::abs(gy0 * om[0] + gy1 * om[1]);
            worst = std::max(worst, std::atan2(cross, dot));
        }
        r.slice_x.push_back(g.x_nodes()[ix]);
        r.omega.push_back(om);
        r.max_angular_deviation = std::max(r.max_angular_deviation, worst);
    }
    if (n == 1) r.flags.push_back("n = 1: every slice is one-dimensional");
    if (r.omega.empty()) r.flags.push_back("vacuous: no slice has a regular node");
    if (r.empty_slices > 0 && !r.omega.empty())
        r.flags.push_back(fmt::format("{} slices without regular nodes omitted", r.empty_slices));
    r.is_one_dimensional = r.max_angular_deviation <= tol_sym;
    return r;
}

}  // namespace hslab
