#include "hslab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hslab/geometry.hpp"
#include "hslab/solver.hpp"

namespace hslab {

namespace {

// fixed 31-point rule (no subdivision) keeps the primitives smooth in the upper limit
template <class F>
double primitive(F&& f, double upper) {
    if (upper == 0.0) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, upper, 0);
}

double cubic_bspline(double t) {
    if (t <= 0.0 || t >= 4.0) return 0.0;
    if (t < 1.0) return t * t * t / 6.0;
    if (t < 2.0) return (-3 * t * t * t + 12 * t * t - 12 * t + 4) / 6.0;
    if (t < 3.0) return (3 * t * t * t - 24 * t * t + 60 * t - 44) / 6.0;
    const double r = 4.0 - t;
    return r * r * r / 6.0;
}

struct FormParts {
    double bulk = 0.0, potential = 0.0, boundary = 0.0;
};

FormParts evaluate_parts(const SecondVariationParts& P, const Eigen::VectorXd& xi) {
    FormParts f;
    f.bulk = xi.dot(P.bulk * xi);
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        f.potential += P.potential[i] * xi[i] * xi[i];
        f.boundary += P.boundary[i] * xi[i] * xi[i];
    }
    return f;
}

Eigen::VectorXd as_vector(const Field& f) {
    auto v = f.values();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Field mask_far_field(const Field& xi) {
    Field out = xi;
    const auto& g = xi.grid();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (g.on_far_field(i)) out[i] = 0.0;
    }
    return out;
}

QuadraticFormReport quadratic_form(const Field& u, const Field& xi, const Scenario& s) {
    if (xi.size() != u.size()) throw std::invalid_argument("quadratic_form: xi does not match the grid");
    const auto P = second_variation_parts(u, s);
    const auto f = evaluate_parts(P, as_vector(mask_far_field(xi)));
    QuadraticFormReport r;
    r.bulk_term = f.bulk;
    r.potential_term = f.potential;
    r.boundary_term = f.boundary;
    r.q_value = f.bulk + f.potential - f.boundary;
    r.min_rayleigh = std::numeric_limits<double>::quiet_NaN();
    return r;
}

double discrete_energy(const Field& v, const Scenario& s) {
    const auto& g = v.grid();
    const int d = g.dims();
    const auto& w = s.weight;
    double bulk = 0.0;
    for_each_quadrature_point(v, [&](const QuadPoint& qp) {
        double t2 = 0.0;
        for (int a = 0; a < d; ++a) t2 += qp.grad[a] * qp.grad[a];
        const double t = std::sqrt(t2);
        bulk += qp.weight * primitive([&](double r) { return w.profile(r) * r; }, t);
    });
    double pot = 0.0, bnd = 0.0;
    const auto& vol = g.volume_weights();
    const auto& bot = g.bottom_weights();
    const auto& xs = g.x_nodes();
    const std::size_t mx = static_cast<std::size_t>(g.nx()) + 1;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = xs[i % mx];
        pot += vol[i] * primitive([&](double r) { return s.g_value(x, r); }, v[i]);
        if (bot[i] != 0.0) bnd += bot[i] * primitive([&](double r) { return s.f_value(r); }, v[i]);
    }
    return bulk + pot - bnd;
}

double second_variation_fd_check(const Field& u, const Field& xi, const Scenario& s, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("second_variation_fd_check: eps must be positive");
    const Field z = mask_far_field(xi);
    const double q = quadratic_form(u, z, s).q_value;
    Field up = u, dn = u;
    for (std::size_t i = 0; i < u.size(); ++i) {
        up[i] += eps * z[i];
        dn[i] -= eps * z[i];
    }
    const double fd = (discrete_energy(up, s) - 2.0 * discrete_energy(u, s) + discrete_energy(dn, s)) / (eps * eps);
    return std::abs(fd - q) / (1.0 + std::abs(q));
}

std::vector<Field> spline_basis(const GridPtr& grid, int m) {
    if (m < 1) throw std::invalid_argument("spline basis needs at least one function per axis");
    const auto& g = *grid;
    const double Y = g.y_extent(), X = g.x_extent();
    const double dy = 2.0 * Y / (m + 3);
    const double dx = X / m;
    // 1-D factors sampled on the axis nodes
    std::vector<std::vector<double>> fy(m), fx(m);
    for (int k = 0; k < m; ++k) {
        for (double y : g.y_nodes()) fy[k].push_back(cubic_bspline((y + Y) / dy - k));
        for (double x : g.x_nodes()) fx[k].push_back(cubic_bspline(x / dx - (k - 3)));
    }
    std::vector<Field> out;
    const int m1 = g.n() == 2 ? m : 1;
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m1; ++b) {
            for (int c = 0; c < m; ++c) {
                Field phi(grid);
                for (std::size_t i = 0; i < phi.size(); ++i) {
                    const NodeIndex idx = g.unflatten(i);
                    double v = fy[a][idx.iy[0]] * fx[c][idx.ix];
                    if (g.n() == 2) v *= fy[b][idx.iy[1]];
                    phi[i] = v;
                }
                out.push_back(std::move(phi));
            }
        }
    }
    return out;
}

QuadraticFormReport relaxed_stability_scan(const Field& u, const Scenario& s, int basis_size) {
    if (basis_size < 1) throw std::invalid_argument("basis_size must be positive");
    const auto& g = u.grid();
    const int d = g.dims();
    const int m = std::max(1, static_cast<int>(std::floor(std::pow(basis_size, 1.0 / d) + 1e-9)));
    const auto gf = compute_gradients(u);
    const auto phis = spline_basis(u.grid_ptr(), m);

    QuadraticFormReport rep;
    rep.basis_size = static_cast<int>(phis.size());
    rep.min_rayleigh = std::numeric_limits<double>::quiet_NaN();

    std::vector<Eigen::VectorXd> xis;
    for (const auto& phi : phis) {
        Field xi(u.grid_ptr());
        for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = gf.grad_y_norm[i] * phi[i];
        Eigen::VectorXd v = as_vector(mask_far_field(xi));
        if (v.lpNorm<Eigen::Infinity>() > 0.0) xis.push_back(std::move(v));
    }
    rep.basis_rank = static_cast<int>(xis.size());
    if (xis.empty()) {
        rep.degenerate = true;
        rep.stable = true;
        rep.flags.push_back("degenerate: |grad_y u| annihilates every test function");
        return rep;
    }

    const auto P = second_variation_parts(u, s);
    const int k = static_cast<int>(xis.size());
    Eigen::MatrixXd Q(k, k), M(k, k);
    std::vector<Eigen::VectorXd> Kx(k);
    for (int a = 0; a < k; ++a) {
        Eigen::VectorXd y = P.bulk * xis[a];
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += (P.potential[i] - P.boundary[i]) * xis[a][i];
        Kx[a] = std::move(y);
    }
    for (int a = 0; a < k; ++a) {
        for (int b = a; b < k; ++b) {
            Q(a, b) = Q(b, a) = xis[a].dot(Kx[b]);
            double mm = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) mm += g.bottom_weights()[i] * xis[a][i] * xis[b][i];
            M(a, b) = M(b, a) = mm;
        }
    }
    // symmetrize the numerically computed Q
    Q = 0.5 * (Q + Q.transpose()).eval();

    double scale = 0.0;
    for (int a = 0; a < k; ++a) {
        if (M(a, a) > 0.0) scale = std::max(scale, std::abs(Q(a, a)) / M(a, a));
    }
    rep.tol_stab = 1e-6 * scale;

    // split the span into the part seen on x = 0 (range of M) and its complement
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(M);
    const Eigen::VectorXd lam = em.eigenvalues();
    const double lam_max = std::max(lam.maxCoeff(), 0.0);
    std::vector<int> range, null;
    for (int a = 0; a < k; ++a) (lam[a] > 1e-12 * lam_max && lam_max > 0.0 ? range : null).push_back(a);
    const int nr = static_cast<int>(range.size()), nz = static_cast<int>(null.size());
    Eigen::MatrixXd V(k, nr), Z(k, nz);
    Eigen::VectorXd D(nr);
    for (int a = 0; a < nr; ++a) {
        V.col(a) = em.eigenvectors().col(range[a]);
        D[a] = lam[range[a]];
    }
    for (int a = 0; a < nz; ++a) Z.col(a) = em.eigenvectors().col(null[a]);

    Eigen::VectorXd best_coef;
    if (nz > 0) {
        const Eigen::MatrixXd Qzz = Z.transpose() * Q * Z;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ez(Qzz);
        if (ez.eigenvalues().minCoeff() < -rep.tol_stab * std::max(1.0, lam_max)) {
            rep.interior_unstable = true;
            rep.min_rayleigh = -std::numeric_limits<double>::infinity();
            best_coef = Z * ez.eigenvectors().col(0);
            rep.flags.push_back("Q is negative on a direction that vanishes on x = 0");
        }
    }
    if (!rep.interior_unstable) {
        if (nr == 0) {
            rep.min_rayleigh = std::numeric_limits<double>::infinity();
            rep.flags.push_back("no test function reaches x = 0");
        } else {
            Eigen::MatrixXd S = V.transpose() * Q * V;
            Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(nz, nr);
            if (nz > 0) {
                const Eigen::MatrixXd Qzz = Z.transpose() * Q * Z;
                const Eigen::MatrixXd Qzv = Z.transpose() * Q * V;
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ez(Qzz);
                const double cut = 1e-12 * std::max(1.0, ez.eigenvalues().cwiseAbs().maxCoeff());
                Eigen::VectorXd inv = ez.eigenvalues();
                for (Eigen::Index a = 0; a < inv.size(); ++a) inv[a] = inv[a] > cut ? 1.0 / inv[a] : 0.0;
                const Eigen::MatrixXd pinv = ez.eigenvectors() * inv.asDiagonal() * ez.eigenvectors().transpose();
                lift = -pinv * Qzv;
                S += Qzv.transpose() * lift;
            }
            const Eigen::VectorXd dm = D.cwiseSqrt().cwiseInverse();
            Eigen::MatrixXd T = dm.asDiagonal() * S * dm.asDiagonal();
            T = 0.5 * (T + T.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            rep.min_rayleigh = es.eigenvalues()[0];
            const Eigen::VectorXd yv = dm.asDiagonal() * es.eigenvectors().col(0);
            best_coef = V * yv + Z * (lift * yv);
        }
    }

    if (best_coef.size() == k) {
        Eigen::VectorXd xi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(u.size()));
        for (int a = 0; a < k; ++a) xi += best_coef[a] * xis[a];
        const auto f = evaluate_parts(P, xi);
        rep.bulk_term = f.bulk;
        rep.potential_term = f.potential;
        rep.boundary_term = f.boundary;
        rep.q_value = f.bulk + f.potential - f.boundary;
    }
    rep.stable = !rep.interior_unstable && rep.min_rayleigh >= -rep.tol_stab;
    return rep;
}

double linearized_residual_check(const Field& u, const Scenario& s, const Field& phi) {
    const auto& g = u.grid();
    const int n = g.n(), d = g.dims();
    NodalDifferences D(g);
    const auto gf = compute_gradients(u);
    std::array<std::vector<double>, 3> comp;
    for (int a = 0; a < d; ++a) {
        comp[a].resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) comp[a][i] = gf.grad[i][a];
    }
    std::vector<double> phi2(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) phi2[i] = phi[i] * phi[i];
    const auto& W = g.weighted_volume_weights();
    const auto& vol = g.volume_weights();
    const auto& bot = g.bottom_weights();
    const auto& xs = g.x_nodes();
    const std::size_t mx = static_cast<std::size_t>(g.nx()) + 1;
    std::vector<std::array<double, 2>> parts;  // per j: |sum|, sum of |terms|
    for (int j = 0; j < n; ++j) {
        double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (phi2[i] == 0.0 && gf.grad[i][j] == 0.0) continue;
            std::array<double, 3> dw{}, dp{};
            for (int a = 0; a < d; ++a) {
                dw[a] = D.at(std::span<const double>(comp[j]), i, a);
                dp[a] = D.at(std::span<const double>(phi2), i, a);
            }
            const std::span<const double> eta(gf.grad[i].data(), d);
            const std::span<const double> sw(dw.data(), d), sp(dp.data(), d);
            const double w = comp[j][i];
            t1 += W[i] * profile_B_form(s.weight, eta, sw, sw) * phi2[i];
            t2 += W[i] * profile_B_form(s.weight, eta, sw, sp) * w;
            t3 += vol[i] * s.g_u(xs[i % mx], u[i]) * w * w * phi2[i];
            t4 += bot[i] * s.f_prime(u[i]) * w * w * phi2[i];
        }
        parts.push_back({std::abs(t1 + t2 + t3 - t4), std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4)});
    }
    // directions along which u does not vary only carry roundoff
    double ref = 0.0;
    for (const auto& p : parts) ref = std::max(ref, p[1]);
    double worst = 0.0;
    for (const auto& p : parts) {
        if (p[1] > 1e-12 * ref) worst = std::max(worst, p[0] / p[1]);
    }
    return worst;
}

}  // namespace hslab
