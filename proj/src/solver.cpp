#include "hslab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "hslab/detail/q1.hpp"

namespace hslab {

using detail::Cell;
using detail::RefQ1;

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::NonConvergence: return "non_convergence";
        case SolveStatus::SingularJacobian: return "singular_jacobian";
    }
    return "unknown";
}

void for_each_quadrature_point(const Field& u, const std::function<void(const QuadPoint&)>& fn) {
    const auto& g = u.grid();
    const RefQ1& ref = detail::reference_q1(g.dims());
    const int d = g.dims();
    QuadPoint qp;
    detail::for_each_cell(g, [&](const Cell& c) {
        std::array<double, 8> uloc{};
        for (int k = 0; k < ref.nloc; ++k) uloc[k] = u[c.node[k]];
        const double hx = c.h[d - 1];
        for (int q = 0; q < ref.nq; ++q) {
            qp.weight = c.lat_area * c.moment / ref.nq;
            qp.volume = c.lat_area * hx / ref.nq;
            qp.x = c.x0 + hx * ref.gauss[q][d - 1];
            qp.grad = {0.0, 0.0, 0.0};
            for (int a = 0; a < d; ++a) {
                double s = 0.0;
                for (int k = 0; k < ref.nloc; ++k) s += uloc[k] * ref.dref[q][k][a];
                qp.grad[a] = s / c.h[a];
            }
            fn(qp);
        }
    });
}

std::vector<double> weak_residual(const Field& u, const Scenario& s) {
    const auto& g = u.grid();
    const RefQ1& ref = detail::reference_q1(g.dims());
    const int d = g.dims();
    std::vector<double> r(u.size(), 0.0);
    detail::for_each_cell(g, [&](const Cell& c) {
        std::array<double, 8> uloc{};
        for (int k = 0; k < ref.nloc; ++k) uloc[k] = u[c.node[k]];
        const double wq = c.lat_area * c.moment / ref.nq;
        for (int q = 0; q < ref.nq; ++q) {
            std::array<double, 3> grad{0.0, 0.0, 0.0};
            double t2 = 0.0;
            for (int a = 0; a < d; ++a) {
                double sum = 0.0;
                for (int k = 0; k < ref.nloc; ++k) sum += uloc[k] * ref.dref[q][k][a];
                grad[a] = sum / c.h[a];
                t2 += grad[a] * grad[a];
            }
            const double coef = wq * s.weight.profile(std::sqrt(t2));
            for (int k = 0; k < ref.nloc; ++k) {
                double dot = 0.0;
                for (int a = 0; a < d; ++a) dot += grad[a] * ref.dref[q][k][a] / c.h[a];
                r[c.node[k]] += coef * dot;
            }
        }
    });
    const auto& vol = g.volume_weights();
    const auto& bot = g.bottom_weights();
    const auto& xs = g.x_nodes();
    const std::size_t mx = static_cast<std::size_t>(g.nx()) + 1;
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] += vol[i] * s.g_value(xs[i % mx], u[i]);
        if (bot[i] != 0.0) r[i] -= bot[i] * s.f_value(u[i]);
    }
    return r;
}

double residual_norm(const std::vector<double>& residual, const std::vector<char>& fixed) {
    double m = 0.0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
        if (!fixed.empty() && fixed[i]) continue;
        const double v = std::abs(residual[i]);
        if (!(v <= m)) m = v;  // NaN propagates
    }
    return m;
}

SecondVariationParts second_variation_parts(const Field& u, const Scenario& s) {
    const auto& g = u.grid();
    const RefQ1& ref = detail::reference_q1(g.dims());
    const int d = g.dims();
    detail::StencilPattern pat(g);
    std::vector<double> vals(pat.nnz(), 0.0);
    detail::for_each_cell(g, [&](const Cell& c) {
        std::array<double, 8> uloc{};
        for (int k = 0; k < ref.nloc; ++k) uloc[k] = u[c.node[k]];
        const double wq = c.lat_area * c.moment / ref.nq;
        std::array<std::array<double, 3>, 8> gk{};
        std::array<double, 8> pk{};
        std::array<std::array<double, 8>, 8> local{};
        for (int q = 0; q < ref.nq; ++q) {
            std::array<double, 3> eta{0.0, 0.0, 0.0};
            double t2 = 0.0;
            for (int a = 0; a < d; ++a) {
                double sum = 0.0;
                for (int k = 0; k < ref.nloc; ++k) sum += uloc[k] * ref.dref[q][k][a];
                eta[a] = sum / c.h[a];
                t2 += eta[a] * eta[a];
            }
            const double t = s.weight.clamp(std::sqrt(t2));
            const double ca = wq * s.weight.profile(t);
            const double cb = wq * s.weight.profile_derivative(t) / t;
            for (int k = 0; k < ref.nloc; ++k) {
                double p = 0.0;
                for (int a = 0; a < d; ++a) {
                    gk[k][a] = ref.dref[q][k][a] / c.h[a];
                    p += eta[a] * gk[k][a];
                }
                pk[k] = p;
            }
            for (int k = 0; k < ref.nloc; ++k) {
                for (int l = k; l < ref.nloc; ++l) {
                    double dot = 0.0;
                    for (int a = 0; a < d; ++a) dot += gk[k][a] * gk[l][a];
                    local[k][l] += ca * dot + cb * (pk[k] * pk[l]);
                }
            }
        }
        for (int k = 0; k < ref.nloc; ++k) {
            for (int l = k; l < ref.nloc; ++l) {
                vals[pat.position(c, k, l)] += local[k][l];
                if (l != k) vals[pat.position(c, l, k)] += local[k][l];
            }
        }
    });

    SecondVariationParts out;
    out.bulk = pat.to_matrix(vals);
    out.potential.assign(u.size(), 0.0);
    out.boundary.assign(u.size(), 0.0);
    const auto& vol = g.volume_weights();
    const auto& bot = g.bottom_weights();
    const auto& xs = g.x_nodes();
    const std::size_t mx = static_cast<std::size_t>(g.nx()) + 1;
    for (std::size_t i = 0; i < u.size(); ++i) {
        out.potential[i] = vol[i] * s.g_u(xs[i % mx], u[i]);
        if (bot[i] != 0.0) out.boundary[i] = bot[i] * s.f_prime(u[i]);
    }
    return out;
}

Eigen::SparseMatrix<double> jacobian(const Field& u, const Scenario& s) {
    auto parts = second_variation_parts(u, s);
    Eigen::SparseMatrix<double> J = std::move(parts.bulk);
    for (Eigen::Index i = 0; i < J.rows(); ++i) {
        J.coeffRef(i, i) += parts.potential[i] - parts.boundary[i];
    }
    return J;
}

double energy_integral(const Field& u, const Scenario& s) {
    const int d = u.grid().dims();
    double e = 0.0;
    for_each_quadrature_point(u, [&](const QuadPoint& qp) {
        double t2 = 0.0;
        for (int a = 0; a < d; ++a) t2 += qp.grad[a] * qp.grad[a];
        e += qp.weight * s.weight.profile(std::sqrt(t2)) * t2;
    });
    return e;
}

void apply_far_field(Field& u, const Scenario& s) {
    if (s.far_field.kind != FarFieldKind::DirichletProfile) return;
    if (!s.far_field.profile) throw std::invalid_argument("Dirichlet far field without a profile");
    const auto mask = dirichlet_mask(u.grid(), s.far_field);
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (mask[i]) u[i] = s.far_field.profile(u.grid().point(i));
    }
}

namespace {

constexpr Eigen::Index kDirectLimit = 60000;

struct LinearResult {
    bool ok = false;
    bool singular = false;
    double min_pivot = 0.0;
    Eigen::VectorXd x;
    std::string method;
};

LinearResult solve_linear(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b) {
    LinearResult res;
    if (A.rows() == 0) {
        res.ok = true;
        res.x = Eigen::VectorXd();
        res.method = "none";
        return res;
    }
    if (A.rows() <= kDirectLimit) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
        if (ldlt.info() == Eigen::Success) {
            const Eigen::VectorXd D = ldlt.vectorD();
            const double dmin = D.cwiseAbs().minCoeff();
            const double dmax = D.cwiseAbs().maxCoeff();
            res.min_pivot = dmin;
            if (!(dmin > 1e-14 * dmax)) {
                res.singular = true;
                return res;
            }
            res.x = ldlt.solve(b);
            res.method = "ldlt";
            if (res.x.allFinite()) {
                res.ok = true;
                return res;
            }
        }
    }
    if (A.rows() > kDirectLimit) {
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> it;
        it.preconditioner().setDroptol(1e-6);
        it.preconditioner().setFillfactor(20);
        it.setTolerance(1e-13);
        it.setMaxIterations(4000);
        it.compute(A);
        if (it.info() == Eigen::Success) {
            res.x = it.solve(b);
            if (it.info() == Eigen::Success && res.x.allFinite()) {
                res.ok = true;
                res.method = "bicgstab_ilut";
                return res;
            }
        }
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) {
        res.singular = true;
        return res;
    }
    res.x = lu.solve(b);
    res.method = "sparse_lu";
    res.ok = res.x.allFinite();
    return res;
}

Eigen::SparseMatrix<double> restrict_free(const Eigen::SparseMatrix<double>& K,
                                          const std::vector<Eigen::Index>& map, Eigen::Index nfree) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(K.nonZeros()));
    for (Eigen::Index j = 0; j < K.outerSize(); ++j) {
        if (map[j] < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, j); it; ++it) {
            const Eigen::Index i = map[it.row()];
            if (i >= 0) trip.emplace_back(i, map[j], it.value());
        }
    }
    Eigen::SparseMatrix<double> R(nfree, nfree);
    R.setFromTriplets(trip.begin(), trip.end());
    return R;
}

std::pair<Field, SolveReport> newton_core(const Scenario& s, const Field& initial, double tol) {
    SolveReport rep;
    Field u = initial;
    apply_far_field(u, s);
    const auto fixed = dirichlet_mask(u.grid(), s.far_field);
    std::vector<Eigen::Index> map(u.size(), -1);
    Eigen::Index nfree = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!fixed[i]) map[i] = nfree++;
    }

    auto r = weak_residual(u, s);
    double norm = residual_norm(r, fixed);
    rep.residual_history.push_back(norm);
    const double min_step = std::ldexp(1.0, -10);

    while (!(norm <= tol) && rep.iterations < s.newton.max_iter && std::isfinite(norm)) {
        const auto J = restrict_free(jacobian(u, s), map, nfree);
        Eigen::VectorXd rhs(nfree);
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (map[i] >= 0) rhs[map[i]] = -r[i];
        }
        const auto lin = solve_linear(J, rhs);
        if (!rep.linear_solver.empty() && rep.linear_solver != lin.method && lin.ok) {
            rep.linear_solver += "+" + lin.method;
        } else if (rep.linear_solver.empty()) {
            rep.linear_solver = lin.method;
        }
        if (lin.singular) {
            rep.status = SolveStatus::SingularJacobian;
            rep.smallest_pivot = lin.min_pivot;
            break;
        }
        if (!lin.ok) break;

        bool accepted = false;
        for (double step = s.newton.damping; step >= min_step; step *= 0.5) {
            Field trial = u;
            for (std::size_t i = 0; i < u.size(); ++i) {
                if (map[i] >= 0) trial[i] += step * lin.x[map[i]];
            }
            auto rt = weak_residual(trial, s);
            const double nt = residual_norm(rt, fixed);
            if (nt < norm) {
                u = std::move(trial);
                r = std::move(rt);
                norm = nt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        ++rep.iterations;
        rep.residual_history.push_back(norm);
    }

    rep.final_residual_norm = norm;
    rep.converged = norm <= tol;
    if (rep.converged) {
        rep.status = SolveStatus::Converged;
    } else if (rep.status != SolveStatus::SingularJacobian) {
        rep.status = SolveStatus::NonConvergence;
    }
    rep.energy_integral = energy_integral(u, s);
    return {std::move(u), std::move(rep)};
}

bool lateral_reduction_applies(const Scenario& s, const Field& initial) {
    const auto& g = initial.grid();
    if (!s.newton.lateral_reduction || g.n() != 2) return false;
    if (y2_variation(initial) != 0.0) return false;
    if (s.far_field.kind == FarFieldKind::DirichletProfile) {
        if (s.far_field.faces.y2) return false;
        if (y2_variation(sample(initial.grid_ptr(), s.far_field.profile)) != 0.0) return false;
    }
    return true;
}

}  // namespace

std::pair<Field, SolveReport> newton_solve(const Scenario& s, const Field& initial) {
    if (!initial.all_finite()) throw std::invalid_argument("newton_solve: initial field is not finite");
    if (!(s.newton.damping > 0.0 && s.newton.damping <= 1.0)) {
        throw std::invalid_argument("newton damping must lie in (0,1]");
    }
    if (lateral_reduction_applies(s, initial)) {
        const auto& g = initial.grid();
        auto g1 = make_grid(1, g.y_extent(), g.x_extent(), g.ny(), g.nx(), g.alpha());
        // the n=2 residual of an extruded field is at most hy times the slice residual
        const double tol1 = s.newton.tol * std::min(1.0, 0.5 / g.hy());
        auto [u1, rep1] = newton_core(s, restrict_to_slice(initial, g1), tol1);
        if (rep1.converged) {
            auto [u2, rep2] = newton_core(s, extrude(u1, initial.grid_ptr()), s.newton.tol);
            rep2.iterations += rep1.iterations;
            rep2.used_lateral_reduction = true;
            if (rep2.linear_solver.empty()) rep2.linear_solver = rep1.linear_solver;
            return {std::move(u2), std::move(rep2)};
        }
    }
    return newton_core(s, initial, s.newton.tol);
}

double boundary_flux_check(const Field& u, const Scenario& s) {
    const auto& g = u.grid();
    const double x1 = g.x_nodes()[1];
    const double hy = g.hy();
    const int m = g.ny() + 1;
    auto mid = [&](std::size_t bottom) { return 0.5 * (u[bottom] + u[bottom + 1]); };
    double sup = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!g.on_bottom(i)) continue;
        const NodeIndex idx = g.unflatten(i);
        const double ux = (u[i + 1] - u[i]) / x1;
        double t2 = ux * ux;
        for (int a = 0; a < g.n(); ++a) {
            const std::size_t st = g.stride(a);
            const int c = idx.iy[a];
            double dy;
            if (c == 0) {
                dy = (-3.0 * mid(i) + 4.0 * mid(i + st) - mid(i + 2 * st)) / (2.0 * hy);
            } else if (c == m - 1) {
                dy = (3.0 * mid(i) - 4.0 * mid(i - st) + mid(i - 2 * st)) / (2.0 * hy);
            } else {
                dy = (mid(i + st) - mid(i - st)) / (2.0 * hy);
            }
            t2 += dy * dy;
        }
        const double a = eval_a(s.weight, 0.5 * x1, std::sqrt(t2));
        sup = std::max(sup, std::abs(-a * ux - s.f_value(u[i])));
    }
    return sup;
}

}  // namespace hslab
