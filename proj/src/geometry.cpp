#include "hslab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace hslab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// derivative weights at X[c] from the three nodes X[s], X[s+1], X[s+2]
std::array<double, 3> lagrange_weights(const std::vector<double>& X, int s, int c) {
    const double x = X[c], a = X[s], b = X[s + 1], d = X[s + 2];
    return {(2 * x - b - d) / ((a - b) * (a - d)), (2 * x - a - d) / ((b - a) * (b - d)),
            (2 * x - a - b) / ((d - a) * (d - b))};
}

}  // namespace

NodalDifferences::NodalDifferences(const HalfSpaceGrid& g) : grid_(&g) {
    const int d = g.dims();
    for (int a = 0; a < d; ++a) {
        const int m = g.axis_size(a);
        if (m < 3) throw std::invalid_argument("differencing needs at least 3 nodes per axis");
        start_[a].resize(m);
        weights_[a].resize(m);
        const bool lateral = a < g.n();
        const auto& X = lateral ? g.y_nodes() : g.x_nodes();
        const double h = g.hy();
        for (int c = 0; c < m; ++c) {
            const int s = c == 0 ? 0 : (c == m - 1 ? m - 3 : c - 1);
            start_[a][c] = s;
            if (lateral) {
                if (c == 0) {
                    weights_[a][c] = {-3.0 / (2 * h), 4.0 / (2 * h), -1.0 / (2 * h)};
                } else if (c == m - 1) {
                    weights_[a][c] = {1.0 / (2 * h), -4.0 / (2 * h), 3.0 / (2 * h)};
                } else {
                    weights_[a][c] = {-1.0 / (2 * h), 0.0, 1.0 / (2 * h)};
                }
            } else {
                weights_[a][c] = lagrange_weights(X, s, c);
            }
        }
    }
}

NodalDifferences::Stencil NodalDifferences::stencil(std::size_t node, int axis) const {
    const NodeIndex idx = grid_->unflatten(node);
    const int c = grid_->coordinate(idx, axis);
    const int s = start_[axis][c];
    const std::size_t st = grid_->stride(axis);
    Stencil out;
    const std::size_t base = node - static_cast<std::size_t>(c - s) * st;
    for (int k = 0; k < 3; ++k) out.node[k] = base + static_cast<std::size_t>(k) * st;
    out.w = weights_[axis][c];
    return out;
}

namespace {

struct Context {
    const HalfSpaceGrid& g;
    NodalDifferences D;
    int n;
    int d;
    std::array<std::vector<double>, 3> comp;  // gradient components as separate arrays
    const std::vector<double>& s;
};

struct NodeTerms {
    std::array<double, 2> gy{};
    double ux = 0.0;
    double s = 0.0;
    std::array<double, 2> nu{};
    std::array<double, 2> dys{};                 // lateral derivatives of s (differenced)
    std::array<std::array<double, 3>, 2> du{};   // du[j][a] = d_a u_{y_j}
    double sx = 0.0;                             // chain rule nu . d_x grad_y u
    double kappa = 0.0;
    double hstar = 0.0;
    double h1 = 0.0;
    double second_sq = 0.0;
    double lt = 0.0;                             // |grad_L s|
};

NodeTerms eval_node(const Context& c, std::size_t i) {
    NodeTerms t;
    const int n = c.n, d = c.d, xa = c.n;
    t.s = c.s[i];
    t.ux = c.comp[xa][i];
    for (int j = 0; j < n; ++j) {
        t.gy[j] = c.comp[j][i];
        t.nu[j] = t.gy[j] / t.s;
    }
    for (int j = 0; j < n; ++j) {
        for (int a = 0; a < d; ++a) t.du[j][a] = c.D.at(std::span<const double>(c.comp[j]), i, a);
    }
    for (int k = 0; k < n; ++k) t.dys[k] = c.D.at(std::span<const double>(c.s), i, k);
    t.sx = 0.0;
    for (int j = 0; j < n; ++j) t.sx += t.nu[j] * t.du[j][xa];
    if (n == 2) {
        double kap = 0.0;
        for (int k = 0; k < n; ++k) {
            const auto& comp = c.comp[k];
            const auto& s = c.s;
            kap += c.D.at([&](std::size_t m) { return comp[m] / s[m]; }, i, k);
        }
        t.kappa = kap;
    }
    double wx2 = 0.0;
    for (int j = 0; j < n; ++j) wx2 += t.du[j][xa] * t.du[j][xa];
    t.hstar = wx2 - t.sx * t.sx;
    double sq = 0.0;
    for (int j = 0; j < n; ++j) {
        for (int a = 0; a < d; ++a) sq += t.du[j][a] * t.du[j][a];
    }
    t.second_sq = sq;
    double grads2 = t.sx * t.sx;
    for (int k = 0; k < n; ++k) grads2 += t.dys[k] * t.dys[k];
    t.h1 = grads2 - sq;
    auto lt = project_tangential(std::span<const double>(t.gy.data(), n),
                                 std::span<const double>(t.dys.data(), n));
    double l2 = 0.0;
    for (double v : lt) l2 += v * v;
    t.lt = std::sqrt(l2);
    return t;
}

void mark_trusted(const NodalDifferences& D, GeometryFields& gf, const GeometryOptions& opt) {
    const auto& g = *gf.grid;
    const std::size_t N = gf.regular_mask.size();
    gf.trusted.assign(N, 0);
    for (std::size_t i = 0; i < N; ++i) {
        if (!gf.regular_mask[i]) continue;
        // a stencil whose lateral gradient reverses straddles a critical point
        auto same_side = [&](std::size_t m) {
            double dot = 0.0;
            for (int b = 0; b < g.n(); ++b) dot += gf.grad[i][b] * gf.grad[m][b];
            return dot > 0.0;
        };
        // second differences stay centred only away from the lateral faces
        auto lateral_interior = [&](std::size_t m) {
            const NodeIndex q = g.unflatten(m);
            for (int b = 0; b < g.n(); ++b) {
                if (q.iy[b] == 0 || q.iy[b] == g.ny()) return false;
            }
            return true;
        };
        bool ok = true;
        for (int a = 0; a < g.n() && ok; ++a) {
            const auto st = D.stencil(i, a);
            for (auto m : st.node) ok = ok && gf.regular_mask[m] && same_side(m) && lateral_interior(m);
        }
        gf.trusted[i] = ok ? 1 : 0;
    }
    if (opt.exclusion_radius > 0.0) {
        const double r = opt.exclusion_radius;
        const double r2 = r * r;
        const auto& ys = g.y_nodes();
        const auto& xs = g.x_nodes();
        const int d = g.dims();
        for (std::size_t i = 0; i < N; ++i) {
            if (gf.regular_mask[i]) continue;
            bool edge = false;
            for (int a = 0; a < d && !edge; ++a) {
                const auto st = D.stencil(i, a);
                for (auto m : st.node) edge = edge || gf.regular_mask[m];
            }
            if (!edge) continue;
            const NodeIndex c = g.unflatten(i);
            const Point p = g.point(i);
            // lateral box, then scan x
            const int ry = static_cast<int>(std::ceil(r / g.hy()));
            int lo0 = std::max(0, c.iy[0] - ry), hi0 = std::min(g.ny(), c.iy[0] + ry);
            int lo1 = 0, hi1 = 0;
            if (g.n() == 2) {
                lo1 = std::max(0, c.iy[1] - ry);
                hi1 = std::min(g.ny(), c.iy[1] + ry);
            }
            const int xlo = static_cast<int>(std::lower_bound(xs.begin(), xs.end(), p.x - r) - xs.begin());
            for (int i0 = lo0; i0 <= hi0; ++i0) {
                for (int i1 = lo1; i1 <= hi1; ++i1) {
                    double dy2 = (ys[i0] - p.y1) * (ys[i0] - p.y1);
                    if (g.n() == 2) dy2 += (ys[i1] - p.y2) * (ys[i1] - p.y2);
                    if (dy2 >= r2) continue;
                    for (int ix = xlo; ix <= g.nx(); ++ix) {
                        const double dx = xs[ix] - p.x;
                        if (dx >= r) break;
                        if (dy2 + dx * dx < r2) {
                            NodeIndex q;
                            q.iy = {i0, i1};
                            q.ix = ix;
                            gf.trusted[g.index(q)] = 0;
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

GeometryFields compute_gradients(const Field& u, const GeometryOptions& opt) {
    const auto& g = u.grid();
    NodalDifferences D(g);
    GeometryFields gf;
    gf.grid = u.grid_ptr();
    const std::size_t N = u.size();
    const int d = g.dims(), n = g.n();
    gf.grad.assign(N, {0.0, 0.0, 0.0});
    gf.grad_y_norm.assign(N, 0.0);
    auto vals = u.values();
    double smax = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double s2 = 0.0;
        for (int a = 0; a < d; ++a) {
            gf.grad[i][a] = D.at(vals, i, a);
            if (a < n) s2 += gf.grad[i][a] * gf.grad[i][a];
        }
        gf.grad_y_norm[i] = std::sqrt(s2);
        smax = std::max(smax, gf.grad_y_norm[i]);
    }
    gf.regular_threshold = opt.regular_rel * smax;
    gf.regular_mask.assign(N, 0);
    for (std::size_t i = 0; i < N; ++i) {
        if (smax > 0.0 && gf.grad_y_norm[i] > gf.regular_threshold) {
            gf.regular_mask[i] = 1;
            ++gf.regular_count;
        }
    }
    return gf;
}

GeometryFields compute_geometry(const Field& u, const GeometryOptions& opt) {
    GeometryFields gf = compute_gradients(u, opt);
    const auto& g = u.grid();
    Context c{g, NodalDifferences(g), g.n(), g.dims(), {}, gf.grad_y_norm};
    for (int a = 0; a < c.d; ++a) {
        c.comp[a].resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) c.comp[a][i] = gf.grad[i][a];
    }
    mark_trusted(c.D, gf, opt);
    const std::size_t N = u.size();
    gf.total_curvature.assign(N, kNaN);
    gf.tangential_grad_norm.assign(N, kNaN);
    gf.hstar.assign(N, kNaN);
    gf.h1.assign(N, kNaN);
    gf.second_sq.assign(N, kNaN);
    for (std::size_t i = 0; i < N; ++i) {
        if (!gf.trusted[i]) continue;
        const NodeTerms t = eval_node(c, i);
        gf.total_curvature[i] = std::abs(t.kappa);
        gf.tangential_grad_norm[i] = t.lt;
        gf.hstar[i] = t.hstar;
        gf.h1[i] = t.h1;
        gf.second_sq[i] = t.second_sq;
        gf.scale = std::max(gf.scale, t.second_sq);
        ++gf.trusted_count;
    }
    gf.skipped_count = gf.regular_count - gf.trusted_count;
    return gf;
}

std::vector<double> project_tangential(std::span<const double> grad_y_u, std::span<const double> grad_y_G) {
    if (grad_y_u.size() != grad_y_G.size()) throw std::invalid_argument("project_tangential: size mismatch");
    double s2 = 0.0;
    for (double v : grad_y_u) s2 += v * v;
    const double s = std::sqrt(s2);
    if (!(s > 0.0)) throw std::domain_error("project_tangential: zero lateral gradient");
    double dot = 0.0;
    for (std::size_t k = 0; k < grad_y_u.size(); ++k) dot += grad_y_G[k] * (grad_y_u[k] / s);
    std::vector<double> out(grad_y_u.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = grad_y_G[k] - dot * (grad_y_u[k] / s);
    return out;
}

std::vector<double> tangential_gradient(const Field& u, const Field& G, std::size_t node,
                                        const GeometryOptions& opt) {
    if (G.size() != u.size()) {
        throw std::invalid_argument("tangential_gradient: fields live on different grids");
    }
    const auto gf = compute_gradients(u, opt);
    if (node >= u.size() || !gf.regular_mask[node]) {
        throw std::domain_error("tangential_gradient: node is not in the regular set");
    }
    NodalDifferences D(u.grid());
    const int n = u.grid().n();
    std::vector<double> gu(n), gg(n);
    for (int k = 0; k < n; ++k) {
        gu[k] = gf.grad[node][k];
        gg[k] = D.at(G.values(), node, k);
    }
    return project_tangential(gu, gg);
}

CurvatureResult level_set_curvature(const Field& u, std::size_t node, const GeometryOptions& opt) {
    auto gf = compute_gradients(u, opt);
    if (node >= u.size() || !gf.regular_mask[node]) {
        throw std::domain_error("level_set_curvature: node is not in the regular set");
    }
    CurvatureResult r;
    const auto& g = u.grid();
    if (g.n() == 1) return r;
    NodalDifferences D(g);
    for (int a = 0; a < g.n(); ++a) {
        for (auto m : D.stencil(node, a).node) {
            if (!gf.regular_mask[m]) throw std::domain_error("level_set_curvature: stencil leaves the regular set");
        }
    }
    double kap = 0.0;
    for (int k = 0; k < g.n(); ++k) {
        kap += D.at([&](std::size_t m) { return gf.grad[m][k] / gf.grad_y_norm[m]; }, node, k);
    }
    r.kappas = {kap};
    r.total = std::abs(kap);
    return r;
}

IdentityResidual identity_A3_residual(const Field& u, const GeometryOptions& opt) {
    const auto gf = compute_geometry(u, opt);
    IdentityResidual res;
    res.scale = gf.scale;
    res.skipped = gf.regular_count - gf.trusted_count;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!gf.trusted[i]) continue;
        const double s = gf.grad_y_norm[i];
        const double K = gf.total_curvature[i];
        const double lt = gf.tangential_grad_norm[i];
        const double r = gf.h1[i] + gf.hstar[i] + K * K * s * s + lt * lt;
        if (!std::isfinite(r)) {
            ++res.nan_count;
            continue;
        }
        ++res.evaluated;
        res.sup = std::max(res.sup, std::abs(r));
    }
    return res;
}

DecompositionResiduals decomposition_residuals(const Field& u, const GeometryOptions& opt) {
    GeometryFields gf = compute_gradients(u, opt);
    const auto& g = u.grid();
    Context c{g, NodalDifferences(g), g.n(), g.dims(), {}, gf.grad_y_norm};
    for (int a = 0; a < c.d; ++a) {
        c.comp[a].resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) c.comp[a][i] = gf.grad[i][a];
    }
    mark_trusted(c.D, gf, opt);
    DecompositionResiduals out;
    out.a1_defect.assign(u.size(), kNaN);
    out.a2_defect.assign(u.size(), kNaN);
    const int n = c.n, xa = c.n;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!gf.trusted[i]) continue;
        const NodeTerms t = eval_node(c, i);
        double gys = 0.0;
        for (int k = 0; k < n; ++k) gys += t.gy[k] * t.dys[k];
        double full_s = t.ux * t.sx + gys;
        double h2 = full_s * full_s;
        double bracket = gys * gys;
        for (int j = 0; j < n; ++j) {
            double gyu = 0.0;
            for (int k = 0; k < n; ++k) gyu += t.gy[k] * t.du[j][k];
            const double full = t.ux * t.du[j][xa] + gyu;
            h2 -= full * full;
            bracket -= gyu * gyu;
        }
        const double a1 = h2 + t.ux * t.ux * t.hstar - bracket;
        const double a2 = bracket + t.s * t.s * t.lt * t.lt;
        out.a1_defect[i] = a1;
        out.a2_defect[i] = a2;
        out.res_a1 = std::max(out.res_a1, std::abs(a1));
        out.res_a2 = std::max(out.res_a2, std::abs(a2));
        out.scale = std::max(out.scale, t.second_sq);
        ++out.evaluated;
    }
    return out;
}

void write_geometry_csv(std::ostream& os, const Field& u, const GeometryFields& gf) {
    const auto& g = u.grid();
    os << "y1,y2,x,u,grad_y1,grad_y2,u_x,grad_y_norm,regular,trusted,total_curvature,"
          "tangential_grad_norm,hstar,h1\n";
    const bool full = !gf.trusted.empty();
    auto num = [](double v) { return std::isfinite(v) ? fmt::format("{:.17g}", v) : std::string(); };
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Point p = g.point(i);
        const auto& gr = gf.grad[i];
        const double gy2 = g.n() == 2 ? gr[1] : 0.0;
        const double ux = gr[g.n()];
        os << num(p.y1) << ',' << num(p.y2) << ',' << num(p.x) << ',' << num(u[i]) << ',' << num(gr[0]) << ','
           << num(gy2) << ',' << num(ux) << ',' << num(gf.grad_y_norm[i]) << ',' << int(gf.regular_mask[i])
           << ',' << (full ? int(gf.trusted[i]) : 0) << ',' << (full ? num(gf.total_curvature[i]) : "") << ','
           << (full ? num(gf.tangential_grad_norm[i]) : "") << ',' << (full ? num(gf.hstar[i]) : "") << ','
           << (full ? num(gf.h1[i]) : "") << '\n';
    }
}

}  // namespace hslab
