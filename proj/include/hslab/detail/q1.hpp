#pragma once

// Internal Q1 element tables, cell iteration and the structured sparsity
// pattern shared by the solver and stability assembly.

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/SparseCore>

#include "hslab/grid.hpp"

namespace hslab::detail {

/// Reference multilinear element on [0,1]^d with tensor 2-point Gauss rule.
/// Local node k and quadrature point q use bit a for axis a.
struct RefQ1 {
    int d = 0;
    int nloc = 0;
    int nq = 0;
    std::array<std::array<double, 3>, 8> gauss{};               // [q][a] in [0,1]
    std::array<std::array<double, 8>, 8> val{};                 // [q][k]
    std::array<std::array<std::array<double, 3>, 8>, 8> dref{};  // [q][k][a]
};

const RefQ1& reference_q1(int d);

struct Cell {
    std::array<std::size_t, 8> node{};
    std::array<int, 3> lo{};          // lower node coordinate per axis
    std::array<double, 3> h{};        // cell width per axis
    double lat_area = 0.0;            // product of lateral widths
    double moment = 0.0;              // exact integral of x^alpha over the normal interval
    double x0 = 0.0;
};

template <class Fn>
void for_each_cell(const HalfSpaceGrid& g, Fn&& fn) {
    const int d = g.dims();
    const int nloc = 1 << d;
    const double hy = g.hy();
    const auto& xs = g.x_nodes();
    const auto& mom = g.cell_weight_moments();
    std::array<std::size_t, 3> st{};
    for (int a = 0; a < d; ++a) st[a] = g.stride(a);
    std::array<std::size_t, 8> off{};
    for (int k = 0; k < nloc; ++k) {
        std::size_t o = 0;
        for (int a = 0; a < d; ++a) {
            if ((k >> a) & 1) o += st[a];
        }
        off[k] = o;
    }
    Cell c;
    c.lat_area = g.n() == 1 ? hy : hy * hy;
    for (int a = 0; a + 1 < d; ++a) c.h[a] = hy;
    const int ny = g.ny();
    const int i1max = g.n() == 2 ? ny : 1;
    for (int i0 = 0; i0 < ny; ++i0) {
        for (int i1 = 0; i1 < i1max; ++i1) {
            for (int ix = 0; ix < g.nx(); ++ix) {
                NodeIndex idx;
                idx.iy = {i0, i1};
                idx.ix = ix;
                const std::size_t base = g.index(idx);
                for (int k = 0; k < nloc; ++k) c.node[k] = base + off[k];
                c.lo[0] = i0;
                if (g.n() == 2) c.lo[1] = i1;
                c.lo[d - 1] = ix;
                c.h[d - 1] = xs[ix + 1] - xs[ix];
                c.moment = mom[ix];
                c.x0 = xs[ix];
                fn(static_cast<const Cell&>(c));
            }
        }
    }
}

/// Nearest-neighbour (3^d stencil) column-major sparsity pattern.
class StencilPattern {
public:
    explicit StencilPattern(const HalfSpaceGrid& g);

    std::size_t nnz() const { return inner_.size(); }
    /// Storage slot of entry (row = node[k], col = node[l]) of a cell.
    std::size_t position(const Cell& c, int k, int l) const;
    Eigen::SparseMatrix<double> to_matrix(const std::vector<double>& values) const;

private:
    int d_;
    std::array<int, 3> size_{};
    std::vector<int> outer_;
    std::vector<int> inner_;
};

}  // namespace hslab::detail
