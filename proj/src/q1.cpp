#include "hslab/detail/q1.hpp"

#include <cmath>
#include <stdexcept>

namespace hslab::detail {

namespace {

RefQ1 build_ref(int d) {
    RefQ1 r;
    r.d = d;
    r.nloc = 1 << d;
    r.nq = 1 << d;
    const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    for (int q = 0; q < r.nq; ++q) {
        for (int a = 0; a < d; ++a) r.gauss[q][a] = gp[(q >> a) & 1];
        for (int k = 0; k < r.nloc; ++k) {
            double v = 1.0;
            for (int a = 0; a < d; ++a) {
                const double xi = r.gauss[q][a];
                v *= ((k >> a) & 1) ? xi : 1.0 - xi;
            }
            r.val[q][k] = v;
            for (int a = 0; a < d; ++a) {
                double dv = ((k >> a) & 1) ? 1.0 : -1.0;
                for (int b = 0; b < d; ++b) {
                    if (b == a) continue;
                    const double xi = r.gauss[q][b];
                    dv *= ((k >> b) & 1) ? xi : 1.0 - xi;
                }
                r.dref[q][k][a] = dv;
            }
        }
    }
    return r;
}

}  // namespace

const RefQ1& reference_q1(int d) {
    static const RefQ1 r2 = build_ref(2);
    static const RefQ1 r3 = build_ref(3);
    if (d == 2) return r2;
    if (d == 3) return r3;
    throw std::invalid_argument("reference_q1: dimension must be 2 or 3");
}

StencilPattern::StencilPattern(const HalfSpaceGrid& g) : d_(g.dims()) {
    for (int a = 0; a < d_; ++a) size_[a] = g.axis_size(a);
    const std::size_t count = g.node_count();
    outer_.resize(count + 1);
    inner_.reserve(count * (d_ == 2 ? 9 : 27));
    std::array<long, 3> st{};
    for (int a = 0; a < d_; ++a) st[a] = static_cast<long>(g.stride(a));
    int ncomb = 1;
    for (int a = 0; a < d_; ++a) ncomb *= 3;
    for (std::size_t j = 0; j < count; ++j) {
        outer_[j] = static_cast<int>(inner_.size());
        const NodeIndex idx = g.unflatten(j);
        std::array<int, 3> c{};
        for (int a = 0; a < d_; ++a) c[a] = g.coordinate(idx, a);
        // lexicographic over axes (axis 0 most significant) gives ascending rows
        for (int m = 0; m < ncomb; ++m) {
            int rem = m;
            std::array<int, 3> delta{};
            for (int a = d_ - 1; a >= 0; --a) {
                delta[a] = rem % 3 - 1;
                rem /= 3;
            }
            bool ok = true;
            long row = static_cast<long>(j);
            for (int a = 0; a < d_; ++a) {
                const int cc = c[a] + delta[a];
                if (cc < 0 || cc >= size_[a]) {
                    ok = false;
                    break;
                }
                row += delta[a] * st[a];
            }
            if (ok) inner_.push_back(static_cast<int>(row));
        }
    }
    outer_[count] = static_cast<int>(inner_.size());
}

std::size_t StencilPattern::position(const Cell& cell, int k, int l) const {
    std::size_t pos = 0;
    for (int a = 0; a < d_; ++a) {
        const int bl = (l >> a) & 1;
        const int bk = (k >> a) & 1;
        const int c = cell.lo[a] + bl;
        const int lo = c > 0 ? 1 : 0;
        const int cnt = 1 + lo + (c < size_[a] - 1 ? 1 : 0);
        pos = pos * cnt + static_cast<std::size_t>(bk - bl + lo);
    }
    return static_cast<std::size_t>(outer_[cell.node[l]]) + pos;
}

Eigen::SparseMatrix<double> StencilPattern::to_matrix(const std::vector<double>& values) const {
    const auto n = static_cast<Eigen::Index>(outer_.size() - 1);
    Eigen::Map<const Eigen::SparseMatrix<double>> m(n, n, static_cast<Eigen::Index>(inner_.size()),
                                                    outer_.data(), inner_.data(), values.data());
    return Eigen::SparseMatrix<double>(m);
}

}  // namespace hslab::detail
