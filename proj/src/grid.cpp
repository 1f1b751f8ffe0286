#include "hslab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hslab/weights.hpp"

namespace hslab {

double Point::lateral_norm() const { return std::sqrt(y1 * y1 + y2 * y2); }
double Point::norm() const { return std::sqrt(y1 * y1 + y2 * y2 + x * x); }

double grading_exponent(double alpha) { return std::max(1.0, 2.0 / (1.0 + alpha)); }

HalfSpaceGrid build_grid(int n, double y_extent, double x_extent, int ny, int nx, double alpha) {
    if (n != 1 && n != 2) throw std::invalid_argument("lateral dimension n must be 1 or 2");
    if (!(y_extent > 0.0) || !(x_extent > 0.0)) {
        throw std::invalid_argument("grid extents must be positive");
    }
    if (ny < 4 || nx < 4) throw std::invalid_argument("grid needs ny, nx >= 4");
    if (!(alpha > -1.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie strictly inside (-1,1)");
    }

    HalfSpaceGrid g;
    g.n_ = n;
    g.y_extent_ = y_extent;
    g.x_extent_ = x_extent;
    g.ny_ = ny;
    g.nx_ = nx;
    g.alpha_ = alpha;
    g.grading_ = grading_exponent(alpha);

    g.y_nodes_.resize(ny + 1);
    for (int k = 0; k <= ny; ++k) g.y_nodes_[k] = -y_extent + 2.0 * y_extent * k / ny;
    g.y_nodes_.front() = -y_extent;
    g.y_nodes_.back() = y_extent;
    if (ny % 2 == 0) g.y_nodes_[ny / 2] = 0.0;

    g.x_nodes_.resize(nx + 1);
    for (int i = 0; i <= nx; ++i) {
        g.x_nodes_[i] = x_extent * std::pow(static_cast<double>(i) / nx, g.grading_);
    }
    g.x_nodes_.front() = 0.0;
    g.x_nodes_.back() = x_extent;

    const auto mu = WeightModel::p_laplacian(2.0, alpha);
    g.moments_.resize(nx);
    for (int i = 0; i < nx; ++i) g.moments_[i] = mu.mu_moment(g.x_nodes_[i], g.x_nodes_[i + 1]);

    // lumped weights
    const double hy = g.hy();
    std::vector<double> wy(ny + 1, hy);
    wy.front() = wy.back() = 0.5 * hy;
    std::vector<double> wx(nx + 1, 0.0), wmu(nx + 1, 0.0);
    for (int i = 0; i < nx; ++i) {
        const double dx = g.x_nodes_[i + 1] - g.x_nodes_[i];
        wx[i] += 0.5 * dx;
        wx[i + 1] += 0.5 * dx;
        wmu[i] += 0.5 * g.moments_[i];
        wmu[i + 1] += 0.5 * g.moments_[i];
    }
    const std::size_t count = g.node_count();
    g.vol_w_.assign(count, 0.0);
    g.mu_w_.assign(count, 0.0);
    g.bottom_w_.assign(count, 0.0);
    for (std::size_t f = 0; f < count; ++f) {
        const NodeIndex idx = g.unflatten(f);
        double lat = wy[idx.iy[0]];
        if (n == 2) lat *= wy[idx.iy[1]];
        g.vol_w_[f] = lat * wx[idx.ix];
        g.mu_w_[f] = lat * wmu[idx.ix];
        if (idx.ix == 0) g.bottom_w_[f] = lat;
    }
    return g;
}

GridPtr make_grid(int n, double y_extent, double x_extent, int ny, int nx, double alpha) {
    return std::make_shared<const HalfSpaceGrid>(build_grid(n, y_extent, x_extent, ny, nx, alpha));
}

std::size_t HalfSpaceGrid::lateral_count() const {
    const std::size_t m = static_cast<std::size_t>(ny_) + 1;
    return n_ == 1 ? m : m * m;
}

std::size_t HalfSpaceGrid::node_count() const {
    return lateral_count() * (static_cast<std::size_t>(nx_) + 1);
}

std::size_t HalfSpaceGrid::cell_count() const {
    const std::size_t m = static_cast<std::size_t>(ny_);
    return (n_ == 1 ? m : m * m) * static_cast<std::size_t>(nx_);
}

std::size_t HalfSpaceGrid::index(const NodeIndex& idx) const {
    const std::size_t my = static_cast<std::size_t>(ny_) + 1;
    const std::size_t mx = static_cast<std::size_t>(nx_) + 1;
    std::size_t lat = static_cast<std::size_t>(idx.iy[0]);
    if (n_ == 2) lat = lat * my + static_cast<std::size_t>(idx.iy[1]);
    return lat * mx + static_cast<std::size_t>(idx.ix);
}

NodeIndex HalfSpaceGrid::unflatten(std::size_t flat) const {
    const std::size_t my = static_cast<std::size_t>(ny_) + 1;
    const std::size_t mx = static_cast<std::size_t>(nx_) + 1;
    NodeIndex idx;
    idx.ix = static_cast<int>(flat % mx);
    std::size_t lat = flat / mx;
    if (n_ == 2) {
        idx.iy[1] = static_cast<int>(lat % my);
        lat /= my;
    }
    idx.iy[0] = static_cast<int>(lat);
    return idx;
}

Point HalfSpaceGrid::point(std::size_t flat) const {
    const NodeIndex idx = unflatten(flat);
    Point p;
    p.y1 = y_nodes_[idx.iy[0]];
    if (n_ == 2) p.y2 = y_nodes_[idx.iy[1]];
    p.x = x_nodes_[idx.ix];
    return p;
}

std::size_t HalfSpaceGrid::stride(int axis) const {
    const std::size_t my = static_cast<std::size_t>(ny_) + 1;
    const std::size_t mx = static_cast<std::size_t>(nx_) + 1;
    if (axis == n_) return 1;
    if (n_ == 1) return mx;
    return axis == 0 ? my * mx : mx;
}

int HalfSpaceGrid::axis_size(int axis) const { return axis == n_ ? nx_ + 1 : ny_ + 1; }

int HalfSpaceGrid::coordinate(const NodeIndex& idx, int axis) const {
    return axis == n_ ? idx.ix : idx.iy[axis];
}

bool HalfSpaceGrid::on_bottom(std::size_t flat) const {
    return flat % (static_cast<std::size_t>(nx_) + 1) == 0;
}

bool HalfSpaceGrid::on_far_field(std::size_t flat) const {
    const NodeIndex idx = unflatten(flat);
    if (idx.ix == nx_) return true;
    for (int a = 0; a < n_; ++a) {
        if (idx.iy[a] == 0 || idx.iy[a] == ny_) return true;
    }
    return false;
}

Field::Field(GridPtr grid, double fill) : grid_(std::move(grid)) {
    if (!grid_) throw std::invalid_argument("Field requires a grid");
    values_.assign(grid_->node_count(), fill);
}

Field::Field(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw std::invalid_argument("Field requires a grid");
    if (values_.size() != grid_->node_count()) {
        throw std::invalid_argument("Field values do not match the grid node count");
    }
}

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Field sample(const GridPtr& grid, const AnalyticField& f) {
    Field out(grid);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(grid->point(i));
    return out;
}

Field extrude(const Field& field, const GridPtr& grid2) {
    const auto& g1 = field.grid();
    if (g1.n() != 1 || grid2->n() != 2 || g1.ny() != grid2->ny() || g1.nx() != grid2->nx() ||
        g1.y_extent() != grid2->y_extent() || g1.x_extent() != grid2->x_extent() ||
        g1.alpha() != grid2->alpha()) {
        throw std::invalid_argument("extrude: grids are not compatible");
    }
    Field out(grid2);
    for (std::size_t f = 0; f < out.size(); ++f) {
        NodeIndex idx = grid2->unflatten(f);
        NodeIndex src;
        src.iy[0] = idx.iy[0];
        src.ix = idx.ix;
        out[f] = field[g1.index(src)];
    }
    return out;
}

Field restrict_to_slice(const Field& field, const GridPtr& grid1, int iy2) {
    const auto& g2 = field.grid();
    if (g2.n() != 2 || grid1->n() != 1 || g2.ny() != grid1->ny() || g2.nx() != grid1->nx()) {
        throw std::invalid_argument("restrict_to_slice: grids are not compatible");
    }
    Field out(grid1);
    for (std::size_t f = 0; f < out.size(); ++f) {
        NodeIndex idx = grid1->unflatten(f);
        idx.iy[1] = iy2;
        out[f] = field[g2.index(idx)];
    }
    return out;
}

double y2_variation(const Field& field) {
    const auto& g = field.grid();
    if (g.n() != 2) return 0.0;
    double v = 0.0;
    const std::size_t s = g.stride(1);
    for (std::size_t f = 0; f < field.size(); ++f) {
        const NodeIndex idx = g.unflatten(f);
        if (idx.iy[1] == 0) continue;
        v = std::max(v, std::abs(field[f] - field[f - s]));
    }
    return v;
}

}  // namespace hslab
