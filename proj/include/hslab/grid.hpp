#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace hslab {

/// A point (y, x) of the closed half-space; y2 is unused when n = 1.
struct Point {
    double y1 = 0.0;
    double y2 = 0.0;
    double x = 0.0;

    double lateral_norm() const;
    double norm() const;
};

/// Multi-index of a grid node. iy[1] is unused when n = 1.
struct NodeIndex {
    std::array<int, 2> iy{0, 0};
    int ix = 0;
};

/**
 * Tensor grid on the truncated half-space [-Y, Y]^n x [0, X].
 *
 * Lateral axes are uniform with ny intervals; the normal axis is graded
 * toward x = 0 as x_i = X (i/nx)^gamma with gamma = max(1, 2/(1+alpha)).
 * Nodes are stored row-major over (y1, [y2,] x) with x fastest.
 */
class HalfSpaceGrid {
public:
    int n() const { return n_; }
    int dims() const { return n_ + 1; }
    double y_extent() const { return y_extent_; }
    double x_extent() const { return x_extent_; }
    int ny() const { return ny_; }
    int nx() const { return nx_; }
    double alpha() const { return alpha_; }
    double grading() const { return grading_; }
    double hy() const { return 2.0 * y_extent_ / ny_; }

    const std::vector<double>& y_nodes() const { return y_nodes_; }
    const std::vector<double>& x_nodes() const { return x_nodes_; }
    /// Exact integrals of x^alpha over each normal interval [x_i, x_{i+1}].
    const std::vector<double>& cell_weight_moments() const { return moments_; }

    std::size_t lateral_count() const;
    std::size_t node_count() const;
    std::size_t cell_count() const;

    std::size_t index(const NodeIndex& idx) const;
    NodeIndex unflatten(std::size_t flat) const;
    Point point(std::size_t flat) const;

    /// Index offset of one step along an axis (0..n-1 lateral, n normal).
    std::size_t stride(int axis) const;
    int axis_size(int axis) const;          ///< node count along an axis
    int coordinate(const NodeIndex& idx, int axis) const;

    bool on_bottom(std::size_t flat) const;     ///< x = 0
    bool on_far_field(std::size_t flat) const;  ///< lateral faces or top

    /// Lumped (trapezoid) weights: integral of the nodal hat over the volume,
    /// the same with mu(x) = x^alpha folded in through cell moments, and over
    /// the bottom face (zero off the bottom).
    const std::vector<double>& volume_weights() const { return vol_w_; }
    const std::vector<double>& weighted_volume_weights() const { return mu_w_; }
    const std::vector<double>& bottom_weights() const { return bottom_w_; }

    friend HalfSpaceGrid build_grid(int n, double y_extent, double x_extent, int ny, int nx,
                                    double alpha);

private:
    HalfSpaceGrid() = default;

    int n_ = 1;
    double y_extent_ = 1.0;
    double x_extent_ = 1.0;
    int ny_ = 4;
    int nx_ = 4;
    double alpha_ = 0.0;
    double grading_ = 1.0;
    std::vector<double> y_nodes_;
    std::vector<double> x_nodes_;
    std::vector<double> moments_;
    std::vector<double> vol_w_;
    std::vector<double> mu_w_;
    std::vector<double> bottom_w_;
};

using GridPtr = std::shared_ptr<const HalfSpaceGrid>;

HalfSpaceGrid build_grid(int n, double y_extent, double x_extent, int ny, int nx, double alpha);
GridPtr make_grid(int n, double y_extent, double x_extent, int ny, int nx, double alpha);

/// Grading exponent used by build_grid.
double grading_exponent(double alpha);

/// Nodal scalar field u(y, x) on a grid.
class Field {
public:
    explicit Field(GridPtr grid, double fill = 0.0);
    Field(GridPtr grid, std::vector<double> values);

    const HalfSpaceGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }

    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    double max_abs() const;
    bool all_finite() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

using AnalyticField = std::function<double(const Point&)>;

Field sample(const GridPtr& grid, const AnalyticField& f);

/// Copy of an n=1 field onto an n=2 grid with the same (y1, x) nodes,
/// constant along y2.
Field extrude(const Field& field, const GridPtr& grid2);

/// Restriction of a y2-independent n=2 field to the n=1 grid.
Field restrict_to_slice(const Field& field, const GridPtr& grid1, int iy2 = 0);

/// Largest |u(., y2) - u(., y2')| over the field; zero iff y2-independent.
double y2_variation(const Field& field);

}  // namespace hslab
