#pragma once

#include <array>
#include <concepts>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "hslab/grid.hpp"

namespace hslab {

/**
 * Three-point nodal differences on the tensor grid: centered on the uniform
 * lateral axes, Lagrange weights on the graded normal axis, one-sided
 * second order at the ends of every axis.
 */
class NodalDifferences {
public:
    explicit NodalDifferences(const HalfSpaceGrid& g);

    /// Derivative along axis of a nodal quantity given by value(node); exact zero on constants.
    template <class F>
        requires std::invocable<const F&, std::size_t>
    double at(const F& value, std::size_t node, int axis) const {
        const auto& s = stencil(node, axis);
        const double c = value(node);
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) sum += s.w[k] * (value(s.node[k]) - c);
        return sum;
    }

    double at(std::span<const double> v, std::size_t node, int axis) const {
        const auto& s = stencil(node, axis);
        const double c = v[node];
        return s.w[0] * (v[s.node[0]] - c) + s.w[1] * (v[s.node[1]] - c) + s.w[2] * (v[s.node[2]] - c);
    }

    struct Stencil {
        std::array<std::size_t, 3> node{};
        std::array<double, 3> w{};
    };
    /// Nodes and weights of the difference at node along axis.
    Stencil stencil(std::size_t node, int axis) const;

private:
    const HalfSpaceGrid* grid_;
    // per axis, per coordinate: start offset (-1, 0, -2 relative) and weights
    std::array<std::vector<int>, 3> start_;
    std::array<std::vector<std::array<double, 3>>, 3> weights_;
};

struct GeometryOptions {
    double regular_rel = 1e-6;       ///< regular set: |grad_y u| > regular_rel * max |grad_y u|
    double exclusion_radius = 0.0;   ///< drop nodes closer than this to a non-regular node
};

/**
 * Nodal geometry of the slices {x = const}. Quantities past the gradient
 * block are NaN at nodes that are not trusted (a trusted node is regular
 * and so is every node of its lateral difference stencils, with a lateral
 * gradient pointing to the same side and off the lateral faces).
 */
struct GeometryFields {
    GridPtr grid;
    std::vector<std::array<double, 3>> grad;  ///< (y1, [y2,] u_x)
    std::vector<double> grad_y_norm;
    std::vector<char> regular_mask;
    double regular_threshold = 0.0;

    std::vector<char> trusted;
    std::vector<double> total_curvature;
    std::vector<double> tangential_grad_norm;  ///< |grad_L |grad_y u||
    std::vector<double> hstar;
    std::vector<double> h1;
    std::vector<double> second_sq;  ///< sum_j |grad u_{y_j}|^2
    std::size_t regular_count = 0;
    std::size_t trusted_count = 0;
    std::size_t skipped_count = 0;  ///< regular but not trusted

    /// sup of sum_j |grad u_{y_j}|^2 over trusted nodes.
    double scale = 0.0;
};

/// Gradient block and regular set only.
GeometryFields compute_gradients(const Field& u, const GeometryOptions& opt = {});

/// All fields.
GeometryFields compute_geometry(const Field& u, const GeometryOptions& opt = {});

/// grad_y G - (grad_y G . nu) nu with nu = grad_y u / |grad_y u|.
std::vector<double> project_tangential(std::span<const double> grad_y_u, std::span<const double> grad_y_G);

/// Tangential gradient of G at a node; throws std::domain_error off the regular set.
std::vector<double> tangential_gradient(const Field& u, const Field& G, std::size_t node,
                                        const GeometryOptions& opt = {});

struct CurvatureResult {
    std::vector<double> kappas;
    double total = 0.0;
};

/// Level-set curvature in the slice through node; throws std::domain_error off the regular set.
CurvatureResult level_set_curvature(const Field& u, std::size_t node, const GeometryOptions& opt = {});

struct IdentityResidual {
    double sup = 0.0;
    double scale = 0.0;            ///< sup sum_j |grad u_{y_j}|^2
    std::size_t evaluated = 0;
    std::size_t skipped = 0;       ///< regular nodes left out (stencil or exclusion)
    std::size_t nan_count = 0;
    double scaled() const { return scale > 0.0 ? sup / scale : sup; }
};

/// sup |H1 + H* + K^2 |grad_y u|^2 + |grad_L |grad_y u||^2| over trusted nodes.
IdentityResidual identity_A3_residual(const Field& u, const GeometryOptions& opt = {});

struct DecompositionResiduals {
    double res_a1 = 0.0;
    double res_a2 = 0.0;
    double scale = 0.0;
    std::size_t evaluated = 0;
    std::vector<double> a1_defect;  ///< per node, NaN where not evaluated
    std::vector<double> a2_defect;
};

/// Separation-of-variables identities for H2 and the y-only bracket.
DecompositionResiduals decomposition_residuals(const Field& u, const GeometryOptions& opt = {});

/// CSV with node coordinates, u and every geometry field.
void write_geometry_csv(std::ostream& os, const Field& u, const GeometryFields& gf);

}  // namespace hslab
