#pragma once

#include <string>
#include <vector>

#include "hslab/grid.hpp"
#include "hslab/scenario.hpp"

namespace hslab {

struct QuadraticFormReport {
    double q_value = 0.0;
    double bulk_term = 0.0;       ///< sum over the cells of <B grad xi, grad xi>
    double potential_term = 0.0;  ///< lumped integral of g_u xi^2
    double boundary_term = 0.0;   ///< lumped integral of f' xi^2 on x = 0
    /// Minimum of Q(xi)/int_{x=0} xi^2 over the scanned span; NaN if not scanned.
    double min_rayleigh = 0.0;
    double tol_stab = 0.0;
    int basis_size = 0;           ///< number of test functions actually used
    int basis_rank = 0;           ///< of them, those not annihilated by |grad_y u|
    bool degenerate = false;      ///< every test function vanished
    bool interior_unstable = false;  ///< Q negative on a direction invisible on x = 0
    bool stable = false;
    std::vector<std::string> flags;
};

/// Q(xi) with xi zeroed on the far-field faces.
QuadraticFormReport quadratic_form(const Field& u, const Field& xi, const Scenario& s);

/// Zero copy of xi on the far-field faces (lateral faces and top).
Field mask_far_field(const Field& xi);

/**
 * Energy E(v) = sum_cells Lambda + sum_nodes G - sum_bottom F with primitives
 * integrated by a fixed Gauss-Kronrod rule; same quadrature layout as the solver.
 */
double discrete_energy(const Field& v, const Scenario& s);

/// |[E(u+eps xi) - 2E(u) + E(u-eps xi)]/eps^2 - Q(xi)| / (1 + |Q(xi)|).
double second_variation_fd_check(const Field& u, const Field& xi, const Scenario& s, double eps);

/**
 * Minimum generalized Rayleigh quotient of Q on span{|grad_y u| phi_k} with
 * phi_k tensor cubic B-splines vanishing on the far field. basis_size is the
 * target dimension; each axis gets floor(basis_size^(1/(n+1))) splines.
 */
QuadraticFormReport relaxed_stability_scan(const Field& u, const Scenario& s, int basis_size);

/// Nodal values of the tensor spline basis used by the scan.
std::vector<Field> spline_basis(const GridPtr& grid, int per_axis);

/// Relative defect of the y_j-differentiated equation tested with u_{y_j} phi^2; max over j.
double linearized_residual_check(const Field& u, const Scenario& s, const Field& phi);

}  // namespace hslab
