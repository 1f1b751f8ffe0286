#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "hslab/grid.hpp"
#include "hslab/scenario.hpp"

namespace hslab {

/**
 * Q1 (multilinear) discretization on the tensor grid.
 *
 * Each cell carries tensor 2-point Gauss quadrature for the gradient term,
 * with mu(x) folded in through the exact cell moment. Zeroth-order terms
 * use lumped nodal weights. With this choice the residual is the exact
 * gradient of the discrete energy and the Jacobian is symmetric.
 */

/// One quadrature point of the gradient term.
struct QuadPoint {
    double weight = 0.0;       ///< volume weight times the cell average of mu
    double volume = 0.0;       ///< plain volume weight
    double x = 0.0;            ///< normal coordinate of the point
    std::array<double, 3> grad{0.0, 0.0, 0.0};  ///< (y1, [y2,] x), dims() entries used
};

/// Calls fn(const QuadPoint&) for every Gauss point of every cell.
void for_each_quadrature_point(const Field& u, const std::function<void(const QuadPoint&)>& fn);

/// Nodal residual of the weak form; far-field Dirichlet nodes are included.
std::vector<double> weak_residual(const Field& u, const Scenario& s);

/// Max-norm of the residual over nodes not fixed by the far-field condition.
double residual_norm(const std::vector<double>& residual, const std::vector<char>& fixed);

/// Second variation split into its three parts (full node set, no elimination).
struct SecondVariationParts {
    Eigen::SparseMatrix<double> bulk;  ///< sum w mu <B grad N_i, grad N_j>
    std::vector<double> potential;     ///< lumped g_u masses
    std::vector<double> boundary;      ///< lumped f' masses on x = 0
};

SecondVariationParts second_variation_parts(const Field& u, const Scenario& s);

/// Newton matrix bulk + diag(potential) - diag(boundary).
Eigen::SparseMatrix<double> jacobian(const Field& u, const Scenario& s);

/// Integral of a(x,|grad u|)|grad u|^2 over the truncated domain.
double energy_integral(const Field& u, const Scenario& s);

enum class SolveStatus { Converged, NonConvergence, SingularJacobian };
std::string to_string(SolveStatus status);

struct SolveReport {
    int iterations = 0;
    double final_residual_norm = 0.0;
    bool converged = false;
    double energy_integral = 0.0;
    SolveStatus status = SolveStatus::NonConvergence;
    double smallest_pivot = 0.0;        ///< only meaningful for SingularJacobian
    std::vector<double> residual_history;  ///< norm before each step and after the last
    std::string linear_solver;
    bool used_lateral_reduction = false;
};

/// Prescribed far-field values written into u (no-op for NeumannZero).
void apply_far_field(Field& u, const Scenario& s);

/**
 * Damped Newton iteration with the B-form Jacobian. Steps are halved while
 * the residual norm fails to decrease, down to 2^-10. On failure the best
 * iterate is returned with converged = false.
 */
std::pair<Field, SolveReport> newton_solve(const Scenario& s, const Field& initial);

/// sup over bottom nodes of the defect |-a(x1/2,|grad u|) u_x - f(u)| with one-sided u_x.
double boundary_flux_check(const Field& u, const Scenario& s);

}  // namespace hslab
