#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "hslab/geometry.hpp"
#include "hslab/grid.hpp"
#include "hslab/scenario.hpp"

namespace hslab {

struct PoincareReport {
    double lhs = 0.0;     ///< phi^2 (a K^2 |grad_y u|^2 + lambda |grad_L |grad_y u||^2)
    double rhs = 0.0;     ///< |grad_y u|^2 <B grad phi, grad phi>
    double margin = 0.0;  ///< rhs - lhs
    double tol_poin = 0.0;
    bool holds = false;
    /// min over the regular set of A + (A'/|grad u|)|grad_y u|^2 (lambda per unit weight)
    double min_lambda = 0.0;
    /// Weighted L1 regularity integrals over the grid.
    double sa3_provv = 0.0;
    double sa3 = 0.0;
    std::size_t regular_nodes = 0;
    std::size_t evaluated_nodes = 0;  ///< nodes contributing to lhs
    std::size_t skipped_nodes = 0;    ///< regular nodes whose stencil leaves the regular set
    std::vector<std::string> flags;
};

/// Both sides of the geometric Poincare inequality, nodal quadrature over the regular set.
PoincareReport poincare_sides(const Field& u, const Field& phi, const Scenario& s,
                              const GeometryOptions& opt = {});

/// log R for |X| <= sqrt R, 2 log(R/|X|) up to R, 0 beyond.
double capacity_phi_value(double R, double r);

struct CapacityCutoff {
    Field phi;
    bool truncated = false;  ///< B_R leaves the box
    std::vector<std::string> warnings;
};

/// phi_R sampled on the grid, centred at the origin; requires R >= e.
CapacityCutoff capacity_phi(double R, const GridPtr& grid);

struct CapacityScan {
    std::vector<double> radii;
    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<double> ratios;        ///< lhs / (log R)^2
    std::vector<double> bound_ratios;  ///< rhs / (log R)^2
    double tol = 0.0;
    double floor = 0.0;                ///< min of ratios
    bool ratios_nonincreasing = false;
    bool bounds_decreasing = false;
    std::vector<std::string> flags;
};

/// Poincare sides with phi = phi_R for each radius; radii must increase strictly.
CapacityScan capacity_scan(const Field& u, const Scenario& s, const std::vector<double>& radii,
                           const GeometryOptions& opt = {});

struct TatayResult {
    double lhs = 0.0;
    double rhs = 0.0;
};

/**
 * Annulus integral of h/|X|^2 against 2 int t^-3 eta(t) dt + eta(R)/R^2.
 * h is integrated as a point measure: every cell is split into sub^(n+1)
 * pieces carrying the multilinear interpolant at their centres.
 */
TatayResult tatay_bound_check(const Field& h, double R, int sub = 4);

struct EnergyScanReport {
    std::vector<double> radii;
    std::vector<double> energies;        ///< int_{B_R} (a + |a_t||grad u|)|grad u|^2
    double fitted_exponent = 0.0;        ///< NaN when degenerate
    std::vector<double> weight_volumes;  ///< int_{B_2R \ B_R} x^alpha
    double weight_exponent = 0.0;
    bool degenerate = false;
    bool energies_nondecreasing = false;
    std::vector<std::string> flags;
};

/// Throws std::invalid_argument for fewer than three radii.
EnergyScanReport energy_growth_scan(const Field& u, const Scenario& s, const std::vector<double>& radii,
                                    int sub = 2);

/// int over B_2R^+ \ B_R^+ of x^alpha in dimension n + 1.
double weight_annulus_volume(double R, int n, double alpha);

/// Least-squares slope of log(values) against log(radii).
double log_log_slope(const std::vector<double>& radii, const std::vector<double>& values);

struct SymmetryReport {
    std::vector<double> slice_x;
    std::vector<std::array<double, 2>> omega;  ///< per slice; second entry unused for n = 1
    double max_angular_deviation = 0.0;
    double tol_sym = 0.0;
    bool is_one_dimensional = false;
    std::size_t empty_slices = 0;
    std::vector<std::string> flags;
};

/// Direction of each x-slice from the lateral structure tensor of the
/// regular nodes off the lateral faces.
SymmetryReport symmetry_detect(const Field& u, double tol_sym = 1e-3);

}  // namespace hslab
