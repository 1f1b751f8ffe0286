#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hslab/grid.hpp"
#include "hslab/weights.hpp"

namespace hslab {

/// Scalar nonlinearity u -> r(u) with its exact derivative.
struct Reaction {
    std::string label = "zero";
    std::function<double(double)> value = [](double) { return 0.0; };
    std::function<double(double)> derivative = [](double) { return 0.0; };
};

/**
 * Named registry: "zero", "linear" (k u), "double_well" (k (u - u^3)),
 * "power" (k |u|^(q-1) u). Unknown names throw std::invalid_argument.
 */
Reaction make_reaction(const std::string& kind, double scale = 1.0, double exponent = 3.0);
bool is_known_reaction(const std::string& kind);

/// Named analytic fields used as initial data, far-field profiles and test inputs.
AnalyticField named_field(const std::string& name);
bool is_known_field(const std::string& name);
std::vector<std::string> known_field_names();

enum class FarFieldKind { NeumannZero, DirichletProfile };

struct FarFieldFaces {
    bool y1 = true;   ///< lateral faces y1 = +-Y
    bool y2 = true;   ///< lateral faces y2 = +-Y (n = 2)
    bool top = true;  ///< x = X
};

struct FarFieldBC {
    FarFieldKind kind = FarFieldKind::NeumannZero;
    std::string profile_name;
    AnalyticField profile;
    FarFieldFaces faces;
};

struct NewtonOptions {
    int max_iter = 30;
    double tol = 1e-10;
    double damping = 1.0;
    /// Solve y2-invariant n = 2 problems on the n = 1 slice first, then polish.
    bool lateral_reduction = true;
};

/**
 * Problem instance: -div(a(x,|grad u|) grad u) + g(x,u) = 0 in the half-space,
 * -a u_x = f(u) on x = 0, with g(x,u) = exp(-g_decay x) r_g(u).
 */
struct Scenario {
    explicit Scenario(WeightModel w) : weight(std::move(w)) {}

    WeightModel weight;
    Reaction f;
    Reaction g;
    double g_decay = 0.0;
    FarFieldBC far_field;
    NewtonOptions newton;

    double f_value(double u) const { return f.value(u); }
    double f_prime(double u) const { return f.derivative(u); }
    double g_value(double x, double u) const;
    double g_u(double x, double u) const;
};

/// Nodes whose values are prescribed by the far-field condition.
std::vector<char> dirichlet_mask(const HalfSpaceGrid& grid, const FarFieldBC& bc);

/// Bounded-difference-quotient check of f on [u_min, u_max] and boundedness of g(., 0).
std::vector<std::string> check_scenario_invariants(const Scenario& s, double u_min, double u_max,
                                                   double x_extent);

}  // namespace hslab
