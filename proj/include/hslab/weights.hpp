#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hslab {

enum class WeightKind { PLaplacian, MeanCurvature, CustomTabulated };

std::string to_string(WeightKind kind);

/**
 * Diffusion coefficient with product structure a(x,t) = mu(x) * A(t).
 *
 * mu(x) = x^alpha exactly. The gradient profile A(t) is t^(p-2) for the
 * p-Laplacian, (1+t^2)^(-1/2) for the mean-curvature operator, or a
 * positive table interpolated log-log for custom weights.
 *
 * Every evaluation clamps t from below by grad_floor.
 */
class WeightModel {
public:
    static WeightModel p_laplacian(double p, double alpha, double grad_floor = 1e-10);
    static WeightModel mean_curvature(double alpha, double grad_floor = 1e-10);
    // alpha is not range-checked here: non-integrable weights are reported
    // by check_muckenhoupt instead of being rejected up front.
    static WeightModel tabulated(std::vector<double> t, std::vector<double> values,
                                 double alpha, double grad_floor = 1e-10);

    WeightKind kind() const { return kind_; }
    double p() const { return p_; }
    double alpha() const { return alpha_; }
    double grad_floor() const { return grad_floor_; }
    const std::vector<double>& table_t() const { return table_t_; }
    const std::vector<double>& table_values() const { return table_v_; }

    WeightModel with_grad_floor(double grad_floor) const;

    double clamp(double t) const { return t > grad_floor_ ? t : grad_floor_; }

    /// mu(x) = x^alpha (mu(0) is 0 or +inf unless alpha == 0).
    double mu(double x) const;
    /// Exact integral of mu over [x0, x1].
    double mu_moment(double x0, double x1) const;

    /// A(t) and A'(t), with t clamped.
    double profile(double t) const;
    double profile_derivative(double t) const;

    /// Relative step of the centered difference used for tabulated A'(t).
    static constexpr double kTabulatedStep = 1e-6;

private:
    WeightModel() = default;

    WeightKind kind_ = WeightKind::PLaplacian;
    double p_ = 2.0;
    double alpha_ = 0.0;
    double grad_floor_ = 1e-10;
    std::vector<double> table_t_;
    std::vector<double> table_v_;
};

struct EllipticityValues {
    double h1 = 0.0;         ///< a + (a_t/|grad u|) u_x^2
    double h2_lambda = 0.0;  ///< a + (a_t/|grad u|) |grad_y u|^2
};

double eval_a(const WeightModel& model, double x, double t);
double eval_a_t(const WeightModel& model, double x, double t);

/// B(x, eta) = a I + (a_t/|eta|) eta eta^T with |eta| clamped by grad_floor.
Eigen::MatrixXd assemble_B(const WeightModel& model, double x, std::span<const double> eta);

/// B with mu factored out: A I + (A'/|eta|) eta eta^T, applied to w1 and w2.
double profile_B_form(const WeightModel& model, std::span<const double> eta,
                      std::span<const double> w1, std::span<const double> w2);

/// sup over t in (0, t_max] of t |a_t| / a on a uniform sample.
double check_growth_bound(const WeightModel& model, double t_max, int samples);

/// A2 ratio (int_0^d a dx)(int_0^d 1/a dx)/d^2 for a frozen t.
double check_muckenhoupt(const WeightModel& model, double t, double d, int quad_points);

/// grad = (grad_y u, u_x); the last entry is the normal derivative.
EllipticityValues check_ellipticity(const WeightModel& model, double x,
                                    std::span<const double> grad);

/// Same with mu(x) factored out (values per unit weight).
EllipticityValues profile_ellipticity(const WeightModel& model, std::span<const double> grad);

}  // namespace hslab
