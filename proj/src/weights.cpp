#include "hslab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hslab {

std::string to_string(WeightKind kind) {
    switch (kind) {
        case WeightKind::PLaplacian: return "p_laplacian";
        case WeightKind::MeanCurvature: return "mean_curvature";
        case WeightKind::CustomTabulated: return "tabulated";
    }
    return "unknown";
}

namespace {

void require_alpha(double alpha) {
    if (!(alpha > -1.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie strictly inside (-1,1)");
    }
}

void require_floor(double grad_floor) {
    if (!(grad_floor > 0.0) || !std::isfinite(grad_floor)) {
        throw std::invalid_argument("grad_floor must be positive");
    }
}

}  // namespace

WeightModel WeightModel::p_laplacian(double p, double alpha, double grad_floor) {
    if (!(p > 1.0) || !std::isfinite(p)) {
        throw std::invalid_argument("p must exceed 1");
    }
    require_alpha(alpha);
    require_floor(grad_floor);
    WeightModel m;
    m.kind_ = WeightKind::PLaplacian;
    m.p_ = p;
    m.alpha_ = alpha;
    m.grad_floor_ = grad_floor;
    return m;
}

WeightModel WeightModel::mean_curvature(double alpha, double grad_floor) {
    require_alpha(alpha);
    require_floor(grad_floor);
    WeightModel m;
    m.kind_ = WeightKind::MeanCurvature;
    m.alpha_ = alpha;
    m.grad_floor_ = grad_floor;
    return m;
}

WeightModel WeightModel::tabulated(std::vector<double> t, std::vector<double> values,
                                   double alpha, double grad_floor) {
    if (t.size() < 2 || t.size() != values.size()) {
        throw std::invalid_argument("tabulated weight needs at least two (t, value) pairs");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0.0) || !(values[i] > 0.0)) {
            throw std::invalid_argument("tabulated weight entries must be positive");
        }
        if (i > 0 && !(t[i] > t[i - 1])) {
            throw std::invalid_argument("tabulated weight abscissae must increase strictly");
        }
    }
    if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");
    require_floor(grad_floor);
    WeightModel m;
    m.kind_ = WeightKind::CustomTabulated;
    m.alpha_ = alpha;
    m.grad_floor_ = grad_floor;
    m.table_t_ = std::move(t);
    m.table_v_ = std::move(values);
    return m;
}

WeightModel WeightModel::with_grad_floor(double grad_floor) const {
    require_floor(grad_floor);
    WeightModel m = *this;
    m.grad_floor_ = grad_floor;
    return m;
}

double WeightModel::mu(double x) const {
    if (alpha_ == 0.0) return 1.0;
    return std::pow(x, alpha_);
}

double WeightModel::mu_moment(double x0, double x1) const {
    if (alpha_ == 0.0) return x1 - x0;
    const double e = alpha_ + 1.0;
    if (e <= 0.0 && x0 <= 0.0) return std::numeric_limits<double>::infinity();
    return (std::pow(x1, e) - std::pow(x0, e)) / e;
}

double WeightModel::profile(double t) const {
    const double s = clamp(t);
    switch (kind_) {
        case WeightKind::PLaplacian:
            return p_ == 2.0 ? 1.0 : std::pow(s, p_ - 2.0);
        case WeightKind::MeanCurvature:
            return 1.0 / std::sqrt(1.0 + s * s);
        case WeightKind::CustomTabulated: {
            const auto& tt = table_t_;
            const auto& vv = table_v_;
            std::size_t k;
            if (s <= tt.front()) {
                k = 0;
            } else if (s >= tt.back()) {
                k = tt.size() - 2;
            } else {
                k = static_cast<std::size_t>(std::upper_bound(tt.begin(), tt.end(), s) - tt.begin()) - 1;
            }
            const double l0 = std::log(tt[k]), l1 = std::log(tt[k + 1]);
            const double v0 = std::log(vv[k]), v1 = std::log(vv[k + 1]);
            const double slope = (v1 - v0) / (l1 - l0);
            return std::exp(v0 + slope * (std::log(s) - l0));
        }
    }
    return 1.0;
}

double WeightModel::profile_derivative(double t) const {
    const double s = clamp(t);
    switch (kind_) {
        case WeightKind::PLaplacian:
            return p_ == 2.0 ? 0.0 : (p_ - 2.0) * std::pow(s, p_ - 3.0);
        case WeightKind::MeanCurvature: {
            const double q = 1.0 + s * s;
            return -s / (q * std::sqrt(q));
        }
        case WeightKind::CustomTabulated: {
            // centered difference with step kTabulatedStep * t, kept above the floor
            double h = kTabulatedStep * s;
            double lo = s - h;
            if (lo < grad_floor_) lo = grad_floor_;
            const double hi = s + h;
            return (profile(hi) - profile(lo)) / (hi - lo);
        }
    }
    return 0.0;
}

double eval_a(const WeightModel& model, double x, double t) {
    return model.mu(x) * model.profile(t);
}

double eval_a_t(const WeightModel& model, double x, double t) {
    return model.mu(x) * model.profile_derivative(t);
}

Eigen::MatrixXd assemble_B(const WeightModel& model, double x, std::span<const double> eta) {
    const auto d = static_cast<Eigen::Index>(eta.size());
    Eigen::Map<const Eigen::VectorXd> e(eta.data(), d);
    const double norm = e.norm();
    if (norm == 0.0 && !(model.grad_floor() > 0.0)) {
        throw std::domain_error("assemble_B: zero direction with vanishing grad_floor");
    }
    const double t = model.clamp(norm);
    const double a = eval_a(model, x, t);
    const double at = eval_a_t(model, x, t);
    const double c = at / t;
    Eigen::MatrixXd B(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i; j < d; ++j) {
            B(i, j) = c * (e[i] * e[j]);
            B(j, i) = B(i, j);
        }
        B(i, i) += a;
    }
    return B;
}

double profile_B_form(const WeightModel& model, std::span<const double> eta,
                      std::span<const double> w1, std::span<const double> w2) {
    double norm2 = 0.0, ew1 = 0.0, ew2 = 0.0, w12 = 0.0;
    for (std::size_t k = 0; k < eta.size(); ++k) {
        norm2 += eta[k] * eta[k];
        ew1 += eta[k] * w1[k];
        ew2 += eta[k] * w2[k];
        w12 += w1[k] * w2[k];
    }
    const double t = model.clamp(std::sqrt(norm2));
    return model.profile(t) * w12 + model.profile_derivative(t) / t * ew1 * ew2;
}

double check_growth_bound(const WeightModel& model, double t_max, int samples) {
    if (!(t_max > 0.0) || samples < 2) {
        throw std::invalid_argument("check_growth_bound needs t_max > 0 and samples >= 2");
    }
    double sup = 0.0;
    for (int k = 1; k <= samples; ++k) {
        const double t = model.clamp(t_max * static_cast<double>(k) / samples);
        const double ratio = t * std::abs(model.profile_derivative(t)) / model.profile(t);
        sup = std::max(sup, ratio);
    }
    return sup;
}

double check_muckenhoupt(const WeightModel& model, double t, double d, int quad_points) {
    if (!(d > 0.0) || quad_points < 1) {
        throw std::invalid_argument("check_muckenhoupt needs d > 0 and quad_points >= 1");
    }
    const double alpha = model.alpha();
    if (!(alpha > -1.0 && alpha < 1.0)) {
        throw std::domain_error("weight or its reciprocal is not integrable at x=0 (alpha outside (-1,1))");
    }
    // Graded cells x_k = d (k/N)^2 with exact per-cell moments of x^alpha and x^-alpha.
    const double A = model.profile(t);
    double int_a = 0.0, int_inv = 0.0;
    const double e_plus = alpha + 1.0, e_minus = 1.0 - alpha;
    double x0 = 0.0;
    for (int k = 1; k <= quad_points; ++k) {
        const double r = static_cast<double>(k) / quad_points;
        const double x1 = d * r * r;
        if (alpha == 0.0) {
            int_a += A * (x1 - x0);
            int_inv += (x1 - x0) / A;
        } else {
            int_a += A * (std::pow(x1, e_plus) - std::pow(x0, e_plus)) / e_plus;
            int_inv += (std::pow(x1, e_minus) - std::pow(x0, e_minus)) / e_minus / A;
        }
        x0 = x1;
    }
    return int_a * int_inv / (d * d);
}

EllipticityValues profile_ellipticity(const WeightModel& model, std::span<const double> grad) {
    if (grad.empty()) throw std::invalid_argument("check_ellipticity: empty gradient");
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    const double ux = grad.back();
    const double gy2 = norm2 - ux * ux;
    const double t = model.clamp(std::sqrt(norm2));
    const double A = model.profile(t);
    const double At = model.profile_derivative(t);
    return {A + At / t * ux * ux, A + At / t * gy2};
}

EllipticityValues check_ellipticity(const WeightModel& model, double x,
                                    std::span<const double> grad) {
    auto v = profile_ellipticity(model, grad);
    const double m = model.mu(x);
    return {m * v.h1, m * v.h2_lambda};
}

}  // namespace hslab
