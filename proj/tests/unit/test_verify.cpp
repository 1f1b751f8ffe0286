#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "desk.hpp"
#include "hslab/solver.hpp"
#include "hslab/verify.hpp"
#include "hslab/weights.hpp"

using namespace hslab;

namespace {

// int_0^c x^alpha sqrt(c^2 - x^2) dx = c^(alpha+2) B((alpha+1)/2, 3/2) / 2
double annulus_oracle(double R, int n, double alpha) {
    if (n == 1) return (std::pow(2.0, alpha + 2) - 1) * std::pow(R, alpha + 2) * std::beta((alpha + 1) / 2, 1.5);
    return (std::pow(2.0, alpha + 3) - 1) * std::pow(R, alpha + 3) * 2 * std::numbers::pi / ((alpha + 1) * (alpha + 3));
}

}  // namespace

TEST_CASE("capacity cutoff values") {
    const double R = std::exp(2.0);
    CHECK(capacity_phi_value(R, std::sqrt(R)) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(capacity_phi_value(R, std::sqrt(R) * (1 + 1e-12)) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(capacity_phi_value(R, R) == 0.0);
    CHECK(capacity_phi_value(R, std::numbers::e) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(capacity_phi_value(R, 0.5) == 2.0);
    CHECK(capacity_phi_value(std::exp(4.0), std::exp(3.0)) == doctest::Approx(2.0).epsilon(1e-14));

    auto g = make_grid(1, 4.0, 4.0, 8, 8, 0.0);
    CHECK_THROWS_AS(capacity_phi(2.0, g), std::invalid_argument);
    auto inside = capacity_phi(3.0, g);
    CHECK_FALSE(inside.truncated);
    auto out = capacity_phi(R, g);
    CHECK(out.truncated);
    CHECK(out.warnings.size() == 1);
}

TEST_CASE("capacity cutoff gradient bound") {
    const double R = std::exp(2.0);
    auto g = make_grid(2, 8.0, 8.0, 64, 64, 0.0);
    auto phi = capacity_phi(R, g).phi;
    NodalDifferences D(*g);
    const double h = g->hy();
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double r = g->point(i).norm();
        double grad2 = 0.0;
        for (int a = 0; a < 3; ++a) grad2 += std::pow(D.at(phi.values(), i, a), 2);
        // one-sided stencils near the edges and kinks cost O(h)
        if (r > std::sqrt(R) + 2 * h && r < R - 2 * h) {
            CHECK(std::sqrt(grad2) <= 2.0 / r + 2.0 * h);
        } else if (r < std::sqrt(R) - 2 * h || r > R + 2 * h) {
            CHECK(grad2 <= 1e-20);
        }
    }
}

TEST_CASE("B is bounded by a + |a_t| |grad u|") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-3, 3), P(1.2, 4.0), A(-0.9, 0.9), X(0.01, 3.0);
    for (int k = 0; k < 2000; ++k) {
        const double alpha = A(rng);
        auto w = (k % 2) ? WeightModel::p_laplacian(P(rng), alpha) : WeightModel::mean_curvature(alpha);
        std::vector<double> eta{U(rng), U(rng), U(rng)}, v{U(rng), U(rng), U(rng)};
        const double x = X(rng);
        const double t = std::sqrt(eta[0] * eta[0] + eta[1] * eta[1] + eta[2] * eta[2]);
        auto B = assemble_B(w, x, eta);
        Eigen::Vector3d vv(v[0], v[1], v[2]);
        const double form = vv.dot(B * vv);
        const double bound = (eval_a(w, x, t) + std::abs(eval_a_t(w, x, t)) * t) * vv.squaredNorm();
        CHECK(std::abs(form) <= bound * (1 + 1e-12));
    }
}

TEST_CASE("Poincare sides: trivial cases") {
    auto g = make_grid(2, 4.0, 4.0, 16, 12, 0.0);
    Scenario s(WeightModel::p_laplacian(2.0, 0.0));
    Field u = sample(g, named_field("tanh_layer"));
    auto phi = capacity_phi(3.0, g).phi;
    auto r = poincare_sides(u, phi, s);
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs > 0.0);
    CHECK(r.holds);
    CHECK(r.min_lambda == doctest::Approx(1.0));
    CHECK(std::isfinite(r.sa3));
    CHECK(std::isfinite(r.sa3_provv));

    auto z = poincare_sides(u, Field(g, 0.0), s);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    CHECK(z.margin == 0.0);
    CHECK(z.holds);
}

TEST_CASE("Poincare sides of a curved field") {
    // rhs oracle: u = y1 on a box, phi with known gradient, p = 2
    auto g = make_grid(2, 2.0, 2.0, 32, 32, 0.0);
    Scenario s(WeightModel::p_laplacian(2.0, 0.0));
    Field u = sample(g, named_field("linear_y1"));
    Field phi = sample(g, [](const Point& p) { return p.y2; });
    auto r = poincare_sides(u, phi, s);
    // |grad_y u|^2 |grad phi|^2 = 1 over the box of volume 32
    CHECK(r.rhs == doctest::Approx(32.0).epsilon(1e-12));
    CHECK(r.lhs == 0.0);

    Field saddle = sample(g, named_field("saddle"));
    auto rs = poincare_sides(saddle, capacity_phi(std::numbers::e, g).phi, s);
    CHECK(rs.lhs > 0.0);
    CHECK(rs.skipped_nodes > 0);
}

TEST_CASE("capacity scan: one-dimensional and saddle fields") {
    auto g = make_grid(2, 22.0, 22.0, 64, 24, 0.0);
    Scenario s(WeightModel::p_laplacian(2.0, 0.0));
    const std::vector<double> radii{std::exp(2.0), std::exp(2.5), std::exp(3.0)};
    auto flat = capacity_scan(sample(g, named_field("tanh_layer")), s, radii);
    for (double v : flat.ratios) CHECK(v == 0.0);
    CHECK(flat.ratios_nonincreasing);
    CHECK(flat.bounds_decreasing);
    CHECK(flat.flags.empty());

    auto sad = capacity_scan(sample(g, named_field("saddle")), s, radii);
    CHECK(sad.floor > 1.0);
    CHECK_FALSE(sad.ratios_nonincreasing);

    CHECK_THROWS_AS(capacity_scan(sample(g, named_field("saddle")), s, {8.0, 8.0, 9.0}), std::invalid_argument);
}

TEST_CASE("annulus bound for h = 1 in the half-plane") {
    const double R = std::exp(2.0);
    auto g = make_grid(1, 8.0, 8.0, 128, 64, 0.0);
    auto t = tatay_bound_check(Field(g, 1.0), R);
    CHECK(t.lhs == doctest::Approx(std::numbers::pi).epsilon(0.02));
    CHECK(t.rhs == doctest::Approx(1.5 * std::numbers::pi).epsilon(0.02));
    CHECK(t.lhs <= t.rhs);
    auto z = tatay_bound_check(Field(g, 0.0), R);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
    Field neg(g, 1.0);
    neg[7] = -1e-3;
    CHECK_THROWS_AS(tatay_bound_check(neg, R), std::invalid_argument);
}

TEST_CASE("annulus bound holds for random nonnegative h") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_real_distribution<double> Rd(2.0, 7.5);
    for (int k = 0; k < 100; ++k) {
        auto g = make_grid(1 + k % 2, 8.0, 8.0, 16, 12, 0.0);
        Field h(g);
        // piecewise constant on coarse blocks, with sparse spikes
        const double blocks = 1 + 4 * U(rng);
        const double phase = 10 * U(rng);
        for (std::size_t i = 0; i < h.size(); ++i) {
            const Point p = g->point(i);
            h[i] = std::floor(blocks * std::abs(std::sin(p.y1 + phase + p.x))) + (U(rng) < 0.05 ? 50 * U(rng) : 0.0);
        }
        auto t = tatay_bound_check(h, Rd(rng), 2);
        CHECK(t.lhs <= t.rhs);
    }
}

TEST_CASE("weight volumes of annuli") {
    for (int n : {1, 2}) {
        for (double alpha : {-0.5, 0.0, 0.5}) {
            for (double R : {0.5, 1.0, 3.0}) {
                const double v = weight_annulus_volume(R, n, alpha);
                CHECK(v == doctest::Approx(annulus_oracle(R, n, alpha)).epsilon(1e-10));
            }
        }
    }
    const std::vector<double> radii{1, 2, 4, 8};
    for (double alpha : {0.0, 0.5}) {
        for (int n : {1, 2}) {
            std::vector<double> v;
            for (double R : radii) v.push_back(weight_annulus_volume(R, n, alpha));
            CHECK(std::abs(log_log_slope(radii, v) - (n + 1 + alpha)) <= 1e-8);
        }
    }
    CHECK_THROWS_AS(log_log_slope({1, 2}, {1, 4}), std::invalid_argument);
}

TEST_CASE("energy growth of the manufactured solution") {
    auto s = desk::manufactured();
    auto g = desk::manufactured_grid(64, 64);
    Field u = sample(g, named_field("exp_cos"));
    const std::vector<double> radii{1.0, 1.5, 2.0, 3.0};
    auto r = energy_growth_scan(u, s, radii);
    CHECK_FALSE(r.degenerate);
    CHECK(r.energies_nondecreasing);
    CHECK(r.fitted_exponent <= 2.0);
    CHECK(r.fitted_exponent >= 1.0);
    // oracle: |grad u|^2 = e^{-2x}; energy over the half disc by polar quadrature
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const int m = 2000;
        double e = 0.0;
        for (int i = 0; i < m; ++i) {
            const double x = (i + 0.5) * radii[k] / m;
            e += std::exp(-2 * x) * 2 * std::sqrt(radii[k] * radii[k] - x * x) * radii[k] / m;
        }
        CHECK(r.energies[k] == doctest::Approx(e).epsilon(0.02));
    }
    CHECK(std::abs(r.weight_exponent - 2.0) <= 1e-8);

    auto c = energy_growth_scan(Field(g, 1.0), s, radii);
    CHECK(c.degenerate);
    CHECK(std::isnan(c.fitted_exponent));
    CHECK_THROWS_AS(energy_growth_scan(u, s, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("symmetry of exact one-dimensional and radial fields") {
    auto g = make_grid(2, 5.0, 2.0, 40, 8, 0.0);
    auto d = symmetry_detect(sample(g, named_field("diagonal_tanh")));
    CHECK(d.max_angular_deviation <= 1e-8);
    CHECK(d.is_one_dimensional);
    REQUIRE(d.omega.size() == 9);
    for (const auto& om : d.omega) {
        CHECK(om[0] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(om[1] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
    }
    auto rad = symmetry_detect(sample(g, named_field("radial")));
    CHECK_FALSE(rad.is_one_dimensional);
    CHECK(rad.max_angular_deviation >= 1.5);
    auto c = symmetry_detect(Field(g, 2.0));
    CHECK(c.omega.empty());
    CHECK_FALSE(c.flags.empty());

    // v(w . y, x): exact for grid-symmetric directions, second order otherwise
    for (std::array<double, 2> w : {std::array<double, 2>{1, 0}, {0, 1}, {-1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}}) {
        auto gg = make_grid(2, 3.0, 1.0, 24, 4, 0.0);
        Field v = sample(gg, [&](const Point& p) { return std::atan(w[0] * p.y1 + w[1] * p.y2) * (1 + p.x); });
        auto r = symmetry_detect(v);
        CHECK(r.max_angular_deviation <= 1e-8);
        for (const auto& om : r.omega) CHECK(std::abs(std::abs(om[0] * w[0] + om[1] * w[1]) - 1.0) <= 1e-12);
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> T(0.0, std::numbers::pi);
    for (int k = 0; k < 10; ++k) {
        const double th = T(rng);
        const double w0 = std::cos(th), w1 = std::sin(th);
        double prev = 0.0;
        for (int m : {24, 48}) {
            auto gg = make_grid(2, 3.0, 1.0, m, 4, 0.0);
            Field v = sample(gg, [&](const Point& p) { return std::atan(w0 * p.y1 + w1 * p.y2) * (1 + p.x); });
            auto r = symmetry_detect(v);
            double err = 0.0;
            for (const auto& om : r.omega) err = std::max(err, std::abs(om[0] * w1 - om[1] * w0));
            CHECK(err <= 0.05 * gg->hy() * gg->hy());
            CHECK(r.max_angular_deviation <= 0.2 * gg->hy() * gg->hy());
            if (prev > 1e-12) CHECK(prev / err >= 3.0);
            prev = err;
        }
    }
}
