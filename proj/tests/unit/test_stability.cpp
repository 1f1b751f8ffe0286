#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "desk.hpp"
#include "hslab/geometry.hpp"
#include "hslab/solver.hpp"
#include "hslab/stability.hpp"

using namespace hslab;

namespace {

Field random_field(const GridPtr& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Field u(g);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = U(rng);
    return u;
}

Scenario nonlinear_scenario(double alpha) {
    Scenario s(WeightModel::p_laplacian(3.0, alpha));
    s.f = make_reaction("double_well");
    s.g = make_reaction("power", 0.5, 3.0);
    s.g_decay = 0.4;
    return s;
}

// smooth bump equal to 1 near the origin, zero for |y| >= r or x >= r
AnalyticField bump(double r) {
    return [r](const Point& p) {
        auto b = [r](double t) { return std::abs(t) >= r ? 0.0 : std::pow(std::cos(0.5 * std::numbers::pi * t / r), 2); };
        return b(p.y1) * b(p.y2) * b(p.x);
    };
}

}  // namespace

TEST_CASE("quadratic form of the zero direction") {
    auto g = make_grid(1, 2.0, 2.0, 8, 8, 0.2);
    auto s = nonlinear_scenario(0.2);
    auto r = quadratic_form(random_field(g, 1), Field(g, 0.0), s);
    CHECK(r.q_value == 0.0);
    CHECK(r.bulk_term == 0.0);
    CHECK(r.potential_term == 0.0);
    CHECK(r.boundary_term == 0.0);
    CHECK(second_variation_fd_check(random_field(g, 1), Field(g, 0.0), s, 1e-3) == 0.0);
}

TEST_CASE("quadratic form is a symmetric bilinear form") {
    for (int n : {1, 2}) {
        auto g = make_grid(n, 1.5, 1.5, 6, 6, -0.2);
        auto s = nonlinear_scenario(-0.2);
        Field u = random_field(g, 7 + n);
        for (unsigned k = 0; k < 20; ++k) {
            Field a = random_field(g, 100 + k), b = random_field(g, 200 + k);
            Field sum(g), diff(g), scaled(g);
            for (std::size_t i = 0; i < u.size(); ++i) {
                sum[i] = a[i] + b[i];
                diff[i] = a[i] - b[i];
                scaled[i] = 2.5 * a[i];
            }
            const auto qa = quadratic_form(u, a, s), qb = quadratic_form(u, b, s);
            const double lhs = quadratic_form(u, sum, s).q_value + quadratic_form(u, diff, s).q_value;
            const double rhs = 2 * qa.q_value + 2 * qb.q_value;
            const double mag = std::abs(qa.bulk_term) + std::abs(qa.potential_term) + std::abs(qa.boundary_term) +
                               std::abs(qb.bulk_term) + std::abs(qb.potential_term) + std::abs(qb.boundary_term);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * mag);
            CHECK(quadratic_form(u, scaled, s).q_value == doctest::Approx(6.25 * qa.q_value).epsilon(1e-13));
            CHECK(qa.q_value == qa.bulk_term + qa.potential_term - qa.boundary_term);
        }
    }
}

TEST_CASE("p=2 with no reactions gives the Dirichlet energy") {
    auto g = make_grid(2, 1.0, 1.0, 6, 6, 0.0);
    Scenario s(WeightModel::p_laplacian(2.0, 0.0));
    for (unsigned k = 0; k < 50; ++k) {
        Field xi = random_field(g, k);
        auto r = quadratic_form(random_field(g, 500 + k), xi, s);
        CHECK(r.q_value >= 0.0);
        CHECK(r.potential_term == 0.0);
        CHECK(r.boundary_term == 0.0);
    }
    auto g1 = make_grid(1, 1.0, 1.0, 16, 16, 0.0);
    Field xi = sample(g1, [](const Point& p) { return 1.0 - p.y1 * p.y1; });
    auto r = quadratic_form(Field(g1, 0.0), xi, s);
    CHECK(r.q_value > 0.0);
}

TEST_CASE("harmonic extension of cos y is a neutral direction") {
    // on [-pi/2, pi/2] x [0, 8] the direction vanishes on the lateral faces
    Scenario s = desk::manufactured();
    double prev = 0.0;
    for (int m : {16, 32, 64}) {
        auto g = make_grid(1, 0.5 * std::numbers::pi, 8.0, m, 2 * m, 0.0);
        Field xi = sample(g, named_field("exp_cos"));
        auto r = quadratic_form(sample(g, named_field("exp_cos")), xi, s);
        const double rel = std::abs(r.q_value) / r.boundary_term;
        CHECK(rel <= 2.0 * g->hy() * g->hy());
        if (prev > 0.0) CHECK(prev / rel >= 3.5);
        prev = rel;
    }
}

TEST_CASE("finite-difference second variation") {
    SUBCASE("quadratic energy") {
        auto g = make_grid(1, 2.0, 2.0, 12, 12, 0.0);
        Scenario s = desk::manufactured();
        for (unsigned k = 0; k < 5; ++k) {
            CHECK(second_variation_fd_check(random_field(g, k), random_field(g, 40 + k), s, 1e-3) <= 1e-6);
        }
    }
    SUBCASE("p=3 converges at second order in eps") {
        for (int n : {1, 2}) {
            auto g = make_grid(n, 1.0, 1.0, 6, 6, n == 1 ? 0.0 : 0.3);
            auto s = nonlinear_scenario(g->alpha());
            // slanted state keeps |grad u| away from zero
            Field u = sample(g, [](const Point& p) { return 0.6 * p.y1 + 0.3 * p.y2 - 0.5 * p.x + 0.1 * std::sin(3 * p.x); });
            Field xi = random_field(g, 9);
            const double e1 = second_variation_fd_check(u, xi, s, 1e-2);
            const double e2 = second_variation_fd_check(u, xi, s, 5e-3);
            const double e3 = second_variation_fd_check(u, xi, s, 2.5e-3);
            CHECK(e1 / e2 >= 3.5);
            CHECK(e1 / e2 <= 4.5);
            CHECK(e2 / e3 >= 3.5);
            CHECK(e2 / e3 <= 4.5);
            CHECK(std::log2(e2 / e3) >= 1.9);
        }
    }
}

TEST_CASE("spline basis vanishes on the far field") {
    auto g = make_grid(2, 2.0, 3.0, 16, 16, 0.0);
    auto basis = spline_basis(g, 3);
    CHECK(basis.size() == 27);
    for (const auto& phi : basis) {
        double top = 0.0;
        for (std::size_t i = 0; i < phi.size(); ++i) {
            if (g->on_far_field(i)) CHECK(std::abs(phi[i]) <= 1e-15);
            top = std::max(top, phi[i]);
        }
        CHECK(top > 0.0);
    }
    CHECK_THROWS_AS(spline_basis(g, 0), std::invalid_argument);
}

TEST_CASE("relaxed scan on a constant state is degenerate") {
    auto g = make_grid(1, 2.0, 2.0, 8, 8, 0.0);
    auto r = relaxed_stability_scan(Field(g, 0.3), desk::manufactured(), 16);
    CHECK(r.degenerate);
    CHECK(r.basis_rank == 0);
    CHECK_FALSE(r.flags.empty());
    CHECK_THROWS_AS(relaxed_stability_scan(Field(g, 0.3), desk::manufactured(), 0), std::invalid_argument);
}

TEST_CASE("the double-well layer is stable in the relaxed sense") {
    auto s = desk::layer(2.0);
    auto g = make_grid(1, 6.0, 6.0, 64, 48, 0.0);
    auto [u, rep] = newton_solve(s, sample(g, named_field("tanh_layer")));
    REQUIRE(rep.converged);
    auto r = relaxed_stability_scan(u, s, 64);
    CHECK_FALSE(r.degenerate);
    CHECK_FALSE(r.interior_unstable);
    CHECK(r.min_rayleigh >= -1e-6);
    CHECK(r.stable);
    // the minimizing direction is normalized on x = 0
    CHECK(r.q_value == doctest::Approx(r.min_rayleigh).epsilon(1e-8).scale(1.0));
}

TEST_CASE("a large boundary slope destabilizes") {
    auto s = desk::manufactured();
    s.f = make_reaction("linear", 5.0);
    auto g = desk::manufactured_grid(32, 32);
    Field u = sample(g, named_field("exp_cos"));
    auto r = relaxed_stability_scan(u, s, 36);
    CHECK_FALSE(r.stable);
    CHECK(r.min_rayleigh < -1.0);
    CHECK(r.boundary_term > r.bulk_term);
}

TEST_CASE("linearized residual") {
    auto s = desk::manufactured();
    double prev = 0.0;
    for (int m : {16, 32, 64}) {
        auto g = desk::manufactured_grid(m, m);
        Field u = sample(g, named_field("exp_cos"));
        Field phi = sample(g, bump(2.5));
        const double r = linearized_residual_check(u, s, phi);
        CHECK(linearized_residual_check(u, s, Field(g, 0.0)) == 0.0);
        if (prev > 0.0) CHECK(prev / r >= 1.8);
        prev = r;
    }
    auto g = make_grid(2, 2.0, 2.0, 8, 8, 0.0);
    Field v = sample(g, [](const Point& p) { return std::exp(-p.x) * std::cos(p.y2); });
    Field phi = sample(g, bump(1.5));
    // u_{y1} vanishes; only y2 contributes, and that component is a manufactured solution too
    CHECK(linearized_residual_check(v, s, phi) < 0.2);
}

TEST_CASE("translation mode approaches a zero direction on growing cutoffs") {
    auto s = desk::layer(2.0);
    s.far_field.faces.y1 = false;
    s.far_field.kind = FarFieldKind::NeumannZero;
    auto g = make_grid(1, 12.0, 12.0, 96, 64, 0.0);
    auto [u, rep] = newton_solve(s, sample(g, named_field("tanh_layer")));
    REQUIRE(rep.converged);
    auto gf = compute_gradients(u);
    double prev = std::numeric_limits<double>::infinity();
    for (double r : {3.0, 6.0, 11.0}) {
        Field phi = sample(g, bump(r));
        Field xi(g);
        for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = gf.grad[i][0] * phi[i];
        const auto q = quadratic_form(u, xi, s);
        const double rel = std::abs(q.q_value) / q.boundary_term;
        CHECK(rel < prev);
        prev = rel;
    }
}
