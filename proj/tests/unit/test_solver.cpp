#include <doctest.h>

#include <cmath>
#include <random>

#include "desk.hpp"
#include "hslab/solver.hpp"

using namespace hslab;

namespace {

double max_error(const Field& u, const AnalyticField& exact) {
    double e = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) e = std::max(e, std::abs(u[i] - exact(u.grid().point(i))));
    return e;
}

Field random_field(const GridPtr& g, unsigned seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(lo, hi);
    Field u(g);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = U(rng);
    return u;
}

}  // namespace

TEST_CASE("residual of zero and constant states") {
    auto g = make_grid(1, 2.0, 2.0, 8, 6, 0.3);
    Scenario s(WeightModel::p_laplacian(2, 0.3));
    s.f = make_reaction("linear");
    for (double r : weak_residual(Field(g, 0.0), s)) CHECK(r == 0.0);

    const double c = 0.7;
    auto r = weak_residual(Field(g, c), s);
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double expect = -c * g->bottom_weights()[i];
        CHECK(std::abs(r[i] - expect) <= 1e-15);
    }
}

TEST_CASE("manufactured residual decreases at second order") {
    auto s = desk::manufactured();
    const auto exact = named_field("exp_cos");
    double prev = 0.0;
    for (int m : {16, 32, 64}) {
        auto g = desk::manufactured_grid(m, m);
        Field u = sample(g, exact);
        const double norm = residual_norm(weak_residual(u, s), dirichlet_mask(*g, s.far_field));
        if (prev > 0.0) CHECK(std::log2(prev / norm) >= 2.0);
        prev = norm;
    }
}

TEST_CASE("Jacobian is symmetric and matches differenced residual") {
    for (int n : {1, 2}) {
        auto g = make_grid(n, 1.5, 1.0, 4, 5, n == 1 ? 0.4 : -0.3);
        Scenario s(WeightModel::p_laplacian(3.0, g->alpha()));
        s.f = make_reaction("double_well");
        s.g = make_reaction("power", 0.5, 3.0);
        s.g_decay = 0.7;
        Field u = random_field(g, 3 + n, -1.0, 1.0);
        auto J = jacobian(u, s);
        Eigen::SparseMatrix<double> T = J.transpose();
        CHECK((J - T).norm() <= 1e-12 * J.norm());

        // oracle: centered difference of the residual, column by column
        const double h = 1e-6;
        double worst = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
            Field up = u, dn = u;
            up[j] += h;
            dn[j] -= h;
            auto rp = weak_residual(up, s), rm = weak_residual(dn, s);
            for (std::size_t i = 0; i < u.size(); ++i) {
                const double fd = (rp[i] - rm[i]) / (2 * h);
                worst = std::max(worst, std::abs(fd - J.coeff(i, j)));
            }
        }
        CHECK(worst <= 1e-6 * J.norm());
    }
}

TEST_CASE("manufactured Newton solve converges at second order") {
    auto s = desk::manufactured();
    const auto exact = named_field("exp_cos");
    double prev = 0.0;
    for (int m : {16, 32}) {
        auto g = desk::manufactured_grid(m, m);
        Field init = sample(g, [&](const Point& p) { return 0.9 * exact(p); });
        auto [u, rep] = newton_solve(s, init);
        CHECK(rep.converged);
        CHECK(rep.iterations <= 6);
        CHECK(rep.final_residual_norm <= s.newton.tol);
        CHECK(std::isfinite(rep.energy_integral));
        for (std::size_t k = 1; k < rep.residual_history.size(); ++k) {
            CHECK(rep.residual_history[k] < rep.residual_history[k - 1]);
        }
        const double err = max_error(u, exact);
        if (prev > 0.0) CHECK(prev / err >= 3.5);
        prev = err;
    }
}

TEST_CASE("constant state with zero nonlinearities is returned unchanged") {
    auto g = make_grid(2, 1.0, 1.0, 4, 4, 0.0);
    Scenario s(WeightModel::p_laplacian(2, 0));
    Field init(g, 0.42);
    auto [u, rep] = newton_solve(s, init);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 1);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == 0.42);
}

TEST_CASE("p=3 double-well layer converges") {
    auto s = desk::layer(3.0);
    auto g = make_grid(1, 6.0, 6.0, 48, 32, 0.0);
    auto [u, rep] = newton_solve(s, sample(g, named_field("tanh_layer")));
    CHECK(rep.converged);
    CHECK(rep.final_residual_norm <= 1e-8);
    // odd symmetry of the data is preserved
    for (std::size_t i = 0; i < u.size(); ++i) {
        NodeIndex idx = g->unflatten(i);
        NodeIndex mirror = idx;
        mirror.iy[0] = g->ny() - idx.iy[0];
        CHECK(std::abs(u[i] + u[g->index(mirror)]) <= 1e-8);
    }
}

TEST_CASE("lateral reduction agrees with the direct n=2 solve") {
    auto s = desk::layer(2.0);
    auto g = make_grid(2, 4.0, 4.0, 8, 8, 0.0);
    Field init = sample(g, named_field("tanh_layer"));
    auto [ur, rr] = newton_solve(s, init);
    s.newton.lateral_reduction = false;
    auto [ud, rd] = newton_solve(s, init);
    CHECK(rr.used_lateral_reduction);
    CHECK_FALSE(rd.used_lateral_reduction);
    CHECK(rr.converged);
    CHECK(rd.converged);
    double diff = 0.0;
    for (std::size_t i = 0; i < ur.size(); ++i) diff = std::max(diff, std::abs(ur[i] - ud[i]));
    CHECK(diff <= 1e-9);
}

TEST_CASE("singular Jacobian is reported with its pivot") {
    auto g = make_grid(1, 1.0, 1.0, 4, 4, 0.0);
    Scenario s(WeightModel::p_laplacian(2, 0));
    s.g.value = [](double) { return 1.0; };
    auto [u, rep] = newton_solve(s, Field(g, 0.0));
    CHECK_FALSE(rep.converged);
    CHECK(rep.status == SolveStatus::SingularJacobian);
    CHECK(std::abs(rep.smallest_pivot) < 1e-10);
}

TEST_CASE("boundary flux check") {
    auto g = make_grid(1, 1.0, 1.0, 6, 6, 0.0);
    Scenario s(WeightModel::p_laplacian(2, 0));
    CHECK(boundary_flux_check(Field(g, 0.3), s) == 0.0);
    s.f.value = [](double) { return 1.0; };
    CHECK(boundary_flux_check(Field(g, 0.3), s) == doctest::Approx(1.0));

    auto m = desk::manufactured();
    double prev = 0.0;
    for (int k : {16, 32, 64}) {
        auto gm = desk::manufactured_grid(k, k);
        const double v = boundary_flux_check(sample(gm, named_field("exp_cos")), m);
        if (prev > 0.0) CHECK(prev / v >= 1.8);
        prev = v;
    }
}
