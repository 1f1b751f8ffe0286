#include "hslab/run.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "hslab/geometry.hpp"
#include "hslab/solver.hpp"
#include "hslab/stability.hpp"
#include "hslab/verify.hpp"

namespace hslab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Asserted inequalities of one report.
class Checks {
public:
    void le(const std::string& name, double value, double bound) { add(name, value, bound, "<=", value <= bound); }
    void ge(const std::string& name, double value, double bound) { add(name, value, bound, ">=", value >= bound); }
    void truth(const std::string& name, bool holds) {
        Json c;
        c["name"] = name;
        c["holds"] = holds;
        arr_.push_back(std::move(c));
        ok_ = ok_ && holds;
    }
    bool ok() const { return ok_; }
    const Json& json() const { return arr_; }

private:
    void add(const std::string& name, double value, double bound, const char* rel, bool holds) {
        Json c;
        c["name"] = name;
        c["value"] = value;
        c["relation"] = rel;
        c["bound"] = bound;
        c["margin"] = rel[0] == '<' ? bound - value : value - bound;
        c["holds"] = holds;
        arr_.push_back(std::move(c));
        ok_ = ok_ && holds;
    }

    Json arr_ = Json::array();
    bool ok_ = true;
};

struct Context {
    const RunConfig& cfg;
    const RunOptions& opt;
    std::optional<Field> u;
    std::optional<SolveReport> solve;
    std::string source;
};

GeometryOptions geometry_options(const RunConfig& cfg) {
    GeometryOptions g;
    g.regular_rel = cfg.verify.regular_rel;
    g.exclusion_radius = cfg.verify.exclusion_radius;
    return g;
}

const Field& solution(Context& ctx) {
    if (ctx.u) return *ctx.u;
    Field init = initial_field(ctx.cfg);
    ctx.source = ctx.cfg.initial.dump.empty() ? "field:" + ctx.cfg.initial.field : "dump";
    if (ctx.cfg.initial.solve) {
        auto [u, rep] = newton_solve(ctx.cfg.scenario, init);
        ctx.u.emplace(std::move(u));
        ctx.solve = std::move(rep);
    } else {
        ctx.u.emplace(std::move(init));
    }
    return *ctx.u;
}

Json solution_json(const Context& ctx) {
    Json j;
    j["source"] = ctx.source;
    j["solved"] = ctx.solve.has_value();
    if (ctx.solve) {
        j["status"] = to_string(ctx.solve->status);
        j["converged"] = ctx.solve->converged;
        j["iterations"] = ctx.solve->iterations;
        j["final_residual_norm"] = ctx.solve->final_residual_norm;
    }
    return j;
}

// Non-solve subcommands also assert that the field they inspect is a solution.
void solution_checks(const Context& ctx, Checks& checks) {
    if (ctx.solve) checks.truth("solution_converged", ctx.solve->converged);
}

Json scenario_json(const RunConfig& cfg) {
    const auto& s = cfg.scenario;
    Json j;
    j["weight"] = {{"kind", to_string(s.weight.kind())},
                   {"p", s.weight.kind() == WeightKind::PLaplacian ? s.weight.p() : kNaN},
                   {"alpha", s.weight.alpha()},
                   {"grad_floor", s.weight.grad_floor()}};
    j["nonlinearity"] = {{"f", s.f.label}, {"g", s.g.label}, {"g_decay", s.g_decay}};
    j["grid"] = {{"n", cfg.grid.n},
                 {"y_extent", cfg.grid.y_extent},
                 {"x_extent", cfg.grid.x_extent},
                 {"ny", cfg.grid.ny},
                 {"nx", cfg.grid.nx}};
    j["far_field"] = {{"kind", s.far_field.kind == FarFieldKind::NeumannZero ? "neumann" : "dirichlet"},
                      {"profile", s.far_field.profile_name}};
    return j;
}

std::vector<double> default_capacity_radii(const GridPtr& grid) {
    std::vector<double> out;
    const double reach = std::min(grid->y_extent(), grid->x_extent());
    for (int k = 2; k <= 12; ++k) {
        const double R = std::exp(0.5 * k);
        if (R <= reach) out.push_back(R);
    }
    return out;
}

std::vector<double> capacity_radii(const Context& ctx, const GridPtr& grid) {
    return ctx.cfg.verify.capacity_radii.empty() ? default_capacity_radii(grid) : ctx.cfg.verify.capacity_radii;
}

Json check_weight(Context& ctx, Checks& checks) {
    const auto& w = ctx.cfg.scenario.weight;
    const auto& v = ctx.cfg.verify;
    Json j;

    const double growth = check_growth_bound(w, v.growth_t_max, 4000);
    j["growth_constant"] = growth;
    if (w.kind() == WeightKind::PLaplacian) j["growth_closed_form"] = std::abs(w.p() - 2.0);
    else if (w.kind() == WeightKind::MeanCurvature)
        j["growth_closed_form"] = v.growth_t_max * v.growth_t_max / (1.0 + v.growth_t_max * v.growth_t_max);
    j["growth_t_max"] = v.growth_t_max;
    checks.truth("growth_constant_finite", std::isfinite(growth));

    Json muck = Json::array();
    double worst = 0.0;
    std::string muck_error;
    for (double t : v.muckenhoupt_t) {
        double m = kNaN;
        try {
            m = check_muckenhoupt(w, t, v.muckenhoupt_d, 64);
        } catch (const std::domain_error& e) {
            muck_error = e.what();
            m = std::numeric_limits<double>::infinity();
        }
        muck.push_back({{"t", t}, {"value", m}});
        worst = std::max(worst, m);
    }
    j["muckenhoupt_d"] = v.muckenhoupt_d;
    j["muckenhoupt"] = muck;
    j["muckenhoupt_constant"] = worst;
    const double a = w.alpha();
    j["muckenhoupt_closed_form"] = (a > -1.0 && a < 1.0) ? 1.0 / (1.0 - a * a) : kNaN;
    if (!muck_error.empty()) j["muckenhoupt_error"] = muck_error;
    checks.truth("muckenhoupt_finite", std::isfinite(worst));

    // Eigenvalues of the profile part of B along (0, t): A and A + A' t.
    std::vector<std::vector<double>> rows;
    double min_eig = std::numeric_limits<double>::infinity();
    const int samples = 400;
    const double t_lo = std::max(w.grad_floor(), 1e-4 * v.growth_t_max);
    for (int k = 0; k <= samples; ++k) {
        const double t = t_lo * std::pow(v.growth_t_max / t_lo, static_cast<double>(k) / samples);
        const double grad[2] = {0.0, t};
        const auto e = profile_ellipticity(w, grad);
        const double A = w.profile(t);
        const double dA = w.profile_derivative(t);
        min_eig = std::min({min_eig, e.h1, e.h2_lambda});
        rows.push_back({t, A, dA, t * std::abs(dA) / A, e.h1});
    }
    j["min_profile_eigenvalue"] = min_eig;
    checks.ge("min_profile_eigenvalue", min_eig, 0.0);
    write_csv(ctx.opt.out_dir / "check-weight_profile.csv", {"t", "A", "dA", "growth_ratio", "normal_eigenvalue"},
              rows);
    return j;
}

Json solve(Context& ctx, Checks& checks) {
    const auto& s = ctx.cfg.scenario;
    const Field& u = solution(ctx);
    Json j;
    j["solution"] = solution_json(ctx);
    std::vector<std::vector<double>> hist;
    if (ctx.solve) {
        const auto& r = *ctx.solve;
        j["linear_solver"] = r.linear_solver;
        j["used_lateral_reduction"] = r.used_lateral_reduction;
        if (r.status == SolveStatus::SingularJacobian) j["smallest_pivot"] = r.smallest_pivot;
        j["residual_history"] = r.residual_history;
        for (std::size_t k = 0; k < r.residual_history.size(); ++k)
            hist.push_back({static_cast<double>(k), r.residual_history[k]});
        checks.truth("converged", r.converged);
    }
    const auto fixed = dirichlet_mask(u.grid(), s.far_field);
    j["residual_norm"] = residual_norm(weak_residual(u, s), fixed);
    j["boundary_flux_defect"] = boundary_flux_check(u, s);
    j["energy_integral"] = energy_integral(u, s);
    if (s.far_field.kind == FarFieldKind::DirichletProfile) {
        double err = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            err = std::max(err, std::abs(u[i] - s.far_field.profile(u.grid().point(i))));
        j["profile_max_deviation"] = err;
    }
    const auto vals = u.values();
    const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
    j["u_min"] = *lo;
    j["u_max"] = *hi;
    j["scenario_warnings"] = check_scenario_invariants(s, *lo, *hi, u.grid().x_extent());

    write_csv(ctx.opt.out_dir / "solve_residual.csv", {"iteration", "residual_norm"}, hist);
    std::vector<std::vector<double>> rows;
    rows.reserve(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Point p = u.grid().point(i);
        rows.push_back({p.y1, p.y2, p.x, u[i]});
    }
    write_csv(ctx.opt.out_dir / "solve_field.csv", {"y1", "y2", "x", "u"}, rows);
    write_dump(ctx.opt.out_dir / "solve_field.bin", u);
    return j;
}

Json stability(Context& ctx, Checks& checks) {
    const auto& s = ctx.cfg.scenario;
    const Field& u = solution(ctx);
    Json j;
    j["solution"] = solution_json(ctx);
    solution_checks(ctx, checks);

    const auto rep = relaxed_stability_scan(u, s, ctx.cfg.verify.basis_size);
    j["basis_size"] = rep.basis_size;
    j["basis_rank"] = rep.basis_rank;
    j["min_rayleigh"] = rep.min_rayleigh;
    j["tol_stab"] = rep.tol_stab;
    j["minimizer"] = {{"q_value", rep.q_value},
                      {"bulk_term", rep.bulk_term},
                      {"potential_term", rep.potential_term},
                      {"boundary_term", rep.boundary_term}};
    j["degenerate"] = rep.degenerate;
    j["interior_unstable"] = rep.interior_unstable;
    j["stable"] = rep.stable;
    j["flags"] = rep.flags;
    if (!rep.degenerate) checks.ge("min_rayleigh", rep.min_rayleigh, -rep.tol_stab);

    const Field xi = random_direction(u.grid_ptr(), ctx.opt.seed);
    const auto q = quadratic_form(u, xi, s);
    const double fd = second_variation_fd_check(u, xi, s, ctx.cfg.verify.fd_eps);
    j["fd_check"] = {{"seed", ctx.opt.seed}, {"eps", ctx.cfg.verify.fd_eps}, {"q_value", q.q_value}, {"mismatch", fd}};

    write_csv(ctx.opt.out_dir / "stability_terms.csv",
              {"basis_size", "basis_rank", "min_rayleigh", "tol_stab", "bulk", "potential", "boundary"},
              {{static_cast<double>(rep.basis_size), static_cast<double>(rep.basis_rank), rep.min_rayleigh,
                rep.tol_stab, rep.bulk_term, rep.potential_term, rep.boundary_term}});
    return j;
}

Json capacity_json(const CapacityScan& sc) {
    return {{"radii", sc.radii},
            {"lhs", sc.lhs},
            {"rhs", sc.rhs},
            {"ratios", sc.ratios},
            {"bound_ratios", sc.bound_ratios},
            {"tol", sc.tol},
            {"floor", sc.floor},
            {"ratios_nonincreasing", sc.ratios_nonincreasing},
            {"bounds_decreasing", sc.bounds_decreasing},
            {"flags", sc.flags}};
}

Json poincare(Context& ctx, Checks& checks) {
    const auto& s = ctx.cfg.scenario;
    const Field& u = solution(ctx);
    const auto gopt = geometry_options(ctx.cfg);
    Json j;
    j["solution"] = solution_json(ctx);
    solution_checks(ctx, checks);

    struct Cut {
        std::string kind;
        double radius;
        Field phi;
        std::vector<std::string> warnings;
    };
    std::vector<Cut> cuts;
    const auto cap_radii = capacity_radii(ctx, u.grid_ptr());
    for (double R : cap_radii) {
        auto c = capacity_phi(R, u.grid_ptr());
        cuts.push_back({"capacity", R, std::move(c.phi), std::move(c.warnings)});
    }
    for (double r : ctx.cfg.verify.cutoff_radii) cuts.push_back({"cone", r, cone_cutoff(r, u.grid_ptr()), {}});
    if (cuts.empty()) j["flags"] = {"no cutoff fits inside the box; nothing to test"};

    Json arr = Json::array();
    std::vector<std::vector<double>> rows;
    for (const auto& c : cuts) {
        const auto rep = poincare_sides(u, c.phi, s, gopt);
        arr.push_back({{"kind", c.kind},
                       {"radius", c.radius},
                       {"lhs", rep.lhs},
                       {"rhs", rep.rhs},
                       {"margin", rep.margin},
                       {"tol_poin", rep.tol_poin},
                       {"holds", rep.holds},
                       {"min_lambda", rep.min_lambda},
                       {"sa3_provv", rep.sa3_provv},
                       {"sa3", rep.sa3},
                       {"regular_nodes", rep.regular_nodes},
                       {"evaluated_nodes", rep.evaluated_nodes},
                       {"skipped_nodes", rep.skipped_nodes},
                       {"flags", rep.flags},
                       {"warnings", c.warnings}});
        checks.ge(fmt::format("margin[{} R={:.6g}]", c.kind, c.radius), rep.margin, -rep.tol_poin);
        rows.push_back({c.kind == "capacity" ? 0.0 : 1.0, c.radius, rep.lhs, rep.rhs, rep.margin});
    }
    j["cutoffs"] = arr;
    write_csv(ctx.opt.out_dir / "poincare_cutoffs.csv", {"cone", "radius", "lhs", "rhs", "margin"}, rows);

    if (cap_radii.size() >= 2) {
        const auto sc = capacity_scan(u, s, cap_radii, gopt);
        j["capacity"] = capacity_json(sc);
        checks.truth("capacity_ratios_nonincreasing", sc.ratios_nonincreasing);
    }
    return j;
}

Json capacity(Context& ctx, Checks& checks) {
    const auto& s = ctx.cfg.scenario;
    const Field& u = solution(ctx);
    Json j;
    j["solution"] = solution_json(ctx);
    solution_checks(ctx, checks);

    const auto radii = capacity_radii(ctx, u.grid_ptr());
    const auto sc = capacity_scan(u, s, radii, geometry_options(ctx.cfg));
    j["scan"] = capacity_json(sc);
    checks.truth("ratios_nonincreasing", sc.ratios_nonincreasing);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < sc.radii.size(); ++k)
        rows.push_back({sc.radii[k], sc.lhs[k], sc.rhs[k], sc.ratios[k], sc.bound_ratios[k]});
    write_csv(ctx.opt.out_dir / "capacity_scan.csv", {"R", "lhs", "rhs", "ratio", "bound_ratio"}, rows);

    // annulus lemma on the energy density of the profile
    const auto gf = compute_gradients(u, geometry_options(ctx.cfg));
    const int d = u.grid().dims();
    Field h(u.grid_ptr());
    for (std::size_t i = 0; i < u.size(); ++i) {
        double t2 = 0.0;
        for (int a = 0; a < d; ++a) t2 += gf.grad[i][a] * gf.grad[i][a];
        const double t = std::sqrt(t2);
        h[i] = (s.weight.profile(t) + std::abs(s.weight.profile_derivative(t)) * t) * t2;
    }
    Json tat = Json::array();
    for (double R : radii) {
        const auto r = tatay_bound_check(h, R);
        tat.push_back({{"R", R}, {"lhs", r.lhs}, {"rhs", r.rhs}});
        checks.le(fmt::format("annulus_bound[R={:.6g}]", R), r.lhs, r.rhs * (1.0 + 1e-12));
    }
    j["annulus_bound"] = tat;
    return j;
}

Json energy_scan(Context& ctx, Checks& checks) {
    const auto& s = ctx.cfg.scenario;
    const Field& u = solution(ctx);
    const auto& v = ctx.cfg.verify;
    Json j;
    j["solution"] = solution_json(ctx);
    solution_checks(ctx, checks);

    const auto rep = energy_growth_scan(u, s, v.radii);
    const int n = u.grid().n();
    const double expected = n + 1 + s.weight.alpha();
    j["radii"] = rep.radii;
    j["energies"] = rep.energies;
    j["fitted_exponent"] = rep.fitted_exponent;
    j["weight_volumes"] = rep.weight_volumes;
    j["weight_exponent"] = rep.weight_exponent;
    j["weight_exponent_expected"] = expected;
    j["tol_fit"] = v.tol_fit;
    j["degenerate"] = rep.degenerate;
    j["energies_nondecreasing"] = rep.energies_nondecreasing;
    j["flags"] = rep.flags;
    if (!rep.degenerate) checks.le("fitted_exponent", rep.fitted_exponent, 2.0 + v.tol_fit);
    checks.le("weight_exponent_error", std::abs(rep.weight_exponent - expected), v.tol_fit);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < rep.radii.size(); ++k)
        rows.push_back({rep.radii[k], rep.energies[k], rep.weight_volumes[k]});
    write_csv(ctx.opt.out_dir / "energy-scan_energies.csv", {"R", "energy", "weight_volume"}, rows);
    return j;
}

Json symmetry(Context& ctx, Checks& checks) {
    const Field& u = solution(ctx);
    Json j;
    j["solution"] = solution_json(ctx);
    solution_checks(ctx, checks);

    const auto rep = symmetry_detect(u, ctx.cfg.verify.tol_sym);
    Json om = Json::array();
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < rep.slice_x.size(); ++k) {
        om.push_back({rep.omega[k][0], rep.omega[k][1]});
        rows.push_back({rep.slice_x[k], rep.omega[k][0], rep.omega[k][1]});
    }
    j["slice_x"] = rep.slice_x;
    j["omega"] = om;
    j["max_angular_deviation"] = rep.max_angular_deviation;
    j["tol_sym"] = rep.tol_sym;
    j["is_one_dimensional"] = rep.is_one_dimensional;
    j["empty_slices"] = rep.empty_slices;
    j["flags"] = rep.flags;
    checks.le("max_angular_deviation", rep.max_angular_deviation, rep.tol_sym);
    write_csv(ctx.opt.out_dir / "symmetry_omega.csv", {"x", "omega1", "omega2"}, rows);
    return j;
}

Json identity_check(Context& ctx, Checks& checks) {
    const Field& u = solution(ctx);
    const auto gopt = geometry_options(ctx.cfg);
    Json j;
    j["solution"] = solution_json(ctx);
    solution_checks(ctx, checks);

    const auto a3 = identity_A3_residual(u, gopt);
    j["a3"] = {{"sup", a3.sup},
               {"scale", a3.scale},
               {"scaled", a3.scaled()},
               {"evaluated", a3.evaluated},
               {"skipped", a3.skipped},
               {"nan_count", a3.nan_count}};
    checks.le("a3_scaled", a3.scaled(), ctx.cfg.verify.tol_identity);

    const auto dec = decomposition_residuals(u, gopt);
    j["decomposition"] = {{"res_a1", dec.res_a1}, {"res_a2", dec.res_a2}, {"scale", dec.scale}, {"evaluated", dec.evaluated}};

    const auto gf = compute_geometry(u, gopt);
    double hmin = std::numeric_limits<double>::infinity();
    for (double h : gf.hstar)
        if (std::isfinite(h)) hmin = std::min(hmin, h);
    if (!std::isfinite(hmin)) hmin = 0.0;  // no trusted node
    j["hstar_min"] = hmin;
    j["geometry_scale"] = gf.scale;
    j["regular_nodes"] = gf.regular_count;
    j["trusted_nodes"] = gf.trusted_count;
    j["skipped_nodes"] = gf.skipped_count;
    checks.ge("hstar_min", hmin, -1e-10 * gf.scale * gf.scale);

    std::ostringstream os;
    write_geometry_csv(os, u, gf);
    write_text(ctx.opt.out_dir / "identity-check_geometry.csv", os.str());
    return j;
}

using Handler = Json (*)(Context&, Checks&);

Handler handler(const std::string& name) {
    if (name == "check-weight") return check_weight;
    if (name == "solve") return solve;
    if (name == "stability") return stability;
    if (name == "poincare") return poincare;
    if (name == "capacity") return capacity;
    if (name == "energy-scan") return energy_scan;
    if (name == "symmetry") return symmetry;
    if (name == "identity-check") return identity_check;
    return nullptr;
}

SubcommandReport run_one(const std::string& name, Context& ctx) {
    SubcommandReport out;
    out.name = name;
    out.path = ctx.opt.out_dir / (name + ".json");
    Json rep;
    rep["subcommand"] = name;
    rep["status"] = "";
    rep["exit_code"] = 0;
    rep["seed"] = ctx.opt.seed;
    rep["scenario"] = scenario_json(ctx.cfg);
    try {
        Checks checks;
        Json body = handler(name)(ctx, checks);
        out.exit_code = checks.ok() ? kExitOk : kExitViolation;
        rep["checks"] = checks.json();
        for (auto it = body.begin(); it != body.end(); ++it) rep[it.key()] = it.value();
    } catch (const std::exception& e) {
        out.exit_code = kExitError;
        rep["error"] = e.what();
    }
    rep["status"] = out.exit_code == kExitOk ? "ok" : out.exit_code == kExitViolation ? "violation" : "error";
    rep["exit_code"] = out.exit_code;
    write_text(out.path, dump_json(rep));
    out.report = std::move(rep);
    return out;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names{"check-weight", "solve",    "stability",      "poincare", "capacity",
                                                "energy-scan",  "symmetry", "identity-check", "all"};
    return names;
}

Field initial_field(const RunConfig& cfg) {
    if (!cfg.initial.dump.empty()) {
        Field u = read_dump(cfg.initial.dump);
        const auto& g = u.grid();
        if (g.n() != cfg.grid.n) throw std::runtime_error("field dump has n different from the config");
        if (g.alpha() != cfg.scenario.weight.alpha())
            throw std::runtime_error("field dump was graded for a different alpha");
        return u;
    }
    const auto& gs = cfg.grid;
    auto grid = make_grid(gs.n, gs.y_extent, gs.x_extent, gs.ny, gs.nx, cfg.scenario.weight.alpha());
    const auto f = named_field(cfg.initial.field);
    const double k = cfg.initial.scale;
    return sample(grid, [&](const Point& p) { return k * f(p); });
}

Field random_direction(const GridPtr& grid, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    Field xi(grid);
    for (const auto& b : spline_basis(grid, 3)) {
        const double c = coef(rng);
        for (std::size_t i = 0; i < xi.size(); ++i) xi[i] += c * b[i];
    }
    const double m = xi.max_abs();
    if (m > 0.0)
        for (std::size_t i = 0; i < xi.size(); ++i) xi[i] /= m;
    return mask_far_field(xi);
}

Field cone_cutoff(double r, const GridPtr& grid) {
    if (!(r > 0.0)) throw std::invalid_argument("cone cutoff radius must be positive");
    return sample(grid, [r](const Point& p) { return std::max(0.0, 1.0 - p.norm() / r); });
}

RunResult run(const std::string& subcommand, const RunConfig& cfg, const RunOptions& opt) {
    std::vector<std::string> names;
    if (subcommand == "all") {
        for (const auto& n : subcommand_names()) {
            if (n == "all" || (n == "symmetry" && cfg.grid.n == 1)) continue;
            names.push_back(n);
        }
    } else if (handler(subcommand)) {
        names.push_back(subcommand);
    } else {
        throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
    }
    std::filesystem::create_directories(opt.out_dir);

    Context ctx{cfg, opt, std::nullopt, std::nullopt, {}};
    RunResult res;
    bool error = false, violation = false;
    for (const auto& n : names) {
        res.reports.push_back(run_one(n, ctx));
        error = error || res.reports.back().exit_code == kExitError;
        violation = violation || res.reports.back().exit_code == kExitViolation;
    }
    res.exit_code = error ? kExitError : violation ? kExitViolation : kExitOk;
    return res;
}

}  // namespace hslab
