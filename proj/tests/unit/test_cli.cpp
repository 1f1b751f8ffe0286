#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "hslab/config.hpp"
#include "hslab/io.hpp"
#include "hslab/run.hpp"

using namespace hslab;
namespace fs = std::filesystem;

namespace {

const char* kManufactured = R"(
[weight]
kind = p_laplacian
p = 2
alpha = 0

[nonlinearity]
f = linear

[grid]
n = 1
y_extent = 3.141592653589793
x_extent = 6
ny = 16
nx = 16

[far_field]
kind = dirichlet
profile = exp_cos

[initial]
field = exp_cos
scale = 0.9
)";

bool mentions(const std::vector<std::string>& errors, const std::string& text) {
    return std::any_of(errors.begin(), errors.end(), [&](const auto& e) { return e.find(text) != std::string::npos; });
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    return s.replace(pos, from.size(), to);
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("hslab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("valid manufactured config") {
    auto res = parse_config(kManufactured);
    REQUIRE(res.errors.empty());
    REQUIRE(res.config);
    const auto& c = *res.config;
    CHECK(c.scenario.weight.kind() == WeightKind::PLaplacian);
    CHECK(c.scenario.weight.p() == 2.0);
    CHECK(c.scenario.f.label == "linear");
    CHECK(c.scenario.far_field.kind == FarFieldKind::DirichletProfile);
    CHECK(c.grid.ny == 16);
    CHECK(c.initial.scale == 0.9);
    CHECK(c.verify.tol_sym == 1e-3);
}

TEST_CASE("config rejects p <= 1 and alpha outside (-1,1)") {
    auto bad_p = parse_config(replace(kManufactured, "p = 2", "p = 0.5"));
    CHECK_FALSE(bad_p.config);
    CHECK(mentions(bad_p.errors, "p must exceed 1"));
    auto bad_a = parse_config(replace(kManufactured, "alpha = 0", "alpha = 1.0"));
    CHECK_FALSE(bad_a.config);
    CHECK(mentions(bad_a.errors, "alpha must lie strictly inside (-1,1)"));
}

TEST_CASE("config collects every violation") {
    std::string text = replace(kManufactured, "p = 2", "p = 0.5\ncolour = blue");
    text = replace(text, "ny = 16", "");
    text = replace(text, "f = linear", "f = sine");
    text += "\n[verify]\nradii = 3, 2\ntol_fit = 0\n[extras]\nk = 1\n";
    auto res = parse_config(text);
    CHECK_FALSE(res.config);
    CHECK(mentions(res.errors, "p must exceed 1"));
    CHECK(mentions(res.errors, "unknown key weight.colour"));
    CHECK(mentions(res.errors, "missing required key grid.ny"));
    CHECK(mentions(res.errors, "unknown reaction 'sine'"));
    CHECK(mentions(res.errors, "verify.radii"));
    CHECK(mentions(res.errors, "verify.tol_fit"));
    CHECK(mentions(res.errors, "unknown section [extras]"));
    CHECK(res.errors.size() >= 7);
}

TEST_CASE("config syntax errors and capacity radius floor") {
    auto res = parse_config("[weight\nkind = p_laplacian\n");
    CHECK_FALSE(res.config);
    CHECK(mentions(res.errors, "syntax error"));
    auto cap = parse_config(std::string(kManufactured) + "[verify]\ncapacity_radii = 2, 5\n");
    CHECK(mentions(cap.errors, "verify.capacity_radii"));
}

TEST_CASE("tolerance overrides") {
    auto cfg = *parse_config(kManufactured).config;
    apply_tol_override(cfg, "verify.tol_sym=1e-5");
    apply_tol_override(cfg, "newton.tol = 1e-9");
    CHECK(cfg.verify.tol_sym == 1e-5);
    CHECK(cfg.scenario.newton.tol == 1e-9);
    CHECK_THROWS_AS(apply_tol_override(cfg, "verify.tol_sym=-1"), std::invalid_argument);
    CHECK_THROWS_AS(apply_tol_override(cfg, "grid.ny=3"), std::invalid_argument);
    CHECK_THROWS_AS(apply_tol_override(cfg, "verify.tol_sym"), std::invalid_argument);
}

TEST_CASE("json numbers round-trip with 17 digits") {
    Json j;
    j["a"] = 0.1;
    j["b"] = std::numeric_limits<double>::quiet_NaN();
    j["c"] = std::vector<double>{1.0 / 3.0, -std::numeric_limits<double>::infinity()};
    j["d"] = 7;
    const std::string text = dump_json(j);
    CHECK(text.find("0.10000000000000001") != std::string::npos);
    auto back = Json::parse(text);
    CHECK(back["a"].get<double>() == 0.1);
    CHECK(back["b"].is_null());
    CHECK(back["c"][0].get<double>() == 1.0 / 3.0);
    CHECK(back["c"][1].is_null());
    CHECK(back["d"].get<int>() == 7);
}

TEST_CASE("field dump round-trip") {
    const auto dir = scratch("dump");
    auto g = make_grid(2, 1.5, 2.0, 6, 5, 0.3);
    Field u = sample(g, [](const Point& p) { return std::sin(p.y1) * p.y2 + std::exp(-p.x); });
    write_dump(dir / "u.bin", u);
    Field v = read_dump(dir / "u.bin");
    CHECK(v.grid().n() == 2);
    CHECK(v.grid().ny() == 6);
    CHECK(v.grid().alpha() == 0.3);
    REQUIRE(v.size() == u.size());
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(v[i] == u[i]);
    {
        std::ofstream os(dir / "u.bin", std::ios::binary | std::ios::app);
        os << 'x';
    }
    CHECK_THROWS(read_dump(dir / "u.bin"));
    write_text(dir / "junk.bin", "not a dump at all");
    CHECK_THROWS(read_dump(dir / "junk.bin"));
}

TEST_CASE("check-weight reports 4/3 for mean curvature with alpha = 1/2") {
    const auto dir = scratch("mc");
    std::string text = replace(kManufactured, "kind = p_laplacian\np = 2\nalpha = 0", "kind = mean_curvature\nalpha = 0.5");
    auto cfg = *parse_config(text).config;
    RunOptions opt;
    opt.out_dir = dir;
    auto res = run("check-weight", cfg, opt);
    CHECK(res.exit_code == kExitOk);
    REQUIRE(res.reports.size() == 1);
    auto j = Json::parse(slurp(dir / "check-weight.json"));
    CHECK(j["muckenhoupt_constant"].get<double>() == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(fs::exists(dir / "check-weight_profile.csv"));
}

TEST_CASE("exit codes") {
    auto cfg = *parse_config(kManufactured).config;
    RunOptions opt;
    opt.out_dir = scratch("codes");
    cfg.verify.radii = {1.0, 2.0};
    CHECK(run("energy-scan", cfg, opt).exit_code == kExitError);
    auto j = Json::parse(slurp(opt.out_dir / "energy-scan.json"));
    CHECK(j["status"] == "error");
    CHECK_THROWS_AS(run("plot", cfg, opt), std::invalid_argument);

    // a far-from-converged budget is a violated assertion, not a crash
    cfg.scenario.newton.max_iter = 1;
    cfg.initial.scale = 0.0;
    cfg.scenario.newton.tol = 1e-300;
    CHECK(run("solve", cfg, opt).exit_code == kExitViolation);
}

TEST_CASE("all on the manufactured case: seven reports, deterministic") {
    auto cfg = *parse_config(kManufactured).config;
    RunOptions a, b;
    a.out_dir = scratch("all_a");
    b.out_dir = scratch("all_b");
    a.seed = b.seed = 11;
    auto ra = run("all", cfg, a);
    auto rb = run("all", cfg, b);
    CHECK(ra.exit_code == kExitOk);
    CHECK(ra.reports.size() == 7);
    for (const auto& r : ra.reports) {
        CHECK(r.exit_code == kExitOk);
        CHECK(slurp(r.path) == slurp(b.out_dir / r.path.filename()));
    }
}

TEST_CASE("poincare on a saddle dump reports a positive capacity floor") {
    const auto dir = scratch("saddle");
    auto g = make_grid(2, 8.0, 8.0, 16, 8, 0.0);
    write_dump(dir / "saddle.bin", sample(g, named_field("saddle")));
    std::string text = replace(kManufactured, "n = 1", "n = 2");
    text = replace(text, "f = linear", "f = double_well");
    text = replace(text, "[far_field]\nkind = dirichlet\nprofile = exp_cos\n", "");
    text = replace(text, "field = exp_cos\nscale = 0.9", "dump = saddle.bin\nsolve = false");
    text += "[verify]\ncapacity_radii = 2.718281828459045, 4.4816890703380645, 7.38905609893065\n";
    auto parsed = parse_config(text, dir);
    REQUIRE(parsed.errors.empty());
    RunOptions opt;
    opt.out_dir = dir / "out";
    auto res = run("poincare", *parsed.config, opt);
    CHECK(res.exit_code == kExitViolation);
    auto j = Json::parse(slurp(opt.out_dir / "poincare.json"));
    CHECK(j["capacity"]["floor"].get<double>() > 1.0);
    CHECK_FALSE(j["capacity"]["ratios_nonincreasing"].get<bool>());
}
