#include "hslab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace hslab {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"weight", {"kind", "p", "alpha", "grad_floor", "table_t", "table_values"}},
        {"nonlinearity", {"f", "f_scale", "f_exponent", "g", "g_scale", "g_exponent", "g_decay"}},
        {"grid", {"n", "y_extent", "x_extent", "ny", "nx"}},
        {"far_field", {"kind", "profile", "y1", "y2", "top"}},
        {"initial", {"field", "scale", "dump", "solve"}},
        {"newton", {"max_iter", "tol", "damping", "lateral_reduction"}},
        {"verify",
         {"basis_size", "fd_eps", "radii", "capacity_radii", "cutoff_radii", "muckenhoupt_t", "muckenhoupt_d",
          "growth_t_max", "regular_rel", "exclusion_radius", "tol_sym", "tol_fit", "tol_identity"}},
    };
    return s;
}

class Reader {
public:
    Reader(const pt::ptree& tree, std::vector<std::string>& errors) : tree_(tree), errors_(errors) {}

    bool has(const std::string& key) const { return tree_.get_child_optional(pt::ptree::path_type(key, '.')).has_value(); }

    std::optional<std::string> text(const std::string& key, bool required = false) {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (!v) {
            if (required) errors_.push_back("missing required key " + key);
            return std::nullopt;
        }
        std::string s = boost::algorithm::trim_copy(*v);
        // allow quoted strings
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
        return s;
    }

    std::optional<double> real(const std::string& key, bool required = false) {
        auto s = text(key, required);
        if (!s) return std::nullopt;
        try {
            std::size_t pos = 0;
            const double v = std::stod(*s, &pos);
            if (pos != s->size() || !std::isfinite(v)) throw std::invalid_argument(*s);
            return v;
        } catch (const std::exception&) {
            errors_.push_back(fmt::format("{}: expected a finite number, got '{}'", key, *s));
            return std::nullopt;
        }
    }

    std::optional<int> integer(const std::string& key, bool required = false) {
        auto s = text(key, required);
        if (!s) return std::nullopt;
        try {
            std::size_t pos = 0;
            const long v = std::stol(*s, &pos);
            if (pos != s->size() || v < -1000000000L || v > 1000000000L) throw std::invalid_argument(*s);
            return static_cast<int>(v);
        } catch (const std::exception&) {
            errors_.push_back(fmt::format("{}: expected an integer, got '{}'", key, *s));
            return std::nullopt;
        }
    }

    std::optional<bool> boolean(const std::string& key) {
        auto s = text(key);
        if (!s) return std::nullopt;
        if (*s == "true" || *s == "1" || *s == "yes") return true;
        if (*s == "false" || *s == "0" || *s == "no") return false;
        errors_.push_back(fmt::format("{}: expected true or false, got '{}'", key, *s));
        return std::nullopt;
    }

    std::optional<std::vector<double>> list(const std::string& key, bool required = false) {
        auto s = text(key, required);
        if (!s) return std::nullopt;
        try {
            return parse_real_list(*s);
        } catch (const std::exception& e) {
            errors_.push_back(fmt::format("{}: {}", key, e.what()));
            return std::nullopt;
        }
    }

    void fail(const std::string& msg) { errors_.push_back(msg); }

private:
    const pt::ptree& tree_;
    std::vector<std::string>& errors_;
};

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!(v[k] > v[k - 1])) return false;
    }
    return true;
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        boost::algorithm::trim(item);
        if (item.empty()) throw std::invalid_argument("empty entry in list '" + text + "'");
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size() || !std::isfinite(v)) throw std::invalid_argument("not a number: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

ConfigResult parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    ConfigResult res;
    auto& errors = res.errors;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        errors.push_back(fmt::format("syntax error at line {}: {}", e.line(), e.message()));
        return res;
    }

    for (const auto& [section, body] : tree) {
        auto it = schema().find(section);
        if (it == schema().end()) {
            errors.push_back(body.empty() ? "key outside any section: " + section : "unknown section [" + section + "]");
            continue;
        }
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) errors.push_back(fmt::format("unknown key {}.{}", section, key));
        }
    }

    Reader r(tree, errors);

    // weight
    const auto kind = r.text("weight.kind", true);
    const auto alpha = r.real("weight.alpha", true);
    const auto p = r.real("weight.p");
    const auto grad_floor = r.real("weight.grad_floor");
    const auto table_t = r.list("weight.table_t");
    const auto table_v = r.list("weight.table_values");
    if (kind && *kind != "p_laplacian" && *kind != "mean_curvature" && *kind != "tabulated")
        r.fail("weight.kind: expected p_laplacian, mean_curvature or tabulated, got '" + *kind + "'");
    if (kind && *kind == "p_laplacian") {
        if (!p && !r.has("weight.p")) r.fail("missing required key weight.p");
        if (p && !(*p > 1.0)) r.fail("weight.p: p must exceed 1");
    } else if (p) {
        r.fail("weight.p: only used by the p_laplacian weight");
    }
    if (kind && *kind == "tabulated") {
        if (!table_t && !r.has("weight.table_t")) r.fail("missing required key weight.table_t");
        if (!table_v && !r.has("weight.table_values")) r.fail("missing required key weight.table_values");
        if (table_t && table_v && table_t->size() != table_v->size())
            r.fail("weight.table_values: length differs from weight.table_t");
        if (table_t && table_t->size() < 2) r.fail("weight.table_t: need at least two points");
        if (table_t && !strictly_increasing(*table_t)) r.fail("weight.table_t: must increase strictly");
        if (table_t && std::any_of(table_t->begin(), table_t->end(), [](double t) { return !(t > 0); }))
            r.fail("weight.table_t: entries must be positive");
        if (table_v && std::any_of(table_v->begin(), table_v->end(), [](double t) { return !(t > 0); }))
            r.fail("weight.table_values: entries must be positive");
    } else if (table_t || table_v) {
        r.fail("weight.table_t/table_values: only used by the tabulated weight");
    }
    // tabulated weights are checked for integrability by check-weight instead
    if (alpha && kind && *kind != "tabulated" && !(*alpha > -1.0 && *alpha < 1.0))
        r.fail("weight.alpha: alpha must lie strictly inside (-1,1)");
    if (grad_floor && !(*grad_floor > 0.0)) r.fail("weight.grad_floor: must be positive");

    // nonlinearity
    const auto fname = r.text("nonlinearity.f", true);
    const auto gname = r.text("nonlinearity.g");
    const double f_scale = r.real("nonlinearity.f_scale").value_or(1.0);
    const double f_exp = r.real("nonlinearity.f_exponent").value_or(3.0);
    const double g_scale = r.real("nonlinearity.g_scale").value_or(1.0);
    const double g_exp = r.real("nonlinearity.g_exponent").value_or(3.0);
    const double g_decay = r.real("nonlinearity.g_decay").value_or(0.0);
    if (fname && !is_known_reaction(*fname)) r.fail("nonlinearity.f: unknown reaction '" + *fname + "'");
    if (gname && !is_known_reaction(*gname)) r.fail("nonlinearity.g: unknown reaction '" + *gname + "'");
    if (fname && *fname == "power" && !(f_exp >= 1.0)) r.fail("nonlinearity.f_exponent: must be at least 1");
    if (gname && *gname == "power" && !(g_exp >= 1.0)) r.fail("nonlinearity.g_exponent: must be at least 1");
    if (!(g_decay >= 0.0)) r.fail("nonlinearity.g_decay: must be nonnegative");

    // grid
    GridSpec grid;
    const auto n = r.integer("grid.n", true);
    const auto Y = r.real("grid.y_extent", true);
    const auto X = r.real("grid.x_extent", true);
    const auto ny = r.integer("grid.ny", true);
    const auto nx = r.integer("grid.nx", true);
    if (n && *n != 1 && *n != 2) r.fail("grid.n: must be 1 or 2");
    if (Y && !(*Y > 0.0)) r.fail("grid.y_extent: must be positive");
    if (X && !(*X > 0.0)) r.fail("grid.x_extent: must be positive");
    if (ny && *ny < 2) r.fail("grid.ny: need at least 2 intervals");
    if (nx && *nx < 2) r.fail("grid.nx: need at least 2 intervals");
    if (n) grid.n = *n;
    if (Y) grid.y_extent = *Y;
    if (X) grid.x_extent = *X;
    if (ny) grid.ny = *ny;
    if (nx) grid.nx = *nx;

    // far field
    FarFieldBC bc;
    const auto ff_kind = r.text("far_field.kind");
    const auto profile = r.text("far_field.profile");
    if (ff_kind && *ff_kind != "neumann" && *ff_kind != "dirichlet")
        r.fail("far_field.kind: expected neumann or dirichlet, got '" + *ff_kind + "'");
    if (ff_kind && *ff_kind == "dirichlet") {
        bc.kind = FarFieldKind::DirichletProfile;
        if (!profile) {
            if (!r.has("far_field.profile")) r.fail("missing required key far_field.profile");
        } else if (!is_known_field(*profile)) {
            r.fail("far_field.profile: unknown field '" + *profile + "'");
        } else {
            bc.profile_name = *profile;
            bc.profile = named_field(*profile);
        }
    } else if (profile) {
        r.fail("far_field.profile: only used with dirichlet far field");
    }
    bc.faces.y1 = r.boolean("far_field.y1").value_or(true);
    bc.faces.y2 = r.boolean("far_field.y2").value_or(true);
    bc.faces.top = r.boolean("far_field.top").value_or(true);

    // initial
    InitialSpec init;
    if (auto f = r.text("initial.field")) {
        if (!is_known_field(*f)) r.fail("initial.field: unknown field '" + *f + "'");
        init.field = *f;
    }
    init.scale = r.real("initial.scale").value_or(1.0);
    if (auto d = r.text("initial.dump")) {
        std::filesystem::path dp(*d);
        init.dump = dp.is_relative() && !base_dir.empty() ? base_dir / dp : dp;
    }
    init.solve = r.boolean("initial.solve").value_or(true);

    // newton
    NewtonOptions newton;
    if (auto v = r.integer("newton.max_iter")) {
        if (*v < 1) r.fail("newton.max_iter: must be at least 1");
        newton.max_iter = *v;
    }
    if (auto v = r.real("newton.tol")) {
        if (!(*v > 0.0)) r.fail("newton.tol: tolerances must be positive");
        newton.tol = *v;
    }
    if (auto v = r.real("newton.damping")) {
        if (!(*v > 0.0 && *v <= 1.0)) r.fail("newton.damping: must lie in (0,1]");
        newton.damping = *v;
    }
    newton.lateral_reduction = r.boolean("newton.lateral_reduction").value_or(true);

    // verify
    VerifyOptions vo;
    if (auto v = r.integer("verify.basis_size")) {
        if (*v < 1) r.fail("verify.basis_size: must be positive");
        vo.basis_size = *v;
    }
    auto positive = [&](const char* key, double& dst) {
        if (auto v = r.real(key)) {
            if (!(*v > 0.0)) r.fail(fmt::format("{}: must be positive", key));
            dst = *v;
        }
    };
    positive("verify.fd_eps", vo.fd_eps);
    positive("verify.muckenhoupt_d", vo.muckenhoupt_d);
    positive("verify.growth_t_max", vo.growth_t_max);
    positive("verify.regular_rel", vo.regular_rel);
    positive("verify.tol_sym", vo.tol_sym);
    positive("verify.tol_fit", vo.tol_fit);
    positive("verify.tol_identity", vo.tol_identity);
    if (auto v = r.real("verify.exclusion_radius")) {
        if (!(*v >= 0.0)) r.fail("verify.exclusion_radius: must be nonnegative");
        vo.exclusion_radius = *v;
    }
    auto radii = [&](const char* key, std::vector<double>& dst, double min) {
        if (auto v = r.list(key)) {
            if (!strictly_increasing(*v)) r.fail(fmt::format("{}: radii must increase strictly", key));
            if (std::any_of(v->begin(), v->end(), [&](double x) { return !(x >= min) || !(x > 0.0); }))
                r.fail(fmt::format("{}: radii must be at least {:.6g}", key, min));
            dst = *v;
        }
    };
    radii("verify.radii", vo.radii, 0.0);
    radii("verify.capacity_radii", vo.capacity_radii, std::numbers::e);
    radii("verify.cutoff_radii", vo.cutoff_radii, 0.0);
    if (auto v = r.list("verify.muckenhoupt_t")) {
        if (std::any_of(v->begin(), v->end(), [](double x) { return !(x > 0.0); }))
            r.fail("verify.muckenhoupt_t: entries must be positive");
        vo.muckenhoupt_t = *v;
    }

    if (!errors.empty()) return res;

    const double floor = grad_floor.value_or(1e-10);
    std::optional<WeightModel> w;
    try {
        if (*kind == "p_laplacian") w = WeightModel::p_laplacian(*p, *alpha, floor);
        else if (*kind == "mean_curvature") w = WeightModel::mean_curvature(*alpha, floor);
        else w = WeightModel::tabulated(*table_t, *table_v, *alpha, floor);
    } catch (const std::exception& e) {
        errors.push_back(std::string("weight: ") + e.what());
        return res;
    }
    RunConfig cfg(Scenario(std::move(*w)));
    cfg.scenario.f = make_reaction(*fname, f_scale, f_exp);
    cfg.scenario.g = make_reaction(gname.value_or("zero"), g_scale, g_exp);
    cfg.scenario.g_decay = g_decay;
    cfg.scenario.far_field = bc;
    cfg.scenario.newton = newton;
    cfg.grid = grid;
    cfg.initial = init;
    cfg.verify = vo;
    res.config.emplace(std::move(cfg));
    return res;
}

ConfigResult load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        ConfigResult res;
        res.errors.push_back("cannot read config " + path.string());
        return res;
    }
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

void apply_tol_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("tolerance override must look like KEY=V");
    const std::string key = boost::algorithm::trim_copy(assignment.substr(0, eq));
    const std::string val = boost::algorithm::trim_copy(assignment.substr(eq + 1));
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(val, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != val.size() || !(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("tolerance override " + key + ": value must be a positive number");
    if (key == "newton.tol") cfg.scenario.newton.tol = v;
    else if (key == "verify.tol_sym") cfg.verify.tol_sym = v;
    else if (key == "verify.tol_fit") cfg.verify.tol_fit = v;
    else if (key == "verify.tol_identity") cfg.verify.tol_identity = v;
    else throw std::invalid_argument("unknown tolerance key " + key);
}

}  // namespace hslab
