#include "hslab/scenario.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace hslab {

Reaction make_reaction(const std::string& kind, double k, double q) {
    Reaction r;
    if (kind == "zero") {
        r.label = "zero";
    } else if (kind == "linear") {
        r.label = "linear";
        r.value = [k](double u) { return k * u; };
        r.derivative = [k](double) { return k; };
    } else if (kind == "double_well") {
        r.label = "double_well";
        r.value = [k](double u) { return k * (u - u * u * u); };
        r.derivative = [k](double u) { return k * (1.0 - 3.0 * u * u); };
    } else if (kind == "power") {
        if (!(q >= 1.0)) throw std::invalid_argument("power nonlinearity needs exponent >= 1");
        r.label = "power";
        r.value = [k, q](double u) { return k * std::pow(std::abs(u), q - 1.0) * u; };
        r.derivative = [k, q](double u) { return k * q * std::pow(std::abs(u), q - 1.0); };
    } else {
        throw std::invalid_argument("unknown nonlinearity '" + kind + "'");
    }
    return r;
}

bool is_known_reaction(const std::string& kind) {
    return kind == "zero" || kind == "linear" || kind == "double_well" || kind == "power";
}

namespace {

const std::map<std::string, AnalyticField>& field_registry() {
    static const std::map<std::string, AnalyticField> registry = {
        {"zero", [](const Point&) { return 0.0; }},
        {"constant_one", [](const Point&) { return 1.0; }},
        {"linear_y1", [](const Point& p) { return p.y1; }},
        {"exp_cos", [](const Point& p) { return std::exp(-p.x) * std::cos(p.y1); }},
        {"tanh_layer", [](const Point& p) { return std::tanh(p.y1); }},
        {"diagonal_tanh", [](const Point& p) { return std::tanh((p.y1 + p.y2) / std::sqrt(2.0)); }},
        {"radial", [](const Point& p) { return p.y1 * p.y1 + p.y2 * p.y2; }},
        {"saddle", [](const Point& p) { return p.y1 * p.y1 - p.y2 * p.y2; }},
    };
    return registry;
}

}  // namespace

AnalyticField named_field(const std::string& name) {
    const auto& reg = field_registry();
    auto it = reg.find(name);
    if (it == reg.end()) throw std::invalid_argument("unknown field '" + name + "'");
    return it->second;
}

bool is_known_field(const std::string& name) { return field_registry().count(name) > 0; }

std::vector<std::string> known_field_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : field_registry()) names.push_back(k);
    return names;
}

double Scenario::g_value(double x, double u) const {
    const double v = g.value(u);
    return g_decay == 0.0 ? v : std::exp(-g_decay * x) * v;
}

double Scenario::g_u(double x, double u) const {
    const double v = g.derivative(u);
    return g_decay == 0.0 ? v : std::exp(-g_decay * x) * v;
}

std::vector<char> dirichlet_mask(const HalfSpaceGrid& grid, const FarFieldBC& bc) {
    std::vector<char> mask(grid.node_count(), 0);
    if (bc.kind != FarFieldKind::DirichletProfile) return mask;
    for (std::size_t f = 0; f < mask.size(); ++f) {
        const NodeIndex idx = grid.unflatten(f);
        bool on = false;
        if (bc.faces.top && idx.ix == grid.nx()) on = true;
        if (bc.faces.y1 && (idx.iy[0] == 0 || idx.iy[0] == grid.ny())) on = true;
        if (grid.n() == 2 && bc.faces.y2 && (idx.iy[1] == 0 || idx.iy[1] == grid.ny())) on = true;
        mask[f] = on ? 1 : 0;
    }
    return mask;
}

std::vector<std::string> check_scenario_invariants(const Scenario& s, double u_min, double u_max,
                                                   double x_extent) {
    std::vector<std::string> problems;
    const double pad = 0.1 * std::max(1.0, u_max - u_min);
    const double lo = u_min - pad, hi = u_max + pad;
    constexpr int kSamples = 200;
    double prev_u = lo, prev_f = s.f_value(lo);
    double lip = 0.0;
    for (int k = 1; k <= kSamples; ++k) {
        const double u = lo + (hi - lo) * k / kSamples;
        const double fu = s.f_value(u);
        if (!std::isfinite(fu)) {
            problems.push_back("f is not finite on the sampled range");
            break;
        }
        lip = std::max(lip, std::abs(fu - prev_f) / (u - prev_u));
        prev_u = u;
        prev_f = fu;
    }
    if (!(lip < 1e12)) problems.push_back("f is not locally Lipschitz on the sampled range");
    for (int k = 1; k <= kSamples; ++k) {
        const double x = x_extent * k / kSamples;
        if (!std::isfinite(s.g_value(x, 0.0))) {
            problems.push_back("g(., 0) is unbounded on (0, X)");
            break;
        }
    }
    return problems;
}

}  // namespace hslab
