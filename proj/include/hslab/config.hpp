#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hslab/scenario.hpp"

namespace hslab {

struct GridSpec {
    int n = 1;
    double y_extent = 1.0;
    double x_extent = 1.0;
    int ny = 32;
    int nx = 32;
};

struct InitialSpec {
    std::string field = "zero";  ///< named field, used when no dump is given
    double scale = 1.0;
    std::filesystem::path dump;  ///< binary field dump; overrides field
    bool solve = true;           ///< false: take the initial field as the solution
};

struct VerifyOptions {
    int basis_size = 64;
    double fd_eps = 1e-3;
    std::vector<double> radii{1.0, 1.5, 2.0, 3.0};          ///< energy-growth balls
    std::vector<double> capacity_radii;                      ///< phi_R cutoffs, R >= e
    std::vector<double> cutoff_radii;                        ///< extra cone cutoffs (1 - |X|/r)+
    std::vector<double> muckenhoupt_t{0.1, 1.0, 10.0};
    double muckenhoupt_d = 1.0;
    double growth_t_max = 10.0;
    double regular_rel = 1e-6;
    double exclusion_radius = 0.0;
    double tol_sym = 1e-3;
    double tol_fit = 0.1;
    double tol_identity = 1e-6;
};

struct RunConfig {
    explicit RunConfig(Scenario s) : scenario(std::move(s)) {}
    Scenario scenario;
    GridSpec grid;
    InitialSpec initial;
    VerifyOptions verify;
};

struct ConfigResult {
    std::optional<RunConfig> config;
    std::vector<std::string> errors;  ///< every violation found, empty on success
};

/**
 * INI text with sections [weight], [nonlinearity], [grid], [far_field],
 * [initial], [newton], [verify]. Unknown sections and keys are errors.
 * Relative dump paths resolve against base_dir.
 */
ConfigResult parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ConfigResult load_config(const std::filesystem::path& path);

/// Apply KEY=V for a tolerance key (newton.tol, verify.tol_sym, verify.tol_fit, verify.tol_identity).
void apply_tol_override(RunConfig& cfg, const std::string& assignment);

/// Comma-separated reals.
std::vector<double> parse_real_list(const std::string& text);

}  // namespace hslab
