#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hslab/config.hpp"
#include "hslab/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Solve and verify boundary-reaction problems on a truncated half-space"};
    std::string subcommand;
    std::string config_path;
    std::string out_dir = "hslab_out";
    std::string radii;
    std::uint64_t seed = 0;
    std::vector<std::string> overrides;

    app.add_option("subcommand", subcommand, "What to run")
        ->required()
        ->check(CLI::IsMember(hslab::subcommand_names()));
    app.add_option("--config", config_path, "INI scenario file")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory for reports")->capture_default_str();
    app.add_option("--radii", radii, "Comma-separated radii for the energy and capacity scans");
    app.add_option("--seed", seed, "Seed for random test directions")->capture_default_str();
    app.add_option("--tol-override", overrides, "KEY=V for newton.tol or verify.tol_{sym,fit,identity}");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : hslab::kExitError;
    }

    auto loaded = hslab::load_config(config_path);
    if (!loaded.config) {
        for (const auto& e : loaded.errors) std::cerr << config_path << ": " << e << "\n";
        return hslab::kExitError;
    }
    hslab::RunConfig cfg = std::move(*loaded.config);

    try {
        for (const auto& o : overrides) hslab::apply_tol_override(cfg, o);
        if (!radii.empty()) {
            auto list = hslab::parse_real_list(radii);
            for (std::size_t k = 1; k < list.size(); ++k) {
                if (!(list[k] > list[k - 1])) throw std::invalid_argument("--radii must increase strictly");
            }
            if (!(list.front() > 0.0)) throw std::invalid_argument("--radii must be positive");
            cfg.verify.radii = list;
            cfg.verify.capacity_radii.clear();
            for (double r : list) {
                if (r >= std::numbers::e) cfg.verify.capacity_radii.push_back(r);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hslab::kExitError;
    }

    try {
        hslab::RunOptions opt;
        opt.out_dir = out_dir;
        opt.seed = seed;
        const auto res = hslab::run(subcommand, cfg, opt);
        for (const auto& r : res.reports) {
            const std::string status = r.report.value("status", "");
            std::cout << r.name << ": " << status << "  " << r.path.string() << "\n";
            if (r.report.contains("error")) std::cerr << r.name << ": " << r.report["error"].get<std::string>() << "\n";
            if (r.report.contains("checks")) {
                for (const auto& c : r.report["checks"]) {
                    if (!c["holds"].get<bool>()) std::cout << "  failed: " << c["name"].get<std::string>() << "\n";
                }
            }
        }
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return hslab::kExitError;
    }
}
