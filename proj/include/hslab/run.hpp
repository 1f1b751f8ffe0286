#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hslab/config.hpp"
#include "hslab/io.hpp"

namespace hslab {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitViolation = 2 };

const std::vector<std::string>& subcommand_names();

struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 0;
};

struct SubcommandReport {
    std::string name;
    int exit_code = kExitOk;
    Json report;
    std::filesystem::path path;  ///< where the JSON was written
};

struct RunResult {
    int exit_code = kExitOk;
    std::vector<SubcommandReport> reports;
};

/**
 * Runs one subcommand (or "all") and writes <name>.json plus
 * <name>_<quantity>.csv files into out_dir. Exit code 0 when every
 * asserted inequality holds, 2 when one fails, 1 on an execution error.
 */
RunResult run(const std::string& subcommand, const RunConfig& cfg, const RunOptions& opt = {});

/// Initial field from the config: a dump if given, else a scaled named field.
Field initial_field(const RunConfig& cfg);

/// Smooth random direction vanishing on the far field, unit max-norm.
Field random_direction(const GridPtr& grid, std::uint64_t seed);

/// (1 - |X|/r)+ centred at the origin.
Field cone_cutoff(double r, const GridPtr& grid);

}  // namespace hslab
