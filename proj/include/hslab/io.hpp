#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hslab/grid.hpp"

namespace hslab {

using Json = nlohmann::ordered_json;

/// Numbers as %.17g, NaN and infinities as null, keys in insertion order.
std::string dump_json(const Json& j, int indent = 2);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Plain CSV; numbers formatted like the JSON reports.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/**
 * Binary field dump: 8-byte tag "HSLAB001", int32 n, ny, nx, pad, then
 * f64 y_extent, x_extent, alpha and the nodal values, all little-endian.
 */
void write_dump(const std::filesystem::path& path, const Field& u);
Field read_dump(const std::filesystem::path& path);

}  // namespace hslab
