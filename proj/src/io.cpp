#include "hslab/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace hslab {

namespace {

constexpr char kTag[8] = {'H', 'S', 'L', 'A', 'B', '0', '0', '1'};

std::string number(double v) {
    if (!std::isfinite(v)) return "null";
    return fmt::format("{:.17g}", v);
}

void emit(std::string& out, const Json& j, int indent, int depth) {
    const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
    const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{";
            out += nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) {
                    out += ",";
                    out += nl;
                }
                first = false;
                out += pad;
                out += Json(it.key()).dump();
                out += indent > 0 ? ": " : ":";
                emit(out, it.value(), indent, depth + 1);
            }
            out += nl;
            out += close;
            out += "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            // arrays of scalars stay on one line
            bool flat = true;
            for (const auto& e : j) flat = flat && !e.is_structured();
            out += "[";
            if (!flat) out += nl;
            bool first = true;
            for (const auto& e : j) {
                if (!first) {
                    out += ",";
                    out += flat ? (indent > 0 ? " " : "") : nl;
                }
                first = false;
                if (!flat) out += pad;
                emit(out, e, indent, depth + 1);
            }
            if (!flat) {
                out += nl;
                out += close;
            }
            out += "]";
            return;
        }
        case Json::value_t::number_float:
            out += number(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

template <class T>
void put(std::ostream& os, T v) {
    if constexpr (std::endian::native == std::endian::big) {
        char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        os.write(b, sizeof(T));
    } else {
        os.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
}

template <class T>
T get(std::istream& is) {
    char b[sizeof(T)];
    if (!is.read(b, sizeof(T))) throw std::runtime_error("truncated field dump");
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    }
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
    std::string out;
    emit(out, j, indent, 0);
    out += "\n";
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
    os << "\n";
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw std::invalid_argument("CSV row length does not match the header");
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << (std::isfinite(row[k]) ? number(row[k]) : "nan");
        os << "\n";
    }
    write_text(path, os.str());
}

void write_dump(const std::filesystem::path& path, const Field& u) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const auto& g = u.grid();
    os.write(kTag, sizeof(kTag));
    put<std::int32_t>(os, g.n());
    put<std::int32_t>(os, g.ny());
    put<std::int32_t>(os, g.nx());
    put<std::int32_t>(os, 0);
    put<double>(os, g.y_extent());
    put<double>(os, g.x_extent());
    put<double>(os, g.alpha());
    for (double v : u.values()) put<double>(os, v);
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

Field read_dump(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open field dump " + path.string());
    char tag[8];
    if (!is.read(tag, sizeof(tag)) || std::memcmp(tag, kTag, sizeof(tag)) != 0)
        throw std::runtime_error(path.string() + " is not a field dump");
    const int n = get<std::int32_t>(is);
    const int ny = get<std::int32_t>(is);
    const int nx = get<std::int32_t>(is);
    get<std::int32_t>(is);
    const double Y = get<double>(is);
    const double X = get<double>(is);
    const double alpha = get<double>(is);
    auto grid = make_grid(n, Y, X, ny, nx, alpha);
    std::vector<double> values(grid->node_count());
    for (auto& v : values) v = get<double>(is);
    if (is.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in field dump");
    return Field(grid, std::move(values));
}

}  // namespace hslab
