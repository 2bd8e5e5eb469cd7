#pragma once

// Result tables and their CSV / JSON serializations.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "catmap/error.hpp"
#include "catmap/version.hpp"

namespace catmap::lab {

/// Empty cells (monostate) mark values a failed cell could not produce.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;
    nlohmann::json meta = nlohmann::json::object(); // run context, JSON mirror only

    void add(std::vector<Value> row) {
        if (row.size() != columns.size()) throw Error("table " + name + ": row width mismatch");
        rows.push_back(std::move(row));
    }
};

/// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline std::string csv_field(const Value& v) {
    struct {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(std::int64_t x) const { return std::to_string(x); }
        std::string operator()(double x) const { return format_double(x); }
        std::string operator()(bool b) const { return b ? "1" : "0"; }
        std::string operator()(const std::string& s) const {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string q = "\"";
            for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
            return q + "\"";
        }
    } visitor;
    return std::visit(visitor, v);
}

inline nlohmann::json json_value(const Value& v) {
    struct {
        nlohmann::json operator()(std::monostate) const { return nullptr; }
        nlohmann::json operator()(std::int64_t x) const { return x; }
        nlohmann::json operator()(double x) const {
            if (!std::isfinite(x)) return format_double(x);
            return x;
        }
        nlohmann::json operator()(bool b) const { return b; }
        nlohmann::json operator()(const std::string& s) const { return s; }
    } visitor;
    return std::visit(visitor, v);
}

} // namespace detail

struct Provenance {
    std::string command;
    std::string config_hash;
};

/// First line: "# schema_version=.. config_hash=.. code_version=.. command=..",
/// then the column header, then one line per row.
inline std::string to_csv(const Table& t, const Provenance& p) {
    std::string out = "# schema_version=" + std::to_string(kSchemaVersion) + " config_hash=" + p.config_hash +
                      " code_version=" + kCodeVersion + " command=" + p.command + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + detail::csv_field(row[i]);
        out += "\n";
    }
    return out;
}

inline nlohmann::json to_json(const Table& t, const Provenance& p) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json r = nlohmann::json::object();
        for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = detail::json_value(row[i]);
        rows.push_back(std::move(r));
    }
    nlohmann::json out = {{"schema_version", kSchemaVersion}, {"config_hash", p.config_hash},
                          {"code_version", kCodeVersion},     {"command", p.command},
                          {"table", t.name},                  {"columns", t.columns}};
    if (!t.meta.empty()) out["meta"] = t.meta;
    out["rows"] = std::move(rows);
    return out;
}

/// Writes <dir>/<table>.csv and <dir>/<table>.json.
inline void write_table(const std::filesystem::path& dir, const Table& t, const Provenance& p) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / (t.name + ".csv"), std::ios::binary);
        if (!csv) throw Error("cannot write " + (dir / (t.name + ".csv")).string());
        csv << to_csv(t, p);
    }
    std::ofstream js(dir / (t.name + ".json"), std::ios::binary);
    if (!js) throw Error("cannot write " + (dir / (t.name + ".json")).string());
    js << to_json(t, p).dump(2) << "\n";
}

} // namespace catmap::lab
