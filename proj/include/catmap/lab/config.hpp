#pragma once

// Experiment configuration: a single JSON document, validated up front.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "catmap/coherent.hpp"
#include "catmap/error.hpp"
#include "catmap/quantization.hpp"
#include "catmap/torus.hpp"
#include "catmap/weyl.hpp"

namespace catmap::lab {

/// Raised for malformed or invalid configuration; maps to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct PhaseOverride {
    Rational u, v;
};

struct ExperimentConfig {
    std::array<std::int64_t, 4> map{1, 1, 1, 2};
    std::vector<std::int64_t> N{16};
    std::string partition_name = "quadrants";
    std::vector<Atom> partition_atoms; // empty unless given explicitly
    int n_max = 4;
    std::uint64_t samples = 100000;
    std::vector<std::uint64_t> seeds{1};
    double d0 = 0.25;
    std::uint64_t trials = 10000;
    std::vector<int> k{0, 1, 2};
    std::vector<FunctionSpec> functions{TrigSpec::monomial(1, 0)};
    std::vector<std::string> function_names{"trig(1,0)"};
    std::optional<PhaseOverride> phases;
    Anchor anchor = Anchor::label;
    std::string out_dir = ".";
    int workers = 1;
    nlohmann::json source = nlohmann::json::object(); // effective document, used for hashing

    ToralAutomorphism automorphism() const { return {map[0], map[1], map[2], map[3]}; }

    TorusPartition partition() const {
        if (!partition_atoms.empty()) return TorusPartition(partition_atoms);
        if (partition_name == "quadrants") return TorusPartition::quadrants();
        if (partition_name == "vertical_halves") return TorusPartition::vertical_halves();
        if (partition_name == "whole") return TorusPartition::whole();
        throw ConfigError("unknown partition '" + partition_name + "'");
    }

    WeylSystem weyl_system(std::int64_t n) const {
        if (phases) return WeylSystem(n, phases->u, phases->v);
        return weyl_system_for(automorphism(), n);
    }
};

namespace detail {

inline Rational parse_rational(const nlohmann::json& j, const char* what) {
    if (j.is_number_integer()) return Rational::make(j.get<std::int64_t>(), 1);
    if (!j.is_string()) throw ConfigError(std::string(what) + ": expected integer or \"p/q\" string");
    const auto s = j.get<std::string>();
    long long p = 0, q = 1;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%lld/%lld%c", &p, &q, &tail) == 2 || std::sscanf(s.c_str(), "%lld%c", &p, &tail) == 1) {
        if (q == 0) throw ConfigError(std::string(what) + ": zero denominator");
        return Rational::make(p, q);
    }
    throw ConfigError(std::string(what) + ": cannot parse '" + s + "'");
}

inline Rect parse_rect(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("x") || !j.contains("y")) throw ConfigError("rect: expected {\"x\":[lo,hi],\"y\":[lo,hi]}");
    const auto x = j.at("x").get<std::vector<double>>();
    const auto y = j.at("y").get<std::vector<double>>();
    if (x.size() != 2 || y.size() != 2) throw ConfigError("rect: intervals need two endpoints");
    return {x[0], x[1], y[0], y[1]};
}

inline Atom parse_atom(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("atom: expected an array of rects");
    Atom a;
    for (const auto& r : j) a.push_back(parse_rect(r));
    return a;
}

inline std::pair<FunctionSpec, std::string> parse_function(const nlohmann::json& j) {
    const auto type = j.value("type", std::string{});
    if (type == "trig" || type == "cos") {
        const auto f = j.at("freq").get<std::vector<std::int64_t>>();
        if (f.size() != 2) throw ConfigError("function: freq needs two integers");
        const std::string name = type + "(" + std::to_string(f[0]) + "," + std::to_string(f[1]) + ")";
        if (type == "trig") return {TrigSpec::monomial(f[0], f[1]), name};
        return {TrigSpec::cosine(f[0], f[1]), name};
    }
    if (type == "indicator") return {IndicatorSpec{parse_atom(j.at("rects"))}, "indicator"};
    throw ConfigError("function: unknown type '" + type + "'");
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

} // namespace detail

inline const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys{"map",  "N",  "partition", "n_max",     "samples", "seeds",
                                               "d0",   "trials", "k",     "functions", "phases",  "anchor",
                                               "out",  "workers"};
    return keys;
}

/// Builds a validated config from a JSON document. Missing keys take defaults.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
    for (const auto& [key, _] : doc.items())
        if (std::find(known_config_keys().begin(), known_config_keys().end(), key) == known_config_keys().end())
            throw ConfigError("config: unknown key '" + key + "'");
    ExperimentConfig c;
    try {
        if (doc.contains("map")) {
            const auto m = doc.at("map").get<std::vector<std::int64_t>>();
            if (m.size() != 4) throw ConfigError("map: expected [a,b,c,d]");
            std::copy(m.begin(), m.end(), c.map.begin());
        }
        c.N = detail::get_or(doc, "N", c.N);
        if (doc.contains("partition")) {
            const auto& p = doc.at("partition");
            if (p.is_string()) {
                c.partition_name = p.get<std::string>();
            } else if (p.is_object() && p.contains("atoms")) {
                c.partition_name = "custom";
                for (const auto& a : p.at("atoms")) c.partition_atoms.push_back(detail::parse_atom(a));
            } else {
                throw ConfigError("partition: expected a name or {\"atoms\": [...]}");
            }
        }
        c.n_max = detail::get_or(doc, "n_max", c.n_max);
        c.samples = detail::get_or(doc, "samples", c.samples);
        c.seeds = detail::get_or(doc, "seeds", c.seeds);
        c.d0 = detail::get_or(doc, "d0", c.d0);
        c.trials = detail::get_or(doc, "trials", c.trials);
        c.k = detail::get_or(doc, "k", c.k);
        if (doc.contains("functions")) {
            c.functions.clear();
            c.function_names.clear();
            for (const auto& f : doc.at("functions")) {
                auto [spec, name] = detail::parse_function(f);
                c.functions.push_back(std::move(spec));
                c.function_names.push_back(std::move(name));
            }
        }
        if (doc.contains("phases")) {
            const auto& p = doc.at("phases");
            c.phases = PhaseOverride{detail::parse_rational(p.at("u"), "phases.u"), detail::parse_rational(p.at("v"), "phases.v")};
        }
        if (doc.contains("anchor")) {
            const auto a = doc.at("anchor").get<std::string>();
            if (a == "label") c.anchor = Anchor::label;
            else if (a == "reference_center") c.anchor = Anchor::reference_center;
            else throw ConfigError("anchor: expected \"label\" or \"reference_center\"");
        }
        c.out_dir = detail::get_or(doc, "out", c.out_dir);
        c.workers = detail::get_or(doc, "workers", c.workers);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    try {
        (void)c.automorphism();
        if (!c.partition().is_full()) throw ConfigError("partition: atoms must cover the torus");
        for (const auto& f : c.functions)
            if (const auto* ind = std::get_if<IndicatorSpec>(&f)) (void)TorusPartition({ind->rects});
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.N.empty()) throw ConfigError("N: list must be non-empty");
    if (!std::is_sorted(c.N.begin(), c.N.end()) || std::adjacent_find(c.N.begin(), c.N.end()) != c.N.end())
        throw ConfigError("N: list must be strictly ascending");
    if (c.N.front() < 2) throw ConfigError("N: values must be >= 2");
    if (c.N.back() > 4096) throw ConfigError("N: values above 4096 are not supported");
    if (c.seeds.empty()) throw ConfigError("seeds: list must be non-empty");
    if (c.n_max < 1) throw ConfigError("n_max: must be >= 1");
    if (c.samples < 1) throw ConfigError("samples: must be >= 1");
    if (!(c.d0 > 0.0 && c.d0 < 0.5)) throw ConfigError("d0: must lie in (0, 0.5)");
    if (c.k.empty() || *std::min_element(c.k.begin(), c.k.end()) < 0) throw ConfigError("k: list must be non-empty and >= 0");
    if (c.functions.empty()) throw ConfigError("functions: list must be non-empty");
    if (c.workers < 1) throw ConfigError("workers: must be >= 1");
    c.source = doc;
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(doc);
}

/// 64-bit FNV-1a over the canonical (key-sorted, compact) serialization.
/// Keys that cannot influence results (output location, worker cap) are skipped.
inline std::string config_hash(const nlohmann::json& doc) {
    nlohmann::json canon = doc;
    if (canon.is_object()) {
        canon.erase("out");
        canon.erase("workers");
    }
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char ch : canon.dump()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace catmap::lab
