#pragma once
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "capsearch/errors.hpp"
#include "capsearch/params.hpp"

namespace capsearch {

// Dense matrix of per-(configuration, instance) runtimes in seconds.
// A cell equal to `cap` is censored: the true runtime is >= cap.
//
// On disk: CSV with header `instance_id,<config_label_0>,...`, one row per
// instance, plus a sidecar `<table>.meta.json` holding
// {"cap_seconds": <real>, "kappa0_seconds": <real>}.
struct RuntimeTable {
    std::int64_t n_configs = 0;
    std::int64_t n_instances = 0;
    double cap = 0.0;
    double kappa0 = 0.0;
    std::vector<double> values;  // config-major: values[i * n_instances + j]
    std::vector<std::string> config_labels;
    std::vector<std::string> instance_labels;

    double at(std::int64_t config, std::int64_t instance) const {
        return values[static_cast<std::size_t>(config * n_instances + instance)];
    }
    double& at(std::int64_t config, std::int64_t instance) {
        return values[static_cast<std::size_t>(config * n_instances + instance)];
    }
    bool censored(std::int64_t config, std::int64_t instance) const {
        return at(config, instance) >= cap;
    }
    bool has_censored_cells() const {
        for (double v : values)
            if (v >= cap) return true;
        return false;
    }

    void validate() const {
        if (n_configs < 1 || n_instances < 1)
            throw InvalidParameter("runtime table must have at least one configuration and one instance");
        if (!(kappa0 > 0.0)) throw InvalidParameter("table kappa0 must be > 0");
        if (!(cap >= kappa0)) throw InvalidParameter("table cap must be >= kappa0");
        if (values.size() != static_cast<std::size_t>(n_configs * n_instances))
            throw InvalidParameter("runtime table dimension mismatch");
        for (std::size_t idx = 0; idx < values.size(); ++idx) {
            const double v = values[idx];
            if (!(v >= kappa0 && v <= cap))
                throw InvalidParameter("table value " + std::to_string(v) + " at flat index " +
                                       std::to_string(idx) + " outside [kappa0=" + std::to_string(kappa0) +
                                       ", cap=" + std::to_string(cap) + "]");
        }
    }
};

namespace detail {

inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("malformed number '" + std::string(s) + "' in " + where);
    return v;
}

// Shortest decimal form that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::vector<std::string_view> split_csv_row(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

inline std::filesystem::path table_meta_path(const std::filesystem::path& table_path) {
    auto p = table_path;
    p += ".meta.json";
    return p;
}

// Reads the CSV + sidecar pair. Strict mode rejects any value outside
// [kappa0, cap]; Clamp mode pulls such values into range and warns once.
inline RuntimeTable load_runtime_table(const std::filesystem::path& path,
                                       Censoring strictness = Censoring::Strict) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open runtime table '" + path.string() + "'");

    const auto meta_path = table_meta_path(path);
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw ParseError("missing table metadata '" + meta_path.string() + "'");
    nlohmann::json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad table metadata '" + meta_path.string() + "': " + e.what());
    }
    if (!meta.contains("cap_seconds") || !meta.contains("kappa0_seconds"))
        throw ParseError("table metadata must define cap_seconds and kappa0_seconds");

    RuntimeTable t;
    t.cap = meta.at("cap_seconds").get<double>();
    t.kappa0 = meta.at("kappa0_seconds").get<double>();

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty runtime table '" + path.string() + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_row(line);
    if (header.size() < 2 || header[0] != "instance_id")
        throw ParseError("table header must be 'instance_id,<config labels...>'");
    t.n_configs = static_cast<std::int64_t>(header.size()) - 1;
    for (std::size_t c = 1; c < header.size(); ++c) t.config_labels.emplace_back(header[c]);

    std::vector<std::vector<double>> rows;  // instance-major while reading
    std::size_t lineno = 1;
    long clamped = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_csv_row(line);
        if (cells.size() != static_cast<std::size_t>(t.n_configs) + 1)
            throw ParseError("ragged row at line " + std::to_string(lineno) + " of '" +
                             path.string() + "': expected " + std::to_string(t.n_configs + 1) +
                             " cells, got " + std::to_string(cells.size()));
        t.instance_labels.emplace_back(cells[0]);
        auto& row = rows.emplace_back();
        row.reserve(static_cast<std::size_t>(t.n_configs));
        for (std::size_t c = 1; c < cells.size(); ++c) {
            double v = detail::parse_double(cells[c], "line " + std::to_string(lineno));
            if (v < t.kappa0 || v > t.cap) {
                if (strictness == Censoring::Strict)
                    throw InvalidParameter("value " + detail::format_double(v) + " at line " +
                                           std::to_string(lineno) + " outside [kappa0=" +
                                           detail::format_double(t.kappa0) + ", cap=" +
                                           detail::format_double(t.cap) + "]");
                v = v < t.kappa0 ? t.kappa0 : t.cap;
                ++clamped;
            }
            row.push_back(v);
        }
    }
    if (clamped > 0)
        std::cerr << "warning: clamped " << clamped << " out-of-range values in '" << path.string()
                  << "' into [kappa0, cap]\n";

    t.n_instances = static_cast<std::int64_t>(rows.size());
    if (t.n_instances == 0) throw ParseError("runtime table '" + path.string() + "' has no data rows");
    t.values.resize(static_cast<std::size_t>(t.n_configs * t.n_instances));
    for (std::int64_t j = 0; j < t.n_instances; ++j)
        for (std::int64_t i = 0; i < t.n_configs; ++i)
            t.at(i, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    t.validate();
    return t;
}

inline void save_runtime_table(const RuntimeTable& t, const std::filesystem::path& path) {
    t.validate();
    std::ofstream out(path);
    if (!out) throw Error("cannot write runtime table '" + path.string() + "'");
    out << "instance_id";
    for (std::int64_t i = 0; i < t.n_configs; ++i) {
        out << ',';
        out << (i < static_cast<std::int64_t>(t.config_labels.size())
                    ? t.config_labels[static_cast<std::size_t>(i)]
                    : "c" + std::to_string(i));
    }
    out << '\n';
    for (std::int64_t j = 0; j < t.n_instances; ++j) {
        out << (j < static_cast<std::int64_t>(t.instance_labels.size())
                    ? t.instance_labels[static_cast<std::size_t>(j)]
                    : "i" + std::to_string(j));
        for (std::int64_t i = 0; i < t.n_configs; ++i) out << ',' << detail::format_double(t.at(i, j));
        out << '\n';
    }
    if (!out) throw Error("write failed for '" + path.string() + "'");

    nlohmann::ordered_json meta;
    meta["cap_seconds"] = t.cap;
    meta["kappa0_seconds"] = t.kappa0;
    std::ofstream meta_out(table_meta_path(path));
    if (!meta_out) throw Error("cannot write table metadata for '" + path.string() + "'");
    meta_out << meta.dump(2) << '\n';
}

}  // namespace capsearch
