#pragma once

// Tabular results with a self-describing header, written as CSV or JSON.

#include "beltgap/errors.hpp"
#include "beltgap/model.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace beltgap {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

using Cell = std::variant<double, long long, std::string>;

struct Section {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

/// Metadata values are kept as JSON so numbers survive a round trip exactly.
struct OutputTable {
    std::string command;
    nlohmann::json parameters = nlohmann::json::object();
    nlohmann::json options = nlohmann::json::object();
    nlohmann::json tolerances = nlohmann::json::object();
    std::vector<std::string> warnings;
    std::vector<Section> sections;

    Section& add_section(std::string name, std::vector<std::string> columns) {
        sections.push_back({std::move(name), std::move(columns), {}});
        return sections.back();
    }
};

/// 12 significant digits; non-finite values as nan, inf, -inf.
inline std::string format_number(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);
    return buf;
}

namespace detail {

inline std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        return format_number(*d);
    }
    if (const auto* i = std::get_if<long long>(&c)) {
        return std::to_string(*i);
    }
    return std::get<std::string>(c);
}

inline nlohmann::json cell_json(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        if (!std::isfinite(*d)) {
            return format_number(*d);
        }
        return std::stod(format_number(*d));
    }
    if (const auto* i = std::get_if<long long>(&c)) {
        return *i;
    }
    return std::get<std::string>(c);
}

inline std::string scalar_text(const nlohmann::json& j) {
    if (j.is_string()) {
        return j.get<std::string>();
    }
    if (j.is_number_float()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
        return buf;
    }
    return j.dump();
}

}  // namespace detail

inline void write_csv(std::ostream& os, const OutputTable& t) {
    os << "# beltgap " << kVersion << " " << t.command << "\n";
    const auto block = [&](const char* name, const nlohmann::json& obj) {
        for (const auto& [k, v] : obj.items()) {
            os << "# " << name << "." << k << " = " << detail::scalar_text(v) << "\n";
        }
    };
    block("parameters", t.parameters);
    block("options", t.options);
    block("tolerances", t.tolerances);
    for (const auto& w : t.warnings) {
        os << "# warning: " << w << "\n";
    }
    bool first = true;
    for (const auto& s : t.sections) {
        if (!first) {
            os << "\n";
        }
        first = false;
        if (t.sections.size() > 1) {
            os << "# section: " << s.name << "\n";
        }
        for (std::size_t i = 0; i < s.columns.size(); ++i) {
            os << (i ? "," : "") << s.columns[i];
        }
        os << "\n";
        for (const auto& row : s.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                os << (i ? "," : "") << detail::cell_text(row[i]);
            }
            os << "\n";
        }
    }
}

inline nlohmann::json to_json(const OutputTable& t) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["generator"] = std::string("beltgap ") + kVersion;
    j["command"] = t.command;
    j["parameters"] = t.parameters;
    j["options"] = t.options;
    j["tolerances"] = t.tolerances;
    j["warnings"] = t.warnings;
    nlohmann::json sections = nlohmann::json::array();
    for (const auto& s : t.sections) {
        nlohmann::json js;
        js["name"] = s.name;
        js["columns"] = s.columns;
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : s.rows) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& c : row) {
                r.push_back(detail::cell_json(c));
            }
            rows.push_back(std::move(r));
        }
        js["rows"] = std::move(rows);
        sections.push_back(std::move(js));
    }
    j["sections"] = std::move(sections);
    return j;
}

inline void write_json(std::ostream& os, const OutputTable& t) {
    os << to_json(t).dump(2) << "\n";
}

/// Flattens the `parameters` and `options` objects of a JSON output into
/// config keys, so an output file can be fed back through --config.
inline ConfigMap config_from_json(const nlohmann::json& j) {
    ConfigMap out;
    for (const char* block : {"parameters", "options"}) {
        if (!j.contains(block)) {
            continue;
        }
        if (!j[block].is_object()) {
            throw InvalidParameter(std::string("JSON config: `") + block + "` must be an object");
        }
        for (const auto& [k, v] : j[block].items()) {
            if (v.is_array()) {
                std::string joined;
                for (const auto& item : v) {
                    if (!item.is_number()) {
                        throw InvalidParameter("JSON config: `" + k + "` must hold numbers");
                    }
                    joined += (joined.empty() ? "" : ",") + detail::scalar_text(item);
                }
                out[k] = joined;
                continue;
            }
            if (!v.is_primitive() || v.is_null()) {
                throw InvalidParameter("JSON config: `" + k + "` must be a scalar or a list of numbers");
            }
            out[k] = detail::scalar_text(v);
        }
    }
    return out;
}

/// Reads either a `key = value` file or a JSON output file.
inline ConfigMap load_any_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidParameter("cannot open config file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            return config_from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidParameter("config file " + path + ": " + e.what());
        }
    }
    std::istringstream lines(text);
    return parse_config(lines);
}

}  // namespace beltgap
