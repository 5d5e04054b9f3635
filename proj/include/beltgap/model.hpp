#pragma once

// Domain types for the axially moving string on a harmonically modulated
// Winkler foundation, and the mapping from physical to nondimensional inputs.
//
// Nondimensional governing equation (x has foundation period 2*pi):
//
//     u_tt + 2 v u_xt - (1 - v^2) u_xx + s (1 + sigma cos x) u = 0

#include "beltgap/errors.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <cstdlib>
#include <string>
#include <vector>

namespace beltgap {

/// Physical inputs in any consistent unit system.
struct PhysicalParams {
    double linear_density = 1.0;  ///< rho, mass per length
    double tension = 1.0;         ///< P, force
    double base_stiffness = 0.0;  ///< S0, force per length squared
    double modulation = 0.0;      ///< sigma, relative stiffness modulation
    double period = 2.0 * std::numbers::pi;  ///< Phi, foundation period
    double speed = 0.0;           ///< V, transport speed

    /// Reciprocal lattice density phi = 2 pi / Phi.
    [[nodiscard]] double lattice_density() const { return 2.0 * std::numbers::pi / period; }
    /// Transverse wave speed c = sqrt(P / rho).
    [[nodiscard]] double wave_speed() const { return std::sqrt(tension / linear_density); }
};

/// Nondimensional system state plus the harmonic truncation order.
struct BeltParams {
    double v = 0.0;      ///< axial speed in units of the wave speed
    double s = 0.0;      ///< foundation stiffness
    double sigma = 0.0;  ///< stiffness modulation
    int M = 4;           ///< harmonics m = -M..M are retained

    [[nodiscard]] int harmonic_count() const { return 2 * M + 1; }

    friend bool operator==(const BeltParams&, const BeltParams&) = default;
};

/// A point of the (omega, k) plane with k in the first Brillouin zone.
struct FrequencyPoint {
    double omega = 0.0;
    double k = 0.0;

    [[nodiscard]] bool in_first_zone() const { return k >= -0.5 && k <= 0.5; }
};

struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;

    [[nodiscard]] bool valid() const { return violations.empty(); }
};

inline ValidationReport validate(const BeltParams& bp) {
    ValidationReport r;
    if (!std::isfinite(bp.v) || !std::isfinite(bp.s) || !std::isfinite(bp.sigma)) {
        r.violations.emplace_back("parameters must be finite");
        return r;
    }
    if (bp.v >= 1.0) {
        r.violations.emplace_back("v must be below the critical speed 1 (got v = " + std::to_string(bp.v) + ")");
    }
    if (bp.v < 0.0) {
        r.violations.emplace_back("v must be nonnegative");
    }
    if (bp.s < 0.0) {
        r.violations.emplace_back("s must be nonnegative");
    }
    if (bp.sigma < 0.0) {
        r.violations.emplace_back("sigma must be nonnegative");
    }
    if (bp.M < 0) {
        r.violations.emplace_back("M must be a nonnegative integer");
    }
    if (bp.s >= 1.0) {
        r.warnings.emplace_back("s >= 1: higher-order coupling terms are no longer small");
    }
    if (bp.sigma >= 1.0) {
        r.warnings.emplace_back("sigma >= 1: higher-order coupling terms are no longer small");
    }
    if (bp.M == 0 && bp.sigma > 0.0) {
        r.warnings.emplace_back("M = 0 with sigma > 0: modulation coupling is not represented");
    }
    return r;
}

/// Throws on hard violations; the error type distinguishes supercritical speed.
inline void require_valid(const BeltParams& bp) {
    const ValidationReport r = validate(bp);
    if (r.valid()) {
        return;
    }
    if (std::isfinite(bp.v) && bp.v >= 1.0) {
        throw SupercriticalSpeed(r.violations.front());
    }
    throw InvalidParameter(r.violations.front());
}

inline BeltParams nondimensionalize(const PhysicalParams& p, int M = 4) {
    detail::require(p.linear_density > 0.0, "linear_density must be positive");
    detail::require(p.tension > 0.0, "tension must be positive");
    detail::require(p.period > 0.0, "period must be positive");
    detail::require(p.base_stiffness >= 0.0, "base_stiffness must be nonnegative");
    detail::require(p.modulation >= 0.0, "modulation must be nonnegative");
    detail::require(M >= 0, "M must be nonnegative");
    const double c = p.wave_speed();
    if (std::abs(p.speed) >= c) {
        throw SupercriticalSpeed("speed " + std::to_string(p.speed) + " is not below the wave speed " +
                                 std::to_string(c));
    }
    const double phi = p.lattice_density();
    BeltParams bp;
    bp.v = p.speed / c;
    bp.s = p.base_stiffness / (phi * phi * p.tension);
    bp.sigma = p.modulation;
    bp.M = M;
    return bp;
}

// ---------------------------------------------------------------------------
// `key = value` configuration files

using ConfigMap = std::map<std::string, std::string>;

/// Parses `key = value` lines. Blank lines and lines starting with `#` are skipped.
inline ConfigMap parse_config(std::istream& in) {
    ConfigMap out;
    std::string line;
    int lineno = 0;
    const auto trim = [](std::string t) {
        const auto b = t.find_first_not_of(" \t\r");
        if (b == std::string::npos) {
            return std::string{};
        }
        const auto e = t.find_last_not_of(" \t\r");
        return t.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw InvalidParameter("config line " + std::to_string(lineno) + ": expected `key = value`");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw InvalidParameter("config line " + std::to_string(lineno) + ": empty key or value");
        }
        out[key] = value;
    }
    return out;
}

inline ConfigMap load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidParameter("cannot open config file " + path);
    }
    return parse_config(in);
}

namespace detail {

inline double parse_number(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double x = std::strtod(text.c_str(), &end);
    while (end != nullptr && (*end == ' ' || *end == '\t')) {
        ++end;
    }
    if (end == text.c_str() || end == nullptr || *end != '\0' || !std::isfinite(x)) {
        throw InvalidParameter("config key `" + key + "`: not a number: " + text);
    }
    return x;
}

}  // namespace detail

/// Builds BeltParams from either the nondimensional keys (v, s, sigma, M)
/// or the six physical keys (rho, P, S0, sigma, Phi, V). Missing keys keep `base`.
inline BeltParams belt_params_from_config(const ConfigMap& cfg, BeltParams base = {}) {
    static const char* physical[] = {"rho", "P", "S0", "Phi", "V"};
    bool any_physical = false;
    for (const char* key : physical) {
        any_physical = any_physical || cfg.contains(key);
    }
    const auto num = [&](const char* key, double fallback) {
        auto it = cfg.find(key);
        return it == cfg.end() ? fallback : detail::parse_number(key, it->second);
    };
    int M = base.M;
    if (auto it = cfg.find("M"); it != cfg.end()) {
        const double m = detail::parse_number("M", it->second);
        if (m < 0 || m != std::floor(m)) {
            throw InvalidParameter("config key `M` must be a nonnegative integer");
        }
        M = static_cast<int>(m);
    }
    if (any_physical) {
        if (cfg.contains("v") || cfg.contains("s")) {
            throw InvalidParameter("config mixes physical keys with nondimensional v/s");
        }
        PhysicalParams p;
        p.linear_density = num("rho", p.linear_density);
        p.tension = num("P", p.tension);
        p.base_stiffness = num("S0", p.base_stiffness);
        p.modulation = num("sigma", base.sigma);
        p.period = num("Phi", p.period);
        p.speed = num("V", p.speed);
        return nondimensionalize(p, M);
    }
    BeltParams bp = base;
    bp.v = num("v", base.v);
    bp.s = num("s", base.s);
    bp.sigma = num("sigma", base.sigma);
    bp.M = M;
    return bp;
}

}  // namespace beltgap
