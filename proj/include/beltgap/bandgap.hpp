#pragma once

// Band-gap detection from the complex-k spectrum, closed-form first-gap and
// tuning rules, the two-harmonic second-gap model, and parameter sweeps.

#include "beltgap/dispersion.hpp"
#include "beltgap/errors.hpp"
#include "beltgap/model.hpp"
#include "beltgap/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace beltgap {

// ---------------------------------------------------------------------------
// Pointwise classification

struct Classification {
    bool pass = false;
    /// Smallest |Im k| over the resolved Bloch wavenumbers.
    double decay_rate = 0.0;
};

/// Pass band when a resolved Bloch wavenumber is real to `tol.propagating_decay`.
inline Classification classify_frequency(const BeltParams& bp, double omega, const SpectralTolerances& tol = {}) {
    const auto ks = solve_k(bp, omega, tol);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& w : ks) {
        if (w.resolved) {
            best = std::min(best, w.decay_rate);
        }
    }
    return {best <= tol.propagating_decay, best};
}

// ---------------------------------------------------------------------------
// Gap detection

enum class EdgeMethod { GridBisection, ClosedForm };

inline const char* to_string(EdgeMethod m) {
    return m == EdgeMethod::ClosedForm ? "closed-form" : "grid+bisection";
}

struct BandGap {
    int index = 0;  ///< 1-based, ordered by lower edge
    double omega_lo = 0.0;
    double omega_hi = 0.0;
    double min_decay_in_gap = 0.0;
    EdgeMethod edge_method = EdgeMethod::GridBisection;
    /// Narrower than the coarse grid spacing; found by the fine scan.
    bool below_grid_resolution = false;

    [[nodiscard]] double width() const { return omega_hi - omega_lo; }
    [[nodiscard]] bool contains(double omega) const { return omega > omega_lo && omega < omega_hi; }
};

struct GapScanOptions {
    double omega_max = 1.0;
    int grid_points = 2000;
    bool fine_scan = true;
    int fine_density = 100;        ///< fine-scan spacing = coarse spacing / fine_density
    double fine_window = 0.05;     ///< relative half-width around each crossing frequency
    double edge_tolerance = 1e-6;
    SpectralTolerances tolerances{};
};

struct GapScan {
    std::vector<BandGap> gaps;
    std::vector<std::string> warnings;
};

/// Frequencies where uncoupled harmonics n apart cross at positive omega.
/// Coupling opens gap n + 1 around the n-th one.
inline double crossing_frequency(const BeltParams& bp, int n) {
    const double a = 1.0 - bp.v * bp.v;
    return std::sqrt(bp.s * a + 0.25 * n * n * a * a);
}

namespace detail {

inline double bisect_edge(const BeltParams& bp, double pass_w, double stop_w, const GapScanOptions& opt) {
    while (std::abs(stop_w - pass_w) > opt.edge_tolerance) {
        const double mid = 0.5 * (pass_w + stop_w);
        if (classify_frequency(bp, mid, opt.tolerances).pass) {
            pass_w = mid;
        } else {
            stop_w = mid;
        }
    }
    // Report the boundary point on the stop side.
    return stop_w;
}

}  // namespace detail

inline GapScan detect_gaps(const BeltParams& bp, const GapScanOptions& opt = {}) {
    require_valid(bp);
    detail::require(opt.omega_max > 0.0 && std::isfinite(opt.omega_max), "omega_max must be positive");
    detail::require(opt.grid_points >= 16, "grid_points must be at least 16");
    detail::require(opt.edge_tolerance > 0.0, "edge tolerance must be positive");
    detail::require(opt.fine_density >= 1, "fine-scan density must be at least 1");

    GapScan out;
    const double h = opt.omega_max / (opt.grid_points - 1);
    std::vector<double> grid = uniform_grid(0.0, opt.omega_max, opt.grid_points);
    if (opt.fine_scan) {
        const double hf = h / opt.fine_density;
        for (int n = 1; n <= 2 * bp.M; ++n) {
            const double wn = crossing_frequency(bp, n);
            const double lo = std::max(0.0, wn * (1.0 - opt.fine_window));
            const double hi = std::min(opt.omega_max, wn * (1.0 + opt.fine_window));
            if (lo >= hi) {
                continue;
            }
            for (double w = lo; w <= hi; w += hf) {
                grid.push_back(w);
            }
        }
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    } else if (bp.M >= 1 && bp.s > 0.0 && bp.sigma > 0.0 && h > 1e-3) {
        out.warnings.push_back("grid spacing " + std::to_string(h) +
                               " exceeds the expected width of higher gaps; enable the fine scan");
    }

    const auto cls = parallel_map(grid.size(), [&](std::size_t i) {
        return classify_frequency(bp, grid[i], opt.tolerances);
    });

    std::size_t i = 0;
    while (i < grid.size()) {
        if (cls[i].pass) {
            ++i;
            continue;
        }
        std::size_t j = i;
        double min_decay = cls[i].decay_rate;
        while (j + 1 < grid.size() && !cls[j + 1].pass) {
            ++j;
            min_decay = std::min(min_decay, cls[j].decay_rate);
        }
        BandGap g;
        g.omega_lo = (i == 0) ? grid[0] : detail::bisect_edge(bp, grid[i - 1], grid[i], opt);
        g.omega_hi = (j + 1 == grid.size()) ? grid[j] : detail::bisect_edge(bp, grid[j + 1], grid[j], opt);
        if (g.omega_hi <= g.omega_lo) {
            // Single stop sample squeezed to a point by the bisection.
            g.omega_hi = std::max(grid[j], g.omega_lo + opt.edge_tolerance);
        }
        const double mid = 0.5 * (g.omega_lo + g.omega_hi);
        const auto probe = classify_frequency(bp, mid, opt.tolerances);
        if (!probe.pass) {
            g.min_decay_in_gap = std::min(min_decay, probe.decay_rate);
            g.below_grid_resolution = g.width() < h;
            out.gaps.push_back(g);
        } else {
            out.warnings.push_back("stop samples near omega = " + std::to_string(mid) +
                                   " not confirmed by the refinement probe");
        }
        i = j + 1;
    }
    for (std::size_t n = 0; n < out.gaps.size(); ++n) {
        out.gaps[n].index = static_cast<int>(n) + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed forms

struct FirstGapClosedForm {
    double k_veer = 0.0;
    double omega_c = 0.0;

    [[nodiscard]] BandGap as_gap() const {
        BandGap g;
        g.index = 1;
        g.omega_lo = 0.0;
        g.omega_hi = omega_c;
        g.edge_method = EdgeMethod::ClosedForm;
        return g;
    }
};

inline double cutoff_frequency(double s, double v) {
    return std::sqrt(s * (1.0 - v * v));
}

/// Single-harmonic veering point k = v sqrt(s / (1 - v^2)) and cut-off
/// omega_c = sqrt(s (1 - v^2)).
inline FirstGapClosedForm first_gap_closed_form(const BeltParams& bp) {
    require_valid(bp);
    if (bp.s == 0.0) {
        throw DomainError("first gap closed form needs s > 0 (no gap at s = 0)");
    }
    const double a = 1.0 - bp.v * bp.v;
    return {bp.v * std::sqrt(bp.s / a), std::sqrt(bp.s * a)};
}

struct TuningResult {
    double delta = 0.0;
    double new_value = 0.0;
    /// |new_value|; differs from new_value only for velocity tuning.
    double magnitude = 0.0;
    double cutoff_before = 0.0;
    double cutoff_after = 0.0;
};

/// Stiffness change that keeps omega_c when the speed goes from v1 to v2.
inline TuningResult tune_stiffness(double v1, double v2, double s1) {
    detail::require(std::isfinite(v1) && v1 >= 0.0, "v1 must be nonnegative");
    detail::require(std::isfinite(s1) && s1 > 0.0, "s1 must be positive");
    if (v1 >= 1.0) {
        throw SupercriticalSpeed("v1 must be below the critical speed 1");
    }
    if (!(v2 < 1.0)) {
        throw SupercriticalSpeed("v2 must be below the critical speed 1");
    }
    detail::require(v2 >= 0.0, "v2 must be nonnegative");
    TuningResult r;
    r.delta = (v2 * v2 - v1 * v1) / (1.0 - v2 * v2) * s1;
    r.new_value = s1 + r.delta;
    r.magnitude = std::abs(r.new_value);
    r.cutoff_before = cutoff_frequency(s1, v1);
    r.cutoff_after = cutoff_frequency(r.new_value, v2);
    return r;
}

/// Speed change that keeps omega_c when the stiffness goes from s1 to s2.
/// The formula takes the negative root, so new_value is -|v2| unless it is 0;
/// `magnitude` carries the speed.
inline TuningResult tune_velocity(double s1, double s2, double v1) {
    detail::require(std::isfinite(s1) && s1 > 0.0, "s1 must be positive");
    detail::require(std::isfinite(s2) && s2 > 0.0, "s2 must be positive");
    detail::require(std::isfinite(v1) && v1 >= 0.0, "v1 must be nonnegative");
    if (v1 >= 1.0) {
        throw SupercriticalSpeed("v1 must be below the critical speed 1");
    }
    const double disc = s2 * s2 - (1.0 - v1 * v1) * s1 * s2;
    if (disc < 0.0) {
        throw DomainError("infeasible: velocity tuning requires s2 >= (1 - v1^2) s1 (got s2 = " +
                          std::to_string(s2) + ", (1 - v1^2) s1 = " + std::to_string((1.0 - v1 * v1) * s1) + ")");
    }
    TuningResult r;
    r.delta = (-v1 * s2 - std::sqrt(disc)) / s2;
    r.new_value = v1 + r.delta;
    r.magnitude = std::abs(r.new_value);
    r.cutoff_before = cutoff_frequency(s1, v1);
    r.cutoff_after = cutoff_frequency(s2, r.magnitude);
    return r;
}

// ---------------------------------------------------------------------------
// Two-harmonic model of the second gap

namespace detail {

/// Coefficients c0..c4 of the quartic in omega for harmonics 0 and 1.
inline std::array<double, 5> two_term_quartic(const BeltParams& bp, double k) {
    const auto quad = [&](double q) {
        return std::array<double, 3>{bp.v * bp.v * q * q - q * q - bp.s, -2.0 * bp.v * q, 1.0};
    };
    const auto p = quad(k);
    const auto r = quad(k - 1.0);
    std::array<double, 5> c{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            c[static_cast<std::size_t>(i + j)] += p[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(j)];
        }
    }
    c[0] -= 0.25 * bp.s * bp.s * bp.sigma * bp.sigma;
    return c;
}

}  // namespace detail

/// Real roots omega of the two-harmonic determinant, ascending.
inline std::vector<double> second_gap_two_term(const BeltParams& bp, double k, const SpectralTolerances& tol = {}) {
    require_valid(bp);
    detail::require(std::isfinite(k), "k must be finite");
    const auto c = detail::two_term_quartic(bp, k);
    Eigen::Matrix4d comp = Eigen::Matrix4d::Zero();
    comp.bottomLeftCorner<3, 3>().setIdentity();
    for (int i = 0; i < 4; ++i) {
        comp(i, 3) = -c[static_cast<std::size_t>(i)];
    }
    Eigen::EigenSolver<Eigen::Matrix4d> es(comp, false);
    if (es.info() != Eigen::Success) {
        throw NumericalError("quartic root finder did not converge");
    }
    std::vector<double> roots;
    for (int i = 0; i < 4; ++i) {
        const cdouble z = es.eigenvalues()(i);
        if (detail::is_real_root(z, tol.reality)) {
            roots.push_back(z.real());
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

struct TwoTermGap {
    double k_lo = 0.0;      ///< veering wavenumber of the lower edge
    double omega_lo = 0.0;
    double k_hi = 0.0;
    double omega_hi = 0.0;
};

namespace detail {

/// Golden-section search for the maximum of f on [a, b].
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

/// Edges of the second gap in the two-harmonic model: the extremum of each
/// positive branch near the crossing of harmonics 0 and 1, where c_g = 0.
inline TwoTermGap second_gap_two_term_edges(const BeltParams& bp) {
    require_valid(bp);
    const auto branch0 = [&](double q) { return bp.v * q + std::sqrt(q * q + bp.s); };
    // Uncoupled crossing: branch0(k) = branch0(k - 1); the difference is increasing on [0, 1].
    double a = 0.0;
    double b = 1.0;
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b);
        if (branch0(m) - branch0(m - 1.0) < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    const double kx = 0.5 * (a + b);
    const auto positive = [&](double k) {
        std::vector<double> r = second_gap_two_term(bp, k);
        r.erase(std::remove_if(r.begin(), r.end(), [](double w) { return w <= 0.0; }), r.end());
        if (r.size() != 2) {
            throw NumericalError("two-term model lost a positive branch at k = " + std::to_string(k));
        }
        return r;
    };
    const double lo = kx - 0.25;
    const double hi = kx + 0.25;
    TwoTermGap g;
    g.k_lo = detail::golden_max([&](double k) { return positive(k)[0]; }, lo, hi, 1e-10);
    g.k_hi = detail::golden_max([&](double k) { return -positive(k)[1]; }, lo, hi, 1e-10);
    g.omega_lo = positive(g.k_lo)[0];
    g.omega_hi = positive(g.k_hi)[1];
    return g;
}

// ---------------------------------------------------------------------------
// Veering points of the full truncated model

struct VeeringPoint {
    double omega = 0.0;
    double k = 0.0;         ///< wavenumber in the harmonic frame of the solver
    double k_folded = 0.0;  ///< k folded into the first zone
    double group_velocity = 0.0;
};

/// Branch extremum bounding `gap` from below (lower = true) or above.
/// Located by golden-section search on omega(k) near the Bloch wavenumber
/// found at the edge, then c_g is evaluated by implicit differentiation.
inline VeeringPoint veering_point(const BeltParams& bp, const BandGap& gap, bool lower) {
    const double edge = lower ? gap.omega_lo : gap.omega_hi;
    if (lower && edge <= 0.0) {
        throw DomainError("the zero-frequency gap edge has no veering point");
    }
    const double mid = 0.5 * (gap.omega_lo + gap.omega_hi);
    // Wavenumber seed from the pass side just beyond the edge.
    const double pad = std::max(1e-6, 1e-3 * gap.width());
    const double probe = lower ? edge - pad : edge + pad;
    const auto ks = solve_k(bp, probe);
    double seed = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& w : ks) {
        if (w.resolved && w.decay_rate < best) {
            best = w.decay_rate;
            seed = w.unfolded_re;
        }
    }
    const auto branch = [&](double k) {
        const auto roots = solve_omega(bp, k);
        double pick = std::numeric_limits<double>::quiet_NaN();
        for (double w : roots) {
            if (lower && w < mid) {
                pick = w;  // largest root below the gap centre
            } else if (!lower && w > mid) {
                return w;  // smallest root above it
            }
        }
        if (std::isnan(pick)) {
            throw NumericalError("no branch below the gap at k = " + std::to_string(k));
        }
        return pick;
    };
    const double span = 0.05;
    VeeringPoint p;
    p.k = lower ? detail::golden_max(branch, seed - span, seed + span, 1e-10)
                : detail::golden_max([&](double k) { return -branch(k); }, seed - span, seed + span, 1e-10);
    p.omega = branch(p.k);
    p.k_folded = fold_to_zone(p.k);
    p.group_velocity = implicit_group_velocity(bp, p.omega, p.k).group_velocity;
    return p;
}

// ---------------------------------------------------------------------------
// Parameter sweeps

enum class SweepParameter { S, Sigma, V };

inline SweepParameter parse_sweep_parameter(const std::string& name) {
    if (name == "s") {
        return SweepParameter::S;
    }
    if (name == "sigma") {
        return SweepParameter::Sigma;
    }
    if (name == "v") {
        return SweepParameter::V;
    }
    throw InvalidParameter("unknown sweep parameter `" + name + "` (expected s, sigma or v)");
}

struct SweepRow {
    double value = 0.0;
    std::vector<BandGap> gaps;
    std::vector<std::string> warnings;
    std::string error;  ///< empty on success
    bool invalid_parameter = false;
};

inline std::vector<SweepRow> sweep_parameter(const BeltParams& base, SweepParameter which,
                                             const std::vector<double>& values, const GapScanOptions& opt = {}) {
    return parallel_map(values.size(), [&](std::size_t i) {
        SweepRow row;
        row.value = values[i];
        BeltParams bp = base;
        switch (which) {
            case SweepParameter::S: bp.s = values[i]; break;
            case SweepParameter::Sigma: bp.sigma = values[i]; break;
            case SweepParameter::V: bp.v = values[i]; break;
        }
        try {
            auto scan = detect_gaps(bp, opt);
            row.gaps = std::move(scan.gaps);
            row.warnings = std::move(scan.warnings);
        } catch (const InvalidParameter& e) {
            row.error = e.what();
            row.invalid_parameter = true;
        } catch (const Error& e) {
            row.error = e.what();
        }
        return row;
    });
}

}  // namespace beltgap
