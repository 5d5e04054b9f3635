#pragma once

// Truncated harmonic-coupling matrix and the two directions of the
// dispersion problem.
//
// With u = sum_m alpha_m exp(i((m - k) x + omega t)), m = -M..M, harmonic
// balance gives A(omega, k) alpha = 0 with the tridiagonal matrix
//
//     a_mm      = (v (k - m) - omega)^2 - (k - m)^2 - s
//     a_m,m+-1  = -s sigma / 2
//
// A is quadratic in omega (leading coefficient I) and quadratic in k
// (leading coefficient (v^2 - 1) I). Both problems are solved by companion
// linearization to a standard eigenproblem of size 2(2M+1).

#include "beltgap/errors.hpp"
#include "beltgap/model.hpp"
#include "beltgap/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

namespace beltgap {

using cdouble = std::complex<double>;

/// Tolerances shared by the spectral solvers.
struct SpectralTolerances {
    /// A root omega is real when |Im omega| <= reality * max(1, |Re omega|).
    double reality = 1e-8;
    /// A Bloch wavenumber is propagating when |Im k| <= propagating_decay.
    double propagating_decay = 1e-6;
    /// Roundoff guard for folding Re k into the first zone.
    double fold_guard = 1e-12;
};

/// Folds x into [-1/2, 1/2). Values within `guard` below +1/2 are taken as -1/2.
inline double fold_to_zone(double x, double guard = 1e-12) {
    return x - std::floor(x + 0.5 + guard);
}

// ---------------------------------------------------------------------------
// Coupling matrix

enum class PencilVariable { Omega, Wavenumber };

/// Quadratic matrix pencil lead * lambda^2 I + lambda * c1 + c0 in one of the
/// two spectral variables, the other one held fixed.
struct CouplingMatrix {
    BeltParams params;
    PencilVariable variable = PencilVariable::Omega;
    double fixed = 0.0;        ///< k for the omega pencil, omega for the k pencil
    std::vector<int> harmonics;  ///< canonical order -M..M
    Eigen::MatrixXd c0;
    Eigen::MatrixXd c1;        ///< diagonal
    double lead = 1.0;         ///< scalar multiple of the identity

    [[nodiscard]] Eigen::Index size() const { return c0.rows(); }

    /// Evaluates the pencil at lambda.
    [[nodiscard]] Eigen::MatrixXcd evaluate(cdouble lambda) const {
        Eigen::MatrixXcd a = c0.cast<cdouble>() + lambda * c1.cast<cdouble>();
        a.diagonal().array() += lead * lambda * lambda;
        return a;
    }
};

namespace detail {

inline std::vector<int> harmonic_indices(int M) {
    std::vector<int> h;
    h.reserve(static_cast<std::size_t>(2 * M + 1));
    for (int m = -M; m <= M; ++m) {
        h.push_back(m);
    }
    return h;
}

inline void fill_coupling(Eigen::MatrixXd& c0, const BeltParams& bp) {
    const double off = -0.5 * bp.s * bp.sigma;
    for (Eigen::Index i = 0; i + 1 < c0.rows(); ++i) {
        c0(i, i + 1) = off;
        c0(i + 1, i) = off;
    }
}

}  // namespace detail

inline CouplingMatrix assemble_omega_pencil(const BeltParams& bp, double k) {
    require_valid(bp);
    CouplingMatrix cm;
    cm.params = bp;
    cm.variable = PencilVariable::Omega;
    cm.fixed = k;
    cm.harmonics = detail::harmonic_indices(bp.M);
    const auto n = static_cast<Eigen::Index>(cm.harmonics.size());
    cm.c0 = Eigen::MatrixXd::Zero(n, n);
    cm.c1 = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double q = k - cm.harmonics[static_cast<std::size_t>(i)];
        cm.c0(i, i) = (bp.v * q) * (bp.v * q) - q * q - bp.s;
        cm.c1(i, i) = -2.0 * bp.v * q;
    }
    detail::fill_coupling(cm.c0, bp);
    cm.lead = 1.0;
    return cm;
}

inline CouplingMatrix assemble_k_pencil(const BeltParams& bp, double omega) {
    require_valid(bp);
    CouplingMatrix cm;
    cm.params = bp;
    cm.variable = PencilVariable::Wavenumber;
    cm.fixed = omega;
    cm.harmonics = detail::harmonic_indices(bp.M);
    const auto n = static_cast<Eigen::Index>(cm.harmonics.size());
    const double a = bp.v * bp.v - 1.0;
    cm.c0 = Eigen::MatrixXd::Zero(n, n);
    cm.c1 = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = cm.harmonics[static_cast<std::size_t>(i)];
        cm.c0(i, i) = a * m * m + 2.0 * bp.v * omega * m + omega * omega - bp.s;
        cm.c1(i, i) = -2.0 * a * m - 2.0 * bp.v * omega;
    }
    detail::fill_coupling(cm.c0, bp);
    cm.lead = a;
    return cm;
}

/// A(omega, k) for complex arguments.
inline Eigen::MatrixXcd dispersion_matrix(const BeltParams& bp, cdouble omega, cdouble k) {
    const int n = bp.harmonic_count();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const cdouble q = k - static_cast<double>(i - bp.M);
        const cdouble d = bp.v * q - omega;
        a(i, i) = d * d - q * q - bp.s;
    }
    const double off = -0.5 * bp.s * bp.sigma;
    for (int i = 0; i + 1 < n; ++i) {
        a(i, i + 1) = off;
        a(i + 1, i) = off;
    }
    return a;
}

/// det A(omega, k) by the three-term continuant recurrence.
inline cdouble det_dispersion(const BeltParams& bp, cdouble omega, cdouble k) {
    const double off2 = 0.25 * bp.s * bp.s * bp.sigma * bp.sigma;
    cdouble prev{1.0, 0.0};
    cdouble cur{1.0, 0.0};
    for (int m = -bp.M; m <= bp.M; ++m) {
        const cdouble q = k - static_cast<double>(m);
        const cdouble d = bp.v * q - omega;
        const cdouble diag = d * d - q * q - bp.s;
        const cdouble next = (m == -bp.M) ? diag : diag * cur - off2 * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

inline cdouble det_dispersion(const BeltParams& bp, double omega, double k) {
    return det_dispersion(bp, cdouble{omega}, cdouble{k});
}

// ---------------------------------------------------------------------------
// Companion linearization

struct Eigenpair {
    cdouble value;
    Eigen::VectorXcd vector;  ///< harmonic coefficients, unit 2-norm
};

namespace detail {

/// Eigenpairs of lead*lambda^2 + c1*lambda + c0 via the first companion form.
inline std::vector<Eigenpair> solve_pencil(const CouplingMatrix& cm, bool vectors) {
    const Eigen::Index n = cm.size();
    if (cm.lead == 0.0) {
        throw NumericalError("quadratic pencil has a vanishing leading coefficient");
    }
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    comp.topRightCorner(n, n).setIdentity();
    comp.bottomLeftCorner(n, n) = -cm.c0 / cm.lead;
    comp.bottomRightCorner(n, n) = -cm.c1 / cm.lead;
    if (!comp.allFinite()) {
        throw NumericalError("non-finite entries in the companion matrix");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, vectors);
    if (es.info() != Eigen::Success) {
        throw NumericalError("eigenvalue iteration did not converge");
    }
    std::vector<Eigenpair> out(static_cast<std::size_t>(2 * n));
    const Eigen::VectorXcd values = es.eigenvalues();
    Eigen::MatrixXcd vecs;
    if (vectors) {
        vecs = es.eigenvectors();
    }
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
        auto& p = out[static_cast<std::size_t>(j)];
        p.value = values(j);
        if (vectors) {
            p.vector = vecs.col(j).head(n);
            const double nrm = p.vector.norm();
            if (nrm > 0.0) {
                p.vector /= nrm;
            }
        }
    }
    return out;
}

inline bool is_real_root(cdouble z, double tol) {
    return std::abs(z.imag()) <= tol * std::max(1.0, std::abs(z.real()));
}

}  // namespace detail

/// All real roots omega of det A(omega, k) = 0, ascending, both signs.
inline std::vector<double> solve_omega(const BeltParams& bp, double k, const SpectralTolerances& tol = {}) {
    const auto pairs = detail::solve_pencil(assemble_omega_pencil(bp, k), false);
    std::vector<double> roots;
    roots.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (detail::is_real_root(p.value, tol.reality)) {
            roots.push_back(p.value.real());
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

/// Real eigenpairs of the omega pencil, ascending in omega.
inline std::vector<Eigenpair> solve_omega_pairs(const BeltParams& bp, double k, const SpectralTolerances& tol = {}) {
    auto pairs = detail::solve_pencil(assemble_omega_pencil(bp, k), true);
    std::vector<Eigenpair> out;
    for (auto& p : pairs) {
        if (detail::is_real_root(p.value, tol.reality)) {
            p.value = cdouble{p.value.real(), 0.0};
            out.push_back(std::move(p));
        }
    }
    std::sort(out.begin(), out.end(), [](const Eigenpair& a, const Eigenpair& b) {
        return a.value.real() < b.value.real();
    });
    return out;
}

/// Complex Bloch wavenumber of the k pencil at fixed omega.
struct ComplexWavenumber {
    cdouble k;                ///< Re k folded into the first zone
    double unfolded_re = 0.0; ///< Re k as returned by the pencil (harmonic-centred copy)
    double decay_rate = 0.0;  ///< |Im k|
    /// Weight of the eigenvector on the truncation edge harmonics +-M.
    double edge_weight = 0.0;
    /// True for the copies best resolved by the truncated basis.
    bool resolved = false;
};

/// All 2(2M+1) eigenvalues k at frequency omega.
///
/// Every Bloch wave appears in the truncated pencil once per harmonic shift.
/// The copies whose eigenvectors carry the least weight on the edge
/// harmonics are flagged `resolved`: two of them for M >= 1, all for M = 0.
/// Classification uses only resolved copies, because an edge harmonic that
/// has lost its coupling partner reappears as a spurious real root inside
/// every Bragg gap.
inline std::vector<ComplexWavenumber> solve_k(const BeltParams& bp, double omega,
                                              const SpectralTolerances& tol = {}) {
    detail::require(omega >= 0.0 && std::isfinite(omega), "omega must be finite and nonnegative");
    const auto pairs = detail::solve_pencil(assemble_k_pencil(bp, omega), true);
    const Eigen::Index n = bp.harmonic_count();
    std::vector<ComplexWavenumber> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        ComplexWavenumber w;
        w.unfolded_re = p.value.real();
        w.k = cdouble{fold_to_zone(p.value.real(), tol.fold_guard), p.value.imag()};
        w.decay_rate = std::abs(p.value.imag());
        w.edge_weight = std::norm(p.vector(0));
        if (n > 1) {
            w.edge_weight += std::norm(p.vector(n - 1));
        }
        out.push_back(w);
    }
    std::sort(out.begin(), out.end(), [](const ComplexWavenumber& a, const ComplexWavenumber& b) {
        if (a.unfolded_re != b.unfolded_re) {
            return a.unfolded_re < b.unfolded_re;
        }
        return a.k.imag() < b.k.imag();
    });
    if (bp.M == 0) {
        for (auto& w : out) {
            w.resolved = true;
        }
    } else {
        std::vector<std::size_t> order(out.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return out[a].edge_weight < out[b].edge_weight;
        });
        out[order[0]].resolved = true;
        out[order[1]].resolved = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Group velocity

/// Single-harmonic closed form v + sign * k / sqrt(k^2 + s).
inline double group_velocity_closed(const BeltParams& bp, double k, int sign) {
    detail::require(sign == 1 || sign == -1, "sign must be +1 or -1");
    if (bp.s == 0.0 && k == 0.0) {
        throw DomainError("group velocity is undefined at s = 0, k = 0");
    }
    return bp.v + sign * k / std::sqrt(k * k + bp.s);
}

/// dOmega/dk from the eigenvector: -(a^H dA/dk a) / (a^H dA/domega a).
/// Only the diagonal of A depends on omega and k.
inline double group_velocity_eigen(const BeltParams& bp, double omega, double k, const Eigen::VectorXcd& alpha) {
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        const double q = k - static_cast<double>(i - bp.M);
        const double d = bp.v * q - omega;
        const double w = std::norm(alpha(i));
        num += w * (2.0 * bp.v * d - 2.0 * q);
        den += w * (-2.0 * d);
    }
    if (den == 0.0) {
        throw DegenerateError("dA/domega vanishes along the eigenvector");
    }
    return -num / den;
}

struct ImplicitDerivative {
    double group_velocity = 0.0;
    double df_domega = 0.0;
    double df_dk = 0.0;
};

/// c_g = -(df/dk)/(df/domega) by central differences of the determinant.
/// Throws DegenerateError where df/domega vanishes (branch crossing), i.e.
/// where another root lies within the difference step.
inline ImplicitDerivative implicit_group_velocity(const BeltParams& bp, double omega, double k) {
    const double hw = 1e-6 * std::max(1.0, std::abs(omega));
    const double hk = 1e-6 * std::max(1.0, std::abs(k));
    const double fwp = det_dispersion(bp, omega + hw, k).real();
    const double fwm = det_dispersion(bp, omega - hw, k).real();
    const double fkp = det_dispersion(bp, omega, k + hk).real();
    const double fkm = det_dispersion(bp, omega, k - hk).real();
    ImplicitDerivative d;
    d.df_domega = (fwp - fwm) / (2.0 * hw);
    d.df_dk = (fkp - fkm) / (2.0 * hk);
    // Near a simple root f(omega +- h) ~ +-f_omega h. When the quadratic term
    // dominates, a second root lies within h and the quotient is meaningless.
    const double scale = std::max(std::abs(fwp), std::abs(fwm));
    if (!(std::abs(d.df_domega) * hw > 0.5 * scale) || scale == 0.0) {
        throw DegenerateError("df/domega vanishes at omega = " + std::to_string(omega) +
                              ", k = " + std::to_string(k) + " (branch crossing)");
    }
    d.group_velocity = -d.df_dk / d.df_domega;
    return d;
}

// ---------------------------------------------------------------------------
// Branches

enum class Direction { Forward, Backward };

struct BranchSample {
    double k = 0.0;
    double omega = 0.0;
    double group_velocity = 0.0;
};

/// Sampled omega(k) curve with a stable label.
struct DispersionBranch {
    BeltParams params;
    int label = 0;
    Direction direction = Direction::Forward;
    std::vector<BranchSample> samples;  ///< k strictly increasing
};

/// dOmega/dk on a branch: locates the branch root at k, then differentiates
/// the determinant implicitly.
inline double group_velocity_numeric(const DispersionBranch& branch, double k) {
    const auto& s = branch.samples;
    if (s.empty() || k < s.front().k || k > s.back().k) {
        throw InvalidParameter("k = " + std::to_string(k) + " is outside the branch sample range");
    }
    auto hi = std::lower_bound(s.begin(), s.end(), k, [](const BranchSample& a, double x) { return a.k < x; });
    double guess = hi->omega;
    if (hi != s.begin() && hi->k != k) {
        const auto lo = hi - 1;
        const double t = (k - lo->k) / (hi->k - lo->k);
        guess = lo->omega + t * (hi->omega - lo->omega);
    }
    const auto roots = solve_omega(branch.params, k);
    if (roots.empty()) {
        throw NumericalError("no real root at k = " + std::to_string(k));
    }
    const double omega = *std::min_element(roots.begin(), roots.end(), [&](double a, double b) {
        return std::abs(a - guess) < std::abs(b - guess);
    });
    return implicit_group_velocity(branch.params, omega, k).group_velocity;
}

namespace detail {

struct KSlice {
    std::vector<BranchSample> points;
};

inline KSlice branch_slice(const BeltParams& bp, double k, double omega_max) {
    KSlice slice;
    for (const auto& p : solve_omega_pairs(bp, k)) {
        const double w = p.value.real();
        if (w < 0.0 || w > omega_max) {
            continue;
        }
        double cg = 0.0;
        try {
            cg = group_velocity_eigen(bp, w, k, p.vector);
        } catch (const DegenerateError&) {
            cg = std::numeric_limits<double>::quiet_NaN();
        }
        slice.points.push_back({k, w, cg});
    }
    return slice;
}

}  // namespace detail

/// Real branches omega(k) over a k grid, joined by nearest continuation in
/// (omega, dOmega/dk).
inline std::vector<DispersionBranch> sweep_branches(const BeltParams& bp, const std::vector<double>& k_grid,
                                                    double omega_max) {
    require_valid(bp);
    detail::require(!k_grid.empty(), "k grid must be nonempty");
    detail::require(omega_max > 0.0, "omega_max must be positive");
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        detail::require(std::isfinite(k_grid[i]), "k grid must be finite");
        if (i > 0) {
            detail::require(k_grid[i] > k_grid[i - 1], "k grid must be strictly increasing");
        }
    }
    const auto slices = parallel_map(k_grid.size(), [&](std::size_t i) {
        try {
            return detail::branch_slice(bp, k_grid[i], omega_max);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at k = " + std::to_string(k_grid[i]));
        }
    });

    std::vector<DispersionBranch> branches;
    std::vector<std::size_t> active;  // indices into branches
    for (std::size_t i = 0; i < slices.size(); ++i) {
        const auto& pts = slices[i].points;
        std::vector<std::size_t> next_active;
        std::vector<bool> taken(pts.size(), false);
        if (i > 0 && !active.empty() && !pts.empty()) {
            const double dk = k_grid[i] - k_grid[i - 1];
            struct Candidate {
                double cost;
                double dw;
                std::size_t b;
                std::size_t j;
            };
            std::vector<Candidate> cands;
            for (std::size_t b = 0; b < active.size(); ++b) {
                const auto& last = branches[active[b]].samples.back();
                const double slope = std::isfinite(last.group_velocity) ? last.group_velocity : 0.0;
                const double pred = last.omega + slope * dk;
                for (std::size_t j = 0; j < pts.size(); ++j) {
                    const double cg = std::isfinite(pts[j].group_velocity) ? pts[j].group_velocity : slope;
                    const double cost = std::abs(pts[j].omega - pred) + dk * std::abs(cg - slope);
                    cands.push_back({cost, std::abs(pts[j].omega - last.omega), b, j});
                }
            }
            std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& c) {
                if (a.cost != c.cost) {
                    return a.cost < c.cost;
                }
                if (a.dw != c.dw) {
                    return a.dw < c.dw;
                }
                return a.b != c.b ? a.b < c.b : a.j < c.j;
            });
            std::vector<bool> used(active.size(), false);
            const double gate = 4.0 * dk + 1e-3 * omega_max;
            for (const auto& c : cands) {
                if (used[c.b] || taken[c.j] || c.cost > gate) {
                    continue;
                }
                used[c.b] = true;
                taken[c.j] = true;
                branches[active[c.b]].samples.push_back(pts[c.j]);
                next_active.push_back(active[c.b]);
            }
        }
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (taken[j]) {
                continue;
            }
            DispersionBranch br;
            br.params = bp;
            br.label = static_cast<int>(branches.size());
            br.samples.push_back(pts[j]);
            branches.push_back(std::move(br));
            next_active.push_back(branches.size() - 1);
        }
        std::sort(next_active.begin(), next_active.end());
        active = std::move(next_active);
    }
    for (auto& br : branches) {
        double sum = 0.0;
        for (const auto& s : br.samples) {
            if (std::isfinite(s.group_velocity)) {
                sum += s.group_velocity;
            }
        }
        br.direction = sum >= 0.0 ? Direction::Forward : Direction::Backward;
    }
    return branches;
}

/// Uniform grid of `steps` points on [lo, hi].
inline std::vector<double> uniform_grid(double lo, double hi, int steps) {
    detail::require(steps >= 1, "grid needs at least one point");
    std::vector<double> g(static_cast<std::size_t>(steps));
    if (steps == 1) {
        g[0] = lo;
        return g;
    }
    for (int i = 0; i < steps; ++i) {
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
    }
    return g;
}

}  // namespace beltgap
