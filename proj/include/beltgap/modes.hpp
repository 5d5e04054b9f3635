#pragma once

// Harmonic eigenvectors and reconstructed compound-wave profiles.

#include "beltgap/dispersion.hpp"
#include "beltgap/errors.hpp"
#include "beltgap/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

namespace beltgap {

/// (omega, k) is farther from the dispersion surface than the tolerance allows.
class OffSurfaceError : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

struct ModeShape {
    BeltParams params;
    double omega = 0.0;
    cdouble k;                ///< wavenumber in the harmonic frame of alpha
    Eigen::VectorXcd alpha;   ///< alpha_{-M}..alpha_M, unit norm, largest entry real positive
    double residual = 0.0;    ///< ||A alpha||
    /// Two smallest singular values coincide; `partner` spans the null space with alpha.
    bool degenerate = false;
    Eigen::VectorXcd partner;

    [[nodiscard]] int harmonic(Eigen::Index i) const { return static_cast<int>(i) - params.M; }
};

namespace detail {

/// Unit norm, largest-magnitude entry real positive (first one on ties).
inline Eigen::VectorXcd apply_gauge(Eigen::VectorXcd a) {
    a /= a.norm();
    Eigen::Index imax = 0;
    for (Eigen::Index i = 1; i < a.size(); ++i) {
        if (std::abs(a(i)) > std::abs(a(imax))) {
            imax = i;
        }
    }
    const cdouble phase = std::conj(a(imax)) / std::abs(a(imax));
    a *= phase;
    a(imax) = cdouble{std::abs(a(imax)), 0.0};
    return a;
}

}  // namespace detail

/// Null vector of A(omega, k) from the smallest singular direction.
inline ModeShape eigenvector_at(const BeltParams& bp, double omega, cdouble k, double surface_tol = 1e-8) {
    require_valid(bp);
    detail::require(std::isfinite(omega) && std::isfinite(k.real()) && std::isfinite(k.imag()),
                    "omega and k must be finite");
    const Eigen::MatrixXcd a = dispersion_matrix(bp, cdouble{omega}, k);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Eigen::Index n = sv.size();
    const double scale = std::max(1.0, sv(0));
    if (sv(n - 1) > surface_tol * scale) {
        throw OffSurfaceError("(omega, k) = (" + std::to_string(omega) + ", " + std::to_string(k.real()) +
                              (k.imag() < 0 ? " - " : " + ") + std::to_string(std::abs(k.imag())) +
                              "i) is not on the dispersion surface: smallest singular value " +
                              std::to_string(sv(n - 1)));
    }
    ModeShape ms;
    ms.params = bp;
    ms.omega = omega;
    ms.k = k;
    ms.alpha = detail::apply_gauge(svd.matrixV().col(n - 1));
    ms.residual = (a * ms.alpha).norm();
    if (n >= 2 && sv(n - 2) - sv(n - 1) < 1e-10) {
        ms.degenerate = true;
        ms.partner = detail::apply_gauge(svd.matrixV().col(n - 2));
    }
    return ms;
}

/// Dominance score sum |alpha|^4 / (sum |alpha|^2)^2: 1 for a single
/// harmonic, 1/(2M+1) for uniform spread.
inline double participation_ratio(const ModeShape& ms) {
    double s2 = 0.0;
    double s4 = 0.0;
    for (Eigen::Index i = 0; i < ms.alpha.size(); ++i) {
        const double p = std::norm(ms.alpha(i));
        s2 += p;
        s4 += p * p;
    }
    return s2 > 0.0 ? s4 / (s2 * s2) : 0.0;
}

struct SpatialProfile {
    std::vector<double> x;
    std::vector<cdouble> u;
    std::vector<double> envelope;
};

/// u(x) = sum_m alpha_m exp(i (m - k) x) at t = 0, periods * samples_per_period + 1 points.
/// Complex k gives |u(x + 2 pi)| / |u(x)| = exp(2 pi Im k).
inline SpatialProfile reconstruct(const ModeShape& ms, int periods, int samples_per_period) {
    detail::require(periods >= 1, "periods must be at least 1");
    detail::require(samples_per_period >= 8, "samples_per_period must be at least 8");
    SpatialProfile p;
    const int count = periods * samples_per_period + 1;
    p.x.resize(static_cast<std::size_t>(count));
    p.u.resize(static_cast<std::size_t>(count));
    p.envelope.resize(static_cast<std::size_t>(count));
    const double dx = 2.0 * std::numbers::pi / samples_per_period;
    const cdouble I{0.0, 1.0};
    for (int j = 0; j < count; ++j) {
        const double x = j * dx;
        cdouble u{0.0, 0.0};
        for (Eigen::Index i = 0; i < ms.alpha.size(); ++i) {
            u += ms.alpha(i) * std::exp(I * (static_cast<double>(ms.harmonic(i)) - ms.k) * x);
        }
        const auto idx = static_cast<std::size_t>(j);
        p.x[idx] = x;
        p.u[idx] = u;
        p.envelope[idx] = std::abs(u);
    }
    return p;
}

/// Representative mode at a frequency: the resolved Bloch wavenumber with the
/// smallest decay, taking the copy that decays toward +x (Im k <= 0) and then
/// the smaller Re k on ties.
inline ModeShape mode_at_frequency(const BeltParams& bp, double omega, const SpectralTolerances& tol = {}) {
    const auto ks = solve_k(bp, omega, tol);
    const ComplexWavenumber* best = nullptr;
    const auto better = [](const ComplexWavenumber& a, const ComplexWavenumber& b) {
        if (std::abs(a.decay_rate - b.decay_rate) > 1e-9) {
            return a.decay_rate < b.decay_rate;
        }
        const bool ad = a.k.imag() <= 0.0;
        const bool bd = b.k.imag() <= 0.0;
        if (ad != bd) {
            return ad;
        }
        return a.unfolded_re < b.unfolded_re;
    };
    for (const auto& w : ks) {
        if (w.resolved && (best == nullptr || better(w, *best))) {
            best = &w;
        }
    }
    if (best == nullptr) {
        throw NumericalError("no resolved Bloch wavenumber at omega = " + std::to_string(omega));
    }
    cdouble k{best->unfolded_re, best->k.imag()};
    if (best->decay_rate <= tol.propagating_decay) {
        k = cdouble{k.real(), 0.0};
    }
    return eigenvector_at(bp, omega, k, 1e-6);
}

}  // namespace beltgap
