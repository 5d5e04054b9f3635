#include "beltgap/bandgap.hpp"
#include "beltgap/modes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace beltgap;

namespace {

const BeltParams kBelt{0.5, 0.1, 0.5, 3};

ModeShape with_alpha(const BeltParams& bp, Eigen::VectorXcd a) {
    ModeShape ms;
    ms.params = bp;
    ms.alpha = std::move(a);
    return ms;
}

}  // namespace

TEST(Eigenvector, UnmodulatedIsBasisVector) {
    const BeltParams bp{0.5, 0.1, 0.0, 2};
    const double k = 0.2;
    // Harmonic m = 1 on the forward branch: omega = v q + sqrt(q^2 + s), q = k - 1.
    const double q = k - 1.0;
    const double w = bp.v * q + std::sqrt(q * q + bp.s);
    const auto ms = eigenvector_at(bp, w, k);
    ASSERT_EQ(ms.alpha.size(), 5);
    for (Eigen::Index i = 0; i < 5; ++i) {
        if (ms.harmonic(i) == 1) {
            EXPECT_NEAR(ms.alpha(i).real(), 1.0, 1e-12);
            EXPECT_EQ(ms.alpha(i).imag(), 0.0);
        } else {
            EXPECT_LT(std::abs(ms.alpha(i)), 1e-12);
        }
    }
    EXPECT_FALSE(ms.degenerate);
    EXPECT_NEAR(participation_ratio(ms), 1.0, 1e-12);
}

TEST(Eigenvector, GaugeAndResidual) {
    for (double k : {0.0, 0.13, 0.37, 0.5}) {
        const auto ws = solve_omega(kBelt, k);
        for (double w : ws) {
            if (std::abs(w) > 1.0) continue;
            const auto ms = eigenvector_at(kBelt, w, k);
            EXPECT_NEAR(ms.alpha.norm(), 1.0, 1e-12);
            Eigen::Index imax = 0;
            ms.alpha.cwiseAbs().maxCoeff(&imax);
            EXPECT_EQ(ms.alpha(imax).imag(), 0.0);
            EXPECT_GT(ms.alpha(imax).real(), 0.0);
            EXPECT_LT(ms.residual, 1e-9);
            const auto again = eigenvector_at(kBelt, w, k);
            EXPECT_EQ((again.alpha - ms.alpha).norm(), 0.0);
        }
    }
}

TEST(Eigenvector, OffSurfaceThrows) {
    EXPECT_THROW(eigenvector_at(kBelt, 0.123, 0.3), OffSurfaceError);
    EXPECT_THROW(eigenvector_at(kBelt, 0.123, 0.3), InvalidParameter);
    EXPECT_THROW(eigenvector_at(kBelt, NAN, 0.3), InvalidParameter);
    EXPECT_THROW(eigenvector_at({1.0, 0.1, 0.5, 3}, 0.2, 0.3), SupercriticalSpeed);
}

TEST(Eigenvector, DegeneratePointReportsPartner) {
    // Bare string at rest: harmonics 0 and 1 cross at k = 1/2, omega = 1/2.
    const BeltParams bp{0.0, 0.0, 0.0, 2};
    const auto ms = eigenvector_at(bp, 0.5, 0.5);
    EXPECT_TRUE(ms.degenerate);
    ASSERT_EQ(ms.partner.size(), ms.alpha.size());
    EXPECT_LT(std::abs(ms.alpha.dot(ms.partner)), 1e-12);
    const auto a = dispersion_matrix(bp, cdouble{0.5}, cdouble{0.5});
    EXPECT_LT((a * ms.partner).norm(), 1e-12);
}

TEST(Participation, Bounds) {
    const BeltParams bp{0.0, 0.1, 0.0, 3};
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(7);
    e(2) = cdouble{0.0, 2.0};
    EXPECT_NEAR(participation_ratio(with_alpha(bp, e)), 1.0, 1e-15);
    const Eigen::VectorXcd u = Eigen::VectorXcd::Constant(7, cdouble{0.3, -0.4});
    EXPECT_NEAR(participation_ratio(with_alpha(bp, u)), 1.0 / 7.0, 1e-15);
    Eigen::VectorXcd two = Eigen::VectorXcd::Zero(7);
    two(0) = 1.0;
    two(6) = 1.0;
    EXPECT_NEAR(participation_ratio(with_alpha(bp, two)), 0.5, 1e-15);
}

TEST(Participation, ReferenceBeltScores) {
    // Inside the second gap the mode is an even mix of two harmonics; in
    // the pass bands and the cut-off gap one harmonic dominates.
    const double in_gap = participation_ratio(mode_at_frequency(kBelt, 0.45));
    EXPECT_NEAR(in_gap, 0.5, 0.01);
    for (double w : {0.28, 0.40, 0.50}) {
        const double pass = participation_ratio(mode_at_frequency(kBelt, w));
        EXPECT_GT(pass, 0.7) << w;
        EXPECT_GT(pass, in_gap) << w;
    }
    EXPECT_GT(participation_ratio(mode_at_frequency(kBelt, 0.27)), 0.99);
}

TEST(ModeAtFrequency, StopBandModeDecaysTowardPositiveX) {
    for (double w : {0.1, 0.27, 0.45}) {
        const auto ms = mode_at_frequency(kBelt, w);
        EXPECT_LT(ms.k.imag(), 0.0) << w;
        EXPECT_LT(ms.residual, 1e-9);
        EXPECT_NEAR(-ms.k.imag(), classify_frequency(kBelt, w).decay_rate, 1e-9);
    }
    const auto pass = mode_at_frequency(kBelt, 0.40);
    EXPECT_EQ(pass.k.imag(), 0.0);
}

TEST(Reconstruct, EnvelopeRatioOverOnePeriod) {
    for (double w : {0.27, 0.45, 0.40}) {
        const auto ms = mode_at_frequency(kBelt, w);
        const int spp = 64;
        const auto p = reconstruct(ms, 3, spp);
        ASSERT_EQ(p.x.size(), 3u * spp + 1);
        EXPECT_EQ(p.x.front(), 0.0);
        EXPECT_NEAR(p.x.back(), 6.0 * std::numbers::pi, 1e-12);
        const double expected = std::exp(2.0 * std::numbers::pi * ms.k.imag());
        for (int j = 0; j + spp < static_cast<int>(p.x.size()); j += 7) {
            const auto a = static_cast<std::size_t>(j);
            const auto b = static_cast<std::size_t>(j + spp);
            if (p.envelope[a] < 1e-8) continue;
            EXPECT_NEAR(p.envelope[b] / p.envelope[a], expected, 1e-9 * std::max(1.0, expected)) << w;
        }
    }
}

TEST(Reconstruct, PlaneWaveWithoutModulation) {
    const BeltParams bp{0.3, 0.1, 0.0, 1};
    const double k = 0.2;
    const double w = bp.v * k + std::sqrt(k * k + bp.s);
    const auto ms = eigenvector_at(bp, w, k);
    const auto p = reconstruct(ms, 1, 16);
    for (std::size_t j = 0; j < p.x.size(); ++j) {
        EXPECT_NEAR(p.envelope[j], 1.0, 1e-12);
        EXPECT_NEAR(std::arg(p.u[j] * std::exp(cdouble{0.0, k * p.x[j]})), 0.0, 1e-12);
    }
    EXPECT_THROW(reconstruct(ms, 0, 16), InvalidParameter);
    EXPECT_THROW(reconstruct(ms, 1, 4), InvalidParameter);
}

TEST(Symmetry, MirrorAtRest) {
    // At v = 0 the matrix at -k equals the matrix at k with harmonics reversed.
    const BeltParams bp{0.0, 0.1, 0.5, 3};
    const double k = 0.21;
    for (double w : solve_omega(bp, k)) {
        if (w <= 0.0 || w > 1.0) continue;
        const auto a = eigenvector_at(bp, w, k);
        const auto b = eigenvector_at(bp, w, -k);
        EXPECT_LT((a.alpha.reverse() - b.alpha).norm(), 1e-9) << w;
    }
}
