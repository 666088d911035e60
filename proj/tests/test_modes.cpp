#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ionchain/modes.hpp"

using namespace ionchain;

namespace {

TrapConfig make(std::size_t n, std::size_t jm, double mu, double alpha, double beta = 0.0) {
    TrapConfig c;
    c.n_ions = n;
    c.impurity_site = jm;
    c.mass_ratio = mu;
    c.alpha = alpha;
    c.dipole_beta = beta;
    return c;
}

void expect_spectrum_invariants(const ModeMatrix& m, const ModeSpectrum& s) {
    const Eigen::Index n = s.size();
    const Eigen::MatrixXd gram = s.vectors.transpose() * s.vectors;
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::VectorXd r = m.b * s.vectors.col(k) - s.lambdas[k] * s.vectors.col(k);
        EXPECT_LE(r.lpNorm<Eigen::Infinity>(), 1e-10);
        EXPECT_GT(s.lambdas[k], 0.0);
        EXPECT_NEAR(s.freqs[k], std::sqrt(s.lambdas[k]), 1e-15);
        if (k > 0) {
            EXPECT_GE(s.lambdas[k - 1], s.lambdas[k]);
        }
        Eigen::Index imax = 0;
        s.vectors.col(k).cwiseAbs().maxCoeff(&imax);
        EXPECT_GT(s.vectors(imax, k), 0.0);
    }
    EXPECT_NEAR(s.lambdas.sum(), m.b.trace(), 1e-10);
}

}  // namespace

TEST(BuildMatrix, TwoIonHandEvaluation) {
    const auto pos = solve_equilibrium(2);
    const auto m = build_matrix(make(2, 2, 2.0, 0.1), pos);
    const double d3 = std::pow(2.0 * std::cbrt(0.25), 3);
    EXPECT_NEAR(m.b(0, 0), 1.0 - 0.005 - 0.01 / d3, 1e-14);
    EXPECT_NEAR(m.b(1, 1), 0.25 - 0.0025 - (0.01 / 2.0) / d3, 1e-14);
    EXPECT_NEAR(m.b(0, 1), (0.01 / std::sqrt(2.0)) / d3, 1e-14);
    EXPECT_EQ(m.b(0, 1), m.b(1, 0));
}

TEST(BuildMatrix, UnitMassRatioHasNoSpecialSite) {
    const auto pos = solve_equilibrium(5);
    const auto a = build_matrix(make(5, 2, 1.0, 0.1), pos);
    const auto b = build_matrix(make(5, 4, 1.0, 0.1), pos);
    EXPECT_EQ(a.b, b.b);
    // impurity diagonal has the same form as every other one
    EXPECT_DOUBLE_EQ(a.b(1, 1), 1.0 - 0.005 - 0.01 * coulomb_sum(pos, 1));
}

TEST(BuildMatrix, DipoleTermOnlyTouchesImpurityDiagonal) {
    const auto pos = solve_equilibrium(6);
    const auto plain = build_matrix(make(6, 3, 1.3, 0.1, 0.0), pos);
    const auto dressed = build_matrix(make(6, 3, 1.3, 0.1, 0.5), pos);
    const Eigen::MatrixXd diff = dressed.b - plain.b;
    for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 6; ++j) EXPECT_NEAR(diff(i, j), (i == 2 && j == 2) ? 0.25 : 0.0, 1e-15);
}

TEST(BuildMatrix, ExactlySymmetric) {
    const auto pos = solve_equilibrium(9);
    const auto m = build_matrix(make(9, 4, 0.37, 0.2, 0.3), pos);
    EXPECT_TRUE(m.b == m.b.transpose());
}

TEST(BuildMatrix, RejectsMismatchedPositions) {
    const auto pos = solve_equilibrium(4);
    EXPECT_THROW(build_matrix(make(5, 1, 1.0, 0.1), pos), std::invalid_argument);
}

TEST(BuildMatrix, RejectsInvalidConfig) {
    const auto pos = solve_equilibrium(4);
    EXPECT_THROW(build_matrix(make(4, 5, 1.0, 0.1), pos), std::invalid_argument);
    EXPECT_THROW(build_matrix(make(4, 0, 1.0, 0.1), pos), std::invalid_argument);
    EXPECT_THROW(build_matrix(make(4, 1, 1.0, 1.0), pos), std::invalid_argument);
    EXPECT_THROW(build_matrix(make(4, 1, -1.0, 0.1), pos), std::invalid_argument);
    EXPECT_THROW(build_matrix(make(4, 1, 1.0, 0.1, -0.1), pos), std::invalid_argument);
}

TEST(Diagonalize, Identity) {
    const ModeSpectrum s = diagonalize(ModeMatrix{Eigen::MatrixXd::Identity(3, 3)});
    for (Eigen::Index k = 0; k < 3; ++k) {
        EXPECT_DOUBLE_EQ(s.lambdas[k], 1.0);
        EXPECT_DOUBLE_EQ(s.freqs[k], 1.0);
    }
    expect_spectrum_invariants(ModeMatrix{Eigen::MatrixXd::Identity(3, 3)}, s);
}

TEST(Diagonalize, UnstableMatrixReportsEigenvalue) {
    Eigen::MatrixXd b(2, 2);
    b << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
    try {
        diagonalize(ModeMatrix{b});
        FAIL() << "expected UnstableCrystalError";
    } catch (const UnstableCrystalError& e) {
        EXPECT_NEAR(e.eigenvalue(), -1.0, 1e-12);
    }
}

TEST(Diagonalize, TooAnisotropicChainIsUnstable) {
    // Zig-zag instability: large alpha with many ions.
    EXPECT_THROW(compute_spectrum(make(20, 10, 1.0, 0.9)), UnstableCrystalError);
}

TEST(Diagonalize, RejectsAsymmetricOrNonFinite) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(2, 2);
    b(0, 1) = 0.1;
    EXPECT_THROW(diagonalize(ModeMatrix{b}), std::invalid_argument);
    b(1, 0) = 0.1;
    b(0, 0) = std::nan("");
    EXPECT_THROW(diagonalize(ModeMatrix{b}), std::invalid_argument);
}

TEST(Diagonalize, RandomConfigsSatisfyInvariants) {
    std::mt19937 rng(20240611);
    std::uniform_int_distribution<std::size_t> nd(2, 12);
    std::uniform_real_distribution<double> mud(0.3, 3.0), ad(0.005, 0.25), bd(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = nd(rng);
        const std::size_t jm = std::uniform_int_distribution<std::size_t>(1, n)(rng);
        const TrapConfig c = make(n, jm, mud(rng), ad(rng), bd(rng));
        const auto pos = solve_equilibrium(n);
        const auto m = build_matrix(c, pos);
        ModeSpectrum s;
        try {
            s = diagonalize(m);
        } catch (const UnstableCrystalError&) {
            continue;
        }
        expect_spectrum_invariants(m, s);
    }
}

TEST(Diagonalize, Deterministic) {
    const TrapConfig c = make(8, 3, 1.2, 0.1, 0.2);
    const auto a = compute_spectrum(c);
    const auto b = compute_spectrum(c);
    EXPECT_EQ(a.lambdas, b.lambdas);
    EXPECT_EQ(a.vectors, b.vectors);
}

TEST(Spectrum, HomogeneousChainIgnoresImpurityLabel) {
    const auto pos = solve_equilibrium(7);
    const auto ref = compute_spectrum(make(7, 1, 1.0, 0.1), pos);
    for (std::size_t jm = 2; jm <= 7; ++jm) {
        const auto s = compute_spectrum(make(7, jm, 1.0, 0.1), pos);
        EXPECT_LE((s.lambdas - ref.lambdas).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Spectrum, ComModeIsUniformAtUnitMassRatio) {
    for (std::size_t n : {2u, 5u, 10u}) {
        const auto s = compute_spectrum(make(n, 1, 1.0, 0.2));
        const double v = 1.0 / std::sqrt(static_cast<double>(n));
        for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(s.vectors(static_cast<Eigen::Index>(j), 0), v, 1e-8);
        EXPECT_NEAR(s.freqs[0], std::sqrt(1.0 - 0.02), 1e-12);
    }
}

TEST(Spectrum, HeavyImpurityAsymptotics) {
    for (std::size_t n : {3u, 6u, 10u}) {
        const TrapConfig c = make(n, 2, 2.0, 0.01);
        const auto s = compute_spectrum(c);
        EXPECT_NEAR(s.freqs[s.ll_index()], 0.5, 5e-3);
        for (Eigen::Index k = 0; k < s.ll_index(); ++k) EXPECT_NEAR(s.freqs[k], 1.0, 5e-3);
    }
}

TEST(Spectrum, ImpurityLocalization) {
    for (double mu : {2.0, 3.0}) {
        for (std::size_t jm : {1u, 3u, 5u}) {
            const auto s = compute_spectrum(make(5, jm, mu, 0.01));
            const double b = s.vectors(static_cast<Eigen::Index>(jm - 1), s.ll_index());
            EXPECT_GE(b * b, 0.999) << "mu=" << mu << " jm=" << jm;
        }
    }
    for (double mu : {0.5, 0.3}) {
        for (std::size_t jm : {1u, 3u, 5u}) {
            const auto s = compute_spectrum(make(5, jm, mu, 0.01));
            const double b = s.vectors(static_cast<Eigen::Index>(jm - 1), s.com_index());
            EXPECT_GE(b * b, 0.999) << "mu=" << mu << " jm=" << jm;
        }
    }
}

// Mass ratios of common co-trapped ion pairs.
TEST(Spectrum, PairSplittingGrowsWithMassContrast) {
    const auto pos = solve_equilibrium(6);
    const std::vector<double> heavy = {1.0, 43.0 / 40.0, 40.0 / 27.0};
    double prev = -1.0;
    for (double mu : heavy) {
        const auto s = compute_spectrum(make(6, 2, mu, 0.1), pos);
        const double ll_gap = s.freqs[4] - s.freqs[5];
        EXPECT_GT(ll_gap, prev) << "LL mode should split downward as mu grows, mu=" << mu;
        prev = ll_gap;
    }
    const std::vector<double> light = {1.0, 40.0 / 43.0, 24.0 / 40.0, 9.0 / 24.0};
    prev = -1.0;
    for (double mu : light) {
        const auto s = compute_spectrum(make(6, 2, mu, 0.1), pos);
        const double com_gap = s.freqs[0] - s.freqs[1];
        EXPECT_GT(com_gap, prev) << "COM mode should split upward as mu shrinks, mu=" << mu;
        prev = com_gap;
    }
}

TEST(AsymptoticFreqs, Examples) {
    const double wx = std::sqrt(1.0 - 0.5 * 0.01);
    const auto heavy = asymptotic_freqs(make(5, 3, 2.0, 0.1));
    ASSERT_EQ(heavy.size(), 5u);
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(heavy[k], wx);
    EXPECT_DOUBLE_EQ(heavy[4], wx / 2.0);

    const auto light = asymptotic_freqs(make(4, 1, 0.5, 0.1));
    EXPECT_DOUBLE_EQ(light[0], 2.0 * wx);
    for (int k = 1; k < 4; ++k) EXPECT_DOUBLE_EQ(light[k], wx);

    const auto unit = asymptotic_freqs(make(4, 2, 1.0, 0.1));
    for (double w : unit) EXPECT_DOUBLE_EQ(w, wx);
}

TEST(AsymptoticFreqs, ApproachesDiagonalizedSpectrum) {
    const TrapConfig c = make(6, 2, 1.6, 0.003);
    const auto s = compute_spectrum(c);
    const auto a = asymptotic_freqs(c);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(s.freqs[static_cast<Eigen::Index>(k)], a[k], 1e-4);
}

TEST(CuspMetric, GrowsAsAlphaShrinks) {
    const auto pos = solve_equilibrium(6);
    const double c30 = cusp_metric(make(6, 2, 1.0, 0.3), pos);
    const double c10 = cusp_metric(make(6, 2, 1.0, 0.1), pos);
    const double c05 = cusp_metric(make(6, 2, 1.0, 0.05), pos);
    EXPECT_GT(c05, c10);
    EXPECT_GT(c10, c30);
}

TEST(CuspMetric, SmallAlphaLimitIsUnitJump) {
    // d(1/mu)/dmu = -1 on one side, 0 on the other
    const auto j = cusp_jumps(make(6, 2, 1.0, 1e-3), solve_equilibrium(6));
    EXPECT_NEAR(j.ll, 1.0, 1e-2);
    EXPECT_NEAR(j.com, 1.0, 1e-2);
}

TEST(CuspMetric, PositiveForEdgeAndCentreImpurity) {
    const auto pos = solve_equilibrium(6);
    EXPECT_GT(cusp_metric(make(6, 1, 1.0, 0.1), pos), 0.0);
    EXPECT_GT(cusp_metric(make(6, 3, 1.0, 0.1), pos), 0.0);
}
