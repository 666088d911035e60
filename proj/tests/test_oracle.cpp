#include <cmath>

#include <gtest/gtest.h>

#include "ionchain/oracle.hpp"

using namespace ionchain;
using namespace ionchain::oracle;

namespace {

TrapConfig make(std::size_t n, std::size_t jm, double mu, double alpha, std::size_t phonons, double beta = 0.0) {
    TrapConfig c;
    c.n_ions = n;
    c.impurity_site = jm;
    c.mass_ratio = mu;
    c.alpha = alpha;
    c.dipole_beta = beta;
    c.ll_phonons = phonons;
    return c;
}

double max_abs(const SparseOp& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseOp::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
    return v;
}

}  // namespace

TEST(FockBasis, LexicographicEnumeration) {
    const FockBasis b(3, 2);
    EXPECT_EQ(b.dimension(), 27u);
    EXPECT_EQ(b.state(0), (std::vector<std::size_t>{0, 0, 0}));
    EXPECT_EQ(b.state(1), (std::vector<std::size_t>{0, 0, 1}));
    EXPECT_EQ(b.state(3), (std::vector<std::size_t>{0, 1, 0}));
    EXPECT_EQ(b.state(26), (std::vector<std::size_t>{2, 2, 2}));
    for (std::size_t i = 0; i < b.dimension(); ++i) EXPECT_EQ(b.index(b.state(i)), i);
    EXPECT_THROW(b.index({0, 3, 0}), std::out_of_range);
}

TEST(Operators, Hermitian) {
    const TrapConfig c = make(3, 2, 1.7, 0.1, 1, 0.3);
    const auto s = compute_spectrum(c);
    const FockBasis basis(3, 5);
    const auto ops = mode_operators(basis, s);
    for (std::size_t j = 0; j < 3; ++j) {
        const SparseOp x = position_operator(ops, s, c, j);
        const SparseOp p = momentum_operator(ops, s, c, j);
        const SparseOp n = local_number_operator(ops, s, c, j);
        EXPECT_LE(max_abs(SparseOp(x - SparseOp(x.adjoint()))), 1e-12);
        EXPECT_LE(max_abs(SparseOp(p - SparseOp(p.adjoint()))), 1e-12);
        EXPECT_LE(max_abs(SparseOp(n - SparseOp(n.adjoint()))), 1e-12);
    }
}

TEST(Operators, CanonicalCommutatorBelowTopShell) {
    const TrapConfig c = make(3, 3, 0.6, 0.1, 1);
    const auto s = compute_spectrum(c);
    const FockBasis basis(3, 4);
    const auto ops = mode_operators(basis, s);
    for (std::size_t j = 0; j < 3; ++j) {
        const SparseOp x = position_operator(ops, s, c, j);
        const SparseOp p = momentum_operator(ops, s, c, j);
        const Eigen::MatrixXcd comm = Eigen::MatrixXcd(SparseOp(x * p - p * x));
        for (std::size_t r = 0; r < basis.dimension(); ++r) {
            for (std::size_t col = 0; col < basis.dimension(); ++col) {
                if (basis.on_top_shell(r) || basis.on_top_shell(col)) continue;
                const cplx expected = r == col ? cplx(0.0, 1.0) : cplx(0.0, 0.0);
                EXPECT_LE(std::abs(comm(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) - expected), 1e-12);
            }
        }
    }
}

TEST(ExactObservables, UnitMassRatioSinglePhonon) {
    const TrapConfig c = make(2, 1, 1.0, 0.01, 1);
    const auto s = compute_spectrum(c);
    const auto obs = exact_observables(c, s, 5);
    for (std::size_t j = 0; j < 2; ++j) {
        const double b = s.vectors(static_cast<Eigen::Index>(j), s.ll_index());
        // exact value includes an O(alpha^4) zero-point part
        EXPECT_NEAR(obs.mean[j], b * b, 1e-6);
    }
}

TEST(ExactObservables, HeavyImpurityCondenses) {
    const TrapConfig c = make(2, 2, 2.0, 0.01, 2);
    const auto obs = exact_observables(c, 6);
    EXPECT_NEAR(obs.mean[1], 2.0, 1e-3);
    EXPECT_NEAR(obs.mean[0], 0.0, 1e-3);
}

TEST(ExactObservables, VacuumInDegenerateLimit) {
    const TrapConfig c = make(3, 2, 1.0, 1e-3, 0);
    for (double m : exact_observables(c, 4).mean) EXPECT_NEAR(m, 0.0, 1e-6);
}

TEST(ExactObservables, MatchesQuadraticFormEvaluation) {
    for (std::size_t n : {2u, 3u}) {
        for (double mu : {0.5, 1.0, 2.0}) {
            for (std::size_t ph : {0u, 2u}) {
                const TrapConfig c = make(n, n, mu, 0.1, ph, 0.5);
                const auto s = compute_spectrum(c);
                const auto exact = exact_observables(c, s, ph + 4);
                const auto fast = observables(s, c);
                for (std::size_t j = 0; j < n; ++j) {
                    EXPECT_NEAR(fast.mean[j], exact.mean[j], 1e-9);
                    EXPECT_NEAR(fast.variance[j], exact.variance[j], 1e-9);
                }
                EXPECT_LE((fast.correlation - exact.correlation).cwiseAbs().maxCoeff(), 1e-9);
            }
        }
    }
}

TEST(ExactObservables, Guards) {
    const TrapConfig big = make(5, 2, 1.0, 0.1, 0);
    EXPECT_THROW(exact_observables(big, compute_spectrum(big), 4), std::invalid_argument);
    const TrapConfig c = make(2, 1, 1.0, 0.1, 2);
    EXPECT_THROW(exact_observables(c, compute_spectrum(c), 5), std::invalid_argument);
}

TEST(ConvergenceScan, AlreadyConvergedAboveTwoExtraQuanta) {
    const TrapConfig c = make(2, 1, 1.3, 0.1, 1);
    const auto rows = convergence_scan(c, {4, 6, 8});
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_TRUE(std::isnan(rows[0].delta));
    EXPECT_LE(rows[1].delta, 1e-12);
    EXPECT_LE(rows[2].delta, 1e-12);
}

TEST(ConvergenceScan, DeltasShrinkFromTruncatedCutoffs) {
    const TrapConfig c = make(2, 1, 1.3, 0.1, 1);
    const auto rows = convergence_scan(c, {1, 2, 3, 4});
    EXPECT_GT(rows[1].delta, rows[2].delta);
    EXPECT_GT(rows[2].delta, 1e-6);  // cutoff 2 still clips the n + 2 component
    EXPECT_LE(rows[3].delta, 1e-12);
}

TEST(ConvergenceScan, DuplicateCutoffsGiveIdenticalRows) {
    const TrapConfig c = make(2, 2, 0.7, 0.1, 1);
    const auto rows = convergence_scan(c, {6, 6});
    EXPECT_EQ(rows[0].observables.mean, rows[1].observables.mean);
    EXPECT_EQ(rows[1].delta, 0.0);
}

TEST(ConvergenceScan, ThreeIonsTwoPhonons) {
    const TrapConfig c = make(3, 2, 1.2, 0.1, 2);
    const auto rows = convergence_scan(c, {6, 8, 10});
    EXPECT_LT(rows.back().delta, 1e-8);
}
