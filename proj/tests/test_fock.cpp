#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "otoc/evolution.hpp"
#include "otoc/fock.hpp"

using namespace otoc;

namespace {

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(FockDim, RejectsDegenerateSpaces) {
    EXPECT_THROW(FockDim::from_dim(1), Error);
    EXPECT_THROW(FockDim::from_photons(0), Error);
    const auto d = FockDim::from_photons(300);
    EXPECT_EQ(d.dim(), 301);
    EXPECT_EQ(d.n_p(), 300);
}

TEST(Ladder, TwoLevelHasSingleEntry) {
    const auto [a, ad] = make_ladder(FockDim::from_dim(2));
    EXPECT_EQ(a(0, 1), cplx(1.0, 0.0));
    EXPECT_EQ(a(0, 0), cplx(0.0));
    EXPECT_EQ(a(1, 0), cplx(0.0));
    EXPECT_EQ(a(1, 1), cplx(0.0));
    EXPECT_EQ(ad(1, 0), cplx(1.0, 0.0));
}

TEST(Ladder, SqrtNAboveDiagonal) {
    const auto [a, ad] = make_ladder(FockDim::from_dim(4));
    EXPECT_DOUBLE_EQ(a(2, 3).real(), std::sqrt(3.0));
    EXPECT_EQ(max_abs(ad.matrix() - a.matrix().adjoint()), 0.0);
}

TEST(Ladder, NumberOperatorAndTruncationSignature) {
    const auto dim = FockDim::from_dim(10);
    const auto [a, ad] = make_ladder(dim);
    const CMatrix n = (ad * a).matrix();
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            EXPECT_NEAR(std::abs(n(i, j) - cplx(i == j ? i : 0.0)), 0.0, 1e-14);
        }
    }
    const CMatrix aad = (a * ad).matrix();
    for (int i = 0; i < 9; ++i) EXPECT_NEAR(aad(i, i).real(), i + 1.0, 1e-14);
    EXPECT_EQ(aad(9, 9), cplx(0.0));
}

TEST(Ladder, CommutatorIsIdentityExceptLastEntry) {
    for (int d : {2, 3, 7, 25, 64}) {
        const auto [a, ad] = make_ladder(FockDim::from_dim(d));
        const CMatrix c = (a * ad - ad * a).matrix();
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                double want = 0.0;
                if (i == j) want = (i == d - 1) ? -(d - 1.0) : 1.0;
                // Products of sqrt(n) pairs are integers; rounding only.
                EXPECT_NEAR(c(i, j).real(), want, 1e-12) << "d=" << d;
                EXPECT_EQ(c(i, j).imag(), 0.0);
            }
        }
    }
}

TEST(Quadratures, TwoLevelEntries) {
    const auto [x, p] = quadratures(FockDim::from_dim(2));
    const double s = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(x(0, 1) - cplx(s, 0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(x(1, 0) - cplx(s, 0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(p(0, 1) - cplx(0, -s)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(p(1, 0) - cplx(0, s)), 0.0, 1e-15);
    EXPECT_TRUE(x.is_hermitian());
    EXPECT_TRUE(p.is_hermitian());
}

TEST(Quadratures, CanonicalCommutatorOnInteriorBlock) {
    for (int d : {3, 10, 40}) {
        const auto [x, p] = quadratures(FockDim::from_dim(d));
        const CMatrix c = (x * p - p * x).matrix();
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                cplx want = 0.0;
                if (i == j) want = (i == d - 1) ? cplx(0.0, -(d - 1.0)) : cplx(0.0, 1.0);
                EXPECT_NEAR(std::abs(c(i, j) - want), 0.0, 1e-12);
            }
        }
    }
}

TEST(BuildIho, ThreeLevelEntries) {
    const auto h = build_iho(FockDim::from_dim(3));
    EXPECT_NEAR(h(0, 2).real(), -std::sqrt(2.0) / 2.0, 1e-15);
    EXPECT_NEAR(h(2, 0).real(), -std::sqrt(2.0) / 2.0, 1e-15);
    EXPECT_EQ(h(1, 1), cplx(0.0));
}

TEST(BuildIho, ZeroDiagonal) {
    const auto h = build_iho(FockDim::from_dim(57));
    for (int n = 0; n < 57; ++n) EXPECT_EQ(h(n, n), cplx(0.0));
}

TEST(BuildIho, SpectrumComesInPlusMinusPairs) {
    const auto prop = diagonalize(build_iho(FockDim::from_dim(40)));
    const auto& w = prop.eigenvalues();
    const double scale = w.cwiseAbs().maxCoeff();
    for (int k = 0; k < 40; ++k) EXPECT_NEAR(w(k), -w(39 - k), 1e-10 * scale);
}

TEST(BuildHiho, ConstantShiftForStandardParameters) {
    EXPECT_EQ(HihoParams::standard().offset(), 31.640625);
    EXPECT_THROW(HihoParams::make(0.0, 1.0), Error);
    EXPECT_THROW(HihoParams::make(3.0, -1.0), Error);
}

// Independent route: H' = P^2 + V(X) with V evaluated through the spectral
// decomposition of the truncated X. The constant shift must appear on the diagonal.
TEST(BuildHiho, MatchesKineticPlusPotentialRoute) {
    const auto dim = FockDim::from_dim(30);
    const auto hp = HihoParams::standard();
    const auto h = build_hiho(dim, hp);
    const auto [x, p] = quadratures(dim);

    Eigen::SelfAdjointEigenSolver<CMatrix> xs(x.matrix());
    Eigen::VectorXcd vdiag(30);
    for (int k = 0; k < 30; ++k) {
        const double q = xs.eigenvalues()(k);
        vdiag(k) = -0.25 * hp.gamma() * hp.gamma() * q * q + hp.g() * q * q * q * q;
    }
    const CMatrix v = xs.eigenvectors() * vdiag.asDiagonal() * xs.eigenvectors().adjoint();
    const CMatrix route = p.matrix() * p.matrix() + v;

    const CMatrix diff = (h.matrix() - route).topLeftCorner(20, 20);
    for (int n = 0; n < 20; ++n) EXPECT_NEAR(diff(n, n).real(), 31.640625, 1e-10);
    CMatrix off = diff;
    off.diagonal().setZero();
    EXPECT_LE(max_abs(off), 1e-10);
}

TEST(BuildHiho, GroundStateEnergyPositive) {
    const auto prop = diagonalize(build_hiho(FockDim::from_dim(251), HihoParams::standard()));
    EXPECT_GT(prop.eigenvalues()(0), 0.0);
}

TEST(Builders, HermitianAcrossDimensions) {
    for (int d : {2, 3, 4, 5, 8, 13, 31, 64, 127, 256, 401, 600}) {
        const auto dim = FockDim::from_dim(d);
        const auto iho = build_iho(dim);
        const auto hiho = build_hiho(dim, HihoParams::standard());
        EXPECT_LE(iho.hermiticity_defect(), 1e-12 * iho.max_abs()) << d;
        EXPECT_LE(hiho.hermiticity_defect(), 1e-12 * hiho.max_abs()) << d;
    }
}

TEST(CoherentState, VacuumAtOrigin) {
    const auto s = coherent_state(FockDim::from_dim(12), {0.0, 0.0});
    EXPECT_EQ(s[0], cplx(1.0));
    for (int n = 1; n < 12; ++n) EXPECT_EQ(s[n], cplx(0.0));
    EXPECT_EQ(mean_photon(s), 0.0);
}

TEST(CoherentState, MeanPhotonAtB) {
    const auto s = coherent_state(FockDim::from_photons(300), {3.0, 3.0});
    EXPECT_NEAR(mean_photon(s), 9.0, 1e-8);
}

TEST(CoherentState, MeanPhotonAtC) {
    const double q = -4.267, p = 5.643;
    const auto s = coherent_state(FockDim::from_photons(300), {q, p});
    // (q^2 + p^2)/2 = 25.025369
    EXPECT_NEAR(mean_photon(s), 0.5 * (q * q + p * p), 1e-6);
    EXPECT_NEAR(mean_photon(s), 25.025369, 1e-6);
}

TEST(CoherentState, PoissonPeakForA) {
    const auto s = coherent_state(FockDim::from_photons(300), {5.0, -5.0});
    const RVector prob = s.probabilities();
    Eigen::Index arg = 0;
    prob.maxCoeff(&arg);
    // Integer mean 25: pmf(24) == pmf(25) analytically.
    EXPECT_TRUE(arg == 24 || arg == 25) << arg;
    EXPECT_NEAR(prob(24), prob(25), 1e-14);
}

TEST(CoherentState, UnitNorm) {
    const auto s = coherent_state(FockDim::from_photons(300), {-4.267, -5.643});
    EXPECT_NEAR(s.norm(), 1.0, 1e-12);
}

TEST(CoherentState, TailTooHeavyWhenOutsideTruncation) {
    try {
        coherent_state(FockDim::from_dim(10), {5.0, 5.0});
        FAIL() << "expected TailTooHeavy";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TailTooHeavy);
    }
}

TEST(CoherentState, TailMatchesDirectSum) {
    // 1 - sum_{n<D} Poisson(lambda) in long double for a moderate tail.
    const double lambda = 9.0;
    const int d = 20;
    long double head = 0.0L, term = std::exp(-9.0L);
    for (int n = 0; n < d; ++n) {
        head += term;
        term *= lambda / (n + 1.0L);
    }
    EXPECT_NEAR(coherent_tail(lambda, d), static_cast<double>(1.0L - head), 1e-15);
}

TEST(CoherentStateProperty, MeanPhotonEqualsBetaSquared) {
    std::mt19937_64 rng(20240117);
    std::uniform_int_distribution<int> dims(60, 240);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = dims(rng);
        const double r = std::sqrt(2.0 * (d / 4.0) * unit(rng));
        const double th = 2.0 * std::numbers::pi * unit(rng);
        const CoherentParams cp{r * std::cos(th), r * std::sin(th)};
        const auto s = coherent_state(FockDim::from_dim(d), cp);
        EXPECT_NEAR(mean_photon(s), cp.beta_abs2(), 1e-8);
    }
}

TEST(CoherentStateProperty, OverlapLaw) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    const auto dim = FockDim::from_dim(120);
    for (int trial = 0; trial < 100; ++trial) {
        const CoherentParams a{coord(rng), coord(rng)}, b{coord(rng), coord(rng)};
        const auto sa = coherent_state(dim, a), sb = coherent_state(dim, b);
        const double lhs = std::norm(sa.amplitudes().dot(sb.amplitudes()));
        const double rhs = std::exp(-std::norm(a.beta() - b.beta()));
        EXPECT_NEAR(lhs, rhs, 1e-8);
    }
}
