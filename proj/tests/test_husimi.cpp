#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "otoc/classical.hpp"
#include "otoc/evolution.hpp"
#include "otoc/husimi.hpp"

using namespace otoc;

namespace {

constexpr double kInvPi = 1.0 / std::numbers::pi;

PhaseGrid square(double c_q, double c_p, double half, int n) {
    return {c_q - half, c_q + half, n, c_p - half, c_p + half, n};
}

double rel_err(double q, double p, const ClassicalState& ref) {
    return std::hypot(q - ref.q, p - ref.p) / std::hypot(ref.q, ref.p);
}

}  // namespace

TEST(PhaseGrid, Validation) {
    EXPECT_THROW((PhaseGrid{1.0, 0.0, 5, 0.0, 1.0, 5}.validate()), Error);
    EXPECT_THROW((PhaseGrid{0.0, 1.0, 1, 0.0, 1.0, 5}.validate()), Error);
    const PhaseGrid g{-1.0, 1.0, 5, -2.0, 2.0, 3};
    EXPECT_DOUBLE_EQ(g.q_at(4), 1.0);
    EXPECT_DOUBLE_EQ(g.p_at(1), 0.0);
}

TEST(HusimiQ, VacuumPeakIsInversePi) {
    const auto vac = FockState::vacuum(FockDim::from_dim(20));
    const auto hg = husimi_q(vac, {-1.0, 1.0, 3, -1.0, 1.0, 3});
    EXPECT_NEAR(hg.value(1, 1), kInvPi, 1e-15);
    EXPECT_EQ(count_local_maxima(hg), 1);
}

TEST(HusimiQProperty, CoherentClosedForm) {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> coord(-6.0, 6.0);
    const auto dim = FockDim::from_photons(200);
    for (int trial = 0; trial < 20; ++trial) {
        const CoherentParams beta{coord(rng), coord(rng)};
        const auto s = coherent_state(dim, beta);
        const PhaseGrid g{coord(rng) - 3.0, coord(rng) + 3.5, 7, coord(rng) - 3.0, coord(rng) + 3.5, 6};
        if (!(g.q_min < g.q_max && g.p_min < g.p_max)) continue;
        const auto hg = husimi_q(s, g);
        for (int i = 0; i < g.n_q; ++i) {
            for (int j = 0; j < g.n_p; ++j) {
                const cplx alpha = cplx(g.q_at(i), g.p_at(j)) / std::sqrt(2.0);
                const double want = kInvPi * std::exp(-std::norm(alpha - beta.beta()));
                EXPECT_NEAR(hg.value(i, j), want, 1e-8);
            }
        }
    }
}

TEST(HusimiQProperty, BoundedByInversePi) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss;
    const auto dim = FockDim::from_dim(40);
    for (int trial = 0; trial < 10; ++trial) {
        CVector c(40);
        for (int n = 0; n < 40; ++n) c(n) = cplx(gauss(rng), gauss(rng));
        c /= c.norm();
        const auto hg = husimi_q(FockState(dim, c), square(0.0, 0.0, 8.0, 41));
        for (double v : hg.values()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, kInvPi + 1e-12);
        }
    }
}

TEST(HusimiQ, GridBeyondFockReach) {
    const auto s = FockState::vacuum(FockDim::from_dim(20));
    try {
        husimi_q(s, square(0.0, 0.0, 20.0, 5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TailTooHeavy);
    }
}

TEST(HusimiNorm, VacuumOnSquare) {
    const auto vac = FockState::vacuum(FockDim::from_dim(30));
    EXPECT_NEAR(husimi_norm(husimi_q(vac, square(0.0, 0.0, 6.0, 201))), 1.0, 1e-3);
}

TEST(HusimiNorm, CoherentWindowAndHalfSupport) {
    const auto s = coherent_state(FockDim::from_photons(100), {3.0, 3.0});
    EXPECT_NEAR(husimi_norm(husimi_q(s, square(3.0, 3.0, 6.0, 121))), 1.0, 1e-3);
    const PhaseGrid half{3.0, 9.0, 61, -3.0, 9.0, 121};
    const double n_half = husimi_norm(husimi_q(s, half));
    EXPECT_LT(n_half, 0.6);
    EXPECT_GT(n_half, 0.4);
}

TEST(HusimiNorm, IncreasesWithGridExtent) {
    const auto s = coherent_state(FockDim::from_photons(100), {-2.0, 1.0});
    double prev = 0.0;
    for (double half : {1.0, 2.0, 3.0, 4.0, 6.0}) {
        const double n = husimi_norm(husimi_q(s, square(-2.0, 1.0, half, 101)));
        EXPECT_GT(n, prev);
        prev = n;
    }
    EXPECT_NEAR(prev, 1.0, 1e-3);
}

TEST(HusimiCentroid, CoherentState) {
    const auto s = coherent_state(FockDim::from_photons(100), {3.0, 3.0});
    const auto [q, p] = husimi_centroid(husimi_q(s, square(3.0, 3.0, 7.0, 141)));
    EXPECT_NEAR(q, 3.0, 0.02);
    EXPECT_NEAR(p, 3.0, 0.02);
}

TEST(HusimiCentroid, GridTooSmall) {
    const auto s = coherent_state(FockDim::from_photons(100), {3.0, 3.0});
    try {
        husimi_centroid(husimi_q(s, square(0.0, 0.0, 2.0, 21)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::GridTooSmall);
    }
}

TEST(HusimiDynamics, SaddlePacketStretchesAlongUnstableDirection) {
    const auto dim = FockDim::from_photons(300);
    const auto prop = diagonalize(build_iho(dim));
    const auto psi = evolve(prop, FockState::vacuum(dim), 1.0);
    const auto hg = husimi_q(psi, square(0.0, 0.0, 20.0, 201));

    // Maximum stays at the origin.
    int bi = 0, bj = 0;
    for (int i = 0; i < 201; ++i)
        for (int j = 0; j < 201; ++j)
            if (hg.value(i, j) > hg.value(bi, bj)) bi = i, bj = j;
    EXPECT_NEAR(hg.grid().q_at(bi), 0.0, 0.21);
    EXPECT_NEAR(hg.grid().p_at(bj), 0.0, 0.21);

    // Principal axes of the second-moment matrix against the Jacobian eigenvectors at O:
    // unstable (1,1)/sqrt2 for eigenvalue +1, stable (1,-1)/sqrt2 for -1.
    const auto m = husimi_moments(hg);
    const double along = 0.5 * (m.var_q + m.var_p) + m.cov_qp;
    const double across = 0.5 * (m.var_q + m.var_p) - m.cov_qp;
    EXPECT_NEAR(m.var_q, m.var_p, 1e-6);
    EXPECT_GT(m.cov_qp, 0.0);
    // Husimi variances are state variances + 1/2: e^{2t}/2 + 1/2 and e^{-2t}/2 + 1/2.
    EXPECT_NEAR(along, 0.5 * std::exp(2.0) + 0.5, 1e-3);
    EXPECT_NEAR(across, 0.5 * std::exp(-2.0) + 0.5, 1e-3);
    EXPECT_LT(across, 1.0);
    EXPECT_GT(along, 1.0);
}

TEST(HusimiDynamics, IhoCentroidFollowsClassicalFlow) {
    const auto dim = FockDim::from_photons(300);
    const auto prop = diagonalize(build_iho(dim));
    const auto psi0 = coherent_state(dim, {3.0, 3.0});
    for (double t : {0.25, 0.5, 0.75, 1.0}) {
        const auto hg = husimi_q(evolve(prop, psi0, t), square(0.0, 0.0, 20.0, 201));
        const auto [q, p] = husimi_centroid(hg);
        const auto cl = flow_iho_analytic({3.0, 3.0}, t);
        EXPECT_LT(rel_err(q, p, cl), 0.05) << "t=" << t;
    }
}

TEST(HusimiDynamics, HihoCentroidFollowsRk4) {
    const auto dim = FockDim::from_photons(250);
    const auto hp = HihoParams::standard();
    const auto prop = diagonalize(build_hiho(dim, hp));
    const auto psi0 = coherent_state(dim, {8.0, 9.0});
    const auto sys = HamSystem::hiho(hp);
    const PhaseGrid grid{-15.0, 15.0, 151, -40.0, 40.0, 201};
    for (double t : {0.05, 0.1, 0.15, 0.2}) {
        const auto [q, p] = husimi_centroid(husimi_q(evolve(prop, psi0, t), grid));
        const auto cl = integrate(sys, {8.0, 9.0}, t, 1e-4).back();
        EXPECT_LT(rel_err(q, p, cl), 0.05) << "t=" << t;
    }
}
