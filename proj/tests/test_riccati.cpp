#include "slq/feedback.hpp"
#include "slq/riccati.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

using namespace slq;

namespace {

// Closed form of y' = q y^2 + p y + s through y(t0) = y0, valid when the
// quadratic has two real roots: (y - r1)/(y - r2) grows like exp(q (r1 - r2) t).
double scalar_riccati(double q, double p, double s, double t0, double y0, double t) {
    const double disc = std::sqrt(p * p - 4.0 * q * s);
    const double r1 = (-p + disc) / (2.0 * q), r2 = (-p - disc) / (2.0 * q);
    const double u = (y0 - r1) / (y0 - r2) * std::exp(q * (r1 - r2) * (t - t0));
    return (r1 - r2 * u) / (1.0 - u);
}

const ModelSpec kAd = from_advertising({});

}  // namespace

TEST(FollowerRiccati, MatchesClosedForm) {
    const TimeGrid g(1.0, 200);
    const ScalarTrajectory Pi = solve_follower_riccati(kAd, g);
    const double b = 0.04 / 0.3;
    for (std::size_t k = 0; k < g.nodes(); ++k)
        EXPECT_NEAR(Pi[k], scalar_riccati(b, 1.0, 1.2, 1.0, 1.6, g.t(k)), 1e-10) << "k=" << k;
    EXPECT_EQ(Pi[g.steps()], kAd.M);
}

TEST(FollowerRiccati, ZeroWeightsGiveExactZero) {
    ModelSpec s = kAd;
    s.L = 0.0;
    s.M = 0.0;
    const ScalarTrajectory Pi = solve_follower_riccati(s, TimeGrid(1.0, 50));
    for (double v : Pi.values()) EXPECT_EQ(v, 0.0);
}

TEST(FollowerRiccati, EscapesToInfinityIsReported) {
    // Pi' = Pi^2 + 100 backward from 0 is -10 tan(10 (T - t)), which escapes at T - t = pi/20.
    ModelSpec s;
    s.B1 = 1.0;
    s.L = -100.0;
    try {
        solve_follower_riccati(s, TimeGrid(1.0, 2000));
        FAIL() << "no blow-up detected";
    } catch (const RiccatiBlowUp& e) {
        EXPECT_EQ(e.equation(), "Pi");
        EXPECT_NEAR(1.0 - e.time(), M_PI / 20.0, 0.01);
    }
}

TEST(ErrorVariance, MatchesClosedForm) {
    const TimeGrid g(1.0, 200);
    const ScalarTrajectory P = solve_error_variance_P(kAd, g);
    EXPECT_EQ(P[0], 0.0);
    for (std::size_t k = 0; k < g.nodes(); ++k)
        EXPECT_NEAR(P[k], scalar_riccati(-0.36, -1.24, 0.16, 0.0, 0.0, g.t(k)), 1e-10) << "k=" << k;
}

TEST(LeaderRiccati, ZeroPatternAndSymmetry) {
    const OfflineSolution off = solve_offline(kAd, TimeGrid(1.0, 2000));
    for (std::size_t k = 0; k < off.grid.nodes(); ++k) {
        for (const Mat2* m : {&off.pi.Pi1[k], &off.pi.Pi2[k]}) {
            EXPECT_LT(std::abs((*m)(0, 1)), 1e-10);
            EXPECT_LT(std::abs((*m)(1, 0)), 1e-10);
            EXPECT_LT(std::abs((*m)(1, 1)), 1e-10);
        }
        for (const Mat2* m : {&off.pi.Pi1[k], &off.pi.Pi2[k], &off.pi.Pi3[k], &off.Pcal[k]})
            EXPECT_LT(std::abs((*m)(0, 1) - (*m)(1, 0)), 1e-8);
    }
}

TEST(LeaderRiccati, Pi1CornerIsLinear) {
    // With the off-diagonal entries zero the (1,1) entry solves
    // p' = -2A p - Lbar, p(T) = Mbar.
    const TimeGrid g(1.0, 200);
    const OfflineSolution off = solve_offline(kAd, g);
    const double A = -0.5, Lbar = -1.0, Mbar = 2.0;
    for (std::size_t k = 0; k < g.nodes(); ++k) {
        const double want = (Mbar + Lbar / (2 * A)) * std::exp(2 * A * (1.0 - g.t(k))) - Lbar / (2 * A);
        EXPECT_NEAR(off.pi.Pi1[k](0, 0), want, 1e-10);
    }
}

TEST(LeaderRiccati, RelationsHold) {
    const OfflineSolution off = solve_offline(kAd, TimeGrid(1.0, 2000));
    const RelationResiduals r = check_riccati_relations(off.pi, solve_alt_riccatis(off.blocks));
    EXPECT_LT(r.pihat1_minus_pi1, 1e-8);
    EXPECT_LT(r.pihat2_minus_pihat1_pi2, 1e-8);
    EXPECT_LT(r.pihat3_minus_pihat2_pi3, 1e-8);
}

TEST(LeaderRiccati, RelationsHoldWithTimeVaryingCoefficients) {
    ModelSpec s = kAd;
    s.A = CoefficientFn::table({{0.0, -0.5}, {1.0, -0.2}});
    s.B2 = CoefficientFn::table({{0.0, 0.4}, {1.0, 0.7}});
    s.f1 = CoefficientFn::table({{0.0, 0.6}, {1.0, 0.2}});
    const OfflineSolution off = solve_offline(s, TimeGrid(1.0, 2000));
    EXPECT_LT(check_riccati_relations(off.pi, solve_alt_riccatis(off.blocks)).max(), 1e-8);
}

TEST(LeaderRiccati, OfflineSolveIsFast) {
    const auto t0 = std::chrono::steady_clock::now();
    solve_offline(kAd, TimeGrid(1.0, 2000));
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
}

TEST(MatrixExponential, MatchesBackwardIntegrationOnFrozenBlocks) {
    const OfflineSolution off = solve_offline(kAd, TimeGrid(1.0, 400));
    const BlockCoefficients frozen = off.blocks.frozen_at(0.0);
    const LeaderRiccatis pi = solve_leader_riccatis(frozen);
    for (std::size_t k = 0; k < off.grid.nodes(); k += 7)
        EXPECT_LT(max_abs(Mat2(riccati_via_matrix_exponential(frozen, off.grid.t(k)) - pi.Pi1[k])), 1e-6);
    EXPECT_THROW(riccati_via_matrix_exponential(off.blocks, 0.0), PreconditionFailure);
}

TEST(MatrixExponential, MatchesRk4OnRandomConstantEquations) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const TimeGrid g(1.0, 2000);
    for (int trial = 0; trial < 20; ++trial) {
        RiccatiCoeffs c;
        c.left = mat2(u(rng), u(rng), u(rng), u(rng));
        c.right = c.left.transpose();
        const double q = u(rng);
        c.quad = mat2(q, 0.3 * q, 0.3 * q, -std::abs(q));
        const double f = u(rng);
        c.forcing = mat2(f, 0.1, 0.1, f * f);
        const Mat2 PT = mat2(u(rng) + 1.0, 0.2, 0.2, 0.5);
        const MatTrajectory ode = solve_riccati_backward(g, PT, [&](double) { return c; }, "random");
        for (std::size_t k = 0; k < g.nodes(); k += 125)
            EXPECT_LT(max_abs(Mat2(riccati_exponential(c, PT, 1.0 - g.t(k)) - ode[k])), 1e-9) << "trial " << trial;
    }
}

TEST(Convergence, HalvingStepCutsResidualsByTwelve) {
    const auto coarse = riccati_residuals(kAd, TimeGrid(1.0, 25));
    const auto fine = riccati_residuals(kAd, TimeGrid(1.0, 50));
    ASSERT_EQ(coarse.size(), 9u);
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        if (coarse[i].residual < 1e-13) continue;
        EXPECT_GE(coarse[i].residual / fine[i].residual, 12.0) << coarse[i].name;
    }
}

TEST(Uniqueness, ZeroWeightsAreNotStrictlyPositive) {
    ModelSpec s;
    s.B1 = -0.2;
    s.B2 = 0.4;
    const OfflineSolution off = solve_offline(s, TimeGrid(1.0, 20));
    const UniquenessReport u = check_uniqueness_conditions(off.blocks, off.pi);
    EXPECT_FALSE(u.s_positive);
    EXPECT_FALSE(u.pi1_positive);
    EXPECT_EQ(u.nodes.size(), 21u);
}

TEST(Uniqueness, MinEigenvalue) {
    EXPECT_DOUBLE_EQ(min_eigenvalue_sym(mat2(2, 1, 1, 2)), 1.0);
    EXPECT_DOUBLE_EQ(min_eigenvalue_sym(mat2(-3, 0, 0, 5)), -3.0);
}
