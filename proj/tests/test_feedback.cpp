#include "slq/feedback.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace slq;

namespace {

const ModelSpec kAd = from_advertising({});

ModelSpec zero_cost_model() {
    ModelSpec s;
    s.A = -0.5;
    s.B1 = -0.2;
    s.B2 = 0.4;
    s.c = 0.2;
    s.cbar = 0.4;
    s.f1 = 0.6;
    s.x0 = 0.01;
    return s;
}

}  // namespace

TEST(Offsets, TerminalValues) {
    ModelSpec s = kAd;
    s.m = 0.3;
    s.mbar = -0.7;
    const OfflineSolution off = solve_offline(s, TimeGrid(1.0, 100));
    EXPECT_EQ(off.Phi[100], vec2(-0.7, 0.3));
    EXPECT_EQ(off.Phicheck[100], vec2(-0.7, 0.3));
}

TEST(Offsets, PhiCoincidesWithPhicheck) {
    ModelSpec s = kAd;
    s.alpha = 0.1;
    s.m = 0.2;
    s.mbar = 0.5;
    const OfflineSolution off = solve_offline(s, TimeGrid(1.0, 400));
    EXPECT_LT(max_abs_diff(off.Phi, off.Phicheck), 1e-10);
}

TEST(Gains, VanishWithZeroCosts) {
    const OfflineSolution off = solve_offline(zero_cost_model(), TimeGrid(1.0, 50));
    for (std::size_t k = 0; k < off.grid.nodes(); ++k) {
        EXPECT_EQ(max_abs(off.gains.G2[k]), 0.0);
        EXPECT_EQ(max_abs(off.gains.G1hat[k]), 0.0);
        EXPECT_EQ(max_abs(off.gains.G1check[k]), 0.0);
        EXPECT_EQ(off.gains.b1[k], 0.0);
        EXPECT_EQ(off.gains.b2[k], 0.0);
    }
}

TEST(Gains, FollowerFeedbackOnOwnEstimateIsScalarLaw) {
    const OfflineSolution off = solve_offline(kAd, TimeGrid(1.0, 200));
    for (std::size_t k = 0; k < off.grid.nodes(); ++k) {
        EXPECT_NEAR(off.gains.G1hat[k](0), -(-0.2) * off.Pi[k] / 0.3, 1e-12);
        EXPECT_NEAR(off.gains.G1hat[k](1), 0.0, 1e-10);
    }
}

TEST(Gains, RetailerSpendsMoreThanManufacturerAtStart) {
    const OfflineSolution off = solve_offline(kAd, TimeGrid(1.0, 200));
    const Vec2 X0(kAd.x0, 0.0);
    const double v1 = follower_control(std::size_t{0}, X0, X0, off);
    const double v2 = leader_control(std::size_t{0}, X0, off);
    EXPECT_GT(v1, v2);
    EXPECT_GT(v2, 0.0);
}

TEST(Gains, TimeLookupRequiresGridNode) {
    const OfflineSolution off = solve_offline(kAd, TimeGrid(1.0, 10));
    const Vec2 X(0.1, 0.0);
    EXPECT_EQ(off.node_of(0.3), 3u);
    EXPECT_EQ(leader_control(0.3, X, off), leader_control(std::size_t{3}, X, off));
    EXPECT_EQ(follower_control(1.0, X, X, off), follower_control(std::size_t{10}, X, X, off));
    EXPECT_THROW(off.node_of(0.35), PreconditionFailure);
    EXPECT_THROW(off.node_of(1.1), PreconditionFailure);
    EXPECT_THROW(leader_control(-0.1, X, off), PreconditionFailure);
}

TEST(Decoupling, TerminalCostatesFromTerminalWeights) {
    const OfflineSolution off = solve_offline(kAd, TimeGrid(1.0, 10));
    const Vec2 X(0.3, -0.1), Xh(0.2, 0.05), Xc(0.1, 0.0);
    const Vec2 Y = reconstruct_Y(1.0, X, Xh, Xc, off);
    EXPECT_DOUBLE_EQ(Y(0), 2.0 * 0.3);
    EXPECT_DOUBLE_EQ(Y(1), 0.0);
    const Vec2 Y0 = reconstruct_Y(std::size_t{0}, X, Xh, Xc, off);
    const Vec2 want = off.pi.Pi1[0] * X + off.pi.Pi2[0] * Xh + off.pi.Pi3[0] * Xc + off.Phi[0];
    EXPECT_EQ(Y0, want);
}

TEST(FollowerStage, OffsetMatchesClosedFormWithoutStateWeights) {
    // L = M = 0 gives Pi = 0 and theta_hat' = -(A theta_hat + l).
    ModelSpec s = kAd;
    s.L = 0.0;
    s.M = 0.0;
    s.m = 0.25;
    const TimeGrid g(1.0, 100);
    const FollowerStage fs = follower_stage_solution(s, CoefficientFn(0.8), g);
    const double A = -0.5, l = -0.4;
    for (std::size_t k = 0; k < g.nodes(); ++k) {
        const double tau = 1.0 - g.t(k);
        const double want = 0.25 * std::exp(A * tau) + l * (std::exp(A * tau) - 1.0) / A;
        EXPECT_NEAR(fs.theta_hat[k], want, 1e-11);
        EXPECT_EQ(fs.gain[k], 0.0);
        EXPECT_NEAR(fs.offset[k], -(-0.2 * want - 0.6) / 0.3, 1e-10);
    }
}

TEST(FollowerStage, GainMatchesEquilibriumFollowerGain) {
    const TimeGrid g(1.0, 200);
    const OfflineSolution off = solve_offline(kAd, g);
    const FollowerStage fs = follower_stage_solution(kAd, CoefficientFn(1.0), g);
    for (std::size_t k = 0; k < g.nodes(); ++k) EXPECT_NEAR(fs.gain[k], off.gains.G1hat[k](0), 1e-14);
}
