#pragma once

#include "slq/model.hpp"
#include "slq/riccati.hpp"
#include "slq/trajectory.hpp"

#include <vector>

namespace slq {

// Per-node coefficients of the equilibrium controls
//   v2 = G2 * Xcheck + b2,
//   v1 = G1hat * Xhat + G1check * Xcheck + b1.
struct FeedbackGains {
    std::vector<Row2> G2;
    std::vector<double> b2;
    std::vector<Row2> G1hat, G1check;
    std::vector<double> b1;
};

struct OfflineSolution {
    TimeGrid grid;
    ModelSpec model;
    ScalarTrajectory Pi, P;
    BlockCoefficients blocks;
    LeaderRiccatis pi;
    MatTrajectory Pcal;  // error covariance of X - Xhat
    VecTrajectory Phi, Phicheck;
    FeedbackGains gains;

    Mat2 S(std::size_t k) const { return pi.Pi1[k] + pi.Pi2[k]; }
    Mat2 Q(std::size_t k) const { return pi.Pi1[k] + pi.Pi2[k] + pi.Pi3[k]; }
    std::size_t node_of(double t) const;  // throws PreconditionFailure off-grid
};

VecTrajectory solve_check_phi(const BlockCoefficients& blocks, const LeaderRiccatis& pi);
VecTrajectory solve_phi(const BlockCoefficients& blocks, const LeaderRiccatis& pi, const VecTrajectory& Phicheck);

FeedbackGains compute_gains(const BlockCoefficients& blocks, const LeaderRiccatis& pi, const VecTrajectory& Phi,
                            const VecTrajectory& Phicheck);

// Runs every deterministic stage: Pi, P, blocks, Pi1-Pi3, error covariance,
// Phicheck, Phi, gains.
OfflineSolution solve_offline(const ModelSpec& model, const TimeGrid& grid);

double leader_control(std::size_t k, const Vec2& Xcheck, const OfflineSolution& off);
double leader_control(double t, const Vec2& Xcheck, const OfflineSolution& off);
double follower_control(std::size_t k, const Vec2& Xhat, const Vec2& Xcheck, const OfflineSolution& off);
double follower_control(double t, const Vec2& Xhat, const Vec2& Xcheck, const OfflineSolution& off);

// Y = Pi1 X + Pi2 Xhat + Pi3 Xcheck + Phi, components (lambda, theta_hat).
Vec2 reconstruct_Y(std::size_t k, const Vec2& X, const Vec2& Xhat, const Vec2& Xcheck, const OfflineSolution& off);
Vec2 reconstruct_Y(double t, const Vec2& X, const Vec2& Xhat, const Vec2& Xcheck, const OfflineSolution& off);

// Follower's problem against a deterministic leader control v2(t):
// v1 = gain(t) * xhat + offset(t).
struct FollowerStage {
    ScalarTrajectory Pi, theta_hat;
    std::vector<double> gain, offset;
};
FollowerStage follower_stage_solution(const ModelSpec& model, const CoefficientFn& v2, const TimeGrid& grid);

}  // namespace slq
