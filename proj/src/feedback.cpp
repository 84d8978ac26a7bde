#include "slq/feedback.hpp"

#include <cmath>

namespace slq {

namespace {

auto offset_guard(const char* name) {
    return [name](double t, const Vec2& y) {
        if (!y.allFinite() || max_abs(y) > kBlowUpThreshold) throw OffsetBlowUp(name, t);
    };
}

}  // namespace

std::size_t OfflineSolution::node_of(double t) const {
    const double pos = t / grid.step();
    const double k = std::round(pos);
    if (k < 0 || k > static_cast<double>(grid.steps()) || std::abs(pos - k) > 1e-9)
        throw PreconditionFailure("time " + std::to_string(t) + " is not a grid node");
    return static_cast<std::size_t>(k);
}

VecTrajectory solve_check_phi(const BlockCoefficients& blocks, const LeaderRiccatis& pi) {
    const TimeGrid& grid = blocks.grid();
    auto rhs = [&](double t, const Vec2& ph) {
        const BlockValues b = blocks.at(t);
        const Mat2 Q = pi.Pi1.at(t) + pi.Pi2.at(t) + pi.Pi3.at(t);
        const Mat2 E = b.E(), G = b.G();
        const Vec2 drive = -(Q * b.D1 * b.Rbarinv * b.rbar) - b.D2 * b.Rbarinv * b.rbar + Q * b.C1 + b.C2;
        return Vec2(-((Q * b.B1 - Q * E + b.Abar() - G) * ph + drive));
    };
    return rk4_backward<Vec2>(grid, blocks.node(grid.steps()).MT, rhs, offset_guard("Phicheck"));
}

VecTrajectory solve_phi(const BlockCoefficients& blocks, const LeaderRiccatis& pi, const VecTrajectory& Phicheck) {
    const TimeGrid& grid = blocks.grid();
    if (Phicheck.grid() != grid) throw PreconditionFailure("Phicheck and blocks live on different grids");
    auto rhs = [&](double t, const Vec2& ph) {
        const BlockValues b = blocks.at(t);
        const Mat2 p3 = pi.Pi3.at(t);
        const Mat2 S = pi.Pi1.at(t) + pi.Pi2.at(t);
        const Mat2 Q = S + p3;
        const Mat2 E = b.E(), G = b.G();
        const Vec2 drive = -(Q * b.D1 * b.Rbarinv * b.rbar) - b.D2 * b.Rbarinv * b.rbar + Q * b.C1 + b.C2;
        return Vec2(-((S * b.B1 + b.Abar()) * ph + (-(Q * E) + p3 * b.B1 - G) * Phicheck.at(t) + drive));
    };
    return rk4_backward<Vec2>(grid, blocks.node(grid.steps()).MT, rhs, offset_guard("Phi"));
}

FeedbackGains compute_gains(const BlockCoefficients& blocks, const LeaderRiccatis& pi, const VecTrajectory& Phi,
                            const VecTrajectory& Phicheck) {
    const TimeGrid& grid = blocks.grid();
    const ModelSpec& s = blocks.model();
    FeedbackGains g;
    const std::size_t n = grid.nodes();
    g.G2.resize(n);
    g.b2.resize(n);
    g.G1hat.resize(n);
    g.G1check.resize(n);
    g.b1.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.t(k);
        const BlockValues b = blocks.node(k);
        const Mat2 S = pi.Pi1[k] + pi.Pi2[k];
        const Mat2 Q = S + pi.Pi3[k];
        const double B1 = s.B1(t);
        const Row2 e2(0.0, B1);
        g.G2[k] = -b.Rbarinv * (b.D1.transpose() * Q + b.D2.transpose());
        g.b2[k] = -b.Rbarinv * (b.D1.dot(Phicheck[k]) + b.rbar);
        g.G1hat[k] = -b.Rinv * (Row2(B1 * b.Pi, 0.0) + e2 * S);
        g.G1check[k] = -b.Rinv * (e2 * pi.Pi3[k]);
        g.b1[k] = -b.Rinv * (e2.dot(Phi[k]) + s.r(t));
    }
    return g;
}

OfflineSolution solve_offline(const ModelSpec& model, const TimeGrid& grid) {
    OfflineSolution off;
    off.grid = grid;
    off.model = model;
    off.Pi = solve_follower_riccati(model, grid);
    off.P = solve_error_variance_P(model, grid);
    off.blocks = assemble_blocks(model, off.Pi);
    off.pi = solve_leader_riccatis(off.blocks);
    off.Pcal = solve_state_error_covariance(off.blocks, off.pi.Pi1);
    off.Phicheck = solve_check_phi(off.blocks, off.pi);
    off.Phi = solve_phi(off.blocks, off.pi, off.Phicheck);
    off.gains = compute_gains(off.blocks, off.pi, off.Phi, off.Phicheck);
    return off;
}

double leader_control(std::size_t k, const Vec2& Xcheck, const OfflineSolution& off) {
    return off.gains.G2[k].dot(Xcheck) + off.gains.b2[k];
}
double leader_control(double t, const Vec2& Xcheck, const OfflineSolution& off) {
    return leader_control(off.node_of(t), Xcheck, off);
}

double follower_control(std::size_t k, const Vec2& Xhat, const Vec2& Xcheck, const OfflineSolution& off) {
    return off.gains.G1hat[k].dot(Xhat) + off.gains.G1check[k].dot(Xcheck) + off.gains.b1[k];
}
double follower_control(double t, const Vec2& Xhat, const Vec2& Xcheck, const OfflineSolution& off) {
    return follower_control(off.node_of(t), Xhat, Xcheck, off);
}

Vec2 reconstruct_Y(std::size_t k, const Vec2& X, const Vec2& Xhat, const Vec2& Xcheck, const OfflineSolution& off) {
    return off.pi.Pi1[k] * X + off.pi.Pi2[k] * Xhat + off.pi.Pi3[k] * Xcheck + off.Phi[k];
}
Vec2 reconstruct_Y(double t, const Vec2& X, const Vec2& Xhat, const Vec2& Xcheck, const OfflineSolution& off) {
    return reconstruct_Y(off.node_of(t), X, Xhat, Xcheck, off);
}

FollowerStage follower_stage_solution(const ModelSpec& s, const CoefficientFn& v2, const TimeGrid& grid) {
    FollowerStage out;
    out.Pi = solve_follower_riccati(s, grid);
    const ScalarTrajectory& Pi = out.Pi;
    auto rhs = [&](double t, double th) {
        const double p = Pi.at(t);
        const double B1 = s.B1(t), Rinv = 1.0 / s.R(t);
        const double a = s.A(t) - B1 * B1 * p * Rinv;
        return -(a * th + s.B2(t) * p * v2(t) - B1 * p * Rinv * s.r(t) + s.alpha(t) * p + s.l(t));
    };
    auto guard = [](double t, double y) {
        if (!std::isfinite(y) || std::abs(y) > kBlowUpThreshold) throw OffsetBlowUp("theta_hat", t);
    };
    out.theta_hat = rk4_backward<double>(grid, s.m, rhs, guard);
    out.gain.resize(grid.nodes());
    out.offset.resize(grid.nodes());
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        const double t = grid.t(k);
        const double B1 = s.B1(t), Rinv = 1.0 / s.R(t);
        out.gain[k] = -Rinv * B1 * Pi[k];
        out.offset[k] = -Rinv * (B1 * out.theta_hat[k] + s.r(t));
    }
    return out;
}

}  // namespace slq
