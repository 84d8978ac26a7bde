#include "slq/riccati.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace slq {

namespace {

template <typename V>
auto blowup_guard(const std::string& name) {
    return [name](double t, const V& y) {
        if (!all_finite(y) || max_abs(y) > kBlowUpThreshold) throw RiccatiBlowUp(name, t);
    };
}

}  // namespace

MatTrajectory solve_riccati_backward(const TimeGrid& grid, const Mat2& terminal, const RiccatiCoeffFn& coeffs,
                                     const std::string& name) {
    return rk4_backward<Mat2>(
        grid, terminal, [&](double t, const Mat2& P) { return riccati_rhs(coeffs(t), P); },
        blowup_guard<Mat2>(name));
}

ScalarTrajectory solve_follower_riccati(const ModelSpec& s, const TimeGrid& grid) {
    auto rhs = [&](double t, double Pi) {
        const double A = s.A(t), B1 = s.B1(t);
        return -(2.0 * A * Pi - B1 * B1 * Pi * Pi / s.R(t) + s.L(t));
    };
    return rk4_backward<double>(grid, s.M, rhs, blowup_guard<double>("Pi"));
}

ScalarTrajectory solve_error_variance_P(const ModelSpec& s, const TimeGrid& grid) {
    auto rhs = [&](double t, double P) {
        const double c = s.c(t), cb = s.cbar(t), f = s.f1(t);
        const double k = c + f * P;
        return 2.0 * s.A(t) * P - k * k + c * c + cb * cb;
    };
    auto guard = [](double t, double P) {
        if (!std::isfinite(P) || std::abs(P) > kBlowUpThreshold) throw RiccatiBlowUp("P", t);
        if (P < -1e-12) throw FilterVarianceError("filter error variance negative at t=" + std::to_string(t));
    };
    return rk4_forward<double>(grid, 0.0, rhs, guard);
}

RiccatiCoeffs pi1_coeffs(const BlockValues& b) { return {b.A1, b.A1, b.B1, b.A3}; }

RiccatiCoeffs pi2_coeffs(const BlockValues& b, const Mat2& Pi1) {
    const Mat2 Ab = b.Abar();
    return {Ab + Pi1 * b.B1, Ab + b.B1 * Pi1, b.B1, Pi1 * b.A2 + b.A2 * Pi1};
}

RiccatiCoeffs pi3_coeffs(const BlockValues& b, const Mat2& S) {
    const Mat2 Ab = b.Abar(), E = b.E(), G = b.G(), H = b.H();
    const Mat2 BmE = b.B1 - E;
    return {S * BmE + Ab - G, Ab - G.transpose() + BmE * S, BmE,
            -(S * E * S) - G * S - S * G.transpose() - H};
}

RiccatiCoeffs pihat2_coeffs(const BlockValues& b) {
    const Mat2 Ab = b.Abar();
    return {Ab, Ab, b.B1, b.A3};
}

RiccatiCoeffs pihat3_coeffs(const BlockValues& b) {
    const Mat2 Ab = b.Abar(), G = b.G();
    return {Ab - G, Ab - G.transpose(), b.B1 - b.E(), b.A3 - b.H()};
}

LeaderRiccatis solve_leader_riccatis(const BlockCoefficients& blocks) {
    const TimeGrid& grid = blocks.grid();
    const Mat2 MT = blocks.node(grid.steps()).M;
    LeaderRiccatis out;
    out.Pi1 = solve_riccati_backward(
        grid, MT, [&](double t) { return pi1_coeffs(blocks.at(t)); }, "Pi1");
    out.Pi2 = solve_riccati_backward(
        grid, Mat2::Zero(), [&](double t) { return pi2_coeffs(blocks.at(t), out.Pi1.at(t)); }, "Pi2");
    out.Pi3 = solve_riccati_backward(
        grid, Mat2::Zero(),
        [&](double t) { return pi3_coeffs(blocks.at(t), Mat2(out.Pi1.at(t) + out.Pi2.at(t))); }, "Pi3");
    return out;
}

AltRiccatis solve_alt_riccatis(const BlockCoefficients& blocks) {
    const TimeGrid& grid = blocks.grid();
    const Mat2 MT = blocks.node(grid.steps()).M;
    AltRiccatis out;
    out.Pihat1 = solve_riccati_backward(
        grid, MT, [&](double t) { return pi1_coeffs(blocks.at(t)); }, "Pihat1");
    out.Pihat2 = solve_riccati_backward(
        grid, MT, [&](double t) { return pihat2_coeffs(blocks.at(t)); }, "Pihat2");
    out.Pihat3 = solve_riccati_backward(
        grid, MT, [&](double t) { return pihat3_coeffs(blocks.at(t)); }, "Pihat3");
    return out;
}

double RelationResiduals::max() const {
    return std::max({pihat1_minus_pi1, pihat2_minus_pihat1_pi2, pihat3_minus_pihat2_pi3});
}

RelationResiduals check_riccati_relations(const LeaderRiccatis& pi, const AltRiccatis& ph) {
    const TimeGrid& g = pi.Pi1.grid();
    for (const MatTrajectory* tr : {&pi.Pi2, &pi.Pi3, &ph.Pihat1, &ph.Pihat2, &ph.Pihat3})
        if (tr->grid() != g) throw PreconditionFailure("Riccati sets live on different grids");
    RelationResiduals r;
    for (std::size_t k = 0; k < g.nodes(); ++k) {
        r.pihat1_minus_pi1 = std::max(r.pihat1_minus_pi1, max_abs(Mat2(ph.Pihat1[k] - pi.Pi1[k])));
        r.pihat2_minus_pihat1_pi2 =
            std::max(r.pihat2_minus_pihat1_pi2, max_abs(Mat2(ph.Pihat2[k] - ph.Pihat1[k] - pi.Pi2[k])));
        r.pihat3_minus_pihat2_pi3 =
            std::max(r.pihat3_minus_pihat2_pi3, max_abs(Mat2(ph.Pihat3[k] - ph.Pihat2[k] - pi.Pi3[k])));
    }
    return r;
}

MatTrajectory solve_state_error_covariance(const BlockCoefficients& blocks, const MatTrajectory& Pi1) {
    const TimeGrid& grid = blocks.grid();
    if (Pi1.grid() != grid) throw PreconditionFailure("Pi1 and blocks live on different grids");
    auto rhs = [&](double t, const Mat2& P) {
        const BlockValues b = blocks.at(t);
        const Mat2 p1 = Pi1.at(t);
        const Mat2 SF = b.Sigma1 * b.F.transpose();
        const Mat2 FF = b.F * b.F.transpose();
        return Mat2((b.A1 + b.B1 * p1) * P + P * (b.A1 + p1 * b.B1) - SF * P - P * SF.transpose() - P * FF * P +
                    b.Sigma2 * b.Sigma2.transpose());
    };
    auto guard = [](double t, const Mat2& P) {
        if (!P.allFinite() || max_abs(P) > kBlowUpThreshold) throw RiccatiBlowUp("state error covariance", t);
        if (std::abs(P(0, 1) - P(1, 0)) > 1e-8)
            throw CovarianceError("state error covariance lost symmetry at t=" + std::to_string(t));
        if (min_eigenvalue_sym(P) < -1e-10)
            throw CovarianceError("state error covariance has a negative eigenvalue at t=" + std::to_string(t));
    };
    return rk4_forward<Mat2>(grid, Mat2::Zero(), rhs, guard);
}

Mat2 riccati_exponential(const RiccatiCoeffs& c, const Mat2& PT, double tau) {
    // Shift P = P_T + Z so that Z(T) = 0, then linearize Z = V U^{-1}.
    const Mat2 right = c.right + c.quad * PT;
    const Mat2 left = c.left + PT * c.quad;
    const Mat2 forcing = PT * c.right + c.left * PT + PT * c.quad * PT + c.forcing;
    Eigen::Matrix4d H;
    H.topLeftCorner<2, 2>() = right;
    H.topRightCorner<2, 2>() = c.quad;
    H.bottomLeftCorner<2, 2>() = -forcing;
    H.bottomRightCorner<2, 2>() = -left;
    const Eigen::Matrix4d E = (H * tau).exp();
    const Mat2 lower_right = E.bottomRightCorner<2, 2>();
    const Mat2 lower_left = E.bottomLeftCorner<2, 2>();
    Eigen::JacobiSVD<Mat2> svd(lower_right);
    const double smax = svd.singularValues()(0), smin = svd.singularValues()(1);
    if (!(smin > 0.0) || smax / smin > 1e12)
        throw SingularRepresentation("exponential representation sub-block is singular at tau=" +
                                     std::to_string(tau));
    return PT - lower_right.inverse() * lower_left;
}

bool blocks_are_constant(const BlockCoefficients& blocks) {
    const ModelSpec& s = blocks.model();
    for (const CoefficientFn* c : {&s.A, &s.B1, &s.B2, &s.alpha, &s.c, &s.cbar, &s.f1, &s.f2, &s.g, &s.L, &s.R,
                                   &s.l, &s.r, &s.Lbar, &s.Rbar, &s.lbar, &s.rbar})
        if (!c->is_constant()) return false;
    const ScalarTrajectory& Pi = blocks.Pi();
    for (std::size_t k = 1; k < Pi.size(); ++k)
        if (Pi[k] != Pi[0]) return false;
    return true;
}

Mat2 riccati_via_matrix_exponential(const BlockCoefficients& blocks, double t) {
    if (!blocks_are_constant(blocks))
        throw PreconditionFailure("exponential representation needs constant blocks; freeze them first");
    const double T = blocks.grid().horizon();
    const BlockValues b = blocks.node(0);
    return riccati_exponential(pi1_coeffs(b), b.M, T - t);
}

double min_eigenvalue_sym(const Mat2& m) {
    const double a = m(0, 0), d = m(1, 1), b = 0.5 * (m(0, 1) + m(1, 0));
    const double mean = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), b);
    return mean - rad;
}

UniquenessReport check_uniqueness_conditions(const BlockCoefficients& blocks, const LeaderRiccatis& pi) {
    const TimeGrid& grid = blocks.grid();
    UniquenessReport rep;
    rep.nodes.reserve(grid.nodes());
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        const BlockValues b = blocks.node(k);
        const Mat2 S = pi.Pi1[k] + pi.Pi2[k];
        const Mat2 Q = S + pi.Pi3[k];
        UniquenessNode n;
        n.t = grid.t(k);
        n.q_cond = min_eigenvalue_sym(b.A3 - b.H() + Q * (b.E() - b.B1) * Q);
        n.s_cond = min_eigenvalue_sym(b.A3 - S * b.B1 * S);
        n.pi1_cond = min_eigenvalue_sym(b.A3 - pi.Pi1[k] * b.B1 * pi.Pi1[k]);
        rep.q_positive = rep.q_positive && n.q_cond > 0.0;
        rep.s_positive = rep.s_positive && n.s_cond > 0.0;
        rep.pi1_positive = rep.pi1_positive && n.pi1_cond > 0.0;
        rep.nodes.push_back(n);
    }
    return rep;
}

std::vector<NamedResidual> riccati_residuals(const ModelSpec& model, const TimeGrid& grid) {
    const ScalarTrajectory Pi = solve_follower_riccati(model, grid);
    const ScalarTrajectory P = solve_error_variance_P(model, grid);
    const BlockCoefficients blocks = assemble_blocks(model, Pi);
    const LeaderRiccatis pi = solve_leader_riccatis(blocks);
    const AltRiccatis alt = solve_alt_riccatis(blocks);
    const MatTrajectory Pcal = solve_state_error_covariance(blocks, pi.Pi1);
    return {{"Pi", simpson_residual(Pi)},         {"P", simpson_residual(P)},
            {"Pi1", simpson_residual(pi.Pi1)},    {"Pi2", simpson_residual(pi.Pi2)},
            {"Pi3", simpson_residual(pi.Pi3)},    {"Pihat1", simpson_residual(alt.Pihat1)},
            {"Pihat2", simpson_residual(alt.Pihat2)}, {"Pihat3", simpson_residual(alt.Pihat3)},
            {"Pcal", simpson_residual(Pcal)}};
}

}  // namespace slq
