#pragma once

#include "slq/model.hpp"
#include "slq/trajectory.hpp"

#include <functional>
#include <string>
#include <vector>

namespace slq {

inline constexpr double kBlowUpThreshold = 1e8;

// Coefficients of the 2x2 Riccati equation
//   dP/dt + left*P + P*right + P*quad*P + forcing = 0.
struct RiccatiCoeffs {
    Mat2 left, right, quad, forcing;
};
using RiccatiCoeffFn = std::function<RiccatiCoeffs(double)>;

inline Mat2 riccati_rhs(const RiccatiCoeffs& c, const Mat2& P) {
    return -(c.left * P + P * c.right + P * c.quad * P + c.forcing);
}

// Backward solve from P(T) = terminal; `name` tags RiccatiBlowUp.
MatTrajectory solve_riccati_backward(const TimeGrid& grid, const Mat2& terminal, const RiccatiCoeffFn& coeffs,
                                     const std::string& name);

// --- follower stage -------------------------------------------------------

ScalarTrajectory solve_follower_riccati(const ModelSpec& model, const TimeGrid& grid);
ScalarTrajectory solve_error_variance_P(const ModelSpec& model, const TimeGrid& grid);

// --- leader stage ---------------------------------------------------------

struct LeaderRiccatis {
    MatTrajectory Pi1, Pi2, Pi3;
};
struct AltRiccatis {
    MatTrajectory Pihat1, Pihat2, Pihat3;
};

RiccatiCoeffs pi1_coeffs(const BlockValues& b);
RiccatiCoeffs pi2_coeffs(const BlockValues& b, const Mat2& Pi1);
RiccatiCoeffs pi3_coeffs(const BlockValues& b, const Mat2& S);
RiccatiCoeffs pihat2_coeffs(const BlockValues& b);
RiccatiCoeffs pihat3_coeffs(const BlockValues& b);

LeaderRiccatis solve_leader_riccatis(const BlockCoefficients& blocks);
AltRiccatis solve_alt_riccatis(const BlockCoefficients& blocks);

struct RelationResiduals {
    double pihat1_minus_pi1 = 0.0;         // max |Pihat1 - Pi1|
    double pihat2_minus_pihat1_pi2 = 0.0;  // max |(Pihat2 - Pihat1) - Pi2|
    double pihat3_minus_pihat2_pi3 = 0.0;  // max |(Pihat3 - Pihat2) - Pi3|
    double max() const;
};
RelationResiduals check_riccati_relations(const LeaderRiccatis& pi, const AltRiccatis& pihat);

// Error covariance of X - Xhat, forward from zero.
MatTrajectory solve_state_error_covariance(const BlockCoefficients& blocks, const MatTrajectory& Pi1);

// --- matrix-exponential representation -------------------------------------

// Solution at remaining time tau = T - t of the constant-coefficient equation
// above, through the 4x4 exponential of [[right + quad*P_T, quad],
// [-(P_T right + left P_T + P_T quad P_T + forcing), -(left + P_T quad)]].
Mat2 riccati_exponential(const RiccatiCoeffs& c, const Mat2& terminal, double tau);

// Pi1(t) for constant blocks. Throws PreconditionFailure if the blocks vary
// in time and SingularRepresentation if the lower-right sub-block of the
// exponential is numerically singular.
Mat2 riccati_via_matrix_exponential(const BlockCoefficients& blocks, double t);

bool blocks_are_constant(const BlockCoefficients& blocks);

// --- uniqueness conditions -------------------------------------------------

struct UniquenessNode {
    double t = 0.0;
    double q_cond = 0.0;  // min eig of A3 - H + Q (E - B1) Q
    double s_cond = 0.0;  // min eig of A3 - S B1 S
    double pi1_cond = 0.0;  // min eig of A3 - Pi1 B1 Pi1
};
struct UniquenessReport {
    std::vector<UniquenessNode> nodes;
    bool q_positive = true, s_positive = true, pi1_positive = true;
};
UniquenessReport check_uniqueness_conditions(const BlockCoefficients& blocks, const LeaderRiccatis& pi);

double min_eigenvalue_sym(const Mat2& m);

// Simpson defect of every Riccati solve (Pi, P, Pi1-3, Pihat1-3, Pcal) on one
// grid; it scales like h^4.
struct NamedResidual {
    std::string name;
    double residual = 0.0;
};
std::vector<NamedResidual> riccati_residuals(const ModelSpec& model, const TimeGrid& grid);

}  // namespace slq
