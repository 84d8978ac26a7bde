#pragma once

#include "slq/feedback.hpp"
#include "slq/model.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace slq {

struct NoiseSpec {
    std::uint64_t seed = 20240601;
    std::size_t paths = 10000;
    bool antithetic = false;
};

// Brownian increments of path p; a pure function of (seed, p, grid).
void path_increments(const NoiseSpec& noise, std::size_t path, const TimeGrid& grid, std::vector<double>& dW,
                     std::vector<double>& dWbar);

// Who plays what in a run. The leader applies
//   v2 = leader_scale * G2 Xcheck + b2 + leader_shift + leader_ramp * t/T.
// The follower either applies the equilibrium law, scaled and shifted the same
// way, or its exact best response to the leader's affine law, in which case
// theta_hat = rho * Xcheck + sigma.
struct Policy {
    double leader_scale = 1.0, leader_shift = 0.0, leader_ramp = 0.0;
    double follower_scale = 1.0, follower_shift = 0.0, follower_ramp = 0.0;
    bool best_response = false;
    std::vector<Row2> rho;
    std::vector<double> sigma;
};

// rho, sigma of the follower's best response to the leader part of `policy`.
void best_response_coefficients(const OfflineSolution& off, Policy& policy);

// Full per-node record of one path.
struct StoredPath {
    std::vector<double> x, x0, x1, K, xhat, Khat, xcheck, Kcheck, v1, v2, Wtilde;
    std::vector<double> dW, dWbar, dWtilde;  // per step
};

struct SimulationOptions {
    std::vector<std::size_t> checkpoints;  // node indices
    std::size_t store_paths = 0;           // first paths recorded in full
};

// Series tracked by per-node ensemble moments.
enum Series : int { kX, kXhat, kXcheck, kV1, kV2, kK, kKhat, kKcheck, kX0, kX1, kWtilde, kSeriesCount };
const char* series_name(int s);

struct PathEnsemble {
    TimeGrid grid;
    std::size_t paths = 0;
    bool antithetic = false;
    std::vector<std::size_t> checkpoints;

    // Per path.
    std::vector<double> J1, J2, Wtilde_T;
    // Per checkpoint, per path: X - Xhat, X - Xcheck, xhat.
    std::vector<std::vector<Vec2>> err_hat, err_check;
    std::vector<std::vector<double>> xhat_at;

    // Per node: ensemble mean and mean square of each series.
    std::vector<std::array<double, kSeriesCount>> mean, mean_sq;

    double max_decomposition_error = 0.0;  // max |x - (x0 + x1)|
    double max_abs_x = 0.0;

    std::vector<StoredPath> stored;
};

PathEnsemble simulate_equilibrium(const OfflineSolution& off, const NoiseSpec& noise,
                                  const SimulationOptions& opts = {});
PathEnsemble simulate_policy(const OfflineSolution& off, const NoiseSpec& noise, const Policy& policy,
                             const SimulationOptions& opts = {});

struct CostStat {
    double mean = 0.0, std_error = 0.0;
    std::size_t paths = 0;
};
struct CostEstimate {
    CostStat J1, J2;
};
CostEstimate estimate_costs(const PathEnsemble& ens);

// Sample statistics honoring antithetic pairing: with pairing, the standard
// error is computed from pair averages.
CostStat sample_stat(const std::vector<double>& v, bool antithetic);

struct PerturbationSpec {
    enum class Player { Leader, Follower };
    enum class Kind { Shift, Ramp, GainScale };
    Player player = Player::Leader;
    Kind kind = Kind::Shift;
    double eps = 0.0;
    // Leader perturbations only: false keeps the follower's equilibrium law
    // fixed instead of re-solving its best response.
    bool follower_best_response = true;

    std::string label() const;
};

struct PerturbationResult {
    PerturbationSpec spec;
    double J_baseline = 0.0, J_perturbed = 0.0;  // the perturbing player's cost
    double dJ = 0.0, dJ_se = 0.0, ci_low = 0.0, ci_high = 0.0;
    std::size_t paths = 0;
};

PerturbationResult perturb_and_compare(const OfflineSolution& off, const NoiseSpec& noise,
                                       const PerturbationSpec& spec);

// Filter diagnostics at the ensemble checkpoints.
struct CheckpointStats {
    double t = 0.0;
    double mean_err_x = 0.0;       // E[x - xhat]
    double orthogonality = 0.0;    // E[(x - xhat) xhat]
    Mat2 cov_err_hat;              // Cov(X - Xhat)
    Mat2 Pcal;                     // Riccati prediction
    Vec2 mean_err_check;           // E[X - Xcheck]
    double P = 0.0;                // scalar filter variance (follower stage only)
    double mean_sq_err_x = 0.0;    // E[(x - xhat)^2]
};
struct FilterReport {
    std::vector<CheckpointStats> checkpoints;
    double mean_Wtilde_T = 0.0, var_Wtilde_T = 0.0;
    std::size_t paths = 0;
};
FilterReport filter_consistency_stats(const PathEnsemble& ens, const ScalarTrajectory& P, const MatTrajectory& Pcal);

// Follower-stage run: scalar state and the follower's filter under a frozen
// deterministic leader control v2(t), with the follower's optimal law.
struct FollowerStageEnsemble {
    TimeGrid grid;
    std::size_t paths = 0;
    std::vector<std::size_t> checkpoints;
    std::vector<std::vector<double>> err;   // x - xhat per checkpoint, per path
    std::vector<std::vector<double>> xhat;  // xhat per checkpoint, per path
    std::vector<double> J1;
};
FollowerStageEnsemble simulate_follower_stage(const ModelSpec& model, const CoefficientFn& v2, const TimeGrid& grid,
                                              const NoiseSpec& noise, const std::vector<std::size_t>& checkpoints);
FilterReport follower_stage_stats(const FollowerStageEnsemble& ens, const ScalarTrajectory& P);

// Nodes nearest to the given times, clamped to [0, N].
std::vector<std::size_t> checkpoint_nodes(const TimeGrid& grid, const std::vector<double>& times);
std::vector<double> default_checkpoint_times(const TimeGrid& grid);

// Order-independent reductions.
double pairwise_sum(const double* v, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

// Worker count from STACKELBERG_LQ_THREADS (unset or 0: hardware concurrency).
unsigned worker_count();

}  // namespace slq
