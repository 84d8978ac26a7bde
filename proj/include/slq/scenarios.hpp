#pragma once

#include "slq/feedback.hpp"
#include "slq/model.hpp"
#include "slq/montecarlo.hpp"

#include <string>
#include <vector>

namespace slq {

// Shared-information case: f1 = 0, L = Lbar = 0, M = 0. The follower's Riccati
// solution vanishes and the leader's problem reduces to two 2x2 Riccati
// equations on the unsplit augmented state.
struct SpecialCaseSolution {
    TimeGrid grid;
    ScalarTrajectory Pi;            // identically zero
    MatTrajectory Pibar1, Pibar2;
    ScalarTrajectory theta_hat;
    VecTrajectory Phihat, Phi;
    FeedbackGains gains;            // same layout as the general pipeline

    // v2 = -Rbar^{-1}(rbar + B2 Pibar2(1,1) xhat + B2 Phihat1).
    double leader_control(std::size_t k, double xhat) const { return gains.G2[k](0) * xhat + gains.b2[k]; }
    // v1 = -R^{-1}(B1 theta_hat + r).
    double follower_control(std::size_t k) const { return gains.b1[k]; }
};

// Throws SpecialCaseInapplicable unless f1, L, Lbar vanish on the grid and M = 0.
SpecialCaseSolution special_case_solution(const ModelSpec& model, const TimeGrid& grid);

// Closed forms for constant A, B2, Rbar, l:
//   Pibar1(1,1) = Mbar e^{2A(T-t)},
//   Pibar2(1,1) = Mbar e^{2A(T-t)} / (1 + Mbar B2^2 Rbar^{-1} int_t^T e^{2A(T-s)} ds),
//   theta_hat   = m e^{A(T-t)} + int_t^T l e^{A(s-t)} ds.
struct SpecialCaseClosedForm {
    double pibar1_11, pibar2_11, theta_hat;
};
SpecialCaseClosedForm special_case_closed_form(const ModelSpec& model, double T, double t);

struct SpecialCaseComparison {
    double max_gain_diff = 0.0;  // max over nodes and gain components
    double max_abs_Pi = 0.0;     // general pipeline's follower Riccati
};
SpecialCaseComparison compare_with_general(const SpecialCaseSolution& sc, const OfflineSolution& off);

// End-to-end run on the advertising model.
struct ScenarioRun {
    AdvertisingParams params;
    ModelSpec model;
    Diagnostics diagnostics;
    OfflineSolution offline;
    PathEnsemble ensemble;
    CostEstimate costs;
    FilterReport filter;
};
ScenarioRun advertising_scenario(const AdvertisingParams& params, const TimeGrid& grid, const NoiseSpec& noise,
                                 const SimulationOptions& opts = {});

// Sets an advertising parameter by name ("beta2", "mu1", ...). Throws
// InvalidParameter for an unknown name.
void set_advertising_param(AdvertisingParams& p, const std::string& name, double value);
double get_advertising_param(const AdvertisingParams& p, const std::string& name);
const std::vector<std::string>& advertising_param_names();

struct SweepPoint {
    double value = 0.0;
    // Ensemble means per node.
    std::vector<double> v1, v2, x, xhat, xcheck;
    // Mean and standard error of v1, v2 at t = 0.
    CostStat v1_0, v2_0;
};
struct SweepResult {
    std::string name;
    std::vector<double> values;
    TimeGrid grid;
    std::vector<SweepPoint> points;
};

// Repeats the advertising run per value with the same noise streams.
SweepResult parameter_sweep(const AdvertisingParams& base, const std::string& name, const std::vector<double>& values,
                            const TimeGrid& grid, const NoiseSpec& noise);

// Mean and standard error of series s at node k from ensemble moments.
CostStat node_stat(const PathEnsemble& ens, std::size_t k, int series);

std::vector<double> beta2_sweep_values();
std::vector<double> mu1_sweep_values();

}  // namespace slq
