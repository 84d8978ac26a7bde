#pragma once

#include "slq/trajectory.hpp"
#include "slq/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace slq {

// Deterministic scalar coefficient on [0,T]: a constant or a piecewise-linear
// table. Outside the table range the end values are held.
class CoefficientFn {
public:
    CoefficientFn() = default;
    CoefficientFn(double c) : value_(c) {}  // NOLINT(implicit): constants read naturally
    static CoefficientFn table(std::vector<std::pair<double, double>> points);

    double operator()(double t) const;
    bool is_constant() const { return points_.empty(); }
    double constant_value() const { return value_; }
    const std::vector<std::pair<double, double>>& points() const { return points_; }

    bool operator==(const CoefficientFn& o) const { return value_ == o.value_ && points_ == o.points_; }

private:
    double value_ = 0.0;
    std::vector<std::pair<double, double>> points_;
};

struct ModelSpec {
    // State and observations.
    CoefficientFn A, B1, B2, alpha, c, cbar, f1, f2, g;
    // Follower cost J1.
    CoefficientFn L, R = 1.0, l, r;
    double M = 0.0, m = 0.0;
    // Leader cost J2.
    CoefficientFn Lbar, Rbar = 1.0, lbar, rbar;
    double Mbar = 0.0, mbar = 0.0;
    double x0 = 0.0;

    // Copy with every coefficient replaced by its constant value at time t.
    ModelSpec frozen_at(double t) const;
    bool operator==(const ModelSpec& o) const;
};

struct AdvertisingParams {
    double beta1 = 0.2, beta2 = 0.4, delta = 0.5;
    double gamma1 = 0.6, gamma2 = 0.5;
    double sigma = 0.2, sigmabar = 0.4;
    double kappa1 = 0.6, kappa2 = 0.5;
    double theta1 = 0.4, theta2 = 0.6;
    double mu1 = 0.3, mu2 = 0.5;
    double M1 = 0.8, M2 = 1.0;
    double x0 = 0.01, f1 = 0.6;

    bool operator==(const AdvertisingParams&) const = default;
};

ModelSpec from_advertising(const AdvertisingParams& p);

struct Diagnostics {
    std::vector<std::string> warnings;  // sign conditions on the cost weights that fail
    std::vector<std::string> holds;     // conditions that were checked and hold
    bool empty() const { return warnings.empty(); }
};

// Checks finiteness, invertibility and weight signs on the grid nodes. Vanishing or non-finite R, Rbar throws
// HardViolation; sign failures of the cost weights are only reported.
Diagnostics validate(const ModelSpec& model, const TimeGrid& grid);

// Block quantities of the augmented (x, K) system at one instant.
struct BlockValues {
    Mat2 A1, A2, A3, B1, M;
    Vec2 C1, C2, D1, D2, Sigma1, Sigma2, F, X0, MT;
    double Rinv = 0.0, Rbarinv = 0.0;
    double Pi = 0.0;
    double r = 0.0, rbar = 0.0;  // linear control weights, used by the offsets

    Mat2 Abar() const { return A1 + A2; }
    Mat2 E() const { return D1 * Rbarinv * D1.transpose(); }
    Mat2 G() const { return D2 * Rbarinv * D1.transpose(); }
    Mat2 H() const { return D2 * Rbarinv * D2.transpose(); }
};

// Blocks as functions of time: the model plus the follower Riccati solution Pi.
class BlockCoefficients {
public:
    BlockCoefficients() = default;
    BlockCoefficients(ModelSpec model, ScalarTrajectory Pi) : model_(std::move(model)), Pi_(std::move(Pi)) {}

    BlockValues at(double t) const;
    BlockValues node(std::size_t k) const;
    const ModelSpec& model() const { return model_; }
    const ScalarTrajectory& Pi() const { return Pi_; }
    const TimeGrid& grid() const { return Pi_.grid(); }

    // Constant-coefficient copy frozen at time t (Pi held at Pi(t)).
    BlockCoefficients frozen_at(double t) const;

private:
    BlockValues eval(double t, double Pi) const;

    ModelSpec model_;
    ScalarTrajectory Pi_;
};

BlockCoefficients assemble_blocks(const ModelSpec& model, const ScalarTrajectory& Pi);

}  // namespace slq
