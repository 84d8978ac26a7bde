#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace slq {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using Row2 = Eigen::RowVector2d;

inline double max_abs(double v) { return std::abs(v); }
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.cwiseAbs().maxCoeff();
}

inline bool all_finite(double v) { return std::isfinite(v); }
template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

inline bool is_symmetric(const Mat2& m, double tol) { return std::abs(m(0, 1) - m(1, 0)) <= tol; }

inline Mat2 mat2(double a11, double a12, double a21, double a22) {
    Mat2 m;
    m << a11, a12, a21, a22;
    return m;
}

inline Vec2 vec2(double a, double b) { return Vec2(a, b); }

// ---------------------------------------------------------------------------
// Error taxonomy. Every failure the CLI maps to an exit code derives from
// slq::Error so callers can catch the family at once.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class HardViolation : public Error {
public:
    using Error::Error;
};

class RiccatiBlowUp : public Error {
public:
    RiccatiBlowUp(std::string equation, double t)
        : Error("Riccati blow-up in " + equation + " at t=" + std::to_string(t)),
          equation_(std::move(equation)), time_(t) {}
    const std::string& equation() const { return equation_; }
    double time() const { return time_; }

private:
    std::string equation_;
    double time_;
};

class OffsetBlowUp : public Error {
public:
    OffsetBlowUp(const std::string& equation, double t)
        : Error("offset blow-up in " + equation + " at t=" + std::to_string(t)) {}
};

class FilterVarianceError : public Error {
public:
    using Error::Error;
};

class CovarianceError : public Error {
public:
    using Error::Error;
};

class SingularRepresentation : public Error {
public:
    using Error::Error;
};

class SimulationDiverged : public Error {
public:
    SimulationDiverged(std::size_t path, std::size_t step)
        : Error("simulation diverged on path " + std::to_string(path) + " at step " +
                std::to_string(step)),
          path_(path), step_(step) {}
    std::size_t path() const { return path_; }
    std::size_t step() const { return step_; }

private:
    std::size_t path_;
    std::size_t step_;
};

class SpecialCaseInapplicable : public Error {
public:
    using Error::Error;
};

class PreconditionFailure : public Error {
public:
    using Error::Error;
};

}  // namespace slq
