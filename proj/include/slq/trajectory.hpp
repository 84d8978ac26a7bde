#pragma once

#include "slq/types.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace slq {

// Uniform grid t_k = k*T/N, k = 0..N.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double horizon, std::size_t steps) : T_(horizon), N_(steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw InvalidParameter("grid horizon must be positive and finite");
        if (steps < 2) throw InvalidParameter("grid needs at least 2 steps");
    }

    double horizon() const { return T_; }
    std::size_t steps() const { return N_; }
    std::size_t nodes() const { return N_ + 1; }
    double step() const { return T_ / static_cast<double>(N_); }
    // Exact at both ends: t(N) returns T bit-for-bit.
    double t(std::size_t k) const {
        return k == N_ ? T_ : T_ * static_cast<double>(k) / static_cast<double>(N_);
    }

    bool operator==(const TimeGrid& o) const { return T_ == o.T_ && N_ == o.N_; }
    bool operator!=(const TimeGrid& o) const { return !(*this == o); }

private:
    double T_ = 1.0;
    std::size_t N_ = 2;
};

// Node values plus node derivatives. Between nodes the trajectory is the cubic
// Hermite interpolant, which keeps RK4 half-step evaluations fourth order.
template <typename V>
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(TimeGrid grid, std::vector<V> values, std::vector<V> derivs)
        : grid_(grid), y_(std::move(values)), dy_(std::move(derivs)) {
        if (y_.size() != grid_.nodes() || dy_.size() != grid_.nodes())
            throw PreconditionFailure("trajectory length does not match grid");
    }

    static Trajectory constant(TimeGrid grid, const V& v, const V& zero) {
        return Trajectory(grid, std::vector<V>(grid.nodes(), v), std::vector<V>(grid.nodes(), zero));
    }

    const TimeGrid& grid() const { return grid_; }
    std::size_t size() const { return y_.size(); }
    const V& operator[](std::size_t k) const { return y_[k]; }
    const V& deriv(std::size_t k) const { return dy_[k]; }
    const std::vector<V>& values() const { return y_; }
    const std::vector<V>& derivs() const { return dy_; }

    V at(double t) const {
        const double h = grid_.step();
        const std::size_t N = grid_.steps();
        double pos = t / h;
        if (pos <= 0.0) return y_.front();
        if (pos >= static_cast<double>(N)) return y_.back();
        std::size_t k = static_cast<std::size_t>(pos);
        if (k >= N) k = N - 1;
        const double s = pos - static_cast<double>(k);
        if (s == 0.0) return y_[k];
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        return V(h00 * y_[k] + (h10 * h) * dy_[k] + h01 * y_[k + 1] + (h11 * h) * dy_[k + 1]);
    }

private:
    TimeGrid grid_;
    std::vector<V> y_;
    std::vector<V> dy_;
};

using ScalarTrajectory = Trajectory<double>;
using MatTrajectory = Trajectory<Mat2>;
using VecTrajectory = Trajectory<Vec2>;

template <typename V>
double max_abs_diff(const Trajectory<V>& a, const Trajectory<V>& b) {
    if (a.grid() != b.grid()) throw PreconditionFailure("trajectories live on different grids");
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, max_abs(V(a[k] - b[k])));
    return m;
}

// ---------------------------------------------------------------------------
// Fixed-step classical RK4. `rhs(t, y)` returns dy/dt. The guard is called on
// every new node value and throws when it decides the solution has escaped.
// ---------------------------------------------------------------------------

template <typename V, typename Rhs, typename Guard>
Trajectory<V> rk4_backward(const TimeGrid& grid, const V& terminal, Rhs&& rhs, Guard&& guard) {
    const std::size_t N = grid.steps();
    const double h = grid.step();
    std::vector<V> y(N + 1, terminal), dy(N + 1, terminal);
    y[N] = terminal;
    dy[N] = rhs(grid.t(N), y[N]);
    for (std::size_t k = N; k > 0; --k) {
        const double t = grid.t(k);
        const double tm = t - 0.5 * h;
        const V& yk = y[k];
        const V k1 = dy[k];
        const V k2 = rhs(tm, V(yk - (0.5 * h) * k1));
        const V k3 = rhs(tm, V(yk - (0.5 * h) * k2));
        const V k4 = rhs(grid.t(k - 1), V(yk - h * k3));
        y[k - 1] = V(yk - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        guard(grid.t(k - 1), y[k - 1]);
        dy[k - 1] = rhs(grid.t(k - 1), y[k - 1]);
    }
    return Trajectory<V>(grid, std::move(y), std::move(dy));
}

template <typename V, typename Rhs, typename Guard>
Trajectory<V> rk4_forward(const TimeGrid& grid, const V& initial, Rhs&& rhs, Guard&& guard) {
    const std::size_t N = grid.steps();
    const double h = grid.step();
    std::vector<V> y(N + 1, initial), dy(N + 1, initial);
    y[0] = initial;
    dy[0] = rhs(0.0, y[0]);
    for (std::size_t k = 0; k < N; ++k) {
        const double t = grid.t(k);
        const double tm = t + 0.5 * h;
        const V& yk = y[k];
        const V k1 = dy[k];
        const V k2 = rhs(tm, V(yk + (0.5 * h) * k1));
        const V k3 = rhs(tm, V(yk + (0.5 * h) * k2));
        const V k4 = rhs(grid.t(k + 1), V(yk + h * k3));
        y[k + 1] = V(yk + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        guard(grid.t(k + 1), y[k + 1]);
        dy[k + 1] = rhs(grid.t(k + 1), y[k + 1]);
    }
    return Trajectory<V>(grid, std::move(y), std::move(dy));
}

// Max over interior nodes of the Simpson defect
//   |y_{k+1} - y_{k-1} - h/3 (f_{k-1} + 4 f_k + f_{k+1})| / (2h),
// with f_k the right-hand side re-evaluated at the stored node values.
// For a fourth-order solution this scales like h^4.
template <typename V>
double simpson_residual(const Trajectory<V>& y) {
    const double h = y.grid().step();
    double m = 0.0;
    for (std::size_t k = 1; k + 1 < y.size(); ++k) {
        const V d = y[k + 1] - y[k - 1] - (h / 3.0) * (y.deriv(k - 1) + 4.0 * y.deriv(k) + y.deriv(k + 1));
        m = std::max(m, max_abs(d) / (2.0 * h));
    }
    return m;
}

}  // namespace slq
