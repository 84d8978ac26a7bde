#include "slq/model.hpp"

#include <algorithm>
#include <cmath>

namespace slq {

CoefficientFn CoefficientFn::table(std::vector<std::pair<double, double>> points) {
    if (points.empty()) throw InvalidParameter("coefficient table is empty");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!std::isfinite(points[i].first) || !std::isfinite(points[i].second))
            throw InvalidParameter("coefficient table has a non-finite entry");
        if (i > 0 && !(points[i].first > points[i - 1].first))
            throw InvalidParameter("coefficient table nodes must be strictly increasing");
    }
    CoefficientFn f;
    f.value_ = points.front().second;
    if (points.size() == 1) return f;  // a one-point table is a constant
    f.points_ = std::move(points);
    return f;
}

double CoefficientFn::operator()(double t) const {
    if (points_.empty()) return value_;
    if (t <= points_.front().first) return points_.front().second;
    if (t >= points_.back().first) return points_.back().second;
    auto it = std::upper_bound(points_.begin(), points_.end(), t,
                               [](double v, const std::pair<double, double>& p) { return v < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (t == lo.first) return lo.second;
    const double w = (t - lo.first) / (hi.first - lo.first);
    return lo.second + w * (hi.second - lo.second);
}

ModelSpec ModelSpec::frozen_at(double t) const {
    ModelSpec f = *this;
    for (CoefficientFn* c : {&f.A, &f.B1, &f.B2, &f.alpha, &f.c, &f.cbar, &f.f1, &f.f2, &f.g, &f.L, &f.R, &f.l,
                             &f.r, &f.Lbar, &f.Rbar, &f.lbar, &f.rbar})
        *c = CoefficientFn((*c)(t));
    return f;
}

bool ModelSpec::operator==(const ModelSpec& o) const {
    return A == o.A && B1 == o.B1 && B2 == o.B2 && alpha == o.alpha && c == o.c && cbar == o.cbar && f1 == o.f1 &&
           f2 == o.f2 && g == o.g && L == o.L && R == o.R && l == o.l && r == o.r && M == o.M && m == o.m &&
           Lbar == o.Lbar && Rbar == o.Rbar && lbar == o.lbar && rbar == o.rbar && Mbar == o.Mbar &&
           mbar == o.mbar && x0 == o.x0;
}

ModelSpec from_advertising(const AdvertisingParams& p) {
    const double all[] = {p.beta1,  p.beta2,  p.delta,  p.gamma1, p.gamma2, p.sigma, p.sigmabar, p.kappa1, p.kappa2,
                          p.theta1, p.theta2, p.mu1,    p.mu2,    p.M1,     p.M2,    p.x0,       p.f1};
    for (double v : all)
        if (!std::isfinite(v)) throw InvalidParameter("advertising parameter is not finite");
    if (!(p.mu1 > 0.0)) throw InvalidParameter("mu1 must be positive");
    if (!(p.mu2 > 0.0)) throw InvalidParameter("mu2 must be positive");

    ModelSpec s;
    s.A = -p.delta;
    s.B1 = -p.beta1;
    s.B2 = p.beta2;
    s.alpha = 0.0;
    s.c = p.sigma;
    s.cbar = p.sigmabar;
    s.f1 = p.f1;
    s.f2 = 0.0;
    s.g = 0.0;
    s.L = -2.0 * p.kappa1;
    s.R = p.mu1;
    s.l = -p.theta1;
    s.r = -p.gamma1;
    s.M = 2.0 * p.M1;
    s.m = 0.0;
    s.Lbar = -2.0 * p.kappa2;
    s.Rbar = p.mu2;
    s.lbar = -p.theta2;
    s.rbar = -p.gamma2;
    s.Mbar = 2.0 * p.M2;
    s.mbar = 0.0;
    s.x0 = p.x0;
    return s;
}

Diagnostics validate(const ModelSpec& s, const TimeGrid& grid) {
    Diagnostics d;
    const std::pair<const char*, const CoefficientFn*> coeffs[] = {
        {"A", &s.A},    {"B1", &s.B1},       {"B2", &s.B2},     {"alpha", &s.alpha}, {"c", &s.c},
        {"cbar", &s.cbar}, {"f1", &s.f1},    {"f2", &s.f2},     {"g", &s.g},         {"L", &s.L},
        {"R", &s.R},    {"l", &s.l},         {"r", &s.r},       {"Lbar", &s.Lbar},   {"Rbar", &s.Rbar},
        {"lbar", &s.lbar}, {"rbar", &s.rbar}};
    for (auto [name, fn] : coeffs)
        for (std::size_t k = 0; k < grid.nodes(); ++k)
            if (!std::isfinite((*fn)(grid.t(k))))
                throw HardViolation(std::string("coefficient ") + name + " is not finite on the grid");
    for (double v : {s.M, s.m, s.Mbar, s.mbar, s.x0})
        if (!std::isfinite(v)) throw HardViolation("terminal weight or initial state is not finite");
    d.holds.push_back("finite coefficients");

    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        if (s.R(grid.t(k)) == 0.0) throw HardViolation("R vanishes at t=" + std::to_string(grid.t(k)));
        if (s.Rbar(grid.t(k)) == 0.0)
            throw HardViolation("Rbar vanishes at t=" + std::to_string(grid.t(k)));
    }
    d.holds.push_back("R invertible");
    d.holds.push_back("Rbar invertible");

    // Sign conditions on L, Lbar, R, Rbar, M, Mbar, plus the follower's linear
    // weights l and r, which turn negative when revenue enters as a reward.
    auto negative_somewhere = [&](const CoefficientFn& f) {
        for (std::size_t k = 0; k < grid.nodes(); ++k)
            if (f(grid.t(k)) < 0.0) return true;
        return false;
    };
    const std::pair<const char*, const CoefficientFn*> signs[] = {
        {"L<0", &s.L}, {"Lbar<0", &s.Lbar}, {"l<0", &s.l}, {"r<0", &s.r}, {"R<0", &s.R}, {"Rbar<0", &s.Rbar}};
    for (auto [name, fn] : signs)
        if (negative_somewhere(*fn)) d.warnings.emplace_back(name);
    if (s.M < 0.0) d.warnings.emplace_back("M<0");
    if (s.Mbar < 0.0) d.warnings.emplace_back("Mbar<0");
    if (d.warnings.empty()) d.holds.push_back("weight signs");
    return d;
}

BlockValues BlockCoefficients::eval(double t, double Pi) const {
    const ModelSpec& s = model_;
    const double A = s.A(t), B1 = s.B1(t), B2 = s.B2(t), alpha = s.alpha(t);
    const double Rinv = 1.0 / s.R(t), Rbarinv = 1.0 / s.Rbar(t);
    const double b1sq = B1 * B1 * Rinv;

    BlockValues b;
    b.Pi = Pi;
    b.Rinv = Rinv;
    b.Rbarinv = Rbarinv;
    b.r = s.r(t);
    b.rbar = s.rbar(t);
    b.A1 = mat2(A, 0.0, 0.0, A - b1sq * Pi);
    b.A2 = mat2(-b1sq * Pi, 0.0, 0.0, 0.0);
    b.A3 = mat2(s.Lbar(t), 0.0, 0.0, 0.0);
    b.B1 = mat2(0.0, -b1sq, -b1sq, 0.0);
    b.M = mat2(s.Mbar, 0.0, 0.0, 0.0);
    b.C1 = vec2(-B1 * Rinv * s.r(t) + alpha, 0.0);
    b.C2 = vec2(s.lbar(t), -B1 * Pi * Rinv * s.r(t) + alpha * Pi + s.l(t));
    b.D1 = vec2(B2, 0.0);
    b.D2 = vec2(0.0, B2 * Pi);
    b.Sigma1 = vec2(s.c(t), 0.0);
    b.Sigma2 = vec2(s.cbar(t), 0.0);
    b.F = vec2(s.f1(t), 0.0);
    b.X0 = vec2(s.x0, 0.0);
    b.MT = vec2(s.mbar, s.m);
    return b;
}

BlockValues BlockCoefficients::at(double t) const { return eval(t, Pi_.at(t)); }

BlockValues BlockCoefficients::node(std::size_t k) const { return eval(grid().t(k), Pi_[k]); }

BlockCoefficients BlockCoefficients::frozen_at(double t) const {
    return BlockCoefficients(model_.frozen_at(t), ScalarTrajectory::constant(grid(), Pi_.at(t), 0.0));
}

BlockCoefficients assemble_blocks(const ModelSpec& model, const ScalarTrajectory& Pi) {
    return BlockCoefficients(model, Pi);
}

}  // namespace slq
