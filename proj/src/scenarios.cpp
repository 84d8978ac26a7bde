#include "slq/scenarios.hpp"

#include "slq/riccati.hpp"

#include <cmath>

namespace slq {

namespace {

void require_special_case(const ModelSpec& s, const TimeGrid& grid) {
    if (s.M != 0.0) throw SpecialCaseInapplicable("terminal weight M must vanish");
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        const double t = grid.t(k);
        if (s.f1(t) != 0.0) throw SpecialCaseInapplicable("f1 must vanish");
        if (s.L(t) != 0.0) throw SpecialCaseInapplicable("L must vanish");
        if (s.Lbar(t) != 0.0) throw SpecialCaseInapplicable("Lbar must vanish");
    }
}

// Blocks of the unsplit system; the follower Riccati solution is zero here.
struct SpecialBlocks {
    Mat2 A1, B1, E;
    Vec2 C1, C2, D1;
    double Rinv, Rbarinv, rbar;
};

SpecialBlocks special_blocks(const ModelSpec& s, double t) {
    SpecialBlocks b;
    const double A = s.A(t), B1 = s.B1(t), B2 = s.B2(t);
    b.Rinv = 1.0 / s.R(t);
    b.Rbarinv = 1.0 / s.Rbar(t);
    b.rbar = s.rbar(t);
    const double q = B1 * B1 * b.Rinv;
    b.A1 = mat2(A, 0.0, 0.0, A);
    b.B1 = mat2(0.0, -q, -q, 0.0);
    b.D1 = vec2(B2, 0.0);
    b.E = b.D1 * b.Rbarinv * b.D1.transpose();
    b.C1 = vec2(-B1 * b.Rinv * s.r(t) + s.alpha(t), 0.0);
    b.C2 = vec2(s.lbar(t), s.l(t));
    return b;
}

auto vec_guard(const char* name) {
    return [name](double t, const Vec2& y) {
        if (!y.allFinite() || max_abs(y) > kBlowUpThreshold) throw OffsetBlowUp(name, t);
    };
}

}  // namespace

SpecialCaseSolution special_case_solution(const ModelSpec& s, const TimeGrid& grid) {
    require_special_case(s, grid);
    SpecialCaseSolution sc;
    sc.grid = grid;
    sc.Pi = solve_follower_riccati(s, grid);

    const Mat2 MT = mat2(s.Mbar, 0.0, 0.0, 0.0);
    sc.Pibar1 = solve_riccati_backward(
        grid, MT,
        [&](double t) {
            const SpecialBlocks b = special_blocks(s, t);
            return RiccatiCoeffs{b.A1, b.A1, b.B1, Mat2::Zero()};
        },
        "Pibar1");
    sc.Pibar2 = solve_riccati_backward(
        grid, MT,
        [&](double t) {
            const SpecialBlocks b = special_blocks(s, t);
            return RiccatiCoeffs{b.A1, b.A1, b.B1 - b.E, Mat2::Zero()};
        },
        "Pibar2");

    sc.theta_hat = rk4_backward<double>(
        grid, s.m, [&](double t, double th) { return -(s.A(t) * th + s.l(t)); },
        [](double t, double y) {
            if (!std::isfinite(y) || std::abs(y) > kBlowUpThreshold) throw OffsetBlowUp("theta_hat", t);
        });

    const Vec2 terminal = vec2(s.mbar, s.m);
    auto drive = [&](const SpecialBlocks& b, const Mat2& p2) {
        return Vec2(-(p2 * b.D1 * b.Rbarinv * b.rbar) + p2 * b.C1 + b.C2);
    };
    sc.Phihat = rk4_backward<Vec2>(
        grid, terminal,
        [&](double t, const Vec2& ph) {
            const SpecialBlocks b = special_blocks(s, t);
            const Mat2 p2 = sc.Pibar2.at(t);
            return Vec2(-((p2 * (b.B1 - b.E) + b.A1) * ph + drive(b, p2)));
        },
        vec_guard("Phihat"));
    sc.Phi = rk4_backward<Vec2>(
        grid, terminal,
        [&](double t, const Vec2& ph) {
            const SpecialBlocks b = special_blocks(s, t);
            const Mat2 p1 = sc.Pibar1.at(t), p2 = sc.Pibar2.at(t);
            const Vec2 hat = sc.Phihat.at(t);
            return Vec2(-(p1 * b.B1 * (ph - hat) + p2 * (b.B1 - b.E) * hat + b.A1 * ph + drive(b, p2)));
        },
        vec_guard("Phi"));

    const std::size_t n = grid.nodes();
    FeedbackGains& g = sc.gains;
    g.G2.resize(n);
    g.b2.resize(n);
    g.G1hat.assign(n, Row2::Zero());
    g.G1check.assign(n, Row2::Zero());
    g.b1.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.t(k);
        const SpecialBlocks b = special_blocks(s, t);
        g.G2[k] = -b.Rbarinv * (b.D1.transpose() * sc.Pibar2[k]);
        g.b2[k] = -b.Rbarinv * (b.rbar + b.D1.dot(sc.Phihat[k]));
        g.b1[k] = -b.Rinv * (s.B1(t) * sc.theta_hat[k] + s.r(t));
    }
    return sc;
}

SpecialCaseClosedForm special_case_closed_form(const ModelSpec& s, double T, double t) {
    const double A = s.A(t), B2 = s.B2(t), Rbar = s.Rbar(t), l = s.l(t);
    const double tau = T - t;
    const double e1 = std::exp(A * tau), e2 = std::exp(2.0 * A * tau);
    const double int2 = A == 0.0 ? tau : (e2 - 1.0) / (2.0 * A);
    const double int1 = A == 0.0 ? tau : (e1 - 1.0) / A;
    SpecialCaseClosedForm cf;
    cf.pibar1_11 = s.Mbar * e2;
    cf.pibar2_11 = s.Mbar * e2 / (1.0 + s.Mbar * B2 * B2 / Rbar * int2);
    cf.theta_hat = s.m * e1 + l * int1;
    return cf;
}

SpecialCaseComparison compare_with_general(const SpecialCaseSolution& sc, const OfflineSolution& off) {
    if (sc.grid != off.grid) throw PreconditionFailure("special-case and general solutions use different grids");
    SpecialCaseComparison c;
    const FeedbackGains &a = sc.gains, &b = off.gains;
    for (std::size_t k = 0; k < sc.grid.nodes(); ++k) {
        c.max_gain_diff = std::max({c.max_gain_diff, max_abs(Row2(a.G2[k] - b.G2[k])), std::abs(a.b2[k] - b.b2[k]),
                                    max_abs(Row2(a.G1hat[k] - b.G1hat[k])),
                                    max_abs(Row2(a.G1check[k] - b.G1check[k])), std::abs(a.b1[k] - b.b1[k])});
        c.max_abs_Pi = std::max(c.max_abs_Pi, std::abs(off.Pi[k]));
    }
    return c;
}

ScenarioRun advertising_scenario(const AdvertisingParams& params, const TimeGrid& grid, const NoiseSpec& noise,
                                 const SimulationOptions& opts) {
    ScenarioRun run;
    run.params = params;
    run.model = from_advertising(params);
    run.diagnostics = validate(run.model, grid);
    run.offline = solve_offline(run.model, grid);
    run.ensemble = simulate_equilibrium(run.offline, noise, opts);
    run.costs = estimate_costs(run.ensemble);
    run.filter = filter_consistency_stats(run.ensemble, run.offline.P, run.offline.Pcal);
    return run;
}

namespace {

struct ParamField {
    const char* name;
    double AdvertisingParams::*field;
};

const ParamField kParamFields[] = {
    {"beta1", &AdvertisingParams::beta1},   {"beta2", &AdvertisingParams::beta2},
    {"delta", &AdvertisingParams::delta},   {"gamma1", &AdvertisingParams::gamma1},
    {"gamma2", &AdvertisingParams::gamma2}, {"sigma", &AdvertisingParams::sigma},
    {"sigmabar", &AdvertisingParams::sigmabar}, {"kappa1", &AdvertisingParams::kappa1},
    {"kappa2", &AdvertisingParams::kappa2}, {"theta1", &AdvertisingParams::theta1},
    {"theta2", &AdvertisingParams::theta2}, {"mu1", &AdvertisingParams::mu1},
    {"mu2", &AdvertisingParams::mu2},       {"M1", &AdvertisingParams::M1},
    {"M2", &AdvertisingParams::M2},         {"x0", &AdvertisingParams::x0},
    {"f1", &AdvertisingParams::f1},
};

double AdvertisingParams::*find_field(const std::string& name) {
    for (const auto& f : kParamFields)
        if (name == f.name) return f.field;
    throw InvalidParameter("unknown advertising parameter '" + name + "'");
}

}  // namespace

void set_advertising_param(AdvertisingParams& p, const std::string& name, double value) {
    p.*find_field(name) = value;
}

double get_advertising_param(const AdvertisingParams& p, const std::string& name) { return p.*find_field(name); }

const std::vector<std::string>& advertising_param_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& f : kParamFields) v.emplace_back(f.name);
        return v;
    }();
    return names;
}

CostStat node_stat(const PathEnsemble& ens, std::size_t k, int series) {
    CostStat st;
    st.paths = ens.paths;
    st.mean = ens.mean[k][series];
    if (ens.paths > 1) {
        const double M = static_cast<double>(ens.paths);
        const double var = std::max(0.0, ens.mean_sq[k][series] - st.mean * st.mean) * M / (M - 1.0);
        st.std_error = std::sqrt(var / M);
    }
    return st;
}

SweepResult parameter_sweep(const AdvertisingParams& base, const std::string& name, const std::vector<double>& values,
                            const TimeGrid& grid, const NoiseSpec& noise) {
    SweepResult res;
    res.name = name;
    res.values = values;
    res.grid = grid;
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidParameter("sweep value is not finite");
        AdvertisingParams p = base;
        set_advertising_param(p, name, v);
        const ScenarioRun run = advertising_scenario(p, grid, noise);
        const PathEnsemble& ens = run.ensemble;
        SweepPoint pt;
        pt.value = v;
        for (std::size_t k = 0; k < grid.nodes(); ++k) {
            pt.v1.push_back(ens.mean[k][kV1]);
            pt.v2.push_back(ens.mean[k][kV2]);
            pt.x.push_back(ens.mean[k][kX]);
            pt.xhat.push_back(ens.mean[k][kXhat]);
            pt.xcheck.push_back(ens.mean[k][kXcheck]);
        }
        pt.v1_0 = node_stat(ens, 0, kV1);
        pt.v2_0 = node_stat(ens, 0, kV2);
        res.points.push_back(std::move(pt));
    }
    return res;
}

std::vector<double> beta2_sweep_values() { return {0.04, 0.14, 0.24, 0.34, 0.44}; }
std::vector<double> mu1_sweep_values() { return {0.1, 0.3, 0.5, 0.7, 0.9, 1.1}; }

}  // namespace slq
