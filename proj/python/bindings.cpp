// Python bindings: offline solve, equilibrium simulation, special-case check
// and the verification suite on advertising or config-file models.

#include "slq/cli.hpp"
#include "slq/config.hpp"
#include "slq/scenarios.hpp"
#include "slq/verify.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

namespace py = pybind11;
using namespace slq;

namespace {

using Array = py::array_t<double>;

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

Array scalar_series(const ScalarTrajectory& tr) { return to_array(tr.values()); }

// (nodes, 2, 2) array.
Array matrix_series(const MatTrajectory& tr) {
    Array out({static_cast<py::ssize_t>(tr.size()), py::ssize_t{2}, py::ssize_t{2}});
    auto a = out.mutable_unchecked<3>();
    for (std::size_t k = 0; k < tr.size(); ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) a(static_cast<py::ssize_t>(k), i, j) = tr[k](i, j);
    return out;
}

// (nodes, 2) array.
template <typename V>
Array pair_series(const std::vector<V>& v) {
    Array out({static_cast<py::ssize_t>(v.size()), py::ssize_t{2}});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t k = 0; k < v.size(); ++k) {
        a(static_cast<py::ssize_t>(k), 0) = v[k](0);
        a(static_cast<py::ssize_t>(k), 1) = v[k](1);
    }
    return out;
}

Array grid_times(const TimeGrid& g) {
    std::vector<double> t(g.nodes());
    for (std::size_t k = 0; k < g.nodes(); ++k) t[k] = g.t(k);
    return to_array(t);
}

AdvertisingParams params_from(const py::dict& overrides) {
    AdvertisingParams p;
    for (const auto& [key, value] : overrides) set_advertising_param(p, py::cast<std::string>(key), py::cast<double>(value));
    return p;
}

py::dict offline_dict(const OfflineSolution& off) {
    py::dict d;
    d["t"] = grid_times(off.grid);
    d["Pi"] = scalar_series(off.Pi);
    d["P"] = scalar_series(off.P);
    d["Pi1"] = matrix_series(off.pi.Pi1);
    d["Pi2"] = matrix_series(off.pi.Pi2);
    d["Pi3"] = matrix_series(off.pi.Pi3);
    d["Pcal"] = matrix_series(off.Pcal);
    d["Phi"] = pair_series(off.Phi.values());
    d["Phicheck"] = pair_series(off.Phicheck.values());
    d["G2"] = pair_series(off.gains.G2);
    d["b2"] = to_array(off.gains.b2);
    d["G1hat"] = pair_series(off.gains.G1hat);
    d["G1check"] = pair_series(off.gains.G1check);
    d["b1"] = to_array(off.gains.b1);
    return d;
}

py::dict cost_dict(const CostStat& c) {
    py::dict d;
    d["mean"] = c.mean;
    d["std_error"] = c.std_error;
    d["paths"] = c.paths;
    return d;
}

py::dict simulation_dict(const PathEnsemble& ens, const OfflineSolution& off) {
    py::dict d;
    d["t"] = grid_times(ens.grid);
    py::dict mean, mean_sq;
    for (int s = 0; s < kSeriesCount; ++s) {
        std::vector<double> m(ens.grid.nodes()), q(ens.grid.nodes());
        for (std::size_t k = 0; k < ens.grid.nodes(); ++k) {
            m[k] = ens.mean[k][s];
            q[k] = ens.mean_sq[k][s];
        }
        mean[series_name(s)] = to_array(m);
        mean_sq[series_name(s)] = to_array(q);
    }
    d["mean"] = mean;
    d["mean_sq"] = mean_sq;
    const CostEstimate c = estimate_costs(ens);
    d["J1"] = cost_dict(c.J1);
    d["J2"] = cost_dict(c.J2);
    const FilterReport fr = filter_consistency_stats(ens, off.P, off.Pcal);
    d["mean_Wtilde_T"] = fr.mean_Wtilde_T;
    d["var_Wtilde_T"] = fr.var_Wtilde_T;
    if (!fr.checkpoints.empty()) {
        d["cov_err_T"] = fr.checkpoints.back().cov_err_hat(0, 0);
        d["Pcal_T"] = fr.checkpoints.back().Pcal(0, 0);
    }
    d["max_decomposition_error"] = ens.max_decomposition_error;
    d["max_abs_x"] = ens.max_abs_x;
    return d;
}

NoiseSpec noise_spec(std::size_t paths, std::uint64_t seed, bool antithetic) {
    NoiseSpec n;
    n.paths = paths;
    n.seed = seed;
    n.antithetic = antithetic;
    return n;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Leader-follower LQ game with partial observation: Riccati solver and Monte Carlo harness";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidParameter>(m, "InvalidParameter", base);
    py::register_exception<HardViolation>(m, "HardViolation", base);
    py::register_exception<RiccatiBlowUp>(m, "RiccatiBlowUp", base);
    py::register_exception<SpecialCaseInapplicable>(m, "SpecialCaseInapplicable", base);
    py::register_exception<ConfigError>(m, "ConfigError", base);

    m.def("advertising_param_names", &advertising_param_names, "Names accepted as advertising overrides");

    m.def(
        "offline",
        [](const py::dict& overrides, double T, std::size_t N) {
            return offline_dict(solve_offline(from_advertising(params_from(overrides)), TimeGrid(T, N)));
        },
        py::arg("params") = py::dict(), py::arg("T") = 1.0, py::arg("N") = 200,
        "Riccati solutions, offsets and feedback gains on the advertising model");

    m.def(
        "offline_config",
        [](const std::string& path) {
            const RunConfig cfg = load_config(path);
            return offline_dict(solve_offline(cfg.resolved_model(), cfg.grid()));
        },
        py::arg("path"), "Offline solve of the model in a config file");

    m.def(
        "simulate",
        [](const py::dict& overrides, double T, std::size_t N, std::size_t paths, std::uint64_t seed,
           bool antithetic) {
            const OfflineSolution off = solve_offline(from_advertising(params_from(overrides)), TimeGrid(T, N));
            SimulationOptions opts;
            opts.checkpoints = {N};
            PathEnsemble ens;
            {
                py::gil_scoped_release release;
                ens = simulate_equilibrium(off, noise_spec(paths, seed, antithetic), opts);
            }
            return simulation_dict(ens, off);
        },
        py::arg("params") = py::dict(), py::arg("T") = 1.0, py::arg("N") = 200, py::arg("paths") = 10000,
        py::arg("seed") = 20240601, py::arg("antithetic") = false,
        "Monte Carlo ensemble of the equilibrium on the advertising model");

    m.def(
        "special_case_gap",
        [](const py::dict& overrides, double T, std::size_t N) {
            const ModelSpec model = from_advertising(params_from(overrides));
            const TimeGrid grid(T, N);
            const SpecialCaseComparison c = compare_with_general(special_case_solution(model, grid), solve_offline(model, grid));
            return py::make_tuple(c.max_gain_diff, c.max_abs_Pi);
        },
        py::arg("params") = py::dict(), py::arg("T") = 1.0, py::arg("N") = 200,
        "(max gain difference, max |Pi|) between the shared-information solver and the general pipeline");

    m.def(
        "verify",
        [](const std::string& path) {
            VerifyReport rep;
            {
                const RunConfig cfg = load_config(path);
                py::gil_scoped_release release;
                rep = run_verification(cfg);
            }
            py::list out;
            for (const CheckResult& c : rep.checks) {
                py::dict d;
                d["name"] = c.name;
                d["value"] = c.value;
                d["threshold"] = c.threshold;
                d["pass"] = c.pass;
                d["advisory"] = c.advisory;
                d["detail"] = c.detail;
                out.append(d);
            }
            return out;
        },
        py::arg("path"), "Invariant checks on the model in a config file");

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "stackelberg_lq");
            std::vector<char*> argv;
            for (auto& a : args) argv.push_back(a.data());
            return run_cli(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "Runs the command-line tool in process and returns its exit code");
}
