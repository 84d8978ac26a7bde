#pragma once

#include "slq/model.hpp"
#include "slq/montecarlo.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace slq {

class ConfigError : public Error {
public:
    ConfigError(const std::string& source, std::size_t line, std::size_t column, const std::string& msg)
        : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
          line(line),
          column(column) {}
    std::size_t line, column;
};

// A perturbation entry "kind:eps" with kind in {shift, ramp, gain}.
struct PerturbationEntry {
    PerturbationSpec::Kind kind = PerturbationSpec::Kind::Shift;
    double eps = 0.0;
    bool operator==(const PerturbationEntry&) const = default;
};

// Run configuration. The model comes either from an [advertising] section or
// from explicit [model], [cost_follower], [cost_leader] sections.
//
//   [advertising]            beta1 = 0.2 ...
//   [model]                  A = -0.5   B1 = [(0, 1), (1, 2)] ...
//   [cost_follower]          L R l r M m
//   [cost_leader]            L R l r M m   (the barred weights)
//   [grid]                   T N
//   [montecarlo]             seed paths antithetic checkpoints store_paths
//   [verify]                 perturbation_paths leader_perturbations follower_perturbations
//   [sweep]                  <advertising name> = v1, v2, ...
//   [output]                 dir
struct RunConfig {
    std::optional<AdvertisingParams> advertising;
    ModelSpec model;
    double T = 1.0;
    std::size_t N = 200;
    NoiseSpec noise;
    std::vector<double> checkpoints;  // times; empty means 0.2T, ..., T
    std::size_t store_paths = 4;
    std::size_t perturbation_paths = 20000;
    std::vector<PerturbationEntry> leader_perturbations = {{PerturbationSpec::Kind::Shift, 0.1},
                                                           {PerturbationSpec::Kind::Shift, -0.1},
                                                           {PerturbationSpec::Kind::Ramp, 0.1},
                                                           {PerturbationSpec::Kind::Ramp, -0.1},
                                                           {PerturbationSpec::Kind::GainScale, 0.2}};
    std::vector<PerturbationEntry> follower_perturbations = {{PerturbationSpec::Kind::Shift, 0.1},
                                                             {PerturbationSpec::Kind::Shift, -0.1},
                                                             {PerturbationSpec::Kind::GainScale, 0.2}};
    std::vector<std::pair<std::string, std::vector<double>>> sweeps;
    std::string out_dir = "out";

    ModelSpec resolved_model() const;
    TimeGrid grid() const { return TimeGrid(T, N); }
    std::vector<std::size_t> checkpoint_nodes() const;
    bool operator==(const RunConfig& o) const;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

}  // namespace slq
