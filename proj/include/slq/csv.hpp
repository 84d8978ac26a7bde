#pragma once

#include "slq/feedback.hpp"
#include "slq/montecarlo.hpp"
#include "slq/scenarios.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace slq {

// 17 significant digits: every double round-trips.
std::string format_double(double v);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_;
};

// Each writer creates one file under dir and returns its path.
std::string write_riccati_csv(const std::string& dir, const OfflineSolution& off);
std::string write_gains_csv(const std::string& dir, const OfflineSolution& off);
std::string write_ensemble_mean_csv(const std::string& dir, const PathEnsemble& ens);
std::string write_checkpoint_csv(const std::string& dir, const FilterReport& rep);
std::string write_sample_paths_csv(const std::string& dir, const PathEnsemble& ens);
std::string write_costs_csv(const std::string& dir, const CostEstimate& costs);
std::string write_special_case_csv(const std::string& dir, const SpecialCaseSolution& sc, const OfflineSolution& off);
// One file per sweep value plus sweep_<name>_long.csv (param_value,t,series,value).
std::vector<std::string> write_sweep_csv(const std::string& dir, const SweepResult& sweep);

}  // namespace slq
