#include "slq/csv.hpp"

#include <cstdio>
#include <filesystem>

namespace slq {

std::string format_double(double v) {
    if (v == 0.0) return "0";  // also folds -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot write " + path);
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw PreconditionFailure("csv row width mismatch in " + path_);
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    if (!out_) throw Error("write failed for " + path_);
}

void CsvWriter::row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    row(cells);
}

namespace {

std::string join(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

void push_mat(std::vector<double>& row, const Mat2& m) {
    row.insert(row.end(), {m(0, 0), m(0, 1), m(1, 0), m(1, 1)});
}

void push_mat_header(std::vector<std::string>& h, const std::string& name) {
    for (const char* s : {"_11", "_12", "_21", "_22"}) h.push_back(name + s);
}

}  // namespace

std::string write_riccati_csv(const std::string& dir, const OfflineSolution& off) {
    std::vector<std::string> h = {"t", "Pi", "P"};
    for (const char* n : {"Pi1", "Pi2", "Pi3", "Pcal"}) push_mat_header(h, n);
    h.insert(h.end(), {"Phicheck_1", "Phicheck_2", "Phi_1", "Phi_2"});
    const std::string path = join(dir, "riccati.csv");
    CsvWriter w(path, h);
    for (std::size_t k = 0; k < off.grid.nodes(); ++k) {
        std::vector<double> r = {off.grid.t(k), off.Pi[k], off.P[k]};
        push_mat(r, off.pi.Pi1[k]);
        push_mat(r, off.pi.Pi2[k]);
        push_mat(r, off.pi.Pi3[k]);
        push_mat(r, off.Pcal[k]);
        r.insert(r.end(), {off.Phicheck[k](0), off.Phicheck[k](1), off.Phi[k](0), off.Phi[k](1)});
        w.row(r);
    }
    return path;
}

std::string write_gains_csv(const std::string& dir, const OfflineSolution& off) {
    const std::string path = join(dir, "gains.csv");
    CsvWriter w(path, {"t", "G2_1", "G2_2", "b2", "G1hat_1", "G1hat_2", "G1check_1", "G1check_2", "b1"});
    const FeedbackGains& g = off.gains;
    for (std::size_t k = 0; k < off.grid.nodes(); ++k)
        w.row(std::vector<double>{off.grid.t(k), g.G2[k](0), g.G2[k](1), g.b2[k], g.G1hat[k](0), g.G1hat[k](1),
                                  g.G1check[k](0), g.G1check[k](1), g.b1[k]});
    return path;
}

std::string write_ensemble_mean_csv(const std::string& dir, const PathEnsemble& ens) {
    std::vector<std::string> h = {"t"};
    for (int s = 0; s < kSeriesCount; ++s) h.push_back(std::string("mean_") + series_name(s));
    for (int s = 0; s < kSeriesCount; ++s) h.push_back(std::string("meansq_") + series_name(s));
    const std::string path = join(dir, "ensemble_mean.csv");
    CsvWriter w(path, h);
    for (std::size_t k = 0; k < ens.grid.nodes(); ++k) {
        std::vector<double> r = {ens.grid.t(k)};
        r.insert(r.end(), ens.mean[k].begin(), ens.mean[k].end());
        r.insert(r.end(), ens.mean_sq[k].begin(), ens.mean_sq[k].end());
        w.row(r);
    }
    return path;
}

std::string write_checkpoint_csv(const std::string& dir, const FilterReport& rep) {
    std::vector<std::string> h = {"t", "mean_err_x", "orthogonality", "mean_sq_err_x"};
    push_mat_header(h, "cov_err");
    push_mat_header(h, "Pcal");
    h.insert(h.end(), {"mean_err_check_1", "mean_err_check_2", "P"});
    const std::string path = join(dir, "checkpoints.csv");
    CsvWriter w(path, h);
    for (const CheckpointStats& c : rep.checkpoints) {
        std::vector<double> r = {c.t, c.mean_err_x, c.orthogonality, c.mean_sq_err_x};
        push_mat(r, c.cov_err_hat);
        push_mat(r, c.Pcal);
        r.insert(r.end(), {c.mean_err_check(0), c.mean_err_check(1), c.P});
        w.row(r);
    }
    return path;
}

std::string write_sample_paths_csv(const std::string& dir, const PathEnsemble& ens) {
    const std::string path = join(dir, "sample_paths.csv");
    CsvWriter w(path, {"path", "t", "x", "xhat1", "xcheck1", "v1", "v2", "K", "xhat2", "xcheck2", "x0", "x1",
                       "Wtilde"});
    for (std::size_t p = 0; p < ens.stored.size(); ++p) {
        const StoredPath& s = ens.stored[p];
        for (std::size_t k = 0; k < ens.grid.nodes(); ++k)
            w.row(std::vector<double>{static_cast<double>(p), ens.grid.t(k), s.x[k], s.xhat[k], s.xcheck[k], s.v1[k],
                                      s.v2[k], s.K[k], s.Khat[k], s.Kcheck[k], s.x0[k], s.x1[k], s.Wtilde[k]});
    }
    return path;
}

std::string write_costs_csv(const std::string& dir, const CostEstimate& costs) {
    const std::string path = join(dir, "costs.csv");
    CsvWriter w(path, {"quantity", "mean", "std_error", "paths"});
    for (const auto& [name, st] : {std::pair<const char*, CostStat>{"J1", costs.J1}, {"J2", costs.J2}})
        w.row(std::vector<std::string>{name, format_double(st.mean), format_double(st.std_error),
                                       std::to_string(st.paths)});
    return path;
}

std::string write_special_case_csv(const std::string& dir, const SpecialCaseSolution& sc, const OfflineSolution& off) {
    const std::string path = join(dir, "special_case.csv");
    CsvWriter w(path, {"t", "Pibar1_11", "Pibar2_11", "theta_hat", "Phihat_1", "Phihat_2", "G2_1_special",
                       "G2_1_general", "b2_special", "b2_general", "b1_special", "b1_general", "Pi_general"});
    for (std::size_t k = 0; k < sc.grid.nodes(); ++k)
        w.row(std::vector<double>{sc.grid.t(k), sc.Pibar1[k](0, 0), sc.Pibar2[k](0, 0), sc.theta_hat[k],
                                  sc.Phihat[k](0), sc.Phihat[k](1), sc.gains.G2[k](0), off.gains.G2[k](0),
                                  sc.gains.b2[k], off.gains.b2[k], sc.gains.b1[k], off.gains.b1[k], off.Pi[k]});
    return path;
}

std::vector<std::string> write_sweep_csv(const std::string& dir, const SweepResult& sweep) {
    std::vector<std::string> files;
    const std::string long_path = join(dir, "sweep_" + sweep.name + "_long.csv");
    CsvWriter lw(long_path, {"param_value", "t", "series", "value"});
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
        const SweepPoint& pt = sweep.points[i];
        const std::string path = join(dir, "sweep_" + sweep.name + "_" + std::to_string(i) + ".csv");
        CsvWriter w(path, {"param_value", "t", "mean_v1", "mean_v2", "mean_x", "mean_xhat1", "mean_xcheck1"});
        for (std::size_t k = 0; k < sweep.grid.nodes(); ++k) {
            const double t = sweep.grid.t(k);
            w.row(std::vector<double>{pt.value, t, pt.v1[k], pt.v2[k], pt.x[k], pt.xhat[k], pt.xcheck[k]});
            for (const auto& [series, v] : {std::pair<const char*, double>{"v1", pt.v1[k]},
                                            {"v2", pt.v2[k]},
                                            {"x", pt.x[k]},
                                            {"xhat1", pt.xhat[k]},
                                            {"xcheck1", pt.xcheck[k]}})
                lw.row(std::vector<std::string>{format_double(pt.value), format_double(t), series, format_double(v)});
        }
        files.push_back(path);
    }
    files.push_back(long_path);
    return files;
}

}  // namespace slq
