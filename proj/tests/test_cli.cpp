#include "slq/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kConfigs = std::string(SLQ_SOURCE_DIR) + "/configs/";

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "stackelberg_lq");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return slq::run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("slq_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string write_file(const fs::path& dir, const std::string& name, const std::string& text) {
    fs::create_directories(dir);
    std::ofstream(dir / name) << text;
    return (dir / name).string();
}

}  // namespace

TEST(Cli, OfflineWritesRiccatiAndGains) {
    const fs::path out = scratch_dir("offline");
    EXPECT_EQ(run({"offline", "--config", kConfigs + "zero.cfg", "--out", out.string()}), slq::kExitOk);
    EXPECT_TRUE(fs::exists(out / "riccati.csv"));
    const std::string gains = slurp(out / "gains.csv");
    EXPECT_EQ(gains.rfind("t,G2_1,G2_2,b2,G1hat_1,G1hat_2,G1check_1,G1check_2,b1\n0,0,0,0,0,0,0,0,0\n", 0), 0u);
}

TEST(Cli, SimulateIsByteIdentical) {
    const fs::path a = scratch_dir("sim_a"), b = scratch_dir("sim_b");
    for (const fs::path& out : {a, b})
        ASSERT_EQ(run({"simulate", "--out", out.string(), "--paths", "500", "--steps", "50", "--seed", "9"}),
                  slq::kExitOk);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
        ++files;
    }
    EXPECT_EQ(files, 5u);
}

TEST(Cli, SeedChangesOutput) {
    const fs::path a = scratch_dir("seed_a"), b = scratch_dir("seed_b");
    run({"simulate", "--out", a.string(), "--paths", "100", "--steps", "20", "--seed", "1"});
    run({"simulate", "--out", b.string(), "--paths", "100", "--steps", "20", "--seed", "2"});
    EXPECT_NE(slurp(a / "costs.csv"), slurp(b / "costs.csv"));
}

TEST(Cli, ConfigErrorsExitOne) {
    const fs::path dir = scratch_dir("bad");
    EXPECT_EQ(run({"offline", "--config", write_file(dir, "bad.cfg", "[grid]\nT = 1\nN = x\n")}), slq::kExitConfig);
    EXPECT_EQ(run({"offline", "--config", (dir / "missing.cfg").string()}), slq::kExitConfig);
    EXPECT_EQ(run({"offline", "--steps", "1"}), slq::kExitConfig);
    EXPECT_EQ(run({"frobnicate"}), slq::kExitConfig);
    EXPECT_EQ(run({}), slq::kExitConfig);
    EXPECT_EQ(run({"--help"}), slq::kExitOk);
}

TEST(Cli, VanishingControlWeightExitsTwo) {
    const fs::path dir = scratch_dir("hard");
    const std::string cfg = write_file(dir, "r0.cfg", "[model]\nB1 = 1\n[cost_follower]\nR = 0\n");
    EXPECT_EQ(run({"offline", "--config", cfg, "--out", dir.string()}), slq::kExitHardViolation);
}

TEST(Cli, RiccatiEscapeExitsThree) {
    const fs::path dir = scratch_dir("blowup");
    const std::string cfg = write_file(dir, "b.cfg", "[model]\nB1 = 1\n[cost_follower]\nL = -100\nR = 1\n");
    EXPECT_EQ(run({"offline", "--config", cfg, "--out", dir.string()}), slq::kExitBlowUp);
}

TEST(Cli, SpecialCase) {
    const fs::path out = scratch_dir("special");
    EXPECT_EQ(run({"special-case", "--config", kConfigs + "special_case.cfg", "--out", out.string()}), slq::kExitOk);
    EXPECT_TRUE(fs::exists(out / "special_case.csv"));
    EXPECT_EQ(run({"special-case", "--out", out.string()}), slq::kExitConfig);
}

TEST(Cli, SweepWritesLongFormat) {
    const fs::path dir = scratch_dir("sweep");
    const std::string cfg =
        write_file(dir, "s.cfg", "[advertising]\n[grid]\nN = 20\n[montecarlo]\npaths = 50\n[sweep]\nbeta2 = 0.1, 0.2\n");
    EXPECT_EQ(run({"sweep", "--config", cfg, "--out", dir.string()}), slq::kExitOk);
    EXPECT_TRUE(fs::exists(dir / "sweep_beta2_0.csv"));
    EXPECT_TRUE(fs::exists(dir / "sweep_beta2_1.csv"));
    EXPECT_EQ(slurp(dir / "sweep_beta2_long.csv").rfind("param_value,t,series,value\n0.10000000000000001,0,v1,", 0),
              0u);
    EXPECT_TRUE(fs::exists(dir / "sweep_summary.csv"));
}
