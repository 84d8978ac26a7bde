#include "slq/config.hpp"
#include "slq/csv.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

using namespace slq;

namespace {

const std::string kConfigs = std::string(SLQ_SOURCE_DIR) + "/configs/";

void expect_error(const std::string& text, std::size_t line, std::size_t column, const std::string& needle) {
    try {
        parse_config(text, "t.cfg");
        ADD_FAILURE() << "accepted:\n" << text;
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line, line) << e.what();
        EXPECT_EQ(e.column, column) << e.what();
        EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        EXPECT_EQ(std::string(e.what()).rfind("t.cfg:", 0), 0u) << e.what();
    }
}

}  // namespace

TEST(Config, ShippedConfigsLoad) {
    const RunConfig adv = load_config(kConfigs + "advertising.cfg");
    ASSERT_TRUE(adv.advertising.has_value());
    EXPECT_EQ(*adv.advertising, AdvertisingParams{});
    EXPECT_EQ(adv.N, 200u);
    EXPECT_EQ(adv.noise.paths, 100000u);
    EXPECT_EQ(adv.checkpoints, (std::vector<double>{0.2, 0.4, 0.6, 0.8, 1.0}));
    EXPECT_EQ(adv.resolved_model(), from_advertising({}));

    const RunConfig tv = load_config(kConfigs + "time_varying.cfg");
    EXPECT_FALSE(tv.advertising.has_value());
    EXPECT_EQ(tv.model.A.points().size(), 3u);
    EXPECT_EQ(tv.model.A(0.25), -0.4);
    EXPECT_EQ(tv.model.Rbar(0.0), 0.5);

    EXPECT_NO_THROW(load_config(kConfigs + "zero.cfg"));
    EXPECT_NO_THROW(load_config(kConfigs + "special_case.cfg"));
}

TEST(Config, RoundTripIsExact) {
    for (const char* name : {"advertising.cfg", "time_varying.cfg", "zero.cfg", "special_case.cfg"}) {
        const RunConfig a = load_config(kConfigs + name);
        const RunConfig b = parse_config(serialize_config(a));
        EXPECT_EQ(a, b) << name;
        EXPECT_EQ(serialize_config(a), serialize_config(b)) << name;
    }
}

TEST(Config, RoundTripKeepsAwkwardDoubles) {
    RunConfig c;
    c.model.A = 0.1 + 0.2;
    c.model.B2 = CoefficientFn::table({{0.0, 1.0 / 3.0}, {1.0 / 7.0, -2e-300}});
    c.model.x0 = 5e-324;
    c.T = 2.5;
    c.sweeps = {{"mu1", {0.1, 0.7}}};
    c.noise.antithetic = true;
    c.noise.seed = 18446744073709551615ull;
    c.leader_perturbations = {{PerturbationSpec::Kind::Ramp, -0.05}};
    EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Config, ErrorsCarryLineAndColumn) {
    expect_error("[grid]\nT = 1\nN = x\n", 3, 5, "non-negative integer");
    expect_error("[grid]\n  N = 1\n", 2, 7, "at least 2");
    expect_error("[model]\nA = [(0, 1), (0, 2)]\n", 2, 14, "strictly increasing");
    expect_error("[model]\nQ = 1\n", 2, 1, "unknown key 'Q'");
    expect_error("[nonsense]\n", 1, 2, "unknown section");
    expect_error("T = 1\n", 1, 1, "outside of any section");
    expect_error("[grid]\nT = 1\nT = 2\n", 3, 1, "duplicate key 'T'");
    expect_error("[advertising]\nbeta1 = 0.2\n[model]\n", 3, 1, "cannot be combined");
    expect_error("[montecarlo]\nantithetic = maybe\n", 2, 14, "true or false");
    expect_error("[verify]\nleader_perturbations = wiggle:0.1\n", 2, 24, "shift, ramp or gain");
    expect_error("[grid]\nT = 1e999\n", 2, 5, "");
    expect_error("[grid]\nT\n", 2, 1, "key = value");
}

TEST(Config, MissingFile) {
    EXPECT_THROW(load_config(kConfigs + "does_not_exist.cfg"), ConfigError);
}

TEST(Config, DefaultsWithoutModelSections) {
    const RunConfig c = parse_config("[grid]\nN = 10\n");
    EXPECT_EQ(c.N, 10u);
    EXPECT_EQ(c.resolved_model(), ModelSpec{});
    EXPECT_EQ(c.checkpoint_nodes(), (std::vector<std::size_t>{2, 4, 6, 8, 10}));
}

TEST(Csv, FormatDouble) {
    EXPECT_EQ(format_double(0.0), "0");
    EXPECT_EQ(format_double(-0.0), "0");
    EXPECT_EQ(format_double(1.5), "1.5");
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    for (double v : {1.0 / 3.0, -2.5e-300, 6.02214076e23})
        EXPECT_EQ(std::stod(format_double(v)), v);
}
