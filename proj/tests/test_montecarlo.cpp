#include "slq/montecarlo.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

using namespace slq;

namespace {

const ModelSpec kAd = from_advertising({});

const OfflineSolution& ad_offline() {
    static const OfflineSolution off = solve_offline(kAd, TimeGrid(1.0, 200));
    return off;
}

NoiseSpec noise(std::size_t paths, std::uint64_t seed = 11, bool antithetic = false) {
    NoiseSpec n;
    n.paths = paths;
    n.seed = seed;
    n.antithetic = antithetic;
    return n;
}

class ThreadEnv {
public:
    explicit ThreadEnv(const char* v) { setenv("STACKELBERG_LQ_THREADS", v, 1); }
    ~ThreadEnv() { unsetenv("STACKELBERG_LQ_THREADS"); }
};

}  // namespace

TEST(Noise, IncrementsArePureFunctionsOfSeedAndPath) {
    const TimeGrid g(1.0, 50);
    std::vector<double> a, ab, b, bb, c, cb;
    path_increments(noise(10), 3, g, a, ab);
    path_increments(noise(99), 3, g, b, bb);
    path_increments(noise(10), 4, g, c, cb);
    EXPECT_EQ(a, b);
    EXPECT_EQ(ab, bb);
    EXPECT_NE(a, c);
    EXPECT_NE(a, ab);
}

TEST(Noise, AntitheticPairsAreNegated) {
    const TimeGrid g(1.0, 50);
    std::vector<double> a, ab, b, bb;
    path_increments(noise(4, 5, true), 2, g, a, ab);
    path_increments(noise(4, 5, true), 3, g, b, bb);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k], -b[k]);
        EXPECT_EQ(ab[k], -bb[k]);
    }
}

TEST(SampleStat, PlainAndPaired) {
    const std::vector<double> v = {1, 3, 2, 6};
    const CostStat plain = sample_stat(v, false);
    EXPECT_DOUBLE_EQ(plain.mean, 3.0);
    EXPECT_DOUBLE_EQ(plain.std_error, std::sqrt(14.0 / 3.0) / 2.0);
    const CostStat paired = sample_stat(v, true);
    EXPECT_DOUBLE_EQ(paired.mean, 3.0);
    EXPECT_DOUBLE_EQ(paired.std_error, 1.0);
    EXPECT_EQ(paired.paths, 4u);
}

TEST(Simulation, DeterministicAcrossRunsAndThreadCounts) {
    PathEnsemble a, b;
    {
        ThreadEnv env("1");
        a = simulate_equilibrium(ad_offline(), noise(3000));
    }
    {
        ThreadEnv env("4");
        b = simulate_equilibrium(ad_offline(), noise(3000));
    }
    EXPECT_EQ(a.J1, b.J1);
    EXPECT_EQ(a.J2, b.J2);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.mean_sq, b.mean_sq);
    EXPECT_EQ(a.max_decomposition_error, b.max_decomposition_error);
}

TEST(Simulation, NoiseFreeStateEqualsEstimates) {
    ModelSpec s = kAd;
    s.c = 0.0;
    s.cbar = 0.0;
    const OfflineSolution off = solve_offline(s, TimeGrid(1.0, 100));
    SimulationOptions opts;
    opts.store_paths = 2;
    const PathEnsemble ens = simulate_equilibrium(off, noise(64), opts);
    const StoredPath& p = ens.stored[1];
    for (std::size_t k = 0; k <= 100; ++k) {
        EXPECT_EQ(p.x[k], p.xhat[k]);
        EXPECT_NEAR(p.x[k], p.xcheck[k], 1e-9);
        EXPECT_EQ(p.x[k], ens.stored[0].x[k]);
    }
    const CostEstimate c = estimate_costs(ens);
    EXPECT_LT(c.J1.std_error, 1e-14);
    EXPECT_LT(c.J2.std_error, 1e-14);
}

TEST(Simulation, ZeroCostsGiveZeroCost) {
    ModelSpec s;
    s.A = -0.5;
    s.B1 = -0.2;
    s.B2 = 0.4;
    s.c = 0.2;
    s.cbar = 0.4;
    s.f1 = 0.6;
    s.x0 = 0.01;
    const OfflineSolution off = solve_offline(s, TimeGrid(1.0, 50));
    const CostEstimate c = estimate_costs(simulate_equilibrium(off, noise(200)));
    EXPECT_EQ(c.J1.mean, 0.0);
    EXPECT_EQ(c.J2.mean, 0.0);
}

TEST(Simulation, StoredPathsSatisfyInnovationIdentity) {
    SimulationOptions opts;
    opts.store_paths = 3;
    const PathEnsemble ens = simulate_equilibrium(ad_offline(), noise(50), opts);
    const double h = ens.grid.step();
    ASSERT_EQ(ens.stored.size(), 3u);
    for (const StoredPath& p : ens.stored) {
        EXPECT_EQ(p.K[0], 0.0);
        EXPECT_EQ(p.Khat[0], 0.0);
        EXPECT_EQ(p.Kcheck[0], 0.0);
        EXPECT_EQ(p.Wtilde[0], 0.0);
        EXPECT_EQ(p.x[0], kAd.x0);
        for (std::size_t k = 0; k < ens.grid.steps(); ++k) {
            EXPECT_EQ(p.dWtilde[k], p.dW[k] + 0.6 * (p.x[k] - p.xhat[k]) * h);
            EXPECT_EQ(p.Wtilde[k + 1], p.Wtilde[k] + p.dWtilde[k]);
            EXPECT_NEAR(p.x[k + 1],
                        p.x[k] + (-0.5 * p.x[k] - 0.2 * p.v1[k] + 0.4 * p.v2[k]) * h + 0.2 * p.dW[k] + 0.4 * p.dWbar[k],
                        1e-15);
        }
    }
}

TEST(Simulation, DecompositionHoldsPathwise) {
    const PathEnsemble ens = simulate_equilibrium(ad_offline(), noise(2000));
    EXPECT_LE(ens.max_decomposition_error, 1e-10 * (1.0 + ens.max_abs_x));
}

TEST(Simulation, DisjointSeedsAgreeWithinStandardErrors) {
    const CostEstimate a = estimate_costs(simulate_equilibrium(ad_offline(), noise(20000, 1)));
    const CostEstimate b = estimate_costs(simulate_equilibrium(ad_offline(), noise(20000, 2)));
    EXPECT_LT(std::abs(a.J1.mean - b.J1.mean), 3.0 * std::hypot(a.J1.std_error, b.J1.std_error));
    EXPECT_LT(std::abs(a.J2.mean - b.J2.mean), 3.0 * std::hypot(a.J2.std_error, b.J2.std_error));
}

TEST(Simulation, AntitheticNeedsEvenPathCount) {
    EXPECT_THROW(simulate_equilibrium(ad_offline(), noise(7, 1, true)), InvalidParameter);
}

TEST(Simulation, EulerWeakErrorIsFirstOrder) {
    // Without noise the scheme is the explicit Euler recursion of the mean.
    ModelSpec s = kAd;
    s.c = 0.0;
    s.cbar = 0.0;
    s.x0 = 0.5;
    double xT[3];
    int i = 0;
    for (std::size_t N : {100, 200, 400}) {
        const PathEnsemble e = simulate_equilibrium(solve_offline(s, TimeGrid(1.0, N)), noise(1));
        xT[i++] = e.mean[N][kX];
    }
    const double ratio = std::abs(xT[0] - xT[1]) / std::abs(xT[1] - xT[2]);
    EXPECT_GT(ratio, 1.7);
    EXPECT_LT(ratio, 2.3);
}

TEST(Simulation, MeanStateConsistentUnderRefinement) {
    const PathEnsemble a = simulate_equilibrium(solve_offline(kAd, TimeGrid(1.0, 100)), noise(20000, 3));
    const PathEnsemble b = simulate_equilibrium(solve_offline(kAd, TimeGrid(1.0, 200)), noise(20000, 4));
    auto se = [](const PathEnsemble& e, std::size_t k) {
        const double m = e.mean[k][kX];
        return std::sqrt(std::max(e.mean_sq[k][kX] - m * m, 0.0) / static_cast<double>(e.paths));
    };
    EXPECT_LT(std::abs(a.mean[100][kX] - b.mean[200][kX]), 4.0 * std::hypot(se(a, 100), se(b, 200)) + 1e-3);
}

TEST(Filter, CovarianceMatchesRiccatiPrediction) {
    SimulationOptions opts;
    opts.checkpoints = {100, 200};
    const PathEnsemble ens = simulate_equilibrium(ad_offline(), noise(20000, 5), opts);
    const FilterReport rep = filter_consistency_stats(ens, ad_offline().P, ad_offline().Pcal);
    ASSERT_EQ(rep.checkpoints.size(), 2u);
    for (const CheckpointStats& c : rep.checkpoints)
        EXPECT_LT(std::abs(c.cov_err_hat(0, 0) / c.Pcal(0, 0) - 1.0), 0.05) << "t=" << c.t;
    EXPECT_LT(std::abs(rep.var_Wtilde_T - 1.0), 0.05);
}

TEST(Filter, FollowerStageVarianceMatchesP) {
    const OfflineSolution& off = ad_offline();
    const FollowerStageEnsemble fs =
        simulate_follower_stage(off.model, CoefficientFn(1.3), off.grid, noise(20000, 6), {200});
    const FilterReport rep = follower_stage_stats(fs, off.P);
    EXPECT_LT(std::abs(rep.checkpoints.back().mean_sq_err_x / off.P[200] - 1.0), 0.05);
}

TEST(Perturbation, NullPerturbationIsExactlyZero) {
    for (auto player : {PerturbationSpec::Player::Leader, PerturbationSpec::Player::Follower}) {
        const PerturbationResult r = perturb_and_compare(ad_offline(), noise(500), {player, {}, 0.0});
        EXPECT_EQ(r.dJ, 0.0);
        EXPECT_EQ(r.dJ_se, 0.0);
    }
}

TEST(Perturbation, DeviationsDoNotPay) {
    using PS = PerturbationSpec;
    for (PS spec : {PS{PS::Player::Follower, PS::Kind::Shift, 0.1}, PS{PS::Player::Follower, PS::Kind::GainScale, 0.2},
                    PS{PS::Player::Leader, PS::Kind::Shift, -0.1}, PS{PS::Player::Leader, PS::Kind::Ramp, 0.1}}) {
        const PerturbationResult r = perturb_and_compare(ad_offline(), noise(4000), spec);
        EXPECT_GE(r.dJ, 0.0) << spec.label();
        EXPECT_GE(r.ci_low, -1e-4 * std::abs(r.J_baseline)) << spec.label();
    }
}

TEST(Perturbation, BestResponseReproducesEquilibriumCosts) {
    Policy br;
    best_response_coefficients(ad_offline(), br);
    br.best_response = true;
    const PathEnsemble a = simulate_equilibrium(ad_offline(), noise(200));
    const PathEnsemble b = simulate_policy(ad_offline(), noise(200), br);
    for (std::size_t p = 0; p < a.J1.size(); ++p) {
        EXPECT_NEAR(a.J1[p], b.J1[p], 1e-8);
        EXPECT_NEAR(a.J2[p], b.J2[p], 1e-8);
    }
}

TEST(Perturbation, Labels) {
    using PS = PerturbationSpec;
    EXPECT_EQ((PS{PS::Player::Leader, PS::Kind::Shift, 0.1}).label(), "leader_shift_+0.1");
    EXPECT_EQ((PS{PS::Player::Follower, PS::Kind::GainScale, 0.2}).label(), "follower_gain_+0.2");
    EXPECT_EQ((PS{PS::Player::Leader, PS::Kind::Ramp, -0.1, false}).label(), "leader_ramp_-0.1_fixed_follower");
}

TEST(Checkpoints, NearestNodesSortedClampedAndUnique) {
    const TimeGrid g(1.0, 10);
    EXPECT_EQ(checkpoint_nodes(g, {1.0, 0.21, -3.0, 7.0}), (std::vector<std::size_t>{0, 2, 10}));
    EXPECT_THROW(checkpoint_nodes(g, {NAN}), InvalidParameter);
    EXPECT_EQ(default_checkpoint_times(TimeGrid(2.0, 10)).back(), 2.0);
}

TEST(Reduction, PairwiseSumIsExactOnIntegers) {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    EXPECT_EQ(pairwise_sum(v), 499500.0);
    EXPECT_EQ(pairwise_sum(nullptr, 0), 0.0);
}

TEST(Threads, EnvironmentOverride) {
    ThreadEnv env("3");
    EXPECT_EQ(worker_count(), 3u);
}
