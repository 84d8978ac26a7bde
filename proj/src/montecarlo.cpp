#include "slq/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace slq {

namespace {

constexpr std::size_t kBlockPaths = 1024;

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Runs body(block) for block = 0..blocks-1 on the worker pool. The first
// exception by block index is rethrown so failures are reproducible.
template <typename Body>
void run_blocks(std::size_t blocks, Body&& body) {
    const unsigned workers = std::max(1u, std::min<unsigned>(worker_count(), static_cast<unsigned>(blocks)));
    std::vector<std::exception_ptr> errors(blocks);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t b = next++; b < blocks; b = next++) {
            try {
                body(b);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Left-node coefficients of every SDE in the closed loop.
struct NodeCoef {
    double t, A, B1, B2, alpha, c, cbar, f1, a, b1sqRinv, Rinv;
    double L, R, l, r, Lbar, Rbar, lbar, rbar;
    double Pi;
    Mat2 Pi1, Pi2, Pi3;
    Vec2 Phi;
    Mat2 check_drift;  // Xcheck drift matrix
    Vec2 check_off;
    Mat2 hat_drift_hat, hat_drift_check;
    Vec2 hat_off;
    Vec2 hat_diff;  // Sigma1 + Pcal F
    Row2 G2, G1hat, G1check;
    double b2, b1;
};

std::vector<NodeCoef> node_coefficients(const OfflineSolution& off) {
    const TimeGrid& grid = off.grid;
    const ModelSpec& s = off.model;
    std::vector<NodeCoef> out(grid.nodes());
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        const double t = grid.t(k);
        const BlockValues b = off.blocks.node(k);
        NodeCoef& n = out[k];
        n.t = t;
        n.A = s.A(t);
        n.B1 = s.B1(t);
        n.B2 = s.B2(t);
        n.alpha = s.alpha(t);
        n.c = s.c(t);
        n.cbar = s.cbar(t);
        n.f1 = s.f1(t);
        n.Rinv = b.Rinv;
        n.b1sqRinv = n.B1 * n.B1 * b.Rinv;
        n.Pi = off.Pi[k];
        n.a = n.A - n.b1sqRinv * n.Pi;
        n.L = s.L(t);
        n.R = s.R(t);
        n.l = s.l(t);
        n.r = s.r(t);
        n.Lbar = s.Lbar(t);
        n.Rbar = s.Rbar(t);
        n.lbar = s.lbar(t);
        n.rbar = s.rbar(t);
        n.Pi1 = off.pi.Pi1[k];
        n.Pi2 = off.pi.Pi2[k];
        n.Pi3 = off.pi.Pi3[k];
        n.Phi = off.Phi[k];
        const Mat2 S = n.Pi1 + n.Pi2, Q = S + n.Pi3;
        const Mat2 E = b.E(), G = b.G(), BmE = b.B1 - E;
        const Vec2 rbar_term = b.D1 * b.Rbarinv * b.rbar;
        n.check_drift = b.Abar() - G.transpose() + BmE * Q;
        n.check_off = BmE * off.Phicheck[k] - rbar_term + b.C1;
        n.hat_drift_hat = b.Abar() + b.B1 * S;
        n.hat_drift_check = b.B1 * n.Pi3 - E * Q - G.transpose();
        n.hat_off = b.B1 * off.Phi[k] - E * off.Phicheck[k] - rbar_term + b.C1;
        n.hat_diff = b.Sigma1 + off.Pcal[k] * b.F;
        n.G2 = off.gains.G2[k];
        n.b2 = off.gains.b2[k];
        n.G1hat = off.gains.G1hat[k];
        n.G1check = off.gains.G1check[k];
        n.b1 = off.gains.b1[k];
    }
    return out;
}

struct BlockAccum {
    std::vector<std::array<double, kSeriesCount>> sum, sum_sq;
    double max_dec = 0.0, max_x = 0.0;
};

template <typename Combine>
void pairwise_combine(std::vector<BlockAccum>& acc, Combine&& combine) {
    for (std::size_t stride = 1; stride < acc.size(); stride *= 2)
        for (std::size_t i = 0; i + stride < acc.size(); i += 2 * stride) combine(acc[i], acc[i + stride]);
}

}  // namespace

unsigned worker_count() {
    if (const char* env = std::getenv("STACKELBERG_LQ_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

void path_increments(const NoiseSpec& noise, std::size_t path, const TimeGrid& grid, std::vector<double>& dW,
                     std::vector<double>& dWbar) {
    const std::size_t N = grid.steps();
    dW.resize(N);
    dWbar.resize(N);
    const std::size_t stream = noise.antithetic ? path / 2 : path;
    const double sign = (noise.antithetic && (path % 2 == 1)) ? -1.0 : 1.0;
    const std::uint64_t s = splitmix64(noise.seed ^ splitmix64(static_cast<std::uint64_t>(stream) + 1));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(noise.seed), static_cast<std::uint32_t>(noise.seed >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sqh = std::sqrt(grid.step());
    for (std::size_t k = 0; k < N; ++k) {
        dW[k] = sign * sqh * normal(rng);
        dWbar[k] = sign * sqh * normal(rng);
    }
}

const char* series_name(int s) {
    static const char* names[kSeriesCount] = {"x",      "xhat1",  "xcheck1", "v1", "v2", "K",
                                              "xhat2",  "xcheck2", "x0",     "x1", "Wtilde"};
    return names[s];
}

void best_response_coefficients(const OfflineSolution& off, Policy& policy) {
    const TimeGrid& grid = off.grid;
    const ModelSpec& s = off.model;
    const double T = grid.horizon();
    auto rhs = [&](double t, const Eigen::Vector3d& y) {
        const BlockValues b = off.blocks.at(t);
        const Mat2 Q = off.pi.Pi1.at(t) + off.pi.Pi2.at(t) + off.pi.Pi3.at(t);
        const Vec2 phc = off.Phicheck.at(t);
        const Mat2 E = b.E(), BmE = b.B1 - E;
        const Mat2 drift = b.Abar() - b.G().transpose() + BmE * Q;
        const Vec2 offset = BmE * phc - b.D1 * b.Rbarinv * b.rbar + b.C1;
        const Row2 G2 = -b.Rbarinv * (b.D1.transpose() * Q + b.D2.transpose());
        const double b2 = -b.Rbarinv * (b.D1.dot(phc) + b.rbar);
        const Row2 g = policy.leader_scale * G2;
        const double bb = b2 + policy.leader_shift + policy.leader_ramp * t / T;
        const double B1 = s.B1(t);
        const double a = s.A(t) - B1 * B1 * b.Pi * b.Rinv;
        const double h = b.C2(1);
        const double B2Pi = s.B2(t) * b.Pi;
        const Row2 rho(y(0), y(1));
        const Row2 drho = -(rho * drift + a * rho + B2Pi * g);
        const double dsigma = -(rho.dot(offset) + a * y(2) + B2Pi * bb + h);
        return Eigen::Vector3d(drho(0), drho(1), dsigma);
    };
    auto guard = [](double t, const Eigen::Vector3d& y) {
        if (!y.allFinite() || max_abs(y) > kBlowUpThreshold) throw OffsetBlowUp("best response", t);
    };
    const auto sol = rk4_backward<Eigen::Vector3d>(grid, Eigen::Vector3d(0.0, 0.0, s.m), rhs, guard);
    policy.best_response = true;
    policy.rho.resize(grid.nodes());
    policy.sigma.resize(grid.nodes());
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        policy.rho[k] = Row2(sol[k](0), sol[k](1));
        policy.sigma[k] = sol[k](2);
    }
}

PathEnsemble simulate_equilibrium(const OfflineSolution& off, const NoiseSpec& noise, const SimulationOptions& opts) {
    return simulate_policy(off, noise, Policy{}, opts);
}

PathEnsemble simulate_policy(const OfflineSolution& off, const NoiseSpec& noise, const Policy& policy,
                             const SimulationOptions& opts) {
    if (noise.paths < 1) throw InvalidParameter("path count must be at least 1");
    if (noise.antithetic && noise.paths % 2 != 0) throw InvalidParameter("antithetic runs need an even path count");
    const TimeGrid& grid = off.grid;
    const std::size_t N = grid.steps();
    const std::size_t M = noise.paths;
    const double h = grid.step();
    const double T = grid.horizon();
    for (std::size_t c : opts.checkpoints)
        if (c > N) throw InvalidParameter("checkpoint node beyond the grid");
    if (policy.best_response && (policy.rho.size() != grid.nodes() || policy.sigma.size() != grid.nodes()))
        throw PreconditionFailure("best-response coefficients missing");

    const std::vector<NodeCoef> nc = node_coefficients(off);
    const ModelSpec& s = off.model;

    PathEnsemble ens;
    ens.grid = grid;
    ens.paths = M;
    ens.antithetic = noise.antithetic;
    ens.checkpoints = opts.checkpoints;
    ens.J1.assign(M, 0.0);
    ens.J2.assign(M, 0.0);
    ens.Wtilde_T.assign(M, 0.0);
    const std::size_t C = opts.checkpoints.size();
    ens.err_hat.assign(C, std::vector<Vec2>(M, Vec2::Zero()));
    ens.err_check.assign(C, std::vector<Vec2>(M, Vec2::Zero()));
    ens.xhat_at.assign(C, std::vector<double>(M, 0.0));
    const std::size_t stored = std::min(opts.store_paths, M);
    ens.stored.resize(stored);

    const std::size_t blocks = (M + kBlockPaths - 1) / kBlockPaths;
    std::vector<BlockAccum> acc(blocks);

    run_blocks(blocks, [&](std::size_t blk) {
        BlockAccum& A = acc[blk];
        A.sum.assign(N + 1, {});
        A.sum_sq.assign(N + 1, {});
        std::vector<double> dW, dWbar;
        const std::size_t p_end = std::min(M, (blk + 1) * kBlockPaths);
        for (std::size_t p = blk * kBlockPaths; p < p_end; ++p) {
            path_increments(noise, p, grid, dW, dWbar);
            StoredPath* sp = p < stored ? &ens.stored[p] : nullptr;
            if (sp) {
                for (auto* v : {&sp->x, &sp->x0, &sp->x1, &sp->K, &sp->xhat, &sp->Khat, &sp->xcheck, &sp->Kcheck,
                                &sp->v1, &sp->v2, &sp->Wtilde})
                    v->resize(N + 1);
                sp->dW = dW;
                sp->dWbar = dWbar;
                sp->dWtilde.resize(N);
            }

            Vec2 X = nc[0].Pi1.col(0) * 0.0 + Vec2(s.x0, 0.0);
            Vec2 Xh = X, Xc = X;
            double x0 = s.x0, x1 = 0.0, Wt = 0.0;
            double J1 = 0.0, J2 = 0.0;
            std::size_t next_cp = 0;

            for (std::size_t k = 0;; ++k) {
                const NodeCoef& n = nc[k];
                const double frac = n.t / T;
                const double v2 = policy.leader_scale * n.G2.dot(Xc) + n.b2 + policy.leader_shift +
                                  policy.leader_ramp * frac;
                double v1;
                if (policy.best_response) {
                    const double theta = policy.rho[k].dot(Xc) + policy.sigma[k];
                    v1 = -n.Rinv * (n.B1 * n.Pi * Xh(0) + n.B1 * theta + n.r);
                } else {
                    v1 = policy.follower_scale * (n.G1hat.dot(Xh) + n.G1check.dot(Xc)) + n.b1 +
                         policy.follower_shift + policy.follower_ramp * frac;
                }
                const double x = X(0);

                const double w = (k == 0 || k == N) ? 0.5 * h : h;
                J1 += w * 0.5 * (n.L * x * x + n.R * v1 * v1 + 2.0 * n.l * x + 2.0 * n.r * v1);
                J2 += w * 0.5 * (n.Lbar * x * x + n.Rbar * v2 * v2 + 2.0 * n.lbar * x + 2.0 * n.rbar * v2);

                const double vals[kSeriesCount] = {x, Xh(0), Xc(0), v1, v2, X(1), Xh(1), Xc(1), x0, x1, Wt};
                for (int q = 0; q < kSeriesCount; ++q) {
                    A.sum[k][q] += vals[q];
                    A.sum_sq[k][q] += vals[q] * vals[q];
                }
                A.max_dec = std::max(A.max_dec, std::abs(x - (x0 + x1)));
                A.max_x = std::max(A.max_x, std::abs(x));
                while (next_cp < C && opts.checkpoints[next_cp] == k) {
                    ens.err_hat[next_cp][p] = X - Xh;
                    ens.err_check[next_cp][p] = X - Xc;
                    ens.xhat_at[next_cp][p] = Xh(0);
                    ++next_cp;
                }
                if (sp) {
                    sp->x[k] = x;
                    sp->x0[k] = x0;
                    sp->x1[k] = x1;
                    sp->K[k] = X(1);
                    sp->xhat[k] = Xh(0);
                    sp->Khat[k] = Xh(1);
                    sp->xcheck[k] = Xc(0);
                    sp->Kcheck[k] = Xc(1);
                    sp->v1[k] = v1;
                    sp->v2[k] = v2;
                    sp->Wtilde[k] = Wt;
                }
                if (k == N) {
                    J1 += 0.5 * (s.M * x * x + 2.0 * s.m * x);
                    J2 += 0.5 * (s.Mbar * x * x + 2.0 * s.mbar * x);
                    break;
                }

                const double dw = dW[k], dwb = dWbar[k];
                const double lambda = (n.Pi1 * X + n.Pi2 * Xh + n.Pi3 * Xc + n.Phi)(0);
                const double control_drift = n.B1 * v1 + n.B2 * v2 + n.alpha;
                const double dWt = dw + n.f1 * (x - Xh(0)) * h;

                Vec2 hat_drift = n.hat_drift_hat * Xh + n.hat_drift_check * Xc + n.hat_off;
                hat_drift(0) = n.A * Xh(0) + control_drift;
                const Vec2 check_drift = n.check_drift * Xc + n.check_off;

                const double x_next = x + (n.A * x + control_drift) * h + n.c * dw + n.cbar * dwb;
                const double K_next = X(1) + (-n.b1sqRinv * lambda + n.a * X(1)) * h;
                X = Vec2(x_next, K_next);
                Xh = Xh + hat_drift * h + n.hat_diff * dWt;
                Xc = Xc + check_drift * h + Vec2(n.c, 0.0) * dw;
                x0 = x0 + n.A * x0 * h + n.c * dw + n.cbar * dwb;
                x1 = x1 + (n.A * x1 + control_drift) * h;
                Wt += dWt;
                if (sp) sp->dWtilde[k] = dWt;

                if (!std::isfinite(x_next) || !std::isfinite(K_next) || !Xh.allFinite() || !Xc.allFinite() ||
                    std::abs(x_next) > 1e100)
                    throw SimulationDiverged(p, k + 1);
            }
            ens.J1[p] = J1;
            ens.J2[p] = J2;
            ens.Wtilde_T[p] = Wt;
        }
    });

    pairwise_combine(acc, [&](BlockAccum& a, const BlockAccum& b) {
        for (std::size_t k = 0; k <= N; ++k)
            for (int q = 0; q < kSeriesCount; ++q) {
                a.sum[k][q] += b.sum[k][q];
                a.sum_sq[k][q] += b.sum_sq[k][q];
            }
        a.max_dec = std::max(a.max_dec, b.max_dec);
        a.max_x = std::max(a.max_x, b.max_x);
    });
    ens.mean.assign(N + 1, {});
    ens.mean_sq.assign(N + 1, {});
    for (std::size_t k = 0; k <= N; ++k)
        for (int q = 0; q < kSeriesCount; ++q) {
            ens.mean[k][q] = acc[0].sum[k][q] / static_cast<double>(M);
            ens.mean_sq[k][q] = acc[0].sum_sq[k][q] / static_cast<double>(M);
        }
    ens.max_decomposition_error = acc[0].max_dec;
    ens.max_abs_x = acc[0].max_x;
    return ens;
}

CostStat sample_stat(const std::vector<double>& v, bool antithetic) {
    CostStat st;
    st.paths = v.size();
    if (v.empty()) return st;
    std::vector<double> u;
    const std::vector<double>* src = &v;
    if (antithetic && v.size() % 2 == 0) {
        u.resize(v.size() / 2);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.5 * (v[2 * i] + v[2 * i + 1]);
        src = &u;
    }
    const std::size_t n = src->size();
    st.mean = pairwise_sum(*src) / static_cast<double>(n);
    if (n > 1) {
        std::vector<double> dev(n);
        for (std::size_t i = 0; i < n; ++i) dev[i] = ((*src)[i] - st.mean) * ((*src)[i] - st.mean);
        const double var = pairwise_sum(dev) / static_cast<double>(n - 1);
        st.std_error = std::sqrt(var / static_cast<double>(n));
    }
    return st;
}

CostEstimate estimate_costs(const PathEnsemble& ens) {
    return {sample_stat(ens.J1, ens.antithetic), sample_stat(ens.J2, ens.antithetic)};
}

std::string PerturbationSpec::label() const {
    std::string who = player == Player::Leader ? "leader" : "follower";
    std::string what = kind == Kind::Shift ? "shift" : kind == Kind::Ramp ? "ramp" : "gain";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.3g", eps);
    std::string out = who + "_" + what + "_" + buf;
    if (player == Player::Leader && !follower_best_response) out += "_fixed_follower";
    return out;
}

PerturbationResult perturb_and_compare(const OfflineSolution& off, const NoiseSpec& noise,
                                       const PerturbationSpec& spec) {
    Policy base, pert;
    const bool leader = spec.player == PerturbationSpec::Player::Leader;
    double* scale = leader ? &pert.leader_scale : &pert.follower_scale;
    double* shift = leader ? &pert.leader_shift : &pert.follower_shift;
    double* ramp = leader ? &pert.leader_ramp : &pert.follower_ramp;
    switch (spec.kind) {
        case PerturbationSpec::Kind::Shift: *shift = spec.eps; break;
        case PerturbationSpec::Kind::Ramp: *ramp = spec.eps; break;
        case PerturbationSpec::Kind::GainScale: *scale = 1.0 + spec.eps; break;
    }
    if (leader && spec.follower_best_response) {
        best_response_coefficients(off, base);
        best_response_coefficients(off, pert);
    }
    const PathEnsemble eb = simulate_policy(off, noise, base);
    const PathEnsemble ep = simulate_policy(off, noise, pert);
    const std::vector<double>& jb = leader ? eb.J2 : eb.J1;
    const std::vector<double>& jp = leader ? ep.J2 : ep.J1;
    std::vector<double> diff(jb.size());
    for (std::size_t i = 0; i < jb.size(); ++i) diff[i] = jp[i] - jb[i];

    PerturbationResult res;
    res.spec = spec;
    res.paths = jb.size();
    res.J_baseline = sample_stat(jb, noise.antithetic).mean;
    res.J_perturbed = sample_stat(jp, noise.antithetic).mean;
    const CostStat d = sample_stat(diff, noise.antithetic);
    res.dJ = d.mean;
    res.dJ_se = d.std_error;
    res.ci_low = d.mean - 1.96 * d.std_error;
    res.ci_high = d.mean + 1.96 * d.std_error;
    return res;
}

namespace {

double mean_of(const std::vector<double>& v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

}  // namespace

FilterReport filter_consistency_stats(const PathEnsemble& ens, const ScalarTrajectory& P, const MatTrajectory& Pcal) {
    if (P.grid() != ens.grid || Pcal.grid() != ens.grid)
        throw PreconditionFailure("filter statistics need trajectories on the ensemble grid");
    FilterReport rep;
    const std::size_t M = ens.paths;
    rep.paths = M;
    std::vector<double> a(M), b(M), c(M), d(M), e(M), f(M);
    for (std::size_t ci = 0; ci < ens.checkpoints.size(); ++ci) {
        const std::size_t k = ens.checkpoints[ci];
        CheckpointStats cs;
        cs.t = ens.grid.t(k);
        for (std::size_t p = 0; p < M; ++p) {
            a[p] = ens.err_hat[ci][p](0);
            b[p] = ens.err_hat[ci][p](1);
            c[p] = ens.err_check[ci][p](0);
            d[p] = ens.err_check[ci][p](1);
            e[p] = a[p] * ens.xhat_at[ci][p];
        }
        const double m0 = mean_of(a), m1 = mean_of(b);
        cs.mean_err_x = m0;
        cs.mean_err_check = Vec2(mean_of(c), mean_of(d));
        cs.orthogonality = mean_of(e);
        const double denom = M > 1 ? static_cast<double>(M - 1) : 1.0;
        for (std::size_t p = 0; p < M; ++p) f[p] = (a[p] - m0) * (a[p] - m0);
        const double c00 = pairwise_sum(f) / denom;
        for (std::size_t p = 0; p < M; ++p) f[p] = (a[p] - m0) * (b[p] - m1);
        const double c01 = pairwise_sum(f) / denom;
        for (std::size_t p = 0; p < M; ++p) f[p] = (b[p] - m1) * (b[p] - m1);
        const double c11 = pairwise_sum(f) / denom;
        cs.cov_err_hat = mat2(c00, c01, c01, c11);
        for (std::size_t p = 0; p < M; ++p) f[p] = a[p] * a[p];
        cs.mean_sq_err_x = mean_of(f);
        cs.Pcal = Pcal[k];
        cs.P = P[k];
        rep.checkpoints.push_back(cs);
    }
    rep.mean_Wtilde_T = mean_of(ens.Wtilde_T);
    for (std::size_t p = 0; p < M; ++p) f[p] = (ens.Wtilde_T[p] - rep.mean_Wtilde_T) * (ens.Wtilde_T[p] - rep.mean_Wtilde_T);
    rep.var_Wtilde_T = pairwise_sum(f) / (M > 1 ? static_cast<double>(M - 1) : 1.0);
    return rep;
}

FollowerStageEnsemble simulate_follower_stage(const ModelSpec& s, const CoefficientFn& v2, const TimeGrid& grid,
                                              const NoiseSpec& noise, const std::vector<std::size_t>& checkpoints) {
    if (noise.paths < 1) throw InvalidParameter("path count must be at least 1");
    const FollowerStage fs = follower_stage_solution(s, v2, grid);
    const ScalarTrajectory P = solve_error_variance_P(s, grid);
    const std::size_t N = grid.steps(), M = noise.paths, C = checkpoints.size();
    const double h = grid.step();

    FollowerStageEnsemble ens;
    ens.grid = grid;
    ens.paths = M;
    ens.checkpoints = checkpoints;
    ens.err.assign(C, std::vector<double>(M, 0.0));
    ens.xhat.assign(C, std::vector<double>(M, 0.0));
    ens.J1.assign(M, 0.0);

    const std::size_t blocks = (M + kBlockPaths - 1) / kBlockPaths;
    run_blocks(blocks, [&](std::size_t blk) {
        std::vector<double> dW, dWbar;
        const std::size_t p_end = std::min(M, (blk + 1) * kBlockPaths);
        for (std::size_t p = blk * kBlockPaths; p < p_end; ++p) {
            path_increments(noise, p, grid, dW, dWbar);
            double x = s.x0, xh = s.x0, J1 = 0.0;
            std::size_t next_cp = 0;
            for (std::size_t k = 0;; ++k) {
                const double t = grid.t(k);
                const double u2 = v2(t);
                const double u1 = fs.gain[k] * xh + fs.offset[k];
                const double w = (k == 0 || k == N) ? 0.5 * h : h;
                J1 += w * 0.5 * (s.L(t) * x * x + s.R(t) * u1 * u1 + 2.0 * s.l(t) * x + 2.0 * s.r(t) * u1);
                while (next_cp < C && checkpoints[next_cp] == k) {
                    ens.err[next_cp][p] = x - xh;
                    ens.xhat[next_cp][p] = xh;
                    ++next_cp;
                }
                if (k == N) {
                    J1 += 0.5 * (s.M * x * x + 2.0 * s.m * x);
                    break;
                }
                const double A = s.A(t), f1 = s.f1(t), c = s.c(t);
                const double drive = s.B1(t) * u1 + s.B2(t) * u2 + s.alpha(t);
                const double dWt = dW[k] + f1 * (x - xh) * h;
                const double x_next = x + (A * x + drive) * h + c * dW[k] + s.cbar(t) * dWbar[k];
                xh = xh + (A * xh + drive) * h + (c + f1 * P[k]) * dWt;
                x = x_next;
                if (!std::isfinite(x) || !std::isfinite(xh)) throw SimulationDiverged(p, k + 1);
            }
            ens.J1[p] = J1;
        }
    });
    return ens;
}

FilterReport follower_stage_stats(const FollowerStageEnsemble& ens, const ScalarTrajectory& P) {
    if (P.grid() != ens.grid) throw PreconditionFailure("P lives on a different grid");
    FilterReport rep;
    rep.paths = ens.paths;
    std::vector<double> tmp(ens.paths);
    for (std::size_t ci = 0; ci < ens.checkpoints.size(); ++ci) {
        CheckpointStats cs;
        const std::size_t k = ens.checkpoints[ci];
        cs.t = ens.grid.t(k);
        cs.P = P[k];
        cs.mean_err_x = mean_of(ens.err[ci]);
        for (std::size_t p = 0; p < ens.paths; ++p) tmp[p] = ens.err[ci][p] * ens.err[ci][p];
        cs.mean_sq_err_x = mean_of(tmp);
        for (std::size_t p = 0; p < ens.paths; ++p) tmp[p] = ens.err[ci][p] * ens.xhat[ci][p];
        cs.orthogonality = mean_of(tmp);
        cs.cov_err_hat = Mat2::Zero();
        cs.Pcal = Mat2::Zero();
        cs.mean_err_check = Vec2::Zero();
        rep.checkpoints.push_back(cs);
    }
    return rep;
}

std::vector<std::size_t> checkpoint_nodes(const TimeGrid& grid, const std::vector<double>& times) {
    std::vector<std::size_t> out;
    for (double t : times) {
        if (!std::isfinite(t)) throw InvalidParameter("checkpoint time is not finite");
        double pos = std::round(t / grid.step());
        pos = std::clamp(pos, 0.0, static_cast<double>(grid.steps()));
        out.push_back(static_cast<std::size_t>(pos));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<double> default_checkpoint_times(const TimeGrid& grid) {
    const double T = grid.horizon();
    return {0.2 * T, 0.4 * T, 0.6 * T, 0.8 * T, T};
}

}  // namespace slq
