#include "swtree/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace swtree {

namespace {

constexpr double kZ99 = 2.5758293035489004;

}  // namespace

LBReport lb_experiment(const LBExperimentSpec& spec) {
    auto T = build_tree(spec.d, spec.h);
    PottsParams params(spec.q, spec.beta);
    auto boundary = SpinBoundary::mono(T, spec.q, spec.mono_spin);
    auto ls = level_sets(T);

    LBReport rep;
    rep.k = static_cast<int>(std::ceil(0.5 * std::log(double(T.n_internal)) / std::log(double(spec.d))));
    if (rep.k < 1 || rep.k > T.h) throw Error("lb_experiment: block level out of range");
    const auto& roots = ls.L[rep.k];
    rep.n_blocks = static_cast<int64_t>(roots.size());
    rep.r_hat = std::min<int64_t>(rep.n_blocks,
                                  static_cast<int64_t>(std::ceil(std::pow(double(T.n_internal), spec.xi))));
    rep.r_used = spec.R > 0 ? std::min<int64_t>(spec.R, rep.r_hat) : rep.r_hat;

    // blocks, test edges, exact conditional structure
    std::vector<std::vector<int>> block_of;
    std::vector<char> in_b(T.n_total, 0);
    rep.blocks.resize(roots.size());
    for (size_t i = 0; i < roots.size(); ++i) {
        auto sub = T.subtree(roots[i]);
        for (int v : sub) in_b[v] = 1;
        int leaf = roots[i];
        while (!T.is_leaf(leaf)) leaf = T.child(leaf, 0);
        rep.blocks[i].root = roots[i];
        rep.blocks[i].edge_u = T.parent[leaf];
        rep.blocks[i].edge_v = leaf;
        block_of.push_back(std::move(sub));
    }

    // exterior fixed to the mono spin
    SpinConfig base = SpinConfig::from_code(T, spec.q, 0, boundary);
    for (int64_t v = 0; v < T.n_internal; ++v)
        base.s[v] = static_cast<uint8_t>(spec.mono_spin);

    // exact mu_{B_i}^1(A_i) per block
    for (size_t i = 0; i < roots.size(); ++i) {
        auto table = potts_measure(T, block_of[i], base, params);
        std::vector<int> blk = block_of[i];
        std::sort(blk.begin(), blk.end());
        int pu = -1, pv = -1;
        for (size_t j = 0; j < blk.size(); ++j) {
            if (blk[j] == rep.blocks[i].edge_u) pu = static_cast<int>(j);
            if (blk[j] == rep.blocks[i].edge_v) pv = static_cast<int>(j);
        }
        std::vector<uint64_t> qpow(blk.size() + 1, 1);
        for (size_t j = 1; j <= blk.size(); ++j) qpow[j] = qpow[j - 1] * spec.q;
        double mass = 0;
        for (uint64_t code = 0; code < (uint64_t)table.size(); ++code)
            if ((code / qpow[pu]) % spec.q == (code / qpow[pv]) % spec.q)
                mass += table.prob[code];
        rep.blocks[i].mu_ai = mass;
    }
    for (int64_t i = 0; i < rep.r_used; ++i) rep.w_mean += rep.blocks[i].mu_ai;

    std::vector<char> restriction(T.n_total, 0);
    for (const auto& blk : block_of)
        for (int v : blk) restriction[v] = 1;

    // per-replica initial states: rejection-sample each block on A_i
    auto sample_x0 = [&](uint64_t seed) {
        SpinConfig x = base;
        CounterRng rng{seed};
        for (size_t i = 0; i < block_of.size(); ++i) {
            for (uint64_t attempt = 0;; ++attempt) {
                conditional_sample(T, x, block_of[i], params, rng, attempt, /*tag_salt=*/i + 1);
                if (x.s[rep.blocks[i].edge_u] == x.s[rep.blocks[i].edge_v]) break;
                if (attempt > 1u << 20) throw Error("lb_experiment: rejection sampling stalled");
            }
        }
        return x;
    };
    // independent stationary block samples for the f-statistic reference
    auto sample_mu_b = [&](uint64_t seed) {
        SpinConfig x = base;
        CounterRng rng{seed};
        for (size_t i = 0; i < block_of.size(); ++i)
            conditional_sample(T, x, block_of[i], params, rng, 0, /*tag_salt=*/i + 1);
        return x;
    };

    int64_t n_rep = spec.replicas;
    std::vector<int64_t> y1_hits(roots.size(), 0);
    // reference CDF of f under mu_B^1
    std::vector<int64_t> ref_hist(rep.r_used + 1, 0);
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < n_rep; ++r) {
        SpinConfig sigma = sample_mu_b(CounterRng{spec.seed}.raw(1, kTagReplica, r));
        int f = 0;
        for (int64_t i = 0; i < rep.r_used; ++i)
            f += sigma.s[rep.blocks[i].edge_u] == sigma.s[rep.blocks[i].edge_v];
#pragma omp atomic
        ++ref_hist[f];
    }

    rep.per_alpha.resize(spec.alphas.size());
    bool y1_recorded = false;
    for (size_t ai = 0; ai < spec.alphas.size(); ++ai) {
        double alpha = spec.alphas[ai];
        int64_t tau = static_cast<int64_t>(std::ceil(alpha * std::log(double(T.n_internal))));
        tau = std::max<int64_t>(tau, 1);
        auto& out = rep.per_alpha[ai];
        out.alpha = alpha;
        out.tau_steps = tau;

        std::vector<int64_t> f_hist(rep.r_used + 1, 0);
        int64_t contained = 0;
        bool record_y1 = !y1_recorded;
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < n_rep; ++r) {
            uint64_t rep_seed = CounterRng{spec.seed}.raw(0, kTagReplica, r);
            CoupledState cs{sample_x0(rep_seed), SpinConfig{}, 0, CounterRng{rep_seed ^ 0x5eedULL}};
            cs.y = cs.x;
            for (int64_t t = 0; t < tau; ++t) {
                coupled_sw_step(T, cs, params, &restriction);
                if (t == 0 && record_y1) {
                    for (size_t i = 0; i < roots.size(); ++i)
                        if (cs.y.s[rep.blocks[i].edge_u] == cs.y.s[rep.blocks[i].edge_v]) {
#pragma omp atomic
                            ++y1_hits[i];
                        }
                }
            }
            bool same = true;
            for (int64_t i = 0; i < rep.r_hat && same; ++i)
                same = cs.x.s[rep.blocks[i].edge_u] == cs.y.s[rep.blocks[i].edge_u] &&
                       cs.x.s[rep.blocks[i].edge_v] == cs.y.s[rep.blocks[i].edge_v];
            int f = 0;
            for (int64_t i = 0; i < rep.r_used; ++i)
                f += cs.y.s[rep.blocks[i].edge_u] == cs.y.s[rep.blocks[i].edge_v];
#pragma omp atomic
            ++f_hist[f];
            if (same) {
#pragma omp atomic
                ++contained;
            }
        }
        y1_recorded = true;
        out.containment = contained / double(n_rep);
        double se = std::sqrt(std::max(out.containment * (1 - out.containment), 1.0 / n_rep) / n_rep);
        out.ci_lo = out.containment - kZ99 * se;
        out.ci_hi = out.containment + kZ99 * se;

        // plug-in TV lower bound over the a-grid
        double best = 0;
        double tail_f = 0, tail_ref = 0;
        for (int64_t a = rep.r_used; a >= 0; --a) {
            tail_f += f_hist[a] / double(n_rep);
            tail_ref += ref_hist[a] / double(n_rep);
            best = std::max(best, tail_f - tail_ref);
        }
        out.tv_lower_estimate = best;
    }

    double p = params.p();
    for (size_t i = 0; i < roots.size(); ++i) {
        auto& b = rep.blocks[i];
        b.pr_y1_ai = y1_hits[i] / double(n_rep);
        b.surplus = b.pr_y1_ai - b.mu_ai;
        b.surplus_bound = (1.0 - b.mu_ai) * (spec.q - 1) * p / spec.q;
        b.sigma = std::sqrt(std::max(b.pr_y1_ai * (1 - b.pr_y1_ai), 1.0 / n_rep) / n_rep);
        b.surplus_ok = b.surplus >= b.surplus_bound - 3.0 * b.sigma;
    }
    return rep;
}

CmdReport cmd_check(const TransitionMatrix& M, const std::vector<int64_t>& B, int64_t horizon) {
    auto spec = spectral_gap(M);
    if (!spec.psd) throw Error("cmd_check: transition matrix must be positive semidefinite");
    CmdReport rep;
    rep.horizon = horizon;
    int64_t n = M.size();
    std::vector<char> in_b(n, 0);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int64_t x : B) {
        in_b[x] = 1;
        rep.pi_b += M.pi[x];
        v[x] = M.pi[x];
    }
    if (rep.pi_b <= 0) throw Error("cmd_check: pi(B) = 0");
    v /= rep.pi_b;  // chain started from pi restricted to B

    rep.min_slack_mono = std::numeric_limits<double>::infinity();
    rep.min_slack_bound = std::numeric_limits<double>::infinity();
    for (int64_t t = 1; t <= horizon; ++t) {
        v = M.P.transpose() * v;
        double pr = 0;
        for (int64_t x = 0; x < n; ++x)
            if (in_b[x]) pr += v[x];
        rep.pr_t.push_back(pr);
        if (t == 1) rep.pr1 = pr;
        rep.min_slack_mono = std::min(rep.min_slack_mono, pr - rep.pi_b);
        double bound = rep.pi_b + std::pow(1.0 - rep.pi_b, -double(t) + 1.0) *
                                      std::pow(rep.pr1 - rep.pi_b, double(t));
        rep.min_slack_bound = std::min(rep.min_slack_bound, pr - bound);
    }
    return rep;
}

DecayProfile decay_profile(int d, const std::vector<int>& heights, int q, double beta,
                           const std::string& boundary_kind, int spin_i, int spin_j) {
    DecayProfile prof;
    prof.heights = heights;
    PottsParams params(q, beta);
    for (int h : heights) {
        auto T = build_tree(d, h);
        bool use_boundary = boundary_kind != "free";
        SpinBoundary b = SpinBoundary::mono(T, q, 0);
        if (boundary_kind.rfind("mono:", 0) == 0)
            b = SpinBoundary::mono(T, q, std::stoi(boundary_kind.substr(5)));
        else if (boundary_kind.rfind("random:", 0) == 0)
            b = SpinBoundary::random(T, q, std::stoull(boundary_kind.substr(7)));
        SpinConfig spins = SpinConfig::from_code(T, q, 0, b);
        int v = static_cast<int>(T.first_leaf);  // left-most leaf
        int u = T.parent[v];
        auto mi = edge_marginal_dp(T, spins, u, v, params, spin_i, use_boundary);
        auto mj = edge_marginal_dp(T, spins, u, v, params, spin_j, use_boundary);
        prof.tv.push_back(tv_distance(mi, mj));
    }
    // least-squares exponential rate on the nonzero entries
    std::vector<double> xs, ys;
    for (size_t i = 0; i < prof.tv.size(); ++i)
        if (prof.tv[i] > 1e-300) {
            xs.push_back(heights[i]);
            ys.push_back(std::log(prof.tv[i]));
        }
    if (xs.size() >= 2) {
        double mx = 0, my = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= xs.size();
        my /= ys.size();
        double sxx = 0, sxy = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        double slope = sxy / sxx;
        prof.rate = -slope;
        for (size_t i = 0; i < xs.size(); ++i) {
            double fit = my + slope * (xs[i] - mx);
            prof.max_fit_residual = std::max(prof.max_fit_residual, std::abs(ys[i] - fit));
        }
    }
    for (size_t i = 0; i + 1 < prof.tv.size(); ++i)
        prof.ratios.push_back(prof.tv[i] > 0 ? prof.tv[i + 1] / prof.tv[i] : 0.0);
    return prof;
}

namespace {

void fit_scaling(ScalingReport& rep) {
    // least squares of t_mix against log n and against n
    auto residual = [&](bool use_log) {
        double mx = 0, my = 0;
        for (const auto& r : rep.rows) {
            mx += use_log ? std::log(double(r.n)) : double(r.n);
            my += r.t_mix;
        }
        mx /= rep.rows.size();
        my /= rep.rows.size();
        double sxx = 0, sxy = 0;
        for (const auto& r : rep.rows) {
            double x = use_log ? std::log(double(r.n)) : double(r.n);
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (r.t_mix - my);
        }
        double slope = sxx > 0 ? sxy / sxx : 0;
        double res = 0;
        for (const auto& r : rep.rows) {
            double x = use_log ? std::log(double(r.n)) : double(r.n);
            double fit = my + slope * (x - mx);
            res += (r.t_mix - fit) * (r.t_mix - fit);
        }
        return res;
    };
    if (rep.rows.size() >= 2) {
        rep.fit_log_residual = residual(true);
        rep.fit_lin_residual = residual(false);
        rep.better_fit = rep.fit_log_residual <= rep.fit_lin_residual ? "log" : "linear";
    }
}

}  // namespace

ScalingReport mixing_scaling_sw(int d, int q, double beta, int mono_spin,
                                const std::vector<int>& heights) {
    ScalingReport rep;
    rep.chain = "sw";
    PottsParams params(q, beta);
    for (int h : heights) {
        auto T = build_tree(d, h);
        ScalingRow row;
        row.h = h;
        row.n = T.n_total;
        uint64_t states = 1;
        for (int64_t v = 0; v < T.n_internal; ++v) states *= q;
        row.states = static_cast<int64_t>(states);
        if (states <= (uint64_t(1) << 12)) {
            SpinSpace space(T, params, SpinBoundary::mono(T, q, mono_spin));
            auto M = sw_matrix(space);
            auto mix = tv_mixing_time(M, 1 << 16);
            if (mix.t_mix < 0) throw Error("mixing_scaling_sw: no finite mixing time");
            row.t_mix = mix.t_mix;
        } else {
            auto res = sw_worst_start_mixing(T, params, mono_spin);
            if (res.t_mix < 0) throw Error("mixing_scaling_sw: horizon exceeded");
            row.t_mix = res.t_mix;
        }
        row.per_level = double(row.t_mix) / (h + 1);
        row.per_nlogn = double(row.t_mix) / (double(row.n) * std::log(double(row.n)));
        rep.rows.push_back(row);
    }
    fit_scaling(rep);
    return rep;
}

ScalingReport mixing_scaling_rc(int d, double p, int q, const std::vector<int>& heights) {
    ScalingReport rep;
    rep.chain = "rc-edge";
    for (int h : heights) {
        auto T = build_tree(d, h);
        ScalingRow row;
        row.h = h;
        row.n = T.n_total;
        row.states = int64_t(1) << T.edges.size();
        if (row.states <= (int64_t(1) << 12)) {
            auto inst = rc_instance_from_tree(T, RCBoundary::wired());
            auto M = rc_edge_matrix(inst, p, q);
            auto mix = tv_mixing_time(M, 1 << 20);
            if (mix.t_mix < 0) throw Error("mixing_scaling_rc: no finite mixing time");
            row.t_mix = mix.t_mix;
        } else {
            auto res = rc_edge_worst_start_mixing(T, p, q);
            if (res.t_mix < 0) throw Error("mixing_scaling_rc: horizon exceeded");
            row.t_mix = res.t_mix;
        }
        row.per_level = double(row.t_mix) / (h + 1);
        row.per_nlogn = double(row.t_mix) / (double(row.n) * std::log(double(row.n)));
        rep.rows.push_back(row);
    }
    fit_scaling(rep);
    return rep;
}

std::vector<StatMixRow> statistical_mixing_sw(int d, int h, int q, double beta, int mono_spin,
                                              int64_t replicas, int64_t t_max, uint64_t seed) {
    auto T = build_tree(d, h);
    PottsParams params(q, beta);
    SpinSpace space(T, params, SpinBoundary::mono(T, q, mono_spin));
    // worst-ish start: everything at the last spin
    uint64_t start = space.n_states - 1;
    std::vector<std::vector<int64_t>> hist(t_max + 1, std::vector<int64_t>(space.n_states, 0));
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < replicas; ++r) {
        ChainState st{space.config(start), 0, 0, CounterRng{CounterRng{seed}.raw(2, kTagReplica, r)}};
        for (int64_t t = 1; t <= t_max; ++t) {
            sw_step(T, st, params);
            int64_t code = static_cast<int64_t>(st.spins.code(T, q));
#pragma omp atomic
            ++hist[t][code];
        }
    }
    std::vector<StatMixRow> rows;
    for (int64_t t = 1; t <= t_max; ++t) {
        double tv = 0;
        for (uint64_t x = 0; x < space.n_states; ++x)
            tv += std::abs(hist[t][x] / double(replicas) - space.pi[x]);
        rows.push_back({t, 0.5 * tv});
    }
    return rows;
}

}  // namespace swtree
