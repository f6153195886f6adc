#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swtree/bigmix.hpp"
#include "swtree/dynamics.hpp"
#include "swtree/exact.hpp"

namespace swtree {

struct LBExperimentSpec {
    int d = 2, h = 6, q = 2;
    double beta = 0.6931471805599453;  // ln 2
    int mono_spin = 0;                 // boundary and frozen exterior spin
    double xi = 0.25;                  // R_hat = ceil(n^xi), capped at N
    int R = -1;                        // test-edge count for the statistic; -1: R_hat
    std::vector<double> alphas{0.125, 0.25, 0.5, 1.0};
    int64_t replicas = 10000;
    uint64_t seed = 1;
};

struct LBBlockStats {
    int root = 0;
    int edge_u = 0, edge_v = 0;
    double mu_ai = 0;          // exact mu_{B_i}^1(A_i)
    double pr_y1_ai = 0;       // empirical Pr(Y_1(B_i) in A_i)
    double surplus = 0;        // pr_y1_ai - mu_ai
    double surplus_bound = 0;  // (1 - mu_ai) (q-1) p / q
    double sigma = 0;          // binomial std error of pr_y1_ai
    bool surplus_ok = false;   // surplus >= bound - 3 sigma
};

struct LBAlphaResult {
    double alpha = 0;
    int64_t tau_steps = 0;
    double containment = 0;  // Pr[X_tau(C-hat) = Y_tau(C-hat)]
    double ci_lo = 0, ci_hi = 0;
    double tv_lower_estimate = 0;  // best over the a-grid
};

struct LBReport {
    int k = 0;                 // block level
    int64_t n_blocks = 0;      // N = |L_k|
    int64_t r_hat = 0, r_used = 0;
    double w_mean = 0;         // sum of mu_ai over the R test blocks
    std::vector<LBBlockStats> blocks;
    std::vector<LBAlphaResult> per_alpha;
};

LBReport lb_experiment(const LBExperimentSpec& spec);

struct CmdReport {
    int64_t horizon = 0;
    double pi_b = 0;
    double pr1 = 0;             // Pr(X_1 in B)
    double min_slack_mono = 0;  // Pr(X_t in B) - pi(B)
    double min_slack_bound = 0; // vs the displayed geometric lower bound
    std::vector<double> pr_t;
};

CmdReport cmd_check(const TransitionMatrix& M, const std::vector<int64_t>& B, int64_t horizon);

struct DecayProfile {
    std::vector<int> heights;
    std::vector<double> tv;        // per height
    double rate = 0;               // fitted c in tv ~ exp(-c h)
    double max_fit_residual = 0;   // on log scale
    std::vector<double> ratios;    // tv(h+1)/tv(h)
};

// boundary_kind: "free" (no leaf-to-slot edges), "mono:<k>", "random:<seed>"
DecayProfile decay_profile(int d, const std::vector<int>& heights, int q, double beta,
                           const std::string& boundary_kind, int spin_i, int spin_j);

struct ScalingRow {
    int h = 0;
    int64_t n = 0;        // vertices including the boundary
    int64_t states = 0;
    int64_t t_mix = 0;
    double per_level = 0;   // t_mix / (h+1)
    double per_nlogn = 0;   // t_mix / (n ln n)
};

struct ScalingReport {
    std::string chain;
    std::vector<ScalingRow> rows;
    double fit_log_residual = 0;  // residual of t_mix ~ a + b log n
    double fit_lin_residual = 0;  // residual of t_mix ~ a + b n
    std::string better_fit;
};

ScalingReport mixing_scaling_sw(int d, int q, double beta, int mono_spin,
                                const std::vector<int>& heights);
ScalingReport mixing_scaling_rc(int d, double p, int q, const std::vector<int>& heights);

// statistical mixing estimate: first t at which the empirical distribution
// of replicated runs from a fixed start is within 1/4 + tolerance of pi
struct StatMixRow {
    int64_t t = 0;
    double tv_empirical = 0;
};
std::vector<StatMixRow> statistical_mixing_sw(int d, int h, int q, double beta, int mono_spin,
                                              int64_t replicas, int64_t t_max, uint64_t seed);

}  // namespace swtree
