// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Tolerances are pinned in code next to each check.

#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <sstream>

#include "swtree/bigmix.hpp"
#include "swtree/dynamics.hpp"
#include "swtree/exact.hpp"
#include "swtree/experiments.hpp"
#include "swtree/kernels.hpp"
#include "swtree/mixcond.hpp"
#include "swtree/slowmix.hpp"

using namespace swtree;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << what;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!ok) ++failures;
}

double ln2() { return std::log(2.0); }

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// ---------------------------------------------------------------- 1
void criterion_1() {
    Timer timer;
    double worst_row = 0, worst_stat = 0, worst_db = 0;
    int64_t checked = 0;
    auto absorb = [&](const TransitionMatrix& M) {
        worst_row = std::max(worst_row, M.max_row_sum_error());
        worst_stat = std::max(worst_stat, M.stationarity_error());
        worst_db = std::max(worst_db, M.detailed_balance_error());
        ++checked;
    };
    for (int h : {1, 2}) {
        auto T = build_tree(2, h);
        for (int q : {2, 3}) {
            if (h == 2 && q == 3) continue;  // 3^7 exceeds the 2-minute budget
            PottsParams pp(q, ln2());
            for (auto b : {SpinBoundary::mono(T, q, 0), SpinBoundary::random(T, q, 21)}) {
                SpinSpace space(T, pp, b);
                auto blocks = BlockSpec::tiled(T, 1);
                absorb(sw_matrix(space));
                absorb(glauber_matrix(space));
                absorb(block_hb_matrix(space, blocks));
                absorb(block_sw_matrix(space, blocks));
            }
        }
    }
    for (int h : {0, 1}) {
        auto T = build_tree(2, h);
        for (double p : {0.5, 0.25}) {
            auto wired = rc_instance_from_tree(T, RCBoundary::wired());
            absorb(rc_edge_matrix(wired, p, 2));
            absorb(rc_sw_matrix(wired, p, 2));
            absorb(single_bond_matrix(wired, p, 2));
            auto free_b = rc_instance_from_tree(T, RCBoundary::free());
            absorb(rc_edge_matrix(free_b, p, 2));
            absorb(single_bond_matrix(free_b, p, 2));
        }
    }
    {
        // modified heat-bath on the smallest embeddable instance
        auto spec = embed_boundary(read_edge_list("2 1\n0 1\n"), 2, 1);
        absorb(mhb_matrix(spec, 0.5, 2));
    }
    std::ostringstream d;
    d << checked << " kernels, row err " << worst_row << ", stationarity " << worst_stat
      << ", balance " << worst_db << ", " << timer.seconds() << "s";
    report(1, worst_row <= 1e-12 && worst_stat <= 1e-12 && worst_db <= 1e-10,
           "stationarity and reversibility of every chain", d.str());
}

// ---------------------------------------------------------------- 2
void criterion_2() {
    Timer timer;
    double worst_sw = 0, worst_swd = 0, worst_q = 0;
    for (int q : {2, 3})
        for (int h : {0, 1}) {
            auto T = build_tree(2, h);
            SpinSpace space(T, PottsParams(q, ln2()), SpinBoundary::mono(T, q, 0));
            auto blocks = BlockSpec::tiled(T, 1);
            auto F = ullrich_factors(space, &blocks);
            auto SW = sw_matrix(space);
            auto SWD = block_sw_matrix(space, blocks);
            Eigen::MatrixXd recon = F.T * F.R * F.Tstar;
            worst_sw = std::max(worst_sw, (SW.P - recon).cwiseAbs().maxCoeff());
            Eigen::MatrixXd reconD = Eigen::MatrixXd::Zero(space.n_states, space.n_states);
            for (const auto& Qk : F.Q) reconD += F.T * Qk * F.Tstar;
            reconD /= double(F.Q.size());
            worst_swd = std::max(worst_swd, (SWD.P - reconD).cwiseAbs().maxCoeff());
            for (size_t k = 0; k < F.Q.size(); ++k)
                worst_q = std::max({worst_q, F.idempotent_error(k), F.sandwich_error(k)});
        }
    std::ostringstream d;
    d << "|SW-TRT*| " << worst_sw << ", |SW_D-avg| " << worst_swd << ", Q checks " << worst_q
      << ", " << timer.seconds() << "s";
    report(2, worst_sw <= 1e-12 && worst_swd <= 1e-12 && worst_q <= 1e-12,
           "Ullrich decomposition", d.str());
}

// ---------------------------------------------------------------- 3
void criterion_3() {
    Timer timer;
    bool ok = true;
    std::ostringstream d;
    for (auto [q, beta] : std::vector<std::pair<int, double>>{{2, ln2()}, {3, 1.0}}) {
        auto T = build_tree(2, 1);
        SpinSpace space(T, PottsParams(q, beta), SpinBoundary::mono(T, q, 0));
        auto blocks = BlockSpec::tiled(T, 1);
        auto SW = sw_matrix(space);
        auto SWD = block_sw_matrix(space, blocks);
        auto BD = block_hb_matrix(space, blocks);
        double gamma = comparison_gamma_min(space, blocks);
        CounterRng rng{7};
        double s1 = 1e300, s2 = 1e300;
        for (int64_t t = 0; t < 1000; ++t) {
            Eigen::VectorXd f(space.n_states);
            for (uint64_t i = 0; i < space.n_states; ++i)
                f[i] = 2 * rng.uniform(t, kTagFunction, i) - 1;
            s1 = std::min(s1, dirichlet_form(SW, f) - dirichlet_form(SWD, f));
            s2 = std::min(s2, dirichlet_form(SWD, f) - gamma * dirichlet_form(BD, f));
        }
        bool gap_ok = spectral_gap(SW).gap >= gamma * spectral_gap(BD).gap - 1e-12;
        ok = ok && s1 >= -1e-12 && s2 >= -1e-12 && gap_ok;
        d << "q=" << q << " gamma=" << gamma << " slacks " << s1 << "," << s2 << "; ";
    }
    d << timer.seconds() << "s";
    report(3, ok, "comparison chain E_SW >= E_SW_D >= gamma E_B_D", d.str());
}

// ---------------------------------------------------------------- 4
void criterion_4() {
    Timer timer;
    bool ok = true;
    double worst_lo = 1, worst_hi = -1;
    CounterRng rng{4242};
    for (int rep = 0; rep < 50; ++rep) {
        int nphi = 2 + rng.uniform_int(rep, 1, 0, 29);
        int npsi = 2 + rng.uniform_int(rep, 2, 0, 29);
        Eigen::MatrixXd rho(nphi, npsi);
        for (int i = 0; i < nphi; ++i)
            for (int j = 0; j < npsi; ++j)
                rho(i, j) = 0.05 + rng.uniform(rep, 3, i * 64 + j);
        auto ud = updown_gap(rho);
        double sup = 0.0;
        auto ratio = [&](const Eigen::VectorXd& f) {
            Eigen::VectorXd pf = ud.down * f;
            double mn = ud.nu.dot(f), mp = ud.pi.dot(pf), vn = 0, vp = 0;
            for (int i = 0; i < nphi; ++i) vn += ud.nu[i] * (f[i] - mn) * (f[i] - mn);
            for (int j = 0; j < npsi; ++j) vp += ud.pi[j] * (pf[j] - mp) * (pf[j] - mp);
            return vn > 1e-14 ? vp / vn : 0.0;
        };
        // 10^4 random functions plus the spectral witness direction
        for (int t = 0; t < 10000; ++t) {
            Eigen::VectorXd f(nphi);
            for (int i = 0; i < nphi; ++i) f[i] = 2 * rng.uniform(rep * 100000 + t, 4, i) - 1;
            sup = std::max(sup, ratio(f));
        }
        sup = std::max(sup, ratio(ud.witness));
        worst_lo = std::min(worst_lo, sup - (ud.eps_gvm - 1e-6));
        worst_hi = std::max(worst_hi, sup - (ud.eps_gvm + 1e-9));
        ok = ok && sup >= ud.eps_gvm - 1e-6 && sup <= ud.eps_gvm + 1e-9;
    }
    std::ostringstream d;
    d << "50 joint distributions, " << timer.seconds() << "s";
    report(4, ok, "GVM spectral characterization sup in [l2-1e-6, l2+1e-9]", d.str());
}

// ---------------------------------------------------------------- 5 and 6
void criteria_5_6() {
    Timer timer;
    bool ok5 = true, ok6 = true;
    int applicable6 = 0;
    std::ostringstream d5, d6;
    auto T = build_tree(2, 2);
    for (double beta : {ln2(), 1.0, 2.0}) {
        PottsParams pp(2, beta);
        for (const auto& b : {SpinBoundary::mono(T, 2, 0), SpinBoundary::random(T, 2, 11)}) {
            SpinSpace space(T, pp, b);
            for (int ell : {1, 2}) {
                auto vm = vm_epsilon(space, ell, "exhaustive");
                auto pvm = pvm_epsilon(space, ell, "exhaustive");
                double diff = std::abs(vm.eps - pvm.eps);
                ok5 = ok5 && diff <= 1e-9;
                double eps = pvm.eps;
                if (eps < 1.0 / (2.0 * (ell + 1))) {
                    ++applicable6;
                    double delta = 1.0 - 2.0 * (ell + 1) * eps;
                    double gap = spectral_gap(tiled_block_matrix(space, ell)).gap;
                    ok6 = ok6 && gap >= delta / (2.0 * (ell + 1)) - 1e-9;
                }
            }
        }
    }
    d5 << "12 instances, " << timer.seconds() << "s";
    report(5, ok5, "VM = PVM exhaustively within 1e-9", d5.str());
    d6 << applicable6 << " applicable instances";
    report(6, ok6 && applicable6 > 0, "tiled-block gap >= delta/(2(ell+1))", d6.str());
}

// ---------------------------------------------------------------- 7
void criterion_7() {
    Timer timer;
    bool ok = true;
    std::ostringstream d;
    auto T = build_tree(2, 2);
    struct Inst {
        double beta;
        int ell;
    };
    for (auto inst : {Inst{ln2(), 1}, Inst{0.15, 2}}) {
        SpinSpace space(T, PottsParams(2, inst.beta), SpinBoundary::mono(T, 2, 0));
        auto rep = factorization_audit(space, inst.ell, 10000, 77, 24);
        bool inst_ok = rep.cal_e_max_abs_diff <= 1e-12 && rep.dirich_min_slack >= -1e-12 &&
                       rep.ent1_min_slack >= -1e-12 && rep.pvm_varbound_min_slack >= -1e-12 &&
                       rep.eo_min_slack >= -1e-12 && rep.tbf_min_slack >= -1e-12;
        if (rep.var_bound_applicable) inst_ok = inst_ok && rep.var_bound_min_slack >= -1e-12;
        if (rep.tb_gap_applicable) inst_ok = inst_ok && rep.tb_gap >= rep.tb_gap_bound - 1e-9;
        if (rep.em_entbound_applicable)
            inst_ok = inst_ok && rep.em_entbound_min_slack >= -1e-12;
        ok = ok && inst_ok;
        d << "beta=" << inst.beta << " ell=" << inst.ell << " C_eo=" << rep.c_eo
          << " C_tb=" << rep.c_tb << " em_active=" << rep.em_entbound_applicable << "; ";
    }
    d << timer.seconds() << "s";
    report(7, ok, "factorization audit with nonnegative slack on 1e4 functions", d.str());
}

// ---------------------------------------------------------------- 8
void criterion_8() {
    Timer timer;
    bool ok = true;
    double worst_tv = 0, worst_stat = 0;
    for (int h : {1, 2}) {
        auto T = build_tree(2, h);
        auto inst = rc_instance_from_tree(T, RCBoundary::free());
        for (auto [p, q] : std::vector<std::pair<double, int>>{{0.5, 2}, {0.3, 3}}) {
            auto table = rc_measure(inst, p, q);
            double r = p / (q * (1 - p) + p);
            int m = static_cast<int>(inst.g.edges.size());
            std::vector<double> prod(table.size());
            for (uint64_t mask = 0; mask < (uint64_t)table.size(); ++mask) {
                int k = __builtin_popcountll(mask);
                prod[mask] = std::pow(r, k) * std::pow(1 - r, m - k);
            }
            worst_tv = std::max(worst_tv, tv_distance(table.prob, prod));
        }
    }
    for (int h : {0, 1}) {
        auto T = build_tree(2, h);
        auto wired = rc_instance_from_tree(T, RCBoundary::wired());
        for (auto [p, q] : std::vector<std::pair<double, int>>{{0.5, 2}, {0.3, 3}}) {
            worst_stat = std::max(worst_stat, rc_sw_matrix(wired, p, q).stationarity_error());
            worst_stat =
                std::max(worst_stat, single_bond_matrix(wired, p, q).stationarity_error());
        }
    }
    ok = worst_tv <= 1e-12 && worst_stat <= 1e-12;
    std::ostringstream d;
    d << "free-vs-percolation TV " << worst_tv << ", stationarity " << worst_stat << ", "
      << timer.seconds() << "s";
    report(8, ok, "random-cluster identities", d.str());
}

// ---------------------------------------------------------------- 9
void criterion_9() {
    Timer timer;
    bool ok = true;
    double worst_gap = 0, worst_proj = 0;
    for (const char* g : {"2 1\n0 1\n", "3 2\n0 1\n1 2\n"})
        for (auto [ph, q] : std::vector<std::pair<double, int>>{{0.5, 2}, {1.0 / 3, 3}}) {
            auto rep = gap_transfer_check(read_edge_list(g), ph, q);
            worst_gap = std::max(worst_gap, rep.gap_diff);
            worst_proj = std::max(worst_proj, rep.projection_max_err);
        }
    ok = worst_gap <= 1e-10 && worst_proj <= 1e-12;
    std::ostringstream d;
    d << "gap diff " << worst_gap << ", projection " << worst_proj << ", " << timer.seconds()
      << "s";
    report(9, ok, "gap transfer across the subdivision embedding", d.str());
}

// ---------------------------------------------------------------- 10
void criterion_10() {
    Timer timer;
    auto T = build_tree(2, 1);
    SpinSpace space(T, PottsParams(2, ln2()), SpinBoundary::mono(T, 2, 0));
    auto M = sw_matrix(space);
    CounterRng rng{1010};
    double worst = 1e300;
    for (int e = 0; e < 20; ++e) {
        std::vector<int64_t> B;
        for (int64_t x = 0; x < M.size(); ++x)
            if (rng.uniform(e, kTagFunction, x) < 0.5) B.push_back(x);
        if (B.empty()) B.push_back(e % M.size());
        auto rep = cmd_check(M, B, 50);
        worst = std::min({worst, rep.min_slack_mono, rep.min_slack_bound});
    }
    std::ostringstream d;
    d << "20 events, worst slack " << worst << ", " << timer.seconds() << "s";
    report(10, worst >= -1e-12, "completely monotone decrease bound for t <= 50", d.str());
}

// ---------------------------------------------------------------- 11
void criterion_11() {
    Timer timer;
    bool ok_sw = true;
    std::ostringstream d;
    for (double beta : {ln2(), 2.0}) {
        auto rep = mixing_scaling_sw(2, 2, beta, 0, {1, 2, 3});
        double lo = 1e300, hi = 0;
        for (size_t i = 0; i < rep.rows.size(); ++i) {
            if (i) ok_sw = ok_sw && rep.rows[i].t_mix >= rep.rows[i - 1].t_mix;
            lo = std::min(lo, rep.rows[i].per_level);
            hi = std::max(hi, rep.rows[i].per_level);
        }
        ok_sw = ok_sw && hi <= 4.0 * lo;
        d << "sw beta=" << beta << " tmix";
        for (auto& r : rep.rows) d << " " << r.t_mix;
        d << " ratio " << hi / lo << "; ";
    }
    bool ok_rc = true;
    {
        auto rep = mixing_scaling_rc(2, 0.5, 2, {0, 1, 2});
        double lo = 1e300, hi = 0;
        for (auto& r : rep.rows) {
            lo = std::min(lo, r.per_nlogn);
            hi = std::max(hi, r.per_nlogn);
        }
        ok_rc = hi <= 8.0 * lo;
        d << "rc tmix";
        for (auto& r : rep.rows) d << " " << r.t_mix;
        d << " ratio " << hi / lo << "; ";
    }
    d << timer.seconds() << "s";
    report(11, ok_sw && ok_rc, "mixing-time scaling trends", d.str());
}

// ---------------------------------------------------------------- 12
void criterion_12() {
    Timer timer;
    LBExperimentSpec spec;  // d=2, h=6, q=2, beta=ln2, alphas swept
    spec.replicas = 10000;
    spec.seed = 12;
    auto rep = lb_experiment(spec);
    bool containment_ok = false;
    double best_ci = 0;
    for (const auto& a : rep.per_alpha) {
        containment_ok = containment_ok || a.ci_lo >= 0.9;
        best_ci = std::max(best_ci, a.ci_lo);
    }
    bool surplus_ok = true;
    for (int64_t i = 0; i < rep.r_used; ++i) surplus_ok = surplus_ok && rep.blocks[i].surplus_ok;
    std::ostringstream d;
    d << "best 99% CI lower bound " << best_ci << ", blocks " << rep.r_used << ", "
      << timer.seconds() << "s";
    report(12, containment_ok && surplus_ok,
           "disagreement containment and one-step surplus at h=6", d.str());
}

// ---------------------------------------------------------------- 13
void criterion_13() {
    Timer timer;
    auto r1 = tail_monte_carlo(8, 2, 0.5, 6, 100000, 13);
    auto r2 = tail_monte_carlo(16, 3, 0.5, 4, 100000, 14);
    std::ostringstream d;
    d << "freq " << r1.freq << " vs " << r1.exact_tail << "; freq " << r2.freq << " vs "
      << r2.exact_tail << ", " << timer.seconds() << "s";
    report(13, r1.inside_ci && r2.inside_ci, "binomial tail of the dominating percolation",
           d.str());
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    auto want = [&](int id) {
        return which.empty() || std::find(which.begin(), which.end(), id) != which.end();
    };
    if (want(1)) criterion_1();
    if (want(2)) criterion_2();
    if (want(3)) criterion_3();
    if (want(4)) criterion_4();
    if (want(5) || want(6)) criteria_5_6();
    if (want(7)) criterion_7();
    if (want(8)) criterion_8();
    if (want(9)) criterion_9();
    if (want(10)) criterion_10();
    if (want(11)) criterion_11();
    if (want(12)) criterion_12();
    if (want(13)) criterion_13();
    return failures == 0 ? 0 : 1;
}
