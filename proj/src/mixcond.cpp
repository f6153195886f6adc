#include "swtree/mixcond.hpp"

#include "swtree/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace swtree {

namespace {

std::vector<double> sym_spectrum(const Eigen::MatrixXd& K, const Eigen::VectorXd& w,
                                 Eigen::MatrixXd* vectors = nullptr) {
    int64_t n = K.rows();
    Eigen::VectorXd sq = w.cwiseSqrt();
    Eigen::MatrixXd S(n, n);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) S(i, j) = K(i, j) * sq[i] / sq[j];
    S = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (vectors) *vectors = es.eigenvectors();
    return std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + n);
}

}  // namespace

UpDownPair updown_gap(const Eigen::MatrixXd& rho_in) {
    UpDownPair ud;
    if ((rho_in.array() < 0).any()) throw Error("updown_gap: joint weights must be nonnegative");
    double tot = rho_in.sum();
    if (!(tot > 0)) throw Error("updown_gap: zero joint distribution");
    ud.rho = rho_in / tot;
    int64_t nphi = ud.rho.rows(), npsi = ud.rho.cols();
    ud.nu = ud.rho.rowwise().sum();
    ud.pi = ud.rho.colwise().sum();
    if (nphi <= 1 || npsi <= 1) {
        ud.degenerate = true;
        ud.eps_gvm = 0.0;
        return ud;
    }
    if (ud.nu.minCoeff() <= 0 || ud.pi.minCoeff() <= 0)
        throw Error("updown_gap: marginals must be strictly positive on the support");
    ud.up.resize(nphi, npsi);
    ud.down.resize(npsi, nphi);
    for (int64_t x = 0; x < nphi; ++x)
        for (int64_t y = 0; y < npsi; ++y) {
            ud.up(x, y) = ud.rho(x, y) / ud.nu[x];
            ud.down(y, x) = ud.rho(x, y) / ud.pi[y];
        }
    Eigen::MatrixXd vec_phi;
    ud.spectrum_phi = sym_spectrum(ud.up * ud.down, ud.nu, &vec_phi);
    ud.spectrum_psi = sym_spectrum(ud.down * ud.up, ud.pi);
    ud.eps_gvm = std::max(0.0, ud.spectrum_phi[nphi - 2]);
    ud.witness = vec_phi.col(nphi - 2).cwiseQuotient(ud.nu.cwiseSqrt());
    return ud;
}

namespace {

// joint marginal of mu_region^eta on (far, near): far/near are disjoint
// sorted vertex subsets of region; rows indexed base-q over far, columns
// base-q over near
Eigen::MatrixXd joint_marginal(const SpinSpace& space, const std::vector<int>& region,
                               const SpinConfig& eta, const std::vector<int>& far,
                               const std::vector<int>& near) {
    const auto& T = *space.T;
    int q = space.params.q;
    auto table = potts_measure(T, region, eta, space.params);
    std::vector<int> reg = region;
    std::sort(reg.begin(), reg.end());
    std::vector<int> pos(T.n_internal, -1);
    for (size_t i = 0; i < reg.size(); ++i) pos[reg[i]] = static_cast<int>(i);
    std::vector<uint64_t> qpow(reg.size() + 1, 1);
    for (size_t i = 1; i <= reg.size(); ++i) qpow[i] = qpow[i - 1] * q;

    uint64_t nf = 1, nn = 1;
    for (size_t i = 0; i < far.size(); ++i) nf *= q;
    for (size_t i = 0; i < near.size(); ++i) nn *= q;
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(nf, nn);
    for (uint64_t code = 0; code < (uint64_t)table.size(); ++code) {
        uint64_t xf = 0, xn = 0, mult = 1;
        for (int v : far) {
            xf += (code / qpow[pos[v]]) % q * mult;
            mult *= q;
        }
        mult = 1;
        for (int v : near) {
            xn += (code / qpow[pos[v]]) % q * mult;
            mult *= q;
        }
        rho(xf, xn) += table.prob[code];
    }
    return rho;
}

std::vector<int> set_difference_sorted(std::vector<int> a, const std::vector<int>& b) {
    std::vector<char> drop(1 + *std::max_element(a.begin(), a.end()), 0);
    for (int x : b)
        if (x < (int)drop.size()) drop[x] = 1;
    std::vector<int> out;
    for (int x : a)
        if (!drop[x]) out.push_back(x);
    return out;
}

// conditioning frame: the spins of eta on the vertices adjacent to the
// region from inside the tree (the slots are fixed by the boundary)
uint64_t frame_code(const SpinSpace& space, const std::vector<int>& region,
                    const SpinConfig& eta) {
    const auto& T = *space.T;
    int q = space.params.q;
    std::vector<char> in_region(T.n_internal, 0);
    for (int v : region) in_region[v] = 1;
    uint64_t code = 0, mult = 1;
    for (int v : region) {
        if (v == 0) continue;
        int par = T.parent[v];
        if (!in_region[par]) {
            code += eta.s[par] * mult;
            mult *= q;
        }
    }
    return code;
}

}  // namespace

double vm_vertex_eps(const SpinSpace& space, int ell, int v, const SpinConfig& eta) {
    const auto& T = *space.T;
    auto tv = T.subtree(v);
    auto ball = T.ball(v, ell);
    auto far = set_difference_sorted(tv, ball);
    if (far.empty()) return -1.0;  // degenerate site
    auto rho = joint_marginal(space, tv, eta, far, {v});
    auto ud = updown_gap(rho);
    return ud.degenerate ? 0.0 : ud.eps_gvm;
}

namespace {

// shared max-over-(site, eta) scan with caching keyed by the conditioning frame
template <typename SiteList, typename EvalFn>
MixingCertificate scan_sites(const SpinSpace& space, int ell, const std::string& mode,
                             int64_t budget, uint64_t seed, const std::string& condition,
                             const SiteList& sites, EvalFn&& eval) {
    MixingCertificate cert;
    cert.condition = condition;
    cert.ell = ell;
    cert.mode = mode;
    cert.budget = budget;
    cert.seed = seed;
    cert.eps = 0.0;
    CounterRng rng{seed};
    std::vector<uint64_t> etas;
    if (mode == "exhaustive") {
        for (uint64_t code = 0; code < space.n_states; ++code) etas.push_back(code);
    } else if (mode == "sampled") {
        for (int64_t i = 0; i < budget; ++i)
            etas.push_back(rng.raw(0, kTagReplica, i) % space.n_states);
    } else {
        throw Error("mixing certificate: mode must be exhaustive or sampled");
    }
    for (const auto& [site_id, region] : sites) {
        std::map<uint64_t, double> cache;
        for (uint64_t code : etas) {
            SpinConfig eta = space.config(code);
            uint64_t frame = frame_code(space, region, eta);
            auto it = cache.find(frame);
            double eps;
            if (it == cache.end()) {
                eps = eval(site_id, eta);
                cache[frame] = eps;
            } else {
                eps = it->second;
            }
            if (eps > cert.eps) {
                cert.eps = eps;
                cert.arg_site = site_id;
                cert.arg_eta = code;
            }
        }
    }
    return cert;
}

}  // namespace

MixingCertificate vm_epsilon(const SpinSpace& space, int ell, const std::string& mode,
                             int64_t budget, uint64_t seed) {
    const auto& T = *space.T;
    std::vector<std::pair<int, std::vector<int>>> sites;
    for (int v = 0; v < T.n_internal; ++v) {
        auto tv = T.subtree(v);
        auto far = set_difference_sorted(tv, T.ball(v, ell));
        if (far.empty()) continue;  // vacuous VM site, contributes 0
        sites.push_back({v, tv});
    }
    auto cert = scan_sites(space, ell, mode, budget, seed, "VM", sites,
                           [&](int v, const SpinConfig& eta) {
                               double e = vm_vertex_eps(space, ell, v, eta);
                               return e < 0 ? 0.0 : e;
                           });
    return cert;
}

namespace {

double pvm_level_eps_eta(const SpinSpace& space, int ell, int level, const SpinConfig& eta) {
    const auto& T = *space.T;
    auto ls = level_sets(T);
    const auto& Fi = ls.F[level];
    int lo = level - ell;
    std::vector<int> far = lo >= 1 ? ls.F[lo] : std::vector<int>{};
    if (far.empty()) return -1.0;
    auto rho = joint_marginal(space, Fi, eta, far, ls.L[level]);
    auto ud = updown_gap(rho);
    return ud.degenerate ? 0.0 : ud.eps_gvm;
}

}  // namespace

double pvm_level_eps(const SpinSpace& space, int ell, int level) {
    const auto& T = *space.T;
    auto ls = level_sets(T);
    double eps = 0.0;
    std::map<uint64_t, double> cache;
    for (uint64_t code = 0; code < space.n_states; ++code) {
        SpinConfig eta = space.config(code);
        uint64_t frame = frame_code(space, ls.F[level], eta);
        auto it = cache.find(frame);
        double e;
        if (it == cache.end()) {
            e = pvm_level_eps_eta(space, ell, level, eta);
            cache[frame] = e;
        } else {
            e = it->second;
        }
        eps = std::max(eps, e);
    }
    return eps;
}

double vm_vertex_eps_max(const SpinSpace& space, int ell, int v) {
    const auto& T = *space.T;
    double eps = 0.0;
    std::map<uint64_t, double> cache;
    for (uint64_t code = 0; code < space.n_states; ++code) {
        SpinConfig eta = space.config(code);
        uint64_t frame = frame_code(space, T.subtree(v), eta);
        auto it = cache.find(frame);
        double e;
        if (it == cache.end()) {
            e = vm_vertex_eps(space, ell, v, eta);
            cache[frame] = e;
        } else {
            e = it->second;
        }
        eps = std::max(eps, e);
    }
    return eps;
}

MixingCertificate pvm_epsilon(const SpinSpace& space, int ell, const std::string& mode,
                              int64_t budget, uint64_t seed) {
    const auto& T = *space.T;
    auto ls = level_sets(T);
    std::vector<std::pair<int, std::vector<int>>> sites;
    for (int i = 1; i <= T.h + 1; ++i) {
        if (i - ell < 1) continue;  // empty far set, vacuous level
        sites.push_back({i, ls.F[i]});
    }
    return scan_sites(space, ell, mode, budget, seed, "PVM", sites,
                      [&](int level, const SpinConfig& eta) {
                          double e = pvm_level_eps_eta(space, ell, level, eta);
                          return e < 0 ? 0.0 : e;
                      });
}

// ---------- entropy mixing ----------

namespace {

double xlogx(double x) { return x > 0 ? x * std::log(x) : 0.0; }

double entropy_of(const Eigen::VectorXd& w, const Eigen::VectorXd& g) {
    double e = 0.0, m = 0.0;
    for (int64_t i = 0; i < w.size(); ++i) {
        m += w[i] * g[i];
        e += w[i] * xlogx(g[i]);
    }
    return e - xlogx(m);
}

// maximize Ent_pi(down g) / Ent_nu(g) over nonnegative g by multiplicative
// gradient ascent with random restarts; a lower bound on the true supremum
double em_optimize(const UpDownPair& ud, int64_t restarts, uint64_t seed, double tol = 1e-12) {
    if (ud.degenerate) return 0.0;
    int64_t n = ud.nu.size();
    CounterRng rng{seed};
    double best = 0.0;
    auto ratio = [&](const Eigen::VectorXd& g, double* num = nullptr, double* den = nullptr) {
        double D = entropy_of(ud.nu, g);
        if (D < 1e-100) return -1.0;
        Eigen::VectorXd h = ud.down * g;
        double N = entropy_of(ud.pi, h);
        if (num) *num = N;
        if (den) *den = D;
        return N / D;
    };
    for (int64_t r = 0; r < restarts; ++r) {
        Eigen::VectorXd u(n);
        for (int64_t i = 0; i < n; ++i) {
            double a = rng.uniform(r, kTagFunction, 2 * i), b = rng.uniform(r, kTagFunction, 2 * i + 1);
            u[i] = std::sqrt(-2.0 * std::log(std::max(a, 1e-300))) * std::cos(6.283185307179586 * b);
        }
        if (r == 0 && ud.witness.size() == n) {
            // seed one run near the variance-optimal direction
            u = ud.witness / std::max(1e-12, ud.witness.cwiseAbs().maxCoeff());
        }
        Eigen::VectorXd g = u.array().exp();
        double cur = ratio(g);
        if (cur < 0) continue;
        double step = 0.5;
        for (int it = 0; it < 4000 && step > 1e-14; ++it) {
            double N, D;
            double val = ratio(g, &N, &D);
            if (val < 0) break;
            double E = ud.nu.dot(g);
            Eigen::VectorXd h = ud.down * g;
            Eigen::VectorXd gradN(n), gradD(n);
            for (int64_t x = 0; x < n; ++x) {
                double s = 0.0;
                for (int64_t y = 0; y < ud.pi.size(); ++y)
                    s += ud.pi[y] * ud.down(y, x) * std::log(std::max(h[y] / E, 1e-300));
                gradN[x] = s;
                gradD[x] = ud.nu[x] * std::log(std::max(g[x] / E, 1e-300));
            }
            Eigen::VectorXd grad = (gradN * D - N * gradD) / (D * D);
            // multiplicative step in log space, scaled to unit infinity norm
            Eigen::VectorXd dir = grad.cwiseProduct(g);
            double scale = dir.cwiseAbs().maxCoeff();
            if (scale < 1e-300) break;
            Eigen::VectorXd gn = (g.array().log() + step * (dir / scale).array()).exp();
            double nv = ratio(gn);
            if (nv > val + tol * std::abs(val)) {
                g = gn;
            } else if (nv > val) {
                g = gn;
                step *= 0.7;
            } else {
                step *= 0.5;
            }
        }
        best = std::max(best, ratio(g));
    }
    return std::min(best, 1.0);
}

}  // namespace

MixingCertificate em_epsilon_estimate(const SpinSpace& space, int ell, int64_t budget,
                                      uint64_t seed) {
    const auto& T = *space.T;
    MixingCertificate cert;
    cert.condition = "EM";
    cert.ell = ell;
    cert.mode = "optimized";
    cert.budget = budget;
    cert.seed = seed;
    cert.lower_bound_only = true;
    for (int v = 0; v < T.n_internal; ++v) {
        auto tv = T.subtree(v);
        auto far = set_difference_sorted(tv, T.ball(v, ell));
        if (far.empty()) continue;
        std::map<uint64_t, double> cache;
        for (uint64_t code = 0; code < space.n_states; ++code) {
            SpinConfig eta = space.config(code);
            uint64_t frame = frame_code(space, tv, eta);
            if (cache.count(frame)) continue;
            auto rho = joint_marginal(space, tv, eta, far, {v});
            auto ud = updown_gap(rho);
            double e = em_optimize(ud, budget, seed ^ (uint64_t(v) << 32) ^ frame);
            cache[frame] = e;
            if (e > cert.eps) {
                cert.eps = e;
                cert.arg_site = v;
                cert.arg_eta = code;
            }
        }
    }
    return cert;
}

double p_min_exact(int d, int q, double beta) {
    double pmin = 1.0;
    for (int deg : {d, d + 1}) {
        // compositions of deg neighbors into q spin counts
        std::vector<int> counts(q, 0);
        std::function<void(int, int)> rec = [&](int pos, int left) {
            if (pos == q - 1) {
                counts[pos] = left;
                double z = 0.0;
                for (int s = 0; s < q; ++s) z += std::exp(-beta * (deg - counts[s]));
                for (int s = 0; s < q; ++s)
                    pmin = std::min(pmin, std::exp(-beta * (deg - counts[s])) / z);
                return;
            }
            for (int k = 0; k <= left; ++k) {
                counts[pos] = k;
                rec(pos + 1, left - k);
            }
        };
        rec(0, deg);
    }
    return pmin;
}

// ---------- factorization audit ----------

namespace {

// multiplicative random-perturbation ascent on a ratio functional
template <typename Eval>
std::pair<double, Eigen::VectorXd> hill_climb_ratio(Eval&& eval, Eigen::VectorXd g,
                                                    uint64_t seed, int iters) {
    CounterRng rng{seed};
    double best = eval(g);
    double step = 0.5;
    int64_t n = g.size();
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd gn = g;
        for (int64_t i = 0; i < n; ++i)
            gn[i] *= std::exp(step * (2.0 * rng.uniform(it, kTagFunction, i) - 1.0));
        double v = eval(gn);
        if (v > best) {
            best = v;
            g = gn;
        } else {
            step *= 0.99;
        }
    }
    return {best, g};
}

}  // namespace

FactorizationReport factorization_audit(const SpinSpace& space, int ell, int64_t budget,
                                        uint64_t seed, int64_t em_budget) {
    const auto& T = *space.T;
    auto ls = level_sets(T);
    auto bf = decompose(T, ell);
    int64_t n = space.n_states;

    FactorizationReport rep;
    rep.ell = ell;
    rep.budget = budget;
    rep.seed = seed;

    // fibrations
    std::vector<Fibration> fib_tiles, fib_B, fib_F;
    for (const auto& tile : bf.tiles) fib_tiles.push_back(spin_fibration(space, tile));
    fib_B.resize(T.h + 2);
    for (int i = 1; i <= T.h + 1; ++i) fib_B[i] = spin_fibration(space, bf.B[i]);
    fib_F.resize(T.h + 2);
    for (int i = 0; i <= T.h + 1; ++i) fib_F[i] = spin_fibration(space, ls.F[i]);
    Fibration fib_even = spin_fibration(space, ls.even);
    Fibration fib_odd = spin_fibration(space, ls.odd);
    auto fib_of_F = [&](int i) -> const Fibration& {
        static Fibration empty_fib;
        if (i < 0) i = 0;
        return fib_F[i];
    };

    auto tb = block_hb_matrix(space, BlockSpec::tiled(T, ell));
    double tb_gap = spectral_gap(tb).gap;
    rep.tb_gap = tb_gap;

    // per-level contraction factor at every conditioning state (frames cached)
    std::vector<Eigen::VectorXd> eps_state(T.h + 2);
    for (int i = 1; i <= T.h + 1; ++i) {
        eps_state[i].resize(n);
        std::map<uint64_t, double> cache;
        for (int64_t code = 0; code < n; ++code) {
            SpinConfig eta = space.config(code);
            uint64_t frame = frame_code(space, ls.F[i], eta);
            auto it = cache.find(frame);
            double e;
            if (it == cache.end()) {
                e = pvm_level_eps_eta(space, ell, i, eta);
                cache[frame] = e;
            } else {
                e = it->second;
            }
            eps_state[i][code] = e;  // -1 marks a vacuous level
        }
    }

    rep.pvm_eps = pvm_epsilon(space, ell, "exhaustive").eps;
    rep.var_bound_applicable = rep.pvm_eps < 1.0 / (2.0 * (ell + 1));
    double delta = 1.0 - 2.0 * (ell + 1) * rep.pvm_eps;
    rep.tb_gap_applicable = rep.var_bound_applicable;
    if (rep.tb_gap_applicable) rep.tb_gap_bound = delta / (2.0 * (ell + 1));

    // entropy-mixing estimate drives the level entropy factorization check
    auto em_cert = em_epsilon_estimate(space, ell, em_budget, seed ^ 0xabcdef);
    rep.em_eps_hat = em_cert.eps;
    rep.p_min = p_min_exact(T.d, space.params.q, space.params.beta);
    rep.eps_prime = std::sqrt(rep.em_eps_hat) / rep.p_min;
    rep.em_entbound_applicable = rep.em_eps_hat < rep.p_min * rep.p_min;

    rep.cal_e_max_abs_diff = 0.0;
    rep.dirich_min_slack = std::numeric_limits<double>::infinity();
    rep.var_bound_min_slack = std::numeric_limits<double>::infinity();
    rep.pvm_varbound_min_slack = std::numeric_limits<double>::infinity();
    rep.ent1_min_slack = std::numeric_limits<double>::infinity();
    rep.em_entbound_min_slack = std::numeric_limits<double>::infinity();
    rep.c_eo = 0.0;
    rep.c_tb = 0.0;
    Eigen::VectorXd best_eo, best_tb;

    CounterRng rng{seed};
    for (int64_t t = 0; t < budget; ++t) {
        Eigen::VectorXd f(n), g(n);
        for (int64_t i = 0; i < n; ++i) {
            f[i] = 2.0 * rng.uniform(t, kTagFunction, i) - 1.0;
            g[i] = std::exp(2.0 * rng.uniform(t, kTagFunction, n + i) - 1.0);
        }

        // tiled-block Dirichlet form identity
        double lhs = dirichlet_form(tb, f);
        double rhs = 0.0;
        for (const auto& fib : fib_tiles) rhs += measure_mean(space.pi, fib.cond_variance(f));
        rhs /= (ell + 1);
        rep.cal_e_max_abs_diff = std::max(rep.cal_e_max_abs_diff, std::abs(lhs - rhs));

        // tile variances dominate the projected per-level variances
        double sum_tiles = rhs * (ell + 1);
        double sum_levels = 0.0;
        for (int i = 1; i <= T.h + 1; ++i) {
            const auto& fA = fib_of_F(i - ell - 1);
            sum_levels += measure_mean(space.pi, fib_B[i].cond_variance(fA.cond_expectation(f)));
        }
        rep.dirich_min_slack = std::min(rep.dirich_min_slack, sum_tiles - sum_levels);

        // projected level variances control the total variance
        if (rep.var_bound_applicable) {
            double var = measure_variance(space.pi, f);
            rep.var_bound_min_slack =
                std::min(rep.var_bound_min_slack, (2.0 / delta) * sum_levels - var);
        }

        // two-sided conditional variance bound, both variants, per conditioning state
        for (int i = 1; i <= T.h + 1; ++i) {
            if (eps_state[i][0] < 0 && eps_state[i].maxCoeff() < 0) continue;
            Eigen::VectorXd EAf = fib_F[i - 1].cond_expectation(f);
            Eigen::VectorXd lhs_v = fib_F[i].cond_variance(EAf);
            Eigen::VectorXd varB = fib_B[i].cond_variance(f);
            Eigen::VectorXd varA = fib_F[i - 1].cond_variance(f);
            Eigen::VectorXd e_varB = fib_F[i].cond_expectation(varB);
            Eigen::VectorXd e_varA = fib_F[i].cond_expectation(varA);
            const auto& fAp = fib_of_F(i - ell - 1);
            Eigen::VectorXd fprime = fAp.cond_expectation(f);
            Eigen::VectorXd varBp = fib_B[i].cond_variance(fprime);
            Eigen::VectorXd varAp = fib_F[i - 1].cond_variance(fprime);
            Eigen::VectorXd e_varBp = fib_F[i].cond_expectation(varBp);
            Eigen::VectorXd e_varAp = fib_F[i].cond_expectation(varAp);
            for (int64_t x = 0; x < n; ++x) {
                double eps = eps_state[i][x];
                if (eps < 0 || eps >= 0.5) {
                    if (eps >= 0.5) ++rep.pvm_varbound_skipped;
                    continue;
                }
                double c1 = 2.0 * (1.0 - eps) / (1.0 - 2.0 * eps);
                double c2 = 2.0 * eps / (1.0 - 2.0 * eps);
                rep.pvm_varbound_min_slack = std::min(
                    rep.pvm_varbound_min_slack, c1 * e_varB[x] + c2 * e_varA[x] - lhs_v[x]);
                rep.pvm_varbound_min_slack = std::min(
                    rep.pvm_varbound_min_slack, c1 * e_varBp[x] + c2 * e_varAp[x] - lhs_v[x]);
            }
        }

        // entropy analog of the tile-vs-level comparison
        double ent_tiles = 0.0;
        for (const auto& fib : fib_tiles) ent_tiles += measure_mean(space.pi, fib.cond_entropy(g));
        double ent_levels = 0.0;
        for (int i = 1; i <= T.h + 1; ++i) {
            const auto& fA = fib_of_F(i - ell - 1);
            ent_levels += measure_mean(space.pi, fib_B[i].cond_entropy(fA.cond_expectation(g)));
        }
        rep.ent1_min_slack = std::min(rep.ent1_min_slack, ent_tiles - ent_levels);

        // level entropy factorization per conditioning state
        if (rep.em_entbound_applicable) {
            for (int i = 1; i <= T.h + 1; ++i) {
                Eigen::VectorXd entF = fib_F[i].cond_entropy(g);
                Eigen::VectorXd entB = fib_F[i].cond_expectation(fib_B[i].cond_entropy(g));
                Eigen::VectorXd entA = fib_F[i].cond_expectation(fib_F[i - 1].cond_entropy(g));
                for (int64_t x = 0; x < n; ++x)
                    rep.em_entbound_min_slack =
                        std::min(rep.em_entbound_min_slack,
                                 entB[x] + entA[x] - (1.0 - rep.eps_prime) * entF[x]);
            }
        }

        // measured factorization constants
        double ent = measure_entropy(space.pi, g);
        double eo_den = measure_mean(space.pi, fib_even.cond_entropy(g)) +
                        measure_mean(space.pi, fib_odd.cond_entropy(g));
        if (eo_den > 1e-13) {
            if (ent / eo_den > rep.c_eo_search) {
                rep.c_eo_search = ent / eo_den;
                best_eo = g;
            }
        } else {
            ++rep.skipped_zero_denominator;
        }
        if (ent_tiles > 1e-13) {
            if (ent / ent_tiles > rep.c_tb_search) {
                rep.c_tb_search = ent / ent_tiles;
                best_tb = g;
            }
        } else {
            ++rep.skipped_zero_denominator;
        }
    }

    // sharpen the constant estimates around the best random candidates
    auto eo_ratio = [&](const Eigen::VectorXd& g) {
        double den = measure_mean(space.pi, fib_even.cond_entropy(g)) +
                     measure_mean(space.pi, fib_odd.cond_entropy(g));
        return den > 1e-13 ? measure_entropy(space.pi, g) / den : 0.0;
    };
    auto tb_ratio = [&](const Eigen::VectorXd& g) {
        double den = 0.0;
        for (const auto& fib : fib_tiles) den += measure_mean(space.pi, fib.cond_entropy(g));
        return den > 1e-13 ? measure_entropy(space.pi, g) / den : 0.0;
    };
    if (best_eo.size())
        rep.c_eo_search = std::max(rep.c_eo_search,
                                   hill_climb_ratio(eo_ratio, best_eo, seed ^ 0xe0, 1200).first);
    if (best_tb.size())
        rep.c_tb_search = std::max(rep.c_tb_search,
                                   hill_climb_ratio(tb_ratio, best_tb, seed ^ 0x7b, 1200).first);
    rep.c_eo = rep.c_eo_search;
    rep.c_tb = rep.c_tb_search;

    // fresh pass: the final constants absorb anything the fresh sample finds
    for (int64_t t = 0; t < budget; ++t) {
        Eigen::VectorXd g(n);
        for (int64_t i = 0; i < n; ++i)
            g[i] = std::exp(2.0 * rng.uniform(budget + t, kTagFunction, i) - 1.0);
        rep.c_eo = std::max(rep.c_eo, eo_ratio(g));
        rep.c_tb = std::max(rep.c_tb, tb_ratio(g));
    }
    // slack of the factorization inequalities at the final constants
    rep.eo_min_slack = std::numeric_limits<double>::infinity();
    rep.tbf_min_slack = std::numeric_limits<double>::infinity();
    for (int64_t t = 0; t < budget; ++t) {
        Eigen::VectorXd g(n);
        for (int64_t i = 0; i < n; ++i)
            g[i] = std::exp(2.0 * rng.uniform(budget + t, kTagFunction, i) - 1.0);
        double ent = measure_entropy(space.pi, g);
        double eo_den = measure_mean(space.pi, fib_even.cond_entropy(g)) +
                        measure_mean(space.pi, fib_odd.cond_entropy(g));
        double tiles_den = 0.0;
        for (const auto& fib : fib_tiles) tiles_den += measure_mean(space.pi, fib.cond_entropy(g));
        if (eo_den > 1e-13)
            rep.eo_min_slack = std::min(rep.eo_min_slack, rep.c_eo * eo_den - ent);
        if (tiles_den > 1e-13)
            rep.tbf_min_slack = std::min(rep.tbf_min_slack, rep.c_tb * tiles_den - ent);
    }
    return rep;
}

}  // namespace swtree
