#include "swtree/bigmix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <numeric>
#include <thread>

#ifdef SWTREE_HAVE_CBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#else
#include <Eigen/Dense>
#endif

#include "swtree/kernels.hpp"

namespace swtree {

TreeAutomorphisms tree_automorphisms(const TreeTopology& T, int64_t max_group) {
    // one S_d choice per non-leaf internal vertex
    std::vector<int> branch_vertices;
    for (int v = 0; v < T.first_leaf; ++v) branch_vertices.push_back(v);
    std::vector<std::vector<int>> sd;  // permutations of {0..d-1}
    {
        std::vector<int> idx(T.d);
        std::iota(idx.begin(), idx.end(), 0);
        do {
            sd.push_back(idx);
        } while (std::next_permutation(idx.begin(), idx.end()));
    }
    int64_t size = 1;
    for (size_t i = 0; i < branch_vertices.size(); ++i) {
        size *= static_cast<int64_t>(sd.size());
        if (size > max_group) throw Error("tree_automorphisms: group too large");
    }

    TreeAutomorphisms aut;
    std::vector<size_t> odo(branch_vertices.size(), 0);
    std::map<std::vector<int>, int> index_of;
    while (true) {
        std::vector<int> vperm(T.n_internal);
        vperm[0] = 0;
        for (int v = 0; v < T.first_leaf; ++v) {
            const auto& pv = sd[odo[v]];
            for (int j = 0; j < T.d; ++j) vperm[T.child(v, j)] = T.child(vperm[v], pv[j]);
        }
        index_of[vperm] = static_cast<int>(aut.vperm.size());
        aut.vperm.push_back(std::move(vperm));
        size_t pos = 0;
        while (pos < odo.size() && ++odo[pos] == sd.size()) odo[pos++] = 0;
        if (odo.empty() || pos == odo.size()) break;
    }
    aut.inverse.resize(aut.vperm.size());
    for (size_t g = 0; g < aut.vperm.size(); ++g) {
        std::vector<int> inv(T.n_internal);
        for (int v = 0; v < T.n_internal; ++v) inv[aut.vperm[g][v]] = v;
        auto it = index_of.find(inv);
        if (it == index_of.end()) throw Error("tree_automorphisms: inverse not in group");
        aut.inverse[g] = it->second;
    }
    return aut;
}

std::vector<int32_t> spin_state_perm(const TreeTopology& T, int q,
                                     const std::vector<int>& vperm) {
    int64_t n = 1;
    for (int v = 0; v < T.n_internal; ++v) n *= q;
    std::vector<int32_t> out(n);
    std::vector<int64_t> qpow(T.n_internal);
    qpow[0] = 1;
    for (int64_t v = 1; v < T.n_internal; ++v) qpow[v] = qpow[v - 1] * q;
    for (int64_t code = 0; code < n; ++code) {
        int64_t mapped = 0;
        int64_t c = code;
        for (int v = 0; v < T.n_internal; ++v) {
            mapped += (c % q) * qpow[vperm[v]];
            c /= q;
        }
        out[code] = static_cast<int32_t>(mapped);
    }
    return out;
}

std::vector<int32_t> edge_state_perm(const TreeTopology& T, const std::vector<int>& vperm) {
    int m = static_cast<int>(T.edges.size());
    std::vector<int> eperm(m);
    for (int64_t v = 1; v < T.n_internal; ++v) eperm[v - 1] = vperm[v] - 1;
    for (int64_t s = 0; s < T.n_boundary; ++s) {
        int64_t leaf = T.first_leaf + s / T.d;
        int64_t off = s % T.d;
        int64_t new_rank = (vperm[leaf] - T.first_leaf) * T.d + off;
        eperm[T.n_internal - 1 + s] = static_cast<int>(T.n_internal - 1 + new_rank);
    }
    int64_t n = int64_t(1) << m;
    std::vector<int32_t> out(n);
    for (int64_t mask = 0; mask < n; ++mask) {
        int64_t mapped = 0;
        for (int e = 0; e < m; ++e)
            if (mask >> e & 1) mapped |= int64_t(1) << eperm[e];
        out[mask] = static_cast<int32_t>(mapped);
    }
    return out;
}

namespace {

void gemm_accumulate(int64_t rows, int64_t inner, int64_t cols, const double* A,
                     const double* B, double* C) {
#ifdef SWTREE_HAVE_CBLAS
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(rows),
                static_cast<int>(cols), static_cast<int>(inner), 1.0, A,
                static_cast<int>(inner), B, static_cast<int>(cols), 1.0, C,
                static_cast<int>(cols));
#else
    using M = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>;
    using Mo =
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    Mo(C, rows, cols).noalias() += M(A, rows, inner) * M(B, inner, cols);
#endif
}

void gemm_accumulate(int64_t rows, int64_t inner, int64_t cols, const float* A, const float* B,
                     float* C) {
#ifdef SWTREE_HAVE_CBLAS
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(rows),
                static_cast<int>(cols), static_cast<int>(inner), 1.0f, A,
                static_cast<int>(inner), B, static_cast<int>(cols), 1.0f, C,
                static_cast<int>(cols));
#else
    using M =
        Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using Mo =
        Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    Mo(C, rows, cols).noalias() += M(A, rows, inner) * M(B, inner, cols);
#endif
}

template <typename Scalar>
struct OrbitEngine {
    int64_t n = 0;
    int64_t n_orbits = 0;
    int G = 0;
    const std::vector<std::vector<int32_t>>* perms;
    std::vector<int32_t> orbit_of, pstar;
    std::vector<int64_t> reps;
    std::vector<std::vector<int64_t>> z_by_g;
    const std::vector<double>* pi;

    using Buf = std::unique_ptr<Scalar[]>;
    Buf stage_b, stage_a;
    int64_t max_zg = 0;

    void init_groups(int64_t n_states, const std::vector<std::vector<int32_t>>& state_perms,
                     const std::vector<double>& pi_in) {
        n = n_states;
        G = static_cast<int>(state_perms.size());
        perms = &state_perms;
        pi = &pi_in;
        orbit_of.assign(n, -1);
        pstar.assign(n, 0);
        for (int64_t s = 0; s < n; ++s) {
            int32_t best = state_perms[0][s];
            int bg = 0;
            for (int g = 1; g < G; ++g)
                if (state_perms[g][s] < best) {
                    best = state_perms[g][s];
                    bg = g;
                }
            pstar[s] = bg;
            if (best == s) {
                orbit_of[s] = static_cast<int32_t>(reps.size());
                reps.push_back(s);
            }
        }
        for (int64_t s = 0; s < n; ++s) orbit_of[s] = orbit_of[state_perms[pstar[s]][s]];
        n_orbits = static_cast<int64_t>(reps.size());
        z_by_g.assign(G, {});
        for (int64_t s = 0; s < n; ++s) z_by_g[pstar[s]].push_back(s);
        for (const auto& zg : z_by_g) max_zg = std::max<int64_t>(max_zg, zg.size());
        stage_b = Buf(new Scalar[max_zg * n]);
        stage_a = Buf(new Scalar[n_orbits * max_zg]);
    }

    // worst TV over the given rows, accumulated in double
    double worst_tv(const Scalar* Tmat, const std::vector<int64_t>& rows) const {
        double worst = 0.0;
#pragma omp parallel for reduction(max : worst) schedule(static)
        for (size_t k = 0; k < rows.size(); ++k) {
            double tv = 0.0;
            const Scalar* row = Tmat + rows[k] * n;
            for (int64_t y = 0; y < n; ++y) tv += std::abs(double(row[y]) - (*pi)[y]);
            worst = std::max(worst, 0.5 * tv);
        }
        return worst;
    }

    // C[rows of `active`] = A[active rows] * P^b, with P^b rows rebuilt from
    // the full representative block B by state permutation
    void multiply(Scalar* C, const Scalar* A, const Scalar* B,
                  const std::vector<int64_t>& active) const {
        int64_t ra = static_cast<int64_t>(active.size());
        for (int64_t i = 0; i < ra; ++i)
            std::memset(C + active[i] * n, 0, sizeof(Scalar) * n);
        for (int g = 0; g < G; ++g) {
            const auto& zg = z_by_g[g];
            if (zg.empty()) continue;
            const auto& pg = (*perms)[g];
            int64_t k = static_cast<int64_t>(zg.size());
#pragma omp parallel for schedule(static)
            for (int64_t i = 0; i < k; ++i) {
                const Scalar* src = B + static_cast<int64_t>(orbit_of[zg[i]]) * n;
                Scalar* dst = stage_b.get() + i * n;
                for (int64_t y = 0; y < n; ++y) dst[y] = src[pg[y]];
            }
#pragma omp parallel for schedule(static)
            for (int64_t r = 0; r < ra; ++r)
                for (int64_t i = 0; i < k; ++i)
                    stage_a.get()[r * k + i] = A[active[r] * n + zg[i]];
            // rows land in a contiguous scratch, then scatter to C
            if (ra == n_orbits) {
                gemm_accumulate(ra, k, n, stage_a.get(), stage_b.get(), C);
            } else {
                // compact output for the surviving rows only
                static thread_local std::vector<Scalar> scratch;
                scratch.assign(ra * n, Scalar(0));
                gemm_accumulate(ra, k, n, stage_a.get(), stage_b.get(), scratch.data());
                for (int64_t r = 0; r < ra; ++r) {
                    Scalar* dst = C + active[r] * n;
                    const Scalar* src = scratch.data() + r * n;
                    for (int64_t y = 0; y < n; ++y) dst[y] += src[y];
                }
            }
        }
    }
};

template <typename Scalar>
OrbitMixingResult run_orbit_mixing(int64_t n_states,
                                   const std::vector<std::vector<int32_t>>& state_perms,
                                   const std::vector<double>& pi,
                                   const std::function<void(int64_t, double*)>& row_builder,
                                   int64_t horizon, double* min_margin) {
#ifdef SWTREE_HAVE_CBLAS
    openblas_set_num_threads(std::max(1u, std::thread::hardware_concurrency()));
#endif
    OrbitEngine<Scalar> eng;
    eng.init_groups(n_states, state_perms, pi);
    OrbitMixingResult res;
    res.n_orbits = eng.n_orbits;
    int64_t R = eng.n_orbits, n = n_states;
    auto alloc = [&]() { return std::unique_ptr<Scalar[]>(new Scalar[R * n]); };
    std::vector<int64_t> all_rows(R);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    *min_margin = 1.0;

    std::vector<std::unique_ptr<Scalar[]>> cache;  // cache[k] = T_{2^k}
    cache.push_back(alloc());
    {
        std::vector<double> row(n);
#pragma omp parallel for schedule(dynamic) firstprivate(row)
        for (int64_t r = 0; r < R; ++r) {
            row_builder(eng.reps[r], row.data());
            Scalar* dst = cache[0].get() + r * n;
            for (int64_t y = 0; y < n; ++y) dst[y] = static_cast<Scalar>(row[y]);
        }
    }

    double d1 = eng.worst_tv(cache[0].get(), all_rows);
    *min_margin = std::min(*min_margin, std::abs(d1 - 0.25));
    if (d1 <= 0.25) {
        res.t_mix = 1;
        res.d_at_tmix = d1;
        return res;
    }

    int k = 0;
    double d_hi = d1;
    while (true) {
        cache.push_back(alloc());
        eng.multiply(cache[k + 1].get(), cache[k].get(), cache[k].get(), all_rows);
        ++res.multiplies;
        ++k;
        d_hi = eng.worst_tv(cache[k].get(), all_rows);
        *min_margin = std::min(*min_margin, std::abs(d_hi - 0.25));
        if (d_hi <= 0.25) break;
        if ((int64_t(1) << k) >= horizon) {
            res.t_mix = -1;
            return res;
        }
    }

    // binary refinement inside (2^{k-1}, 2^k]; per-start TV never increases,
    // so rows that already mixed drop out of the active set
    int64_t t_lo = int64_t(1) << (k - 1);
    int64_t t_hi = int64_t(1) << k;
    auto cur = alloc();
    std::memcpy(cur.get(), cache[k - 1].get(), sizeof(Scalar) * R * n);
    double d_lo = eng.worst_tv(cur.get(), all_rows);
    std::vector<int64_t> active;
    for (int64_t r = 0; r < R; ++r) {
        double tv = 0;
        const Scalar* row = cur.get() + r * n;
        for (int64_t y = 0; y < n; ++y) tv += std::abs(double(row[y]) - pi[y]);
        if (0.5 * tv > 0.25) active.push_back(r);
    }
    auto probe = alloc();
    double d_hi_final = d_hi;
    for (int j = k - 2; j >= 0 && t_lo + 1 < t_hi; --j) {
        int64_t t_probe = t_lo + (int64_t(1) << j);
        if (t_probe >= t_hi) continue;
        eng.multiply(probe.get(), cur.get(), cache[j].get(), active);
        ++res.multiplies;
        double d = eng.worst_tv(probe.get(), active);
        *min_margin = std::min(*min_margin, std::abs(d - 0.25));
        if (d > 0.25) {
            std::swap(cur, probe);
            t_lo = t_probe;
            d_lo = d;
            std::vector<int64_t> still;
            for (int64_t r : active) {
                double tv = 0;
                const Scalar* row = cur.get() + r * n;
                for (int64_t y = 0; y < n; ++y) tv += std::abs(double(row[y]) - pi[y]);
                if (0.5 * tv > 0.25) still.push_back(r);
            }
            active = std::move(still);
        } else {
            t_hi = t_probe;
            d_hi_final = d;
        }
    }
    res.t_mix = t_hi;
    res.d_at_tmix = d_hi_final;
    res.d_before = d_lo;
    return res;
}

}  // namespace

OrbitMixingResult orbit_worst_start_mixing(
    int64_t n_states, const std::vector<std::vector<int32_t>>& state_perms,
    const std::vector<double>& pi, const std::function<void(int64_t, double*)>& row_builder,
    int64_t horizon) {
    // float pass first; a thin margin against the 1/4 threshold triggers an
    // exact double recomputation
    if (n_states >= (int64_t(1) << 14)) {
        double margin = 1.0;
        auto res = run_orbit_mixing<float>(n_states, state_perms, pi, row_builder, horizon,
                                           &margin);
        if (margin > 5e-3) return res;
    }
    double margin = 1.0;
    return run_orbit_mixing<double>(n_states, state_perms, pi, row_builder, horizon, &margin);
}

OrbitMixingResult sw_worst_start_mixing(const TreeTopology& T, const PottsParams& params,
                                        int mono_spin, int64_t horizon) {
    auto aut = tree_automorphisms(T);
    std::vector<std::vector<int32_t>> perms;
    perms.reserve(aut.vperm.size());
    for (const auto& vp : aut.vperm) perms.push_back(spin_state_perm(T, params.q, vp));
    SpinSpace space(T, params, SpinBoundary::mono(T, params.q, mono_spin));
    std::vector<char> free_set(T.n_internal, 1);
    int q = params.q;
    auto row_builder = [&, q](int64_t state, double* out) {
        SpinConfig from = space.config(state);
        SpinConfig to = space.config(0);
        for (uint64_t y = 0; y < space.n_states; ++y) {
            uint64_t c = y;
            for (int64_t v = 0; v < T.n_internal; ++v) {
                to.s[v] = static_cast<uint8_t>(c % q);
                c /= q;
            }
            out[y] = sw_transition(T, from, to, params, free_set);
        }
    };
    return orbit_worst_start_mixing(space.n_states, perms, space.pi, row_builder, horizon);
}

OrbitMixingResult rc_edge_worst_start_mixing(const TreeTopology& T, double p, int q,
                                             int64_t horizon) {
    auto inst = rc_instance_from_tree(T, RCBoundary::wired());
    int m = static_cast<int>(inst.g.edges.size());
    int64_t n = int64_t(1) << m;
    auto table = rc_measure(inst, p, q, uint64_t(n));
    double cut_prob = p / (q * (1.0 - p) + p);

    // sparse kernel: per state, one flip target and one removal target per edge
    struct Entry {
        int32_t target;
        double w;
    };
    std::vector<Entry> entries(static_cast<size_t>(n) * (2 * m));
    for (int64_t z = 0; z < n; ++z) {
        for (int e = 0; e < m; ++e) {
            uint64_t without = static_cast<uint64_t>(z) & ~(uint64_t(1) << e);
            auto rep = components(inst, without);
            bool cut = rep.comp[inst.g.edges[e].first] != rep.comp[inst.g.edges[e].second];
            double th = cut ? cut_prob : p;
            entries[z * 2 * m + 2 * e] = {static_cast<int32_t>(without | (uint64_t(1) << e)),
                                          th / m};
            entries[z * 2 * m + 2 * e + 1] = {static_cast<int32_t>(without), (1.0 - th) / m};
        }
    }

    // orbit representatives as the start set; per-start TV never increases,
    // so mixed rows leave the active set as the stepping proceeds
    auto aut = tree_automorphisms(T);
    std::vector<std::vector<int32_t>> perms;
    perms.reserve(aut.vperm.size());
    for (const auto& vp : aut.vperm) perms.push_back(edge_state_perm(T, vp));
    std::vector<int64_t> reps;
    for (int64_t s = 0; s < n; ++s) {
        int32_t best = s == 0 ? 0 : perms[0][s];
        for (size_t g = 1; g < perms.size(); ++g) best = std::min(best, perms[g][s]);
        if (best == s) reps.push_back(s);
    }
    OrbitMixingResult res;
    res.n_orbits = static_cast<int64_t>(reps.size());
    int64_t R = res.n_orbits;

    std::vector<double> cur(R * n, 0.0), next(R * n, 0.0);
    for (int64_t r = 0; r < R; ++r) cur[r * n + reps[r]] = 1.0;
    std::vector<int64_t> active(R);
    std::iota(active.begin(), active.end(), 0);

    double d_prev = 1.0;
    for (int64_t t = 1; t <= horizon; ++t) {
        int64_t ra = static_cast<int64_t>(active.size());
#pragma omp parallel for schedule(static)
        for (int64_t k = 0; k < ra; ++k) {
            int64_t r = active[k];
            const double* src = cur.data() + r * n;
            double* dst = next.data() + r * n;
            std::fill(dst, dst + n, 0.0);
            for (int64_t z = 0; z < n; ++z) {
                double v = src[z];
                if (v == 0.0) continue;
                const Entry* row = entries.data() + z * 2 * m;
                for (int e = 0; e < 2 * m; ++e) dst[row[e].target] += v * row[e].w;
            }
        }
        std::swap(cur, next);
        double worst = 0.0;
        std::vector<int64_t> still;
        for (int64_t r : active) {
            double tv = 0.0;
            const double* row = cur.data() + r * n;
            for (int64_t y = 0; y < n; ++y) tv += std::abs(row[y] - table.prob[y]);
            tv *= 0.5;
            worst = std::max(worst, tv);
            if (tv > 0.25) still.push_back(r);
        }
        ++res.multiplies;
        if (worst <= 0.25) {
            res.t_mix = t;
            res.d_at_tmix = worst;
            res.d_before = d_prev;
            return res;
        }
        d_prev = worst;
        active = std::move(still);
    }
    res.t_mix = -1;
    return res;
}

}  // namespace swtree
