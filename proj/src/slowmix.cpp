#include "swtree/slowmix.hpp"

#include "swtree/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "swtree/rng.hpp"
#include "swtree/tree.hpp"

namespace swtree {

Graph read_edge_list(const std::string& text) {
    std::istringstream in(text);
    int64_t n, m;
    if (!(in >> n >> m)) throw Error("edge list: missing 'n m' header");
    Graph g;
    g.nv = n;
    std::set<std::pair<int, int>> seen;
    for (int64_t i = 0; i < m; ++i) {
        int u, v;
        if (!(in >> u >> v)) throw Error("edge list: truncated");
        if (u < 0 || v < 0 || u >= n || v >= n) throw Error("edge list: vertex out of range");
        if (u == v) throw Error("edge list: self-loops not allowed");
        auto key = std::minmax(u, v);
        if (!seen.insert(key).second) throw Error("edge list: multi-edges not allowed");
        g.edges.push_back({u, v});
    }
    return g;
}

Graph subdivide(const Graph& g) {
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : g.edges) {
        if (u == v) throw Error("subdivide: self-loops not allowed");
        if (!seen.insert(std::minmax(u, v)).second)
            throw Error("subdivide: multi-edges not allowed");
    }
    Graph gh;
    gh.nv = g.nv + static_cast<int64_t>(g.edges.size());
    for (size_t e = 0; e < g.edges.size(); ++e) {
        int mid = static_cast<int>(g.nv + e);
        gh.edges.push_back({g.edges[e].first, mid});
        gh.edges.push_back({mid, g.edges[e].second});
    }
    return gh;
}

double transferred_p(double p_hat, int q) {
    return p_hat * p_hat / (p_hat * p_hat + 2 * p_hat * (1 - p_hat) + (1 - p_hat) * (1 - p_hat) * q);
}

uint64_t EmbeddingSpec::tree_mask_to_ghat(uint64_t tree_mask) const {
    uint64_t out = 0;
    for (size_t j = 0; j < gadget_edges.size(); ++j)
        if (tree_mask >> gadget_edges[j] & 1) out |= uint64_t(1) << j;
    return out;
}

EmbeddingSpec embed_boundary(const Graph& g, int h, int ell) {
    if (ell < 1 || ell >= h) throw Error("embed_boundary: need 1 <= ell < h");
    int64_t capacity = int64_t(1) << (h - ell);
    if (static_cast<int64_t>(g.edges.size()) > capacity)
        throw Error("embed_boundary: |E_G| exceeds the 2^(h-ell) gadget capacity");

    EmbeddingSpec spec;
    spec.h = h;
    spec.ell = ell;
    spec.g = g;
    spec.g_hat = subdivide(g);

    auto T = build_tree(2, h);
    spec.tree.g.nv = T.n_internal;
    for (int64_t v = 1; v < T.n_internal; ++v)
        spec.tree.g.edges.push_back({T.parent[v], static_cast<int>(v)});
    spec.tree.is_boundary.assign(T.n_internal, false);
    for (int64_t v = T.first_leaf; v < T.n_internal; ++v) spec.tree.is_boundary[v] = true;

    // roots of the height-ell subtrees, breadth-first (depth h-ell)
    for (int64_t v = 0; v < T.n_internal; ++v)
        if (T.depth[v] == h - ell) spec.subtree_roots.push_back(static_cast<int>(v));

    int m = static_cast<int>(g.edges.size());
    std::vector<std::vector<int>> vertex_class(g.nv);
    for (int j = 0; j < m; ++j) {
        // left-most leaf pair of B_j and their parent
        int cj = spec.subtree_roots[j];
        while (T.depth[cj] < h - 1) cj = T.child(cj, 0);
        int aj = T.child(cj, 0), bj = T.child(cj, 1);
        spec.a.push_back(aj);
        spec.b.push_back(bj);
        spec.c.push_back(cj);
        vertex_class[g.edges[j].first].push_back(aj);
        vertex_class[g.edges[j].second].push_back(bj);
    }
    for (auto& cls : vertex_class)
        if (cls.size() >= 2) spec.tree.wiring.push_back(cls);

    // edge ids: tree edge of child v is v-1 in the child-sorted order
    std::vector<char> is_gadget_edge(spec.tree.g.edges.size(), 0);
    for (int j = 0; j < m; ++j) {
        spec.gadget_edges.push_back(spec.a[j] - 1);
        spec.gadget_edges.push_back(spec.b[j] - 1);
        is_gadget_edge[spec.a[j] - 1] = is_gadget_edge[spec.b[j] - 1] = 1;
    }
    for (size_t e = 0; e < spec.tree.g.edges.size(); ++e)
        if (!is_gadget_edge[e]) spec.bulk_edges.push_back(static_cast<int>(e));
    for (int e : spec.gadget_edges) spec.gadget_mask |= uint64_t(1) << e;
    for (int64_t v = 0; v < T.first_leaf; ++v) spec.interior.push_back(static_cast<int>(v));
    return spec;
}

RCInstance rc_instance_from_graph(const Graph& g) {
    RCInstance inst;
    inst.g = g;
    inst.is_boundary.assign(g.nv, false);
    return inst;
}

namespace {

// heat-bath resampling of the edge subset `move_mask` given the rest,
// averaged over a uniform choice from `moves`; built from the exact table
TransitionMatrix fiber_average_matrix(const RCInstance& inst, double p, int q,
                                      const std::vector<uint64_t>& moves,
                                      const std::vector<double>& weights, uint64_t cap) {
    int m = static_cast<int>(inst.g.edges.size());
    uint64_t n = pow_checked(2, m, cap, "fiber_average_matrix");
    auto table = rc_measure(inst, p, q, cap);
    TransitionMatrix M;
    M.P = Eigen::MatrixXd::Zero(n, n);
    M.pi = Eigen::Map<const Eigen::VectorXd>(table.prob.data(), n);
    for (size_t k = 0; k < moves.size(); ++k) {
        uint64_t mask = moves[k];
        // fibers share the off-mask part
        std::vector<double> fiber_mass(n, 0.0);
        for (uint64_t x = 0; x < n; ++x) fiber_mass[x & ~mask] += table.prob[x];
        for (uint64_t x = 0; x < n; ++x) {
            uint64_t base = x & ~mask;
            uint64_t sub = mask;
            while (true) {
                uint64_t y = base | sub;
                if (fiber_mass[base] > 0)
                    M.P(x, y) += weights[k] * table.prob[y] / fiber_mass[base];
                if (sub == 0) break;
                sub = (sub - 1) & mask;
            }
        }
    }
    return M;
}

}  // namespace

TransitionMatrix two_edge_block_matrix(const Graph& g_hat, int n_original, double p_hat, int q,
                                       uint64_t cap) {
    int m2 = static_cast<int>(g_hat.edges.size());
    if (m2 % 2) throw Error("two_edge_block_matrix: expected a subdivided graph");
    int m = m2 / 2;
    std::vector<uint64_t> moves;
    std::vector<double> weights;
    for (int j = 0; j < m; ++j) {
        moves.push_back(uint64_t(0b11) << (2 * j));  // the pair of edges of middle j
        weights.push_back(1.0 / m);
    }
    return fiber_average_matrix(rc_instance_from_graph(g_hat), p_hat, q, moves, weights, cap);
}

GapTransferReport gap_transfer_check(const Graph& g, double p_hat, int q) {
    GapTransferReport rep;
    rep.p_hat = p_hat;
    rep.q = q;
    rep.p = transferred_p(p_hat, q);
    auto inst = rc_instance_from_graph(g);
    auto M = rc_edge_matrix(inst, rep.p, q);
    rep.gap_m = spectral_gap(M).gap;
    auto g_hat = subdivide(g);
    auto Mh = two_edge_block_matrix(g_hat, static_cast<int>(g.nv), p_hat, q);
    rep.gap_m_hat = spectral_gap(Mh).gap;
    rep.gap_diff = std::abs(rep.gap_m - rep.gap_m_hat);

    // projection identity pi(A) = sum over B in hat-Omega(A) of hat-pi(B)
    auto pi = rc_measure(inst, rep.p, q);
    auto pih = rc_measure(rc_instance_from_graph(g_hat), p_hat, q);
    int m = static_cast<int>(g.edges.size());
    std::vector<double> projected(uint64_t(1) << m, 0.0);
    for (uint64_t bmask = 0; bmask < (uint64_t)pih.size(); ++bmask) {
        uint64_t amask = 0;
        for (int j = 0; j < m; ++j) {
            bool e1 = bmask >> (2 * j) & 1, e2 = bmask >> (2 * j + 1) & 1;
            if (e1 && e2) amask |= uint64_t(1) << j;
        }
        projected[amask] += pih.prob[bmask];
    }
    rep.projection_max_err = 0;
    for (uint64_t amask = 0; amask < (uint64_t)pi.size(); ++amask)
        rep.projection_max_err =
            std::max(rep.projection_max_err, std::abs(projected[amask] - pi.prob[amask]));
    return rep;
}

TransitionMatrix mhb_matrix(const EmbeddingSpec& spec, double p_hat, int q, uint64_t cap) {
    std::vector<uint64_t> moves;
    std::vector<double> weights;
    double n_int = static_cast<double>(spec.interior.size());
    for (int j = 0; j < spec.gadgets(); ++j) {
        uint64_t mask = (uint64_t(1) << spec.gadget_edges[2 * j]) |
                        (uint64_t(1) << spec.gadget_edges[2 * j + 1]);
        moves.push_back(mask);
        weights.push_back(1.0 / n_int);
    }
    uint64_t bulk = 0;
    for (int e : spec.bulk_edges) bulk |= uint64_t(1) << e;
    moves.push_back(bulk);
    weights.push_back((n_int - spec.gadgets()) / n_int);
    return fiber_average_matrix(spec.tree, p_hat, q, moves, weights, cap);
}

namespace {

// number of wired gadget classes connected to another class through the bulk
int count_connected_classes(const EmbeddingSpec& spec, uint64_t bulk_mask,
                            const std::vector<std::vector<int>>& gadget_classes) {
    // union-find over tree vertices using bulk edges only
    std::vector<int> uf(spec.tree.g.nv);
    std::iota(uf.begin(), uf.end(), 0);
    std::function<int(int)> find = [&](int x) { return uf[x] == x ? x : uf[x] = find(uf[x]); };
    for (int e : spec.bulk_edges)
        if (bulk_mask >> e & 1) {
            auto [u, v] = spec.tree.g.edges[e];
            uf[find(u)] = find(v);
        }
    int count = 0;
    for (size_t i = 0; i < gadget_classes.size(); ++i) {
        bool hit = false;
        for (size_t j = 0; j < gadget_classes.size() && !hit; ++j) {
            if (i == j) continue;
            for (int x : gadget_classes[i]) {
                for (int y : gadget_classes[j])
                    if (find(spec.c[x]) == find(spec.c[y])) {
                        hit = true;
                        break;
                    }
                if (hit) break;
            }
        }
        count += hit;
    }
    return count;
}

}  // namespace

ConductanceReport bad_set_conductance(const EmbeddingSpec& spec, double p_hat, int q, int M,
                                      std::optional<std::vector<uint64_t>> s_star_in) {
    ConductanceReport rep;
    rep.p_hat = p_hat;
    rep.q = q;
    rep.M = M;
    rep.m = spec.gadgets();
    rep.r = std::pow(p_hat, spec.ell - 1);

    int me = static_cast<int>(spec.tree.g.edges.size());
    uint64_t n = pow_checked(2, me, kDefaultMatrixCap, "bad_set_conductance");
    rep.n_states = static_cast<int64_t>(n);
    auto table = rc_measure(spec.tree, p_hat, q, n);

    if (s_star_in && s_star_in->empty())
        throw Error("bad_set_conductance: S* must be nonempty");
    // S* default: exhaustive minimum-conductance set of the two-edge chain
    auto ghat_rc = rc_instance_from_graph(spec.g_hat);
    auto pi_ghat = rc_measure(ghat_rc, p_hat, q);
    std::vector<uint64_t> s_star;
    if (s_star_in) {
        s_star = *s_star_in;
    } else {
        if (pi_ghat.size() > 16)
            throw Error("bad_set_conductance: joint gadget space too large for the search");
        auto Mh = two_edge_block_matrix(spec.g_hat, static_cast<int>(spec.g.nv), p_hat, q);
        auto [phi, mask] = min_conductance_exhaustive(Mh);
        for (int64_t s = 0; s < Mh.size(); ++s)
            if (mask >> s & 1) s_star.push_back(static_cast<uint64_t>(s));
    }
    rep.s_star = s_star;
    std::vector<char> in_star(pi_ghat.size(), 0);
    for (uint64_t s : s_star) {
        if (s >= (uint64_t)pi_ghat.size()) throw Error("bad_set_conductance: S* state out of range");
        in_star[s] = 1;
        rep.pi_ghat_s_star += pi_ghat.prob[s];
    }

    // partition of the gadgets induced by the wiring
    std::vector<int> gclass(spec.gadgets());
    std::iota(gclass.begin(), gclass.end(), 0);
    std::function<int(int)> gfind = [&](int x) { return gclass[x] == x ? x : gclass[x] = gfind(gclass[x]); };
    for (int64_t v = 0; v < spec.g.nv; ++v) {
        int prev = -1;
        for (int j = 0; j < spec.gadgets(); ++j) {
            bool touches = spec.g.edges[j].first == v || spec.g.edges[j].second == v;
            if (!touches) continue;
            if (prev >= 0) gclass[gfind(prev)] = gfind(j);
            prev = j;
        }
    }
    std::vector<std::vector<int>> classes;
    {
        std::vector<int> idx(spec.gadgets(), -1);
        for (int j = 0; j < spec.gadgets(); ++j) {
            int r = gfind(j);
            if (idx[r] < 0) {
                idx[r] = static_cast<int>(classes.size());
                classes.emplace_back();
            }
            classes[idx[r]].push_back(j);
        }
    }

    // classify states
    std::vector<char> in_am(n, 0);
    std::vector<char> bulk_ok_cache_valid(0);
    for (uint64_t x = 0; x < n; ++x) {
        uint64_t ghat_state = spec.tree_mask_to_ghat(x);
        bool star = in_star[ghat_state];
        int connected = count_connected_classes(spec, x, classes);
        bool in_r = connected <= M;
        if (in_r) rep.pi_r_m += table.prob[x];
        in_am[x] = star && in_r;
        if (in_am[x])
            rep.pi_am += table.prob[x];
    }
    rep.pi_am_c = 1.0 - rep.pi_am;
    if (!(rep.pi_am > 0) || !(rep.pi_am_c > 0))
        throw Error("bad_set_conductance: A_M or its complement has zero mass");

    // edge flow under the modified heat-bath dynamics, move by move
    double n_int = static_cast<double>(spec.interior.size());
    std::vector<std::pair<uint64_t, double>> moves;
    for (int j = 0; j < spec.gadgets(); ++j) {
        uint64_t mask = (uint64_t(1) << spec.gadget_edges[2 * j]) |
                        (uint64_t(1) << spec.gadget_edges[2 * j + 1]);
        moves.push_back({mask, 1.0 / n_int});
    }
    uint64_t bulk = 0;
    for (int e : spec.bulk_edges) bulk |= uint64_t(1) << e;
    moves.push_back({bulk, (n_int - spec.gadgets()) / n_int});

    double flow = 0.0;
    for (auto [mask, w] : moves) {
        std::vector<double> fiber_mass(n, 0.0), fiber_out(n, 0.0);
        for (uint64_t x = 0; x < n; ++x) {
            fiber_mass[x & ~mask] += table.prob[x];
            if (!in_am[x]) fiber_out[x & ~mask] += table.prob[x];
        }
        for (uint64_t x = 0; x < n; ++x) {
            if (!in_am[x] || fiber_mass[x & ~mask] <= 0) continue;
            flow += w * table.prob[x] * fiber_out[x & ~mask] / fiber_mass[x & ~mask];
        }
    }
    rep.edge_flow = flow;
    rep.phi_am = flow / rep.pi_am;
    rep.phi_am_c = flow / rep.pi_am_c;

    // spectral gap of MHB through the structured operator (it is an average
    // of projections, hence PSD: gap = 1 - lambda2)
    {
        Eigen::VectorXd sqpi(n);
        for (uint64_t x = 0; x < n; ++x) sqpi[x] = std::sqrt(table.prob[x]);
        // apply S = D^{1/2} P D^{-1/2} via fiber averages
        std::vector<std::vector<double>> fiber_mass(moves.size(), std::vector<double>(n, 0.0));
        for (size_t k = 0; k < moves.size(); ++k)
            for (uint64_t x = 0; x < n; ++x) fiber_mass[k][x & ~moves[k].first] += table.prob[x];
        auto apply = [&](const Eigen::VectorXd& v) {
            Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
            std::vector<double> acc(n, 0.0);
            for (size_t k = 0; k < moves.size(); ++k) {
                uint64_t mask = moves[k].first;
                std::fill(acc.begin(), acc.end(), 0.0);
                for (uint64_t x = 0; x < n; ++x) acc[x & ~mask] += sqpi[x] * v[x];
                for (uint64_t x = 0; x < n; ++x) {
                    double fm = fiber_mass[k][x & ~mask];
                    if (fm > 0) out[x] += moves[k].second * sqpi[x] * acc[x & ~mask] / fm;
                }
            }
            return out;
        };
        Eigen::VectorXd top = sqpi;  // eigenvector for eigenvalue 1
        top.normalize();
        CounterRng rng{12345};
        Eigen::VectorXd v(n);
        for (uint64_t x = 0; x < n; ++x) v[x] = rng.uniform(0, kTagFunction, x) - 0.5;
        v -= top * top.dot(v);
        v.normalize();
        double lambda = 0.0;
        for (int it = 0; it < 20000; ++it) {
            Eigen::VectorXd w = apply(v);
            w -= top * top.dot(w);
            double nrm = w.norm();
            if (nrm < 1e-300) {
                lambda = 0.0;
                break;
            }
            w /= nrm;
            double nl = w.dot(apply(w));
            if (std::abs(nl - lambda) < 1e-13 && it > 32) {
                lambda = nl;
                break;
            }
            lambda = nl;
            v = w;
        }
        rep.gap_mhb = 1.0 - lambda;
    }
    rep.cheeger_ratio = flow / (rep.pi_am * rep.pi_am_c);
    rep.cheeger_ok = rep.gap_mhb <= rep.cheeger_ratio + 1e-9;

    rep.am_lower_bound = std::pow(double(q), -double(M)) * rep.pi_r_m * rep.pi_ghat_s_star;
    rep.am_bound_ok = rep.pi_am >= rep.am_lower_bound - 1e-12;
    return rep;
}

TailReport tail_monte_carlo(int m, int ell, double p_hat, int M, int64_t samples, uint64_t seed) {
    if (ell < 2) throw Error("tail_monte_carlo: need ell >= 2 (r = p_hat^{ell-1})");
    TailReport rep;
    rep.m = m;
    rep.ell = ell;
    rep.M = M;
    rep.p_hat = p_hat;
    rep.r = std::pow(p_hat, ell - 1);
    rep.samples = samples;
    rep.seed = seed;

    CounterRng rng{seed};
    int64_t hits = 0;
    std::vector<double> ind_mean(m, 0.0);
    std::vector<std::vector<double>> pair_mean(m, std::vector<double>(m, 0.0));
    for (int64_t s = 0; s < samples; ++s) {
        int count = 0;
        std::vector<char> open(m, 0);
        for (int i = 0; i < m; ++i) {
            // the unique c_i -> root(B_i) path has ell-1 bulk edges
            bool all = true;
            for (int e = 0; e < ell - 1 && all; ++e)
                all = rng.uniform(s, kTagEdge, uint64_t(i) * 64 + e) < p_hat;
            open[i] = all;
            count += all;
        }
        hits += count > M;
        for (int i = 0; i < m; ++i) {
            ind_mean[i] += open[i];
            for (int j = i + 1; j < m; ++j) pair_mean[i][j] += open[i] && open[j];
        }
    }
    rep.freq = hits / double(samples);

    // exact Binomial(m, r) tail P[X > M]
    double tail = 0.0;
    for (int k = M + 1; k <= m; ++k) {
        double logc = std::lgamma(m + 1) - std::lgamma(k + 1) - std::lgamma(m - k + 1);
        tail += std::exp(logc + k * std::log(rep.r) + (m - k) * std::log1p(-rep.r));
    }
    rep.exact_tail = tail;

    double se = std::sqrt(std::max(rep.freq * (1 - rep.freq), 1.0 / samples) / samples);
    double z = 2.5758293035489004;  // 99%
    rep.ci_lo = rep.freq - z * se;
    rep.ci_hi = rep.freq + z * se;
    rep.inside_ci = rep.exact_tail >= rep.ci_lo && rep.exact_tail <= rep.ci_hi;

    for (int i = 0; i < m; ++i) ind_mean[i] /= samples;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            double cov = pair_mean[i][j] / samples - ind_mean[i] * ind_mean[j];
            rep.max_abs_pair_cov = std::max(rep.max_abs_pair_cov, std::abs(cov));
        }
    return rep;
}

}  // namespace swtree
