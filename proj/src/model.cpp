#include "swtree/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace swtree {

SpinBoundary SpinBoundary::mono(const TreeTopology& T, int q, int spin) {
    if (spin < 0 || spin >= q) throw Error("SpinBoundary: spin out of range");
    SpinBoundary b;
    b.tau.assign(T.n_boundary, static_cast<uint8_t>(spin));
    return b;
}

SpinBoundary SpinBoundary::list(const TreeTopology& T, int q, const std::vector<int>& spins) {
    if (static_cast<int64_t>(spins.size()) != T.n_boundary)
        throw Error("SpinBoundary: need one spin per boundary slot");
    SpinBoundary b;
    b.tau.reserve(spins.size());
    for (int s : spins) {
        if (s < 0 || s >= q) throw Error("SpinBoundary: spin out of range");
        b.tau.push_back(static_cast<uint8_t>(s));
    }
    return b;
}

SpinBoundary SpinBoundary::random(const TreeTopology& T, int q, uint64_t seed) {
    CounterRng rng{seed};
    SpinBoundary b;
    b.tau.resize(T.n_boundary);
    for (int64_t i = 0; i < T.n_boundary; ++i)
        b.tau[i] = static_cast<uint8_t>(rng.uniform_int(0, kTagInit, i, q));
    return b;
}

SpinConfig SpinConfig::from_code(const TreeTopology& T, int q, uint64_t code,
                                 const SpinBoundary& b) {
    SpinConfig sc;
    sc.s.resize(T.n_total);
    for (int64_t v = 0; v < T.n_internal; ++v) {
        sc.s[v] = static_cast<uint8_t>(code % q);
        code /= q;
    }
    for (int64_t i = 0; i < T.n_boundary; ++i) sc.s[T.n_internal + i] = b.tau[i];
    return sc;
}

uint64_t SpinConfig::code(const TreeTopology& T, int q) const {
    uint64_t c = 0;
    for (int64_t v = T.n_internal - 1; v >= 0; --v) c = c * q + s[v];
    return c;
}

uint64_t pow_checked(uint64_t base, int exp, uint64_t cap, const char* what) {
    uint64_t r = 1;
    for (int i = 0; i < exp; ++i) {
        if (r > cap / base)
            throw Error(std::string("exact mode infeasible: ") + what + " exceeds the cap");
        r *= base;
    }
    return r;
}

RCInstance rc_instance_from_tree(const TreeTopology& T, const RCBoundary& b) {
    RCInstance inst;
    inst.g.nv = T.n_total;
    for (const auto& e : T.edges) inst.g.edges.push_back({e.u, e.v});
    inst.is_boundary.assign(T.n_total, false);
    for (int64_t i = 0; i < T.n_boundary; ++i) inst.is_boundary[T.n_internal + i] = true;
    switch (b.kind) {
        case RCBoundary::Kind::Free:
            break;
        case RCBoundary::Kind::Wired: {
            std::vector<int> all;
            for (int64_t i = 0; i < T.n_boundary; ++i)
                all.push_back(static_cast<int>(T.n_internal + i));
            inst.wiring.push_back(std::move(all));
            break;
        }
        case RCBoundary::Kind::Partition: {
            std::vector<bool> seen(T.n_boundary, false);
            for (const auto& cls : b.classes) {
                std::vector<int> ids;
                for (int rank : cls) {
                    if (rank < 0 || rank >= T.n_boundary)
                        throw Error("RCBoundary: slot index out of range");
                    if (seen[rank]) throw Error("RCBoundary: classes must be disjoint");
                    seen[rank] = true;
                    ids.push_back(static_cast<int>(T.n_internal + rank));
                }
                if (ids.size() >= 2) inst.wiring.push_back(std::move(ids));
            }
            break;
        }
    }
    return inst;
}

namespace {
struct UnionFind {
    std::vector<int> up;
    explicit UnionFind(int64_t n) : up(n) { std::iota(up.begin(), up.end(), 0); }
    int find(int x) {
        while (up[x] != x) x = up[x] = up[up[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) up[a] = b;
    }
};
}  // namespace

ComponentReport components(const RCInstance& inst, uint64_t edge_mask,
                           const std::vector<int>* block) {
    UnionFind uf(inst.g.nv);
    for (const auto& cls : inst.wiring)
        for (size_t i = 1; i < cls.size(); ++i) uf.unite(cls[0], cls[i]);
    for (size_t e = 0; e < inst.g.edges.size(); ++e)
        if (edge_mask >> e & 1) uf.unite(inst.g.edges[e].first, inst.g.edges[e].second);

    std::vector<bool> in_block(block ? inst.g.nv : 0, false);
    if (block)
        for (int v : *block) in_block[v] = true;

    ComponentReport rep;
    rep.comp.resize(inst.g.nv);
    std::vector<char> touches_boundary(inst.g.nv, 0), leaves_block(inst.g.nv, 0),
        seen(inst.g.nv, 0);
    for (int64_t v = 0; v < inst.g.nv; ++v) {
        int r = uf.find(static_cast<int>(v));
        rep.comp[v] = r;
        seen[r] = 1;
        if (inst.is_boundary[v]) touches_boundary[r] = 1;
        if (block && !in_block[v]) leaves_block[r] = 1;
    }
    rep.c_block = block ? 0 : -1;
    for (int64_t r = 0; r < inst.g.nv; ++r) {
        if (!seen[r]) continue;
        ++rep.c_xi;
        if (!touches_boundary[r]) ++rep.c_free;
        if (block && !leaves_block[r] && !touches_boundary[r]) ++rep.c_block;
    }
    return rep;
}

uint64_t mono_mask(const TreeTopology& T, const SpinConfig& sigma) {
    uint64_t m = 0;
    for (size_t e = 0; e < T.edges.size(); ++e)
        if (sigma.s[T.edges[e].u] == sigma.s[T.edges[e].v]) m |= uint64_t(1) << e;
    return m;
}

void MeasureTable::normalize() {
    double mx = -std::numeric_limits<double>::infinity();
    for (double lw : logw) mx = std::max(mx, lw);
    if (!(mx > -std::numeric_limits<double>::infinity()))
        throw Error("MeasureTable: all weights are zero");
    double s = 0.0;
    for (double lw : logw) s += std::exp(lw - mx);
    logZ = mx + std::log(s);
    prob.resize(logw.size());
    for (size_t i = 0; i < logw.size(); ++i) prob[i] = std::exp(logw[i] - logZ);
}

MeasureTable potts_measure(const TreeTopology& T, const std::vector<int>& region,
                           const SpinConfig& eta, const PottsParams& params, uint64_t cap) {
    uint64_t n_states = pow_checked(params.q, static_cast<int>(region.size()), cap,
                                    "potts_measure state count");
    std::vector<int> reg = region;
    std::sort(reg.begin(), reg.end());

    // edges of E(A u dA): both endpoints in the region or adjacent to it
    std::vector<char> in_closure(T.n_total, 0);
    for (int v : reg) {
        in_closure[v] = 1;
        if (v != 0) in_closure[T.parent[v]] = 1;
        for (int c : T.children(v)) in_closure[c] = 1;
    }
    std::vector<int> active_edges;
    for (size_t e = 0; e < T.edges.size(); ++e)
        if (in_closure[T.edges[e].u] && in_closure[T.edges[e].v])
            active_edges.push_back(static_cast<int>(e));

    SpinConfig sc = eta;
    MeasureTable table;
    table.logw.resize(n_states);
    for (uint64_t code = 0; code < n_states; ++code) {
        uint64_t c = code;
        for (int v : reg) {
            sc.s[v] = static_cast<uint8_t>(c % params.q);
            c /= params.q;
        }
        int bichromatic = 0;
        for (int e : active_edges)
            bichromatic += sc.s[T.edges[e].u] != sc.s[T.edges[e].v];
        table.logw[code] = -params.beta * bichromatic;
    }
    table.normalize();
    return table;
}

MeasureTable rc_measure(const RCInstance& inst, double p, int q, uint64_t cap) {
    if (!(p > 0.0 && p < 1.0)) throw Error("rc_measure: need p in (0,1)");
    if (q < 1) throw Error("rc_measure: need q >= 1");
    int m = static_cast<int>(inst.g.edges.size());
    uint64_t n_states = pow_checked(2, m, cap, "rc_measure state count");
    double lp = std::log(p), lq = std::log1p(-p), lgq = std::log(static_cast<double>(q));
    MeasureTable table;
    table.logw.resize(n_states);
    for (uint64_t mask = 0; mask < n_states; ++mask) {
        int k = __builtin_popcountll(mask);
        ComponentReport rep = components(inst, mask);
        table.logw[mask] = k * lp + (m - k) * lq + rep.c_xi * lgq;
    }
    table.normalize();
    return table;
}

MeasureTable edwards_sokal_measure(const TreeTopology& T, const SpinBoundary& b,
                                   const PottsParams& params, uint64_t cap) {
    int m = static_cast<int>(T.edges.size());
    uint64_t n_edge = pow_checked(2, m, cap, "edwards_sokal state count");
    uint64_t n_spin =
        pow_checked(params.q, static_cast<int>(T.n_internal), cap / n_edge, "edwards_sokal state count");
    double p = params.p();
    double lp = std::log(p), lq = std::log1p(-p);
    MeasureTable table;
    table.logw.assign(n_spin * n_edge, -std::numeric_limits<double>::infinity());
    for (uint64_t code = 0; code < n_spin; ++code) {
        SpinConfig sc = SpinConfig::from_code(T, params.q, code, b);
        uint64_t mono = mono_mask(T, sc);
        // iterate submasks of the monochromatic set
        uint64_t a = mono;
        while (true) {
            int k = __builtin_popcountll(a);
            table.logw[code * n_edge + a] = (k ? k * lp : 0.0) + (m - k) * lq;
            if (a == 0) break;
            a = (a - 1) & mono;
        }
    }
    table.normalize();
    return table;
}

std::vector<double> es_spin_marginal(const TreeTopology& T, const MeasureTable& es) {
    uint64_t n_edge = uint64_t(1) << T.edges.size();
    std::vector<double> out(es.size() / n_edge, 0.0);
    for (int64_t i = 0; i < es.size(); ++i) out[i / n_edge] += es.prob[i];
    return out;
}

std::vector<double> es_edge_marginal(const TreeTopology& T, const MeasureTable& es) {
    uint64_t n_edge = uint64_t(1) << T.edges.size();
    std::vector<double> out(n_edge, 0.0);
    for (int64_t i = 0; i < es.size(); ++i) out[i % n_edge] += es.prob[i];
    return out;
}

// ---------- forest dynamic programming ----------

namespace {

// up-message of v: m_v(s) ~ product over subtree-of-v factors below v,
// restricted to the region; off-region children contribute fixed-spin factors
void up_message(const TreeTopology& T, const SpinConfig& spins, const std::vector<char>& in_region,
                const PottsParams& params, int v, std::vector<std::vector<double>>& msg) {
    int q = params.q;
    double w_ne = std::exp(-params.beta);
    auto& m = msg[v];
    m.assign(q, 1.0);
    for (int c : T.children(v)) {
        if (T.is_internal(c) && in_region[c]) {
            up_message(T, spins, in_region, params, c, msg);
            double tot = 0.0;
            for (double x : msg[c]) tot += x;
            for (int s = 0; s < q; ++s) m[s] *= msg[c][s] + w_ne * (tot - msg[c][s]);
        } else {
            for (int s = 0; s < q; ++s) m[s] *= (s == spins.s[c]) ? 1.0 : w_ne;
        }
    }
    // normalize to dodge underflow
    double mx = *std::max_element(m.begin(), m.end());
    if (mx > 0)
        for (double& x : m) x /= mx;
}

}  // namespace

void conditional_sample(const TreeTopology& T, SpinConfig& spins, const std::vector<int>& region,
                        const PottsParams& params, const CounterRng& rng, uint64_t step,
                        uint64_t tag_salt) {
    int q = params.q;
    double w_ne = std::exp(-params.beta);
    std::vector<char> in_region(T.n_total, 0);
    for (int v : region) in_region[v] = 1;

    std::vector<std::vector<double>> msg(T.n_total);
    // piece roots: region vertices whose parent is off-region
    for (int r : region) {
        if (r != 0 && in_region[T.parent[r]]) continue;
        up_message(T, spins, in_region, params, r, msg);
        // sample top-down
        std::vector<std::pair<int, int>> stack;  // (vertex, parent spin or -1)
        stack.push_back({r, r == 0 ? -1 : spins.s[T.parent[r]]});
        while (!stack.empty()) {
            auto [v, ps] = stack.back();
            stack.pop_back();
            std::vector<double> w(q);
            double tot = 0.0;
            for (int s = 0; s < q; ++s) {
                w[s] = msg[v][s] * ((ps >= 0 && s != ps) ? w_ne : 1.0);
                tot += w[s];
            }
            double u = rng.uniform(step, kTagConditional + tag_salt, v) * tot;
            int s = 0;
            while (s + 1 < q && u >= w[s]) {
                u -= w[s];
                ++s;
            }
            spins.s[v] = static_cast<uint8_t>(s);
            for (int c : T.children(v))
                if (T.is_internal(c) && in_region[c]) stack.push_back({c, s});
        }
    }
}

std::vector<double> edge_marginal_dp(const TreeTopology& T, const SpinConfig& spins, int u, int v,
                                     const PottsParams& params, int root_parent_spin,
                                     bool use_boundary) {
    int q = params.q;
    double w_ne = std::exp(-params.beta);
    auto w = [&](int a, int b) { return a == b ? 1.0 : w_ne; };

    // up messages over the whole internal tree
    std::vector<std::vector<double>> up(T.n_internal);
    for (int64_t x = T.n_internal - 1; x >= 0; --x) {
        auto& m = up[x];
        m.assign(q, 1.0);
        for (int c : T.children(static_cast<int>(x))) {
            if (T.is_internal(c)) {
                double tot = 0.0;
                for (double y : up[c]) tot += y;
                for (int s = 0; s < q; ++s) m[s] *= up[c][s] + w_ne * (tot - up[c][s]);
            } else if (use_boundary) {
                for (int s = 0; s < q; ++s) m[s] *= w(s, spins.s[c]);
            }
        }
        double mx = *std::max_element(m.begin(), m.end());
        for (double& y : m) y /= mx;
    }

    // walk the root -> u path accumulating the downward message
    std::vector<int> path;
    for (int x = u; x != -1; x = T.parent[x]) path.push_back(x);
    std::reverse(path.begin(), path.end());
    std::vector<double> down(q, 1.0);
    if (root_parent_spin >= 0)
        for (int s = 0; s < q; ++s) down[s] = w(root_parent_spin, s);
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        int x = path[i], next = path[i + 1];
        // fold the siblings of `next` into x's outgoing message
        std::vector<double> loc = down;
        for (int c : T.children(x)) {
            if (c == next) continue;
            if (T.is_internal(c)) {
                double tot = 0.0;
                for (double y : up[c]) tot += y;
                for (int s = 0; s < q; ++s) loc[s] *= up[c][s] + w_ne * (tot - up[c][s]);
            } else if (use_boundary) {
                for (int s = 0; s < q; ++s) loc[s] *= w(s, spins.s[c]);
            }
        }
        down.assign(q, 0.0);
        for (int sc = 0; sc < q; ++sc)
            for (int sx = 0; sx < q; ++sx) down[sc] += loc[sx] * w(sx, sc);
        double mx = *std::max_element(down.begin(), down.end());
        for (double& y : down) y /= mx;
    }

    // joint at (u,v): down_u stops before folding v's branch
    std::vector<double> du = down;
    for (int c : T.children(u)) {
        if (c == v) continue;
        if (T.is_internal(c)) {
            double tot = 0.0;
            for (double y : up[c]) tot += y;
            for (int s = 0; s < q; ++s) du[s] *= up[c][s] + w_ne * (tot - up[c][s]);
        } else if (use_boundary) {
            for (int s = 0; s < q; ++s) du[s] *= w(s, spins.s[c]);
        }
    }
    std::vector<double> joint(q * q, 0.0);
    double tot = 0.0;
    for (int su = 0; su < q; ++su)
        for (int sv = 0; sv < q; ++sv) {
            double x = du[su] * w(su, sv) * (T.is_internal(v) ? up[v][sv] : (sv == spins.s[v]));
            joint[su * q + sv] = x;
            tot += x;
        }
    for (double& x : joint) x /= tot;
    return joint;
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

}  // namespace swtree
