#include "swtree/dynamics.hpp"

#include <algorithm>
#include <numeric>

namespace swtree {

namespace {

struct StepUf {
    std::vector<int> up;
    explicit StepUf(int64_t n) : up(n) { std::iota(up.begin(), up.end(), 0); }
    int find(int x) {
        while (up[x] != x) x = up[x] = up[up[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) up[std::max(a, b)] = std::min(a, b);  // keep the smallest id as root
    }
};

// percolate monochromatic edges with the shared per-edge draws, then assign
// the per-vertex draw of the highest vertex to every free component
void sw_update(const TreeTopology& T, SpinConfig& spins, const PottsParams& params,
               const CounterRng& rng, uint64_t step, const std::vector<char>* restriction) {
    double p = params.p();
    StepUf uf(T.n_total);
    for (size_t e = 0; e < T.edges.size(); ++e) {
        auto [u, v] = T.edges[e];
        if (spins.s[u] == spins.s[v] && rng.uniform(step, kTagEdge, e) < p) uf.unite(u, v);
    }
    // min-id root of a component is its vertex closest to the tree root
    std::vector<char> blocked(T.n_total, 0);
    for (int64_t v = 0; v < T.n_total; ++v) {
        bool outside = T.is_boundary(static_cast<int>(v)) ||
                       (restriction && !(*restriction)[v]);
        if (outside) blocked[uf.find(static_cast<int>(v))] = 1;
    }
    for (int64_t v = 0; v < T.n_internal; ++v) {
        int r = uf.find(static_cast<int>(v));
        if (!blocked[r])
            spins.s[v] = static_cast<uint8_t>(rng.uniform_int(step, kTagVertexSpin, r, params.q));
    }
}

}  // namespace

void sw_step(const TreeTopology& T, ChainState& st, const PottsParams& params) {
    sw_update(T, st.spins, params, st.rng, st.step, nullptr);
    ++st.step;
}

void glauber_step(const TreeTopology& T, ChainState& st, const PottsParams& params) {
    int v = static_cast<int>(st.rng.uniform_int(st.step, kTagSiteChoice, 0, T.n_internal));
    conditional_sample(T, st.spins, {v}, params, st.rng, st.step);
    ++st.step;
}

void block_step(const TreeTopology& T, ChainState& st, const PottsParams& params,
                const BlockSpec& blocks, BlockKind kind) {
    int j = static_cast<int>(
        st.rng.uniform_int(st.step, kTagBlockChoice, 0, static_cast<uint32_t>(blocks.blocks.size())));
    if (kind == BlockKind::HeatBath) {
        conditional_sample(T, st.spins, blocks.blocks[j], params, st.rng, st.step);
    } else {
        std::vector<char> free_set(T.n_total, 0);
        for (int v : blocks.blocks[j]) free_set[v] = 1;
        sw_update(T, st.spins, params, st.rng, st.step, &free_set);
    }
    ++st.step;
}

void rc_edge_hb_step(const RCInstance& inst, ChainState& st, double p, int q) {
    int m = static_cast<int>(inst.g.edges.size());
    int e = static_cast<int>(st.rng.uniform_int(st.step, kTagSiteChoice, 0, m));
    uint64_t without = st.edges & ~(uint64_t(1) << e);
    auto rep = components(inst, without);
    bool cut = rep.comp[inst.g.edges[e].first] != rep.comp[inst.g.edges[e].second];
    double th = cut ? p / (q * (1.0 - p) + p) : p;
    st.edges = st.rng.uniform(st.step, kTagEdge, e) < th ? (without | (uint64_t(1) << e)) : without;
    ++st.step;
}

void rc_sw_step(const RCInstance& inst, ChainState& st, double p, int q) {
    bool wired_ok = false;
    if (inst.wiring.size() == 1) {
        size_t nb = 0;
        for (bool b : inst.is_boundary) nb += b;
        wired_ok = inst.wiring[0].size() == nb;
    }
    if (!wired_ok) throw Error("rc_sw_step: defined for the wired boundary condition");
    auto rep = components(inst, st.edges);
    std::vector<int> spin(inst.g.nv);
    for (int64_t v = 0; v < inst.g.nv; ++v)
        spin[v] = static_cast<int>(st.rng.uniform_int(st.step, kTagVertexSpin, rep.comp[v], q));
    uint64_t next = 0;
    for (size_t e = 0; e < inst.g.edges.size(); ++e) {
        auto [u, v] = inst.g.edges[e];
        if (spin[u] == spin[v] && st.rng.uniform(st.step, kTagEdge, e) < p)
            next |= uint64_t(1) << e;
    }
    st.edges = next;
    ++st.step;
}

void single_bond_step(const RCInstance& inst, ChainState& st, double p, int q) {
    auto rep = components(inst, st.edges);
    int m = static_cast<int>(inst.g.edges.size());
    int e = static_cast<int>(st.rng.uniform_int(st.step, kTagSiteChoice, 0, m));
    auto [u, v] = inst.g.edges[e];
    int su = static_cast<int>(st.rng.uniform_int(st.step, kTagVertexSpin, rep.comp[u], q));
    int sv = static_cast<int>(st.rng.uniform_int(st.step, kTagVertexSpin, rep.comp[v], q));
    if (su == sv) {
        if (st.rng.uniform(st.step, kTagEdge, e) < p)
            st.edges |= uint64_t(1) << e;
        else
            st.edges &= ~(uint64_t(1) << e);
    }
    ++st.step;
}

MhbChain::MhbChain(const EmbeddingSpec& s, double p_, int q_, uint64_t cap)
    : spec(&s), p(p_), q(q_) {
    table = rc_measure(s.tree, p_, q_, cap);
}

void MhbChain::step(ChainState& st) const {
    const auto& s = *spec;
    int64_t pick = st.rng.uniform_int(st.step, kTagBlockChoice, 0,
                                      static_cast<uint32_t>(s.interior.size()));
    int v = s.interior[pick];
    uint64_t move_mask = 0;
    for (int j = 0; j < s.gadgets(); ++j)
        if (s.c[j] == v)
            move_mask = (uint64_t(1) << s.gadget_edges[2 * j]) |
                        (uint64_t(1) << s.gadget_edges[2 * j + 1]);
    if (move_mask == 0)
        move_mask = ~s.gadget_mask & ((uint64_t(1) << s.tree.g.edges.size()) - 1);

    uint64_t base = st.edges & ~move_mask;
    double tot = 0;
    uint64_t sub = move_mask;
    while (true) {
        tot += table.prob[base | sub];
        if (sub == 0) break;
        sub = (sub - 1) & move_mask;
    }
    double u = st.rng.uniform(st.step, kTagConditional, v) * tot;
    sub = move_mask;
    while (true) {
        double w = table.prob[base | sub];
        if (u < w || sub == 0) {
            st.edges = base | sub;
            break;
        }
        u -= w;
        sub = (sub - 1) & move_mask;
    }
    ++st.step;
}

void coupled_sw_step(const TreeTopology& T, CoupledState& cs, const PottsParams& params,
                     const std::vector<char>* restriction_y) {
    sw_update(T, cs.x, params, cs.rng, cs.step, nullptr);
    sw_update(T, cs.y, params, cs.rng, cs.step, restriction_y);
    ++cs.step;
}

}  // namespace swtree
