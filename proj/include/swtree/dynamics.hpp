#pragma once

#include <cstdint>
#include <vector>

#include "swtree/kernels.hpp"
#include "swtree/model.hpp"
#include "swtree/slowmix.hpp"
#include "swtree/rng.hpp"
#include "swtree/tree.hpp"

namespace swtree {

struct ChainState {
    SpinConfig spins;     // spin chains
    uint64_t edges = 0;   // random-cluster chains (bitmask)
    uint64_t step = 0;
    CounterRng rng;
};

// Coupled pair sharing per-edge r_e(t) and per-vertex s_v(t) draws; the Y
// copy only recolors components fully inside `restriction` when given.
struct CoupledState {
    SpinConfig x, y;
    uint64_t step = 0;
    CounterRng rng;
};

void sw_step(const TreeTopology& T, ChainState& st, const PottsParams& params);
void glauber_step(const TreeTopology& T, ChainState& st, const PottsParams& params);

enum class BlockKind { HeatBath, Sw };
void block_step(const TreeTopology& T, ChainState& st, const PottsParams& params,
                const BlockSpec& blocks, BlockKind kind);

void rc_edge_hb_step(const RCInstance& inst, ChainState& st, double p, int q);
void rc_sw_step(const RCInstance& inst, ChainState& st, double p, int q);
void single_bond_step(const RCInstance& inst, ChainState& st, double p, int q);

// Modified heat-bath dynamics for an embedded boundary condition: a uniform
// interior vertex either refreshes its gadget edge pair or the whole bulk,
// each from the exact conditional random-cluster measure (desk scale only;
// the table build enforces the cap).
struct MhbChain {
    const EmbeddingSpec* spec;
    MeasureTable table;
    double p = 0;
    int q = 0;

    MhbChain(const EmbeddingSpec& s, double p_, int q_,
             uint64_t cap = kDefaultTableCap);
    void step(ChainState& st) const;
};

void coupled_sw_step(const TreeTopology& T, CoupledState& cs, const PottsParams& params,
                     const std::vector<char>* restriction_y = nullptr);

}  // namespace swtree
