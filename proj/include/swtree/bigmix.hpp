#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "swtree/exact.hpp"
#include "swtree/model.hpp"
#include "swtree/tree.hpp"

namespace swtree {

// Automorphisms of the complete d-ary tree acting on internal vertices
// (subtree permutations below every non-leaf vertex).
struct TreeAutomorphisms {
    std::vector<std::vector<int>> vperm;  // vertex permutation per element
    std::vector<int> inverse;             // index of g^{-1}
};

TreeAutomorphisms tree_automorphisms(const TreeTopology& T, int64_t max_group = 1 << 20);

// action on base-q spin codes over the internal vertices
std::vector<int32_t> spin_state_perm(const TreeTopology& T, int q,
                                     const std::vector<int>& vperm);
// action on edge masks in the deterministic edge order (slots follow leaves)
std::vector<int32_t> edge_state_perm(const TreeTopology& T, const std::vector<int>& vperm);

// Worst-start total-variation mixing for an automorphism-equivariant chain,
// computed from one transition row per state orbit and squared via
// permutation-gathered block products.
struct OrbitMixingResult {
    int64_t t_mix = -1;
    double d_at_tmix = 0;      // worst TV at t_mix
    double d_before = 1;       // worst TV at t_mix - 1
    int64_t n_orbits = 0;
    int64_t multiplies = 0;
};

// row_builder(state, out): fills the transition row of a representative
OrbitMixingResult orbit_worst_start_mixing(
    int64_t n_states, const std::vector<std::vector<int32_t>>& state_perms,
    const std::vector<double>& pi, const std::function<void(int64_t, double*)>& row_builder,
    int64_t horizon = 4096);

// convenience drivers
OrbitMixingResult sw_worst_start_mixing(const TreeTopology& T, const PottsParams& params,
                                        int mono_spin, int64_t horizon = 4096);
OrbitMixingResult rc_edge_worst_start_mixing(const TreeTopology& T, double p, int q,
                                             int64_t horizon = 1 << 20);

}  // namespace swtree
