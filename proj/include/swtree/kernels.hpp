#pragma once

#include <Eigen/Dense>

#include "swtree/exact.hpp"
#include "swtree/model.hpp"
#include "swtree/tree.hpp"

namespace swtree {

// Blocks for block dynamics: each block splits into pieces that must be
// pairwise at graph distance >= 2 (checked at construction).
struct BlockSpec {
    std::vector<std::vector<int>> blocks;                // D_k as vertex lists
    std::vector<std::vector<std::vector<int>>> pieces;   // D_kj per block

    static BlockSpec tiled(const TreeTopology& T, int ell);
    static BlockSpec whole_tree(const TreeTopology& T);
    static BlockSpec custom(const TreeTopology& T, std::vector<std::vector<std::vector<int>>> pieces);
    int64_t vol() const;
};

// one SW transition probability: percolate monochromatic edges, recolor the
// components fully inside `free_set` (all internal vertices for plain SW)
double sw_transition(const TreeTopology& T, const SpinConfig& from, const SpinConfig& to,
                     const PottsParams& params, const std::vector<char>& free_set);

TransitionMatrix sw_matrix(const SpinSpace& space);
TransitionMatrix block_sw_matrix(const SpinSpace& space, const BlockSpec& blocks);
TransitionMatrix glauber_matrix(const SpinSpace& space);
TransitionMatrix block_hb_matrix(const SpinSpace& space, const BlockSpec& blocks);
TransitionMatrix tiled_block_matrix(const SpinSpace& space, int ell);

// SW restricted to one block with the rest of the configuration frozen at
// eta; the state space is [q]^{block} (base-q over the sorted block).
TransitionMatrix sw_restricted_matrix(const SpinSpace& space, const std::vector<int>& block,
                                      const SpinConfig& eta);

// gamma_min = min over blocks, pieces, frozen eta of gap(SW^{kj,eta})
double comparison_gamma_min(const SpinSpace& space, const BlockSpec& blocks);

// random-cluster kernels over edge-subset space
TransitionMatrix rc_edge_matrix(const RCInstance& inst, double p, int q,
                                uint64_t cap = kDefaultMatrixCap);
TransitionMatrix rc_sw_matrix(const RCInstance& inst, double p, int q,
                              uint64_t cap = kDefaultMatrixCap);
TransitionMatrix single_bond_matrix(const RCInstance& inst, double p, int q,
                                    uint64_t cap = kDefaultMatrixCap);

struct UllrichFactors {
    Eigen::MatrixXd T;      // spin -> joint
    Eigen::MatrixXd Tstar;  // joint -> spin
    Eigen::MatrixXd R;
    std::vector<Eigen::MatrixXd> Q;  // one per block
    Eigen::VectorXd mu;  // spin stationary measure
    Eigen::VectorXd nu;  // joint Edwards-Sokal measure

    double adjoint_error() const;            // mu(s) T(s,j) vs nu(j) T*(j,s)
    double idempotent_error(size_t k) const; // ||Q_k^2 - Q_k||_max
    double sandwich_error(size_t k) const;   // ||R - Q_k R Q_k||_max
};

UllrichFactors ullrich_factors(const SpinSpace& space, const BlockSpec* blocks = nullptr,
                               uint64_t cap = kDefaultMatrixCap);

}  // namespace swtree
