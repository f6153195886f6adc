#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swtree/exact.hpp"
#include "swtree/model.hpp"

namespace swtree {

// simple undirected graph; vertices 0..nv-1
Graph read_edge_list(const std::string& text);  // "n m" header then edges
Graph subdivide(const Graph& g);                // middle vertex of edge e is nv+e

// transferred single-edge parameter of the two-edge block chain
double transferred_p(double p_hat, int q);

// The boundary embedding of G-hat into the binary tree T_h: per used
// subtree B_i the gadget (a_i, b_i, c_i) = two left-most leaves and their
// parent; leaves mapped to the same vertex of G-hat are wired.
struct EmbeddingSpec {
    int h = 0, ell = 0;
    Graph g;        // original graph
    Graph g_hat;    // subdivided
    RCInstance tree;                 // T_h with the induced wiring xi(G-hat)
    std::vector<int> subtree_roots;  // roots of B_1..B_{2^{h-ell}}
    std::vector<int> a, b, c;        // per used gadget
    std::vector<int> gadget_edges;   // tree edge ids, 2 per gadget: (c,a),(c,b)
    std::vector<int> bulk_edges;     // the rest
    std::vector<int> interior;       // I_h: non-leaf vertices of T_h
    uint64_t gadget_mask = 0;

    int gadgets() const { return static_cast<int>(c.size()); }
    // map a tree gadget-edge configuration to a G-hat edge mask
    uint64_t tree_mask_to_ghat(uint64_t tree_mask) const;
};

EmbeddingSpec embed_boundary(const Graph& g, int h, int ell);

// heat-bath edge dynamics on a plain graph (free boundary)
RCInstance rc_instance_from_graph(const Graph& g);

// the two-edge block chain on G-hat that resamples a middle vertex's pair
TransitionMatrix two_edge_block_matrix(const Graph& g_hat, int n_original, double p_hat, int q,
                                       uint64_t cap = kDefaultMatrixCap);

struct GapTransferReport {
    double p_hat = 0, p = 0;
    int q = 0;
    double gap_m = 0, gap_m_hat = 0;
    double gap_diff = 0;
    double projection_max_err = 0;  // pi(A) vs sum of hat-pi over the fiber
};

GapTransferReport gap_transfer_check(const Graph& g, double p_hat, int q);

TransitionMatrix mhb_matrix(const EmbeddingSpec& spec, double p_hat, int q,
                            uint64_t cap = uint64_t(1) << 12);

struct ConductanceReport {
    double p_hat = 0;
    int q = 0, M = 0, m = 0;
    double r = 0;  // p_hat^{ell-1}
    std::vector<uint64_t> s_star;  // G-hat configurations (edge masks)
    double pi_am = 0, pi_am_c = 0;
    double edge_flow = 0;  // Q(A_M, A_M^c)
    double phi_am = 0, phi_am_c = 0;
    double gap_mhb = 0;
    double cheeger_ratio = 0;  // Q/(pi(A_M) pi(A_M^c)); gap <= ratio
    bool cheeger_ok = false;
    double pi_ghat_s_star = 0;
    double pi_r_m = 0;                 // pi(bulk connects <= M classes)
    double am_lower_bound = 0;         // q^{-M} pi(R_M) pi_Ghat(S*)
    bool am_bound_ok = false;
    int64_t n_states = 0;
};

// S* given explicitly (an empty set is rejected), or found by exhaustive
// minimum conductance of the two-edge chain when absent (joint gadget
// space <= 16 states)
ConductanceReport bad_set_conductance(const EmbeddingSpec& spec, double p_hat, int q, int M,
                                      std::optional<std::vector<uint64_t>> s_star);

struct TailReport {
    int m = 0, ell = 0, M = 0;
    double p_hat = 0, r = 0;
    int64_t samples = 0;
    uint64_t seed = 0;
    double freq = 0;          // empirical Pr[|S| > M] under domination
    double exact_tail = 0;    // Binomial(m, r) tail
    double ci_lo = 0, ci_hi = 0;  // 99% interval around the frequency
    bool inside_ci = false;
    double max_abs_pair_cov = 0;  // independence check across gadgets
};

TailReport tail_monte_carlo(int m, int ell, double p_hat, int M, int64_t samples, uint64_t seed);

}  // namespace swtree
