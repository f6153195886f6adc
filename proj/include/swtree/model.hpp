#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swtree/rng.hpp"
#include "swtree/tree.hpp"

namespace swtree {

struct PottsParams {
    int q = 2;
    double beta = 0.0;

    PottsParams(int q_, double beta_) : q(q_), beta(beta_) {
        if (q < 2) throw Error("PottsParams: q must be >= 2");
        if (!(beta >= 0.0)) throw Error("PottsParams: beta must be >= 0");
        if (!(p() < 1.0)) throw Error("PottsParams: p = 1 (beta = inf) not supported");
    }
    double p() const { return -std::expm1(-beta); }  // 1 - e^{-beta}
    double p_min_bound(int d) const { return std::exp(-beta * (d + 1)) / q; }
};

// Spins are 0-based (0..q-1) everywhere, including file formats.
struct SpinBoundary {
    std::vector<uint8_t> tau;  // one spin per boundary slot

    static SpinBoundary mono(const TreeTopology& T, int q, int spin);
    static SpinBoundary list(const TreeTopology& T, int q, const std::vector<int>& spins);
    static SpinBoundary random(const TreeTopology& T, int q, uint64_t seed);
};

// Full assignment on T u dT; the boundary part is fixed by the active boundary.
struct SpinConfig {
    std::vector<uint8_t> s;  // size n_total

    static SpinConfig from_code(const TreeTopology& T, int q, uint64_t code, const SpinBoundary& b);
    uint64_t code(const TreeTopology& T, int q) const;  // base-q little-endian, internal part
};

// number of spin configurations on `sites` vertices, guarded against the cap
uint64_t pow_checked(uint64_t base, int exp, uint64_t cap, const char* what);

struct Graph {
    int64_t nv = 0;
    std::vector<std::pair<int, int>> edges;
};

struct RCBoundary {
    enum class Kind { Free, Wired, Partition };
    Kind kind = Kind::Free;
    std::vector<std::vector<int>> classes;  // for Partition: disjoint slot lists (0-based slot ranks)

    static RCBoundary free() { return {Kind::Free, {}}; }
    static RCBoundary wired() { return {Kind::Wired, {}}; }
    static RCBoundary partition(std::vector<std::vector<int>> cls) {
        return {Kind::Partition, std::move(cls)};
    }
};

// Generic random-cluster instance: a graph, a designated boundary vertex set,
// and wiring classes (vertex ids). Trees map here with V = internal, dV = slots.
struct RCInstance {
    Graph g;
    std::vector<bool> is_boundary;          // per vertex
    std::vector<std::vector<int>> wiring;   // classes of vertex ids, size >= 2
};

RCInstance rc_instance_from_tree(const TreeTopology& T, const RCBoundary& b);

struct ComponentReport {
    std::vector<int> comp;  // representative id per vertex, wiring classes merged
    int64_t c_xi = 0;       // all components
    int64_t c_free = 0;     // components with no boundary vertex
    int64_t c_block = -1;   // components fully inside the supplied block, or -1
};

ComponentReport components(const RCInstance& inst, uint64_t edge_mask,
                           const std::vector<int>* block = nullptr);

// monochromatic edge mask M(sigma) over T.edges order
uint64_t mono_mask(const TreeTopology& T, const SpinConfig& sigma);

struct MeasureTable {
    std::vector<double> logw;  // unnormalized log weights, one per state
    std::vector<double> prob;  // normalized
    double logZ = 0.0;

    int64_t size() const { return static_cast<int64_t>(logw.size()); }
    void normalize();  // fills prob and logZ from logw
};

inline constexpr uint64_t kDefaultTableCap = uint64_t(1) << 24;

// Gibbs measure mu_A^eta over the q^{|region|} assignments of `region`,
// indexed base-q little-endian over the sorted region vertices. Weight of a
// state is exp(-beta * #bichromatic edges of E(A u dA)) with eta off-region.
MeasureTable potts_measure(const TreeTopology& T, const std::vector<int>& region,
                           const SpinConfig& eta, const PottsParams& params,
                           uint64_t cap = kDefaultTableCap);

// Random-cluster measure over edge subsets (bitmask order) per the
// p^{|A|} (1-p)^{|E\A|} q^{c^xi(A)} weights.
MeasureTable rc_measure(const RCInstance& inst, double p, int q,
                        uint64_t cap = kDefaultTableCap);

// Joint Edwards-Sokal measure; state index = spin_code * 2^{|E|} + edge_mask.
MeasureTable edwards_sokal_measure(const TreeTopology& T, const SpinBoundary& b,
                                   const PottsParams& params, uint64_t cap = kDefaultTableCap);

// Marginals of an Edwards-Sokal table.
std::vector<double> es_spin_marginal(const TreeTopology& T, const MeasureTable& es);
std::vector<double> es_edge_marginal(const TreeTopology& T, const MeasureTable& es);

// --- exact conditional sampling / marginals on the tree (forest DP) ---

// Resample `region` in place from mu_region^{spins} (spins provides the
// off-region configuration, boundary included).
void conditional_sample(const TreeTopology& T, SpinConfig& spins, const std::vector<int>& region,
                        const PottsParams& params, const CounterRng& rng, uint64_t step,
                        uint64_t tag_salt = 0);

// log partition function of mu_region^{spins}
double conditional_log_z(const TreeTopology& T, const SpinConfig& spins,
                         const std::vector<int>& region, const PottsParams& params);

// Joint marginal of the spins at edge (u,v) (v child of u) under the Gibbs
// measure on the whole tree with boundary from `spins` and optionally the
// parent-of-root fixed to `root_parent_spin` (-1: free). `use_boundary`
// false drops the leaf-to-slot edges (free-spin boundary).
std::vector<double> edge_marginal_dp(const TreeTopology& T, const SpinConfig& spins, int u, int v,
                                     const PottsParams& params, int root_parent_spin,
                                     bool use_boundary);

double tv_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace swtree
