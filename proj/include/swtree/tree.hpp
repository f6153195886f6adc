#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace swtree {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Complete d-ary tree of height h together with its external boundary.
// Internal vertices are indexed breadth-first with the root at 0 (children
// of v are d*v+1 .. d*v+d). Boundary slots follow, d per leaf, left to
// right. Edge order: internal edges sorted by child index, then
// leaf-to-boundary edges sorted by slot index.
struct TreeTopology {
    int d = 0;
    int h = 0;
    int64_t n_internal = 0;  // (d^{h+1}-1)/(d-1)
    int64_t n_boundary = 0;  // d^{h+1}
    int64_t n_total = 0;
    int64_t first_leaf = 0;  // index of the left-most leaf

    struct Edge {
        int u;  // parent
        int v;  // child
    };
    std::vector<int> parent;  // -1 for root
    std::vector<int> depth;   // h+1 for boundary slots
    std::vector<Edge> edges;

    bool is_internal(int v) const { return v < n_internal; }
    bool is_boundary(int v) const { return v >= n_internal; }
    bool is_leaf(int v) const { return v >= first_leaf && v < n_internal; }

    // distance to the boundary: h+1 for the root, 1 for leaves, 0 for slots
    int level(int v) const { return h + 1 - depth[v]; }

    int child(int v, int j) const { return d * v + 1 + j; }

    // children of an internal vertex, boundary slots included for leaves
    std::vector<int> children(int v) const;

    std::vector<int> subtree(int v) const;        // internal vertices of T_v
    std::vector<int> ball(int v, int ell) const;  // B(v,ell): T_v at distance < ell from v

    // BFS distance in T u dT
    int graph_distance(int u, int v) const;
    int set_distance(const std::vector<int>& a, const std::vector<int>& b) const;
};

struct LevelSets {
    std::vector<std::vector<int>> L;  // L[0..h+1], L[0] empty
    std::vector<std::vector<int>> F;  // F[i] = union of L[j], j <= i
    std::vector<int> even;            // distance to the leaves even
    std::vector<int> odd;
};

struct BlockFamily {
    int ell = 0;
    std::vector<std::vector<int>> B;       // B[i] = B_i^ell, i = 0..h+1 (B[0] empty)
    std::vector<std::vector<int>> tiles;   // tiles[j-1] = T_j^ell, j = 1..ell+1
    // constituent subtrees of each tile: (root vertex, vertices of B(root,ell))
    std::vector<std::vector<std::pair<int, std::vector<int>>>> tile_pieces;
};

TreeTopology build_tree(int d, int h);
LevelSets level_sets(const TreeTopology& T);
BlockFamily decompose(const TreeTopology& T, int ell);

}  // namespace swtree
