#include "swtree/tree.hpp"

#include <algorithm>
#include <queue>

namespace swtree {

std::vector<int> TreeTopology::children(int v) const {
    std::vector<int> out;
    if (!is_internal(v)) return out;
    if (is_leaf(v)) {
        int64_t rank = v - first_leaf;
        for (int j = 0; j < d; ++j) out.push_back(static_cast<int>(n_internal + rank * d + j));
    } else {
        for (int j = 0; j < d; ++j) out.push_back(child(v, j));
    }
    return out;
}

std::vector<int> TreeTopology::subtree(int v) const {
    std::vector<int> out;
    std::queue<int> q;
    q.push(v);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        out.push_back(u);
        if (!is_leaf(u))
            for (int j = 0; j < d; ++j) q.push(child(u, j));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> TreeTopology::ball(int v, int ell) const {
    std::vector<int> out;
    std::queue<std::pair<int, int>> q;
    q.push({v, 0});
    while (!q.empty()) {
        auto [u, dist] = q.front();
        q.pop();
        out.push_back(u);
        if (dist + 1 < ell && !is_leaf(u))
            for (int j = 0; j < d; ++j) q.push({child(u, j), dist + 1});
    }
    std::sort(out.begin(), out.end());
    return out;
}

int TreeTopology::graph_distance(int u, int v) const {
    // walk both up to the root, counting steps
    int du = depth[u], dv = depth[v], dist = 0;
    while (du > dv) {
        u = parent[u];
        --du;
        ++dist;
    }
    while (dv > du) {
        v = parent[v];
        --dv;
        ++dist;
    }
    while (u != v) {
        u = parent[u];
        v = parent[v];
        dist += 2;
    }
    return dist;
}

int TreeTopology::set_distance(const std::vector<int>& a, const std::vector<int>& b) const {
    int best = 1 << 30;
    for (int u : a)
        for (int v : b) best = std::min(best, graph_distance(u, v));
    return best;
}

TreeTopology build_tree(int d, int h) {
    if (d < 2) throw Error("build_tree: branching factor d must be >= 2");
    if (h < 0) throw Error("build_tree: height h must be >= 0");

    TreeTopology T;
    T.d = d;
    T.h = h;
    int64_t pow_d = 1;
    T.n_internal = 0;
    for (int k = 0; k <= h; ++k) {
        if (pow_d > (int64_t(1) << 40)) throw Error("build_tree: instance too large");
        T.n_internal += pow_d;
        pow_d *= d;
    }
    T.n_boundary = pow_d;  // d^{h+1}
    T.n_total = T.n_internal + T.n_boundary;
    T.first_leaf = T.n_internal - pow_d / d;

    T.parent.assign(T.n_total, -1);
    T.depth.assign(T.n_total, 0);
    for (int64_t v = 1; v < T.n_internal; ++v) {
        T.parent[v] = static_cast<int>((v - 1) / d);
        T.depth[v] = T.depth[T.parent[v]] + 1;
    }
    for (int64_t b = 0; b < T.n_boundary; ++b) {
        int64_t slot = T.n_internal + b;
        T.parent[slot] = static_cast<int>(T.first_leaf + b / d);
        T.depth[slot] = h + 1;
    }
    T.edges.reserve(T.n_total - 1);
    for (int64_t v = 1; v < T.n_internal; ++v)
        T.edges.push_back({T.parent[v], static_cast<int>(v)});
    for (int64_t b = 0; b < T.n_boundary; ++b)
        T.edges.push_back({T.parent[T.n_internal + b], static_cast<int>(T.n_internal + b)});
    return T;
}

LevelSets level_sets(const TreeTopology& T) {
    LevelSets ls;
    ls.L.assign(T.h + 2, {});
    ls.F.assign(T.h + 2, {});
    for (int v = 0; v < T.n_internal; ++v) ls.L[T.level(v)].push_back(v);
    for (int i = 1; i <= T.h + 1; ++i) {
        ls.F[i] = ls.F[i - 1];
        ls.F[i].insert(ls.F[i].end(), ls.L[i].begin(), ls.L[i].end());
        std::sort(ls.F[i].begin(), ls.F[i].end());
    }
    for (int v = 0; v < T.n_internal; ++v) {
        int dist_to_leaves = T.h - T.depth[v];
        (dist_to_leaves % 2 == 0 ? ls.even : ls.odd).push_back(v);
    }
    return ls;
}

BlockFamily decompose(const TreeTopology& T, int ell) {
    if (ell < 1 || ell > T.h + 1) throw Error("decompose: need 1 <= ell <= h+1");
    LevelSets ls = level_sets(T);
    BlockFamily bf;
    bf.ell = ell;
    // B_i^ell = F_i \ F_{i-ell} = levels i-ell+1 .. i; nonempty up to i = h+ell
    // (F_i = T for i > h+1), where the top blocks are truncated at the root.
    bf.B.assign(T.h + ell + 1, {});
    for (int i = 1; i <= T.h + ell; ++i) {
        for (int j = std::max(1, i - ell + 1); j <= std::min(i, T.h + 1); ++j)
            bf.B[i].insert(bf.B[i].end(), ls.L[j].begin(), ls.L[j].end());
        std::sort(bf.B[i].begin(), bf.B[i].end());
    }
    bf.tiles.assign(ell + 1, {});
    bf.tile_pieces.assign(ell + 1, {});
    for (int j = 1; j <= ell + 1; ++j) {
        for (int k = 0; j + k * (ell + 1) <= T.h + ell; ++k) {
            int i = j + k * (ell + 1);
            if (bf.B[i].empty()) continue;
            bf.tiles[j - 1].insert(bf.tiles[j - 1].end(), bf.B[i].begin(), bf.B[i].end());
            if (i <= T.h + 1) {
                for (int v : ls.L[i]) bf.tile_pieces[j - 1].push_back({v, T.ball(v, ell)});
            } else {
                // truncated top block rooted at the root, levels i-ell+1 .. h+1
                bf.tile_pieces[j - 1].push_back({0, T.ball(0, T.h + 1 + ell - i)});
            }
        }
        std::sort(bf.tiles[j - 1].begin(), bf.tiles[j - 1].end());
    }
    return bf;
}

}  // namespace swtree
