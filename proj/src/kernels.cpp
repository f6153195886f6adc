#include "swtree/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace swtree {

BlockSpec BlockSpec::tiled(const TreeTopology& T, int ell) {
    auto bf = decompose(T, ell);
    BlockSpec spec;
    for (size_t j = 0; j < bf.tiles.size(); ++j) {
        spec.blocks.push_back(bf.tiles[j]);
        std::vector<std::vector<int>> ps;
        for (auto& [root, verts] : bf.tile_pieces[j]) ps.push_back(verts);
        spec.pieces.push_back(std::move(ps));
    }
    return spec;
}

BlockSpec BlockSpec::whole_tree(const TreeTopology& T) {
    std::vector<int> all(T.n_internal);
    for (int v = 0; v < T.n_internal; ++v) all[v] = v;
    BlockSpec spec;
    spec.blocks.push_back(all);
    spec.pieces.push_back({all});
    return spec;
}

BlockSpec BlockSpec::custom(const TreeTopology& T,
                            std::vector<std::vector<std::vector<int>>> pieces) {
    BlockSpec spec;
    for (auto& ps : pieces) {
        std::vector<int> blk;
        for (size_t a = 0; a < ps.size(); ++a) {
            for (size_t b = a + 1; b < ps.size(); ++b)
                if (T.set_distance(ps[a], ps[b]) < 2)
                    throw Error("BlockSpec: pieces of one block must be >= 2 apart");
            blk.insert(blk.end(), ps[a].begin(), ps[a].end());
        }
        std::sort(blk.begin(), blk.end());
        spec.blocks.push_back(std::move(blk));
    }
    spec.pieces = std::move(pieces);
    return spec;
}

int64_t BlockSpec::vol() const {
    int64_t v = 0;
    for (const auto& ps : pieces)
        for (const auto& p : ps) v = std::max<int64_t>(v, p.size());
    return v;
}

// Transition probability of the Swendsen-Wang step with a frozen part:
// sum over A <= M(sigma) of p^{|A|} (1-p)^{|M(sigma)\A|} q^{-c_free(A)}
// restricted to A <= M(sigma'), where components meeting a frozen or
// boundary vertex must carry identical spins in sigma and sigma'. The sum
// collapses to a tree DP tracking (touches-frozen, has-mismatch) per
// component as edges are opened or closed bottom-up.
double sw_transition(const TreeTopology& T, const SpinConfig& from, const SpinConfig& to,
                     const PottsParams& params, const std::vector<char>& free_set) {
    double p = params.p();
    double invq = 1.0 / params.q;
    // DP tables, indexed t*2+m
    static thread_local std::vector<std::array<double, 4>> f;
    f.assign(T.n_total, {});
    for (int64_t v = T.n_total - 1; v >= 0; --v) {
        std::array<double, 4> fv{};
        bool internal = T.is_internal(static_cast<int>(v));
        int t0 = (!internal || !free_set[v]) ? 1 : 0;
        int m0 = (internal && from.s[v] != to.s[v]) ? 1 : 0;
        fv[t0 * 2 + m0] = 1.0;
        if (internal) {
            for (int c : T.children(static_cast<int>(v))) {
                const auto& fc = f[c];
                double close = fc[2] + (fc[0] + fc[1]) * invq;  // fc[3] (touched+mismatch) -> 0
                bool mono_from = from.s[v] == from.s[c];
                bool mono_to = to.s[v] == to.s[c];
                std::array<double, 4> nv{};
                if (mono_from && mono_to) {
                    for (int a = 0; a < 4; ++a) {
                        if (fv[a] == 0.0) continue;
                        nv[a] += fv[a] * (1.0 - p) * close;
                        for (int b = 0; b < 4; ++b)
                            if (fc[b] != 0.0) nv[a | b] += fv[a] * p * fc[b];
                    }
                } else {
                    double factor = mono_from ? (1.0 - p) * close : close;
                    for (int a = 0; a < 4; ++a) nv[a] = fv[a] * factor;
                }
                fv = nv;
            }
        }
        f[v] = fv;
    }
    const auto& fr = f[0];
    return fr[2] + (fr[0] + fr[1]) * invq;
}

TransitionMatrix sw_matrix(const SpinSpace& space) {
    const auto& T = *space.T;
    std::vector<char> free_set(T.n_internal, 1);
    TransitionMatrix M;
    int64_t n = space.n_states;
    M.P.resize(n, n);
    M.pi = Eigen::Map<const Eigen::VectorXd>(space.pi.data(), n);
    for (int64_t x = 0; x < n; ++x) {
        SpinConfig sx = space.config(x);
        for (int64_t y = 0; y < n; ++y)
            M.P(x, y) = sw_transition(T, sx, space.config(y), space.params, free_set);
    }
    return M;
}

TransitionMatrix block_sw_matrix(const SpinSpace& space, const BlockSpec& blocks) {
    const auto& T = *space.T;
    int64_t n = space.n_states;
    TransitionMatrix M;
    M.P = Eigen::MatrixXd::Zero(n, n);
    M.pi = Eigen::Map<const Eigen::VectorXd>(space.pi.data(), n);
    double w = 1.0 / blocks.blocks.size();
    for (const auto& blk : blocks.blocks) {
        std::vector<char> free_set(T.n_internal, 0);
        for (int v : blk) free_set[v] = 1;
        for (int64_t x = 0; x < n; ++x) {
            SpinConfig sx = space.config(x);
            for (int64_t y = 0; y < n; ++y)
                M.P(x, y) += w * sw_transition(T, sx, space.config(y), space.params, free_set);
        }
    }
    return M;
}

TransitionMatrix glauber_matrix(const SpinSpace& space) {
    const auto& T = *space.T;
    int64_t n = space.n_states;
    TransitionMatrix M;
    M.P = Eigen::MatrixXd::Zero(n, n);
    M.pi = Eigen::Map<const Eigen::VectorXd>(space.pi.data(), n);
    double w = 1.0 / T.n_internal;
    for (int v = 0; v < T.n_internal; ++v) {
        Fibration fib = spin_fibration(space, {v});
        M.P += w * fib.projection_kernel();
    }
    return M;
}

TransitionMatrix block_hb_matrix(const SpinSpace& space, const BlockSpec& blocks) {
    int64_t n = space.n_states;
    TransitionMatrix M;
    M.P = Eigen::MatrixXd::Zero(n, n);
    M.pi = Eigen::Map<const Eigen::VectorXd>(space.pi.data(), n);
    double w = 1.0 / blocks.blocks.size();
    for (const auto& blk : blocks.blocks) {
        Fibration fib = spin_fibration(space, blk);
        M.P += w * fib.projection_kernel();
    }
    return M;
}

TransitionMatrix tiled_block_matrix(const SpinSpace& space, int ell) {
    return block_hb_matrix(space, BlockSpec::tiled(*space.T, ell));
}

TransitionMatrix sw_restricted_matrix(const SpinSpace& space, const std::vector<int>& block,
                                      const SpinConfig& eta) {
    const auto& T = *space.T;
    int q = space.params.q;
    std::vector<int> blk = block;
    std::sort(blk.begin(), blk.end());
    std::vector<char> free_set(T.n_internal, 0);
    for (int v : blk) free_set[v] = 1;

    uint64_t n = pow_checked(q, static_cast<int>(blk.size()), kDefaultMatrixCap,
                             "sw_restricted_matrix");
    auto config_of = [&](uint64_t code) {
        SpinConfig sc = eta;
        for (int v : blk) {
            sc.s[v] = static_cast<uint8_t>(code % q);
            code /= q;
        }
        return sc;
    };
    // conditional stationary measure on the block
    auto table = potts_measure(T, blk, eta, space.params);
    TransitionMatrix M;
    M.P.resize(n, n);
    M.pi = Eigen::Map<const Eigen::VectorXd>(table.prob.data(), n);
    for (uint64_t x = 0; x < n; ++x) {
        SpinConfig sx = config_of(x);
        for (uint64_t y = 0; y < n; ++y)
            M.P(x, y) = sw_transition(T, sx, config_of(y), space.params, free_set);
    }
    return M;
}

double comparison_gamma_min(const SpinSpace& space, const BlockSpec& blocks) {
    double gmin = 1.0;
    for (const auto& pieces : blocks.pieces) {
        for (const auto& piece : pieces) {
            for (uint64_t eta_code = 0; eta_code < space.n_states; ++eta_code) {
                SpinConfig eta = space.config(eta_code);
                auto M = sw_restricted_matrix(space, piece, eta);
                gmin = std::min(gmin, spectral_gap(M).gap);
            }
        }
    }
    return gmin;
}

TransitionMatrix rc_edge_matrix(const RCInstance& inst, double p, int q, uint64_t cap) {
    int m = static_cast<int>(inst.g.edges.size());
    uint64_t n = pow_checked(2, m, cap, "rc_edge_matrix");
    auto table = rc_measure(inst, p, q, cap);
    TransitionMatrix M;
    M.P = Eigen::MatrixXd::Zero(n, n);
    M.pi = Eigen::Map<const Eigen::VectorXd>(table.prob.data(), n);
    double cut_prob = p / (q * (1.0 - p) + p);
    for (uint64_t a = 0; a < n; ++a) {
        for (int e = 0; e < m; ++e) {
            uint64_t without = a & ~(uint64_t(1) << e);
            auto rep = components(inst, without);
            int ru = rep.comp[inst.g.edges[e].first];
            int rv = rep.comp[inst.g.edges[e].second];
            double th = (ru != rv) ? cut_prob : p;  // cut-edge iff endpoints split without e
            M.P(a, without | (uint64_t(1) << e)) += th / m;
            M.P(a, without) += (1.0 - th) / m;
        }
    }
    return M;
}

TransitionMatrix rc_sw_matrix(const RCInstance& inst, double p, int q, uint64_t cap) {
    bool wired_ok = false;
    if (inst.wiring.size() == 1) {
        size_t nb = 0;
        for (bool b : inst.is_boundary) nb += b;
        wired_ok = inst.wiring[0].size() == nb;
    }
    if (!wired_ok) throw Error("rc_sw_matrix: defined for the wired boundary condition");

    int m = static_cast<int>(inst.g.edges.size());
    uint64_t n = pow_checked(2, m, cap, "rc_sw_matrix");
    auto table = rc_measure(inst, p, q, cap);
    TransitionMatrix M;
    M.P = Eigen::MatrixXd::Zero(n, n);
    M.pi = Eigen::Map<const Eigen::VectorXd>(table.prob.data(), n);

    for (uint64_t a = 0; a < n; ++a) {
        auto rep = components(inst, a);
        // enumerate spin labels of the components; group by representative
        std::vector<int> roots;
        std::vector<int> root_index(inst.g.nv, -1);
        for (int64_t v = 0; v < inst.g.nv; ++v)
            if (root_index[rep.comp[v]] < 0) {
                root_index[rep.comp[v]] = static_cast<int>(roots.size());
                roots.push_back(rep.comp[v]);
            }
        int nc = static_cast<int>(roots.size());
        uint64_t n_assign = 1;
        for (int i = 0; i < nc; ++i) n_assign *= q;
        double w_assign = 1.0 / static_cast<double>(n_assign);
        std::vector<int> spin(inst.g.nv);
        for (uint64_t asg = 0; asg < n_assign; ++asg) {
            uint64_t c = asg;
            std::vector<int> comp_spin(nc);
            for (int i = 0; i < nc; ++i) {
                comp_spin[i] = static_cast<int>(c % q);
                c /= q;
            }
            for (int64_t v = 0; v < inst.g.nv; ++v)
                spin[v] = comp_spin[root_index[rep.comp[v]]];
            uint64_t mono = 0;
            for (int e = 0; e < m; ++e)
                if (spin[inst.g.edges[e].first] == spin[inst.g.edges[e].second])
                    mono |= uint64_t(1) << e;
            // percolate: each mono edge kept with prob p
            uint64_t sub = mono;
            int mono_k = __builtin_popcountll(mono);
            while (true) {
                int k = __builtin_popcountll(sub);
                M.P(a, sub) +=
                    w_assign * std::pow(p, k) * std::pow(1.0 - p, mono_k - k);
                if (sub == 0) break;
                sub = (sub - 1) & mono;
            }
        }
    }
    return M;
}

TransitionMatrix single_bond_matrix(const RCInstance& inst, double p, int q, uint64_t cap) {
    int m = static_cast<int>(inst.g.edges.size());
    uint64_t n = pow_checked(2, m, cap, "single_bond_matrix");
    auto table = rc_measure(inst, p, q, cap);
    TransitionMatrix M;
    M.P = Eigen::MatrixXd::Zero(n, n);
    M.pi = Eigen::Map<const Eigen::VectorXd>(table.prob.data(), n);
    for (uint64_t a = 0; a < n; ++a) {
        auto rep = components(inst, a);
        for (int e = 0; e < m; ++e) {
            int ru = rep.comp[inst.g.edges[e].first];
            int rv = rep.comp[inst.g.edges[e].second];
            // same component: endpoints always take the same spin
            double p_mono = (ru == rv) ? 1.0 : 1.0 / q;
            uint64_t with_e = a | (uint64_t(1) << e), without = a & ~(uint64_t(1) << e);
            M.P(a, with_e) += p_mono * p / m;
            M.P(a, without) += p_mono * (1.0 - p) / m;
            M.P(a, a) += (1.0 - p_mono) / m;
        }
    }
    return M;
}

namespace {
// c(A): components of (V u dV, A) fully inside V; c_k(A): fully inside block
int64_t count_free_components(const RCInstance& inst, uint64_t mask,
                              const std::vector<int>* block) {
    auto rep = components(inst, mask, block);
    return block ? rep.c_block : rep.c_free;
}
}  // namespace

UllrichFactors ullrich_factors(const SpinSpace& space, const BlockSpec* blocks, uint64_t cap) {
    const auto& T = *space.T;
    int q = space.params.q;
    double p = space.params.p();
    int m = static_cast<int>(T.edges.size());
    uint64_t n_edge = pow_checked(2, m, cap, "ullrich joint space");
    uint64_t n_spin = space.n_states;
    uint64_t n_joint = n_spin * n_edge;
    if (n_joint > cap) throw Error("exact mode infeasible: ullrich joint space exceeds the cap");

    UllrichFactors F;
    F.mu = Eigen::Map<const Eigen::VectorXd>(space.pi.data(), n_spin);
    auto es = edwards_sokal_measure(T, space.boundary, space.params, cap);
    F.nu = Eigen::Map<const Eigen::VectorXd>(es.prob.data(), n_joint);

    // T(sigma,(A,eta)) = 1(sigma=eta) 1(A<=M(sigma)) p^{|A|}(1-p)^{|M\A|}
    F.T = Eigen::MatrixXd::Zero(n_spin, n_joint);
    std::vector<uint64_t> mono_of(n_spin);
    for (uint64_t s = 0; s < n_spin; ++s) {
        SpinConfig sc = space.config(s);
        uint64_t mono = mono_mask(T, sc);
        mono_of[s] = mono;
        int mono_k = __builtin_popcountll(mono);
        uint64_t a = mono;
        while (true) {
            int k = __builtin_popcountll(a);
            F.T(s, s * n_edge + a) =
                (k ? std::pow(p, k) : 1.0) * std::pow(1.0 - p, mono_k - k);
            if (a == 0) break;
            a = (a - 1) & mono;
        }
    }
    // T*((A,eta),sigma) = 1(eta=sigma)
    F.Tstar = Eigen::MatrixXd::Zero(n_joint, n_spin);
    for (uint64_t s = 0; s < n_spin; ++s)
        for (uint64_t a = 0; a < n_edge; ++a) F.Tstar(s * n_edge + a, s) = 1.0;

    // R((A,sigma),(B,eta)) = 1(A=B) 1(A<=M(sigma)^M(eta)) q^{-c(A)}
    RCInstance inst = rc_instance_from_tree(T, RCBoundary::free());
    std::vector<double> qpow_cfree(n_edge);
    for (uint64_t a = 0; a < n_edge; ++a)
        qpow_cfree[a] = std::pow(double(q), -double(count_free_components(inst, a, nullptr)));
    F.R = Eigen::MatrixXd::Zero(n_joint, n_joint);
    for (uint64_t s = 0; s < n_spin; ++s)
        for (uint64_t t = 0; t < n_spin; ++t) {
            uint64_t both = mono_of[s] & mono_of[t];
            uint64_t a = both;
            while (true) {
                F.R(s * n_edge + a, t * n_edge + a) = qpow_cfree[a];
                if (a == 0) break;
                a = (a - 1) & both;
            }
        }

    if (blocks) {
        for (const auto& blk : blocks->blocks) {
            std::vector<char> in_block(T.n_internal, 0);
            for (int v : blk) in_block[v] = 1;
            std::vector<double> qpow_ck(n_edge);
            for (uint64_t a = 0; a < n_edge; ++a)
                qpow_ck[a] = std::pow(double(q), -double(count_free_components(inst, a, &blk)));
            Eigen::MatrixXd Qk = Eigen::MatrixXd::Zero(n_joint, n_joint);
            for (uint64_t s = 0; s < n_spin; ++s) {
                SpinConfig cs = space.config(s);
                for (uint64_t t = 0; t < n_spin; ++t) {
                    SpinConfig ct = space.config(t);
                    bool same_off = true;
                    for (int v = 0; v < T.n_internal && same_off; ++v)
                        if (!in_block[v] && cs.s[v] != ct.s[v]) same_off = false;
                    if (!same_off) continue;
                    uint64_t both = mono_of[s] & mono_of[t];
                    uint64_t a = both;
                    while (true) {
                        Qk(s * n_edge + a, t * n_edge + a) = qpow_ck[a];
                        if (a == 0) break;
                        a = (a - 1) & both;
                    }
                }
            }
            F.Q.push_back(std::move(Qk));
        }
    }
    return F;
}

double UllrichFactors::adjoint_error() const {
    double err = 0.0;
    for (int64_t s = 0; s < T.rows(); ++s)
        for (int64_t j = 0; j < T.cols(); ++j)
            err = std::max(err, std::abs(mu[s] * T(s, j) - nu[j] * Tstar(j, s)));
    return err;
}

double UllrichFactors::idempotent_error(size_t k) const {
    return (Q[k] * Q[k] - Q[k]).cwiseAbs().maxCoeff();
}

double UllrichFactors::sandwich_error(size_t k) const {
    return (R - Q[k] * R * Q[k]).cwiseAbs().maxCoeff();
}

}  // namespace swtree
