#include "doctest.h"
#include "swtree/kernels.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace swtree;

namespace {

// Independent SW kernel oracle: enumerate edge subsets and recolorings.
Eigen::MatrixXd sw_brute_force(const TreeTopology& T, const SpinSpace& space,
                               const std::vector<char>& free_set) {
    int q = space.params.q;
    double p = space.params.p();
    int64_t n = space.n_states;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    int m = static_cast<int>(T.edges.size());
    for (int64_t x = 0; x < n; ++x) {
        SpinConfig sx = space.config(x);
        std::vector<int> mono;
        for (int e = 0; e < m; ++e)
            if (sx.s[T.edges[e].u] == sx.s[T.edges[e].v]) mono.push_back(e);
        for (uint64_t sub = 0; sub < (uint64_t(1) << mono.size()); ++sub) {
            double pa = 1.0;
            std::vector<int> uf(T.n_total);
            std::iota(uf.begin(), uf.end(), 0);
            std::function<int(int)> find = [&](int a) { return uf[a] == a ? a : uf[a] = find(uf[a]); };
            for (size_t i = 0; i < mono.size(); ++i) {
                if (sub >> i & 1) {
                    pa *= p;
                    uf[find(T.edges[mono[i]].u)] = find(T.edges[mono[i]].v);
                } else {
                    pa *= 1.0 - p;
                }
            }
            if (pa == 0.0) continue;
            // free components: fully internal and inside the free set
            std::vector<char> blocked(T.n_total, 0);
            for (int v = 0; v < T.n_total; ++v)
                if (T.is_boundary(v) || !free_set[v]) blocked[find(v)] = 1;
            std::vector<int> free_roots;
            for (int v = 0; v < T.n_internal; ++v)
                if (find(v) == v && !blocked[v]) free_roots.push_back(v);
            uint64_t n_assign = 1;
            for (size_t i = 0; i < free_roots.size(); ++i) n_assign *= q;
            for (uint64_t asg = 0; asg < n_assign; ++asg) {
                SpinConfig sy = sx;
                uint64_t c = asg;
                std::vector<int> spin_of(T.n_total, -1);
                for (int r : free_roots) {
                    spin_of[r] = static_cast<int>(c % q);
                    c /= q;
                }
                for (int v = 0; v < T.n_internal; ++v)
                    if (spin_of[find(v)] >= 0) sy.s[v] = static_cast<uint8_t>(spin_of[find(v)]);
                P(x, static_cast<int64_t>(sy.code(T, q))) += pa / double(n_assign);
            }
        }
    }
    return P;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

TEST_CASE("sw kernel matches brute-force enumeration") {
    for (int q : {2, 3}) {
        auto T = build_tree(2, 1);
        PottsParams pp(q, std::log(2.0));
        for (auto b : {SpinBoundary::mono(T, q, 0), SpinBoundary::random(T, q, 42)}) {
            SpinSpace space(T, pp, b);
            auto M = sw_matrix(space);
            std::vector<char> all_free(T.n_internal, 1);
            auto brute = sw_brute_force(T, space, all_free);
            CHECK((M.P - brute).cwiseAbs().maxCoeff() <= 1e-13);
        }
    }
}

TEST_CASE("block sw kernel matches brute force with a frozen part") {
    auto T = build_tree(2, 1);
    PottsParams pp(2, 0.9);
    SpinSpace space(T, pp, SpinBoundary::mono(T, 2, 1));
    auto blocks = BlockSpec::tiled(T, 1);
    auto M = block_sw_matrix(space, blocks);
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(space.n_states, space.n_states);
    for (const auto& blk : blocks.blocks) {
        std::vector<char> free_set(T.n_internal, 0);
        for (int v : blk) free_set[v] = 1;
        expect += sw_brute_force(T, space, free_set) / double(blocks.blocks.size());
    }
    CHECK((M.P - expect).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("sw at beta=0 jumps to uniform in one step") {
    auto T = build_tree(2, 1);
    PottsParams pp(2, 0.0);
    SpinSpace space(T, pp, SpinBoundary::mono(T, 2, 0));
    auto M = sw_matrix(space);
    for (int64_t x = 0; x < M.size(); ++x)
        for (int64_t y = 0; y < M.size(); ++y)
            CHECK(M.P(x, y) == doctest::Approx(1.0 / 8).epsilon(1e-13));
}

TEST_CASE("spin chains: row sums, stationarity, reversibility, psd") {
    auto T = build_tree(2, 2);
    PottsParams pp(2, std::log(2.0));
    SpinSpace space(T, pp, SpinBoundary::mono(T, 2, 0));
    auto blocks = BlockSpec::tiled(T, 1);
    for (auto M : {sw_matrix(space), glauber_matrix(space), block_hb_matrix(space, blocks),
                   block_sw_matrix(space, blocks)}) {
        CHECK(M.max_row_sum_error() <= 1e-12);
        CHECK(M.stationarity_error() <= 1e-12);
        CHECK(M.detailed_balance_error() <= 1e-10);
    }
    CHECK(spectral_gap(sw_matrix(space)).psd);
    CHECK(spectral_gap(block_hb_matrix(space, blocks)).psd);
}

TEST_CASE("sw stationary left eigenvector equals the Potts measure") {
    auto T = build_tree(2, 1);
    PottsParams pp(2, std::log(2.0));
    SpinSpace space(T, pp, SpinBoundary::mono(T, 2, 0));
    auto M = sw_matrix(space);
    Eigen::VectorXd left = M.P.transpose() * M.pi;
    CHECK((left - M.pi).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("glauber on a single free vertex: both rows are stationary") {
    auto T = build_tree(2, 0);
    PottsParams pp(2, 1.7);
    SpinSpace space(T, pp, SpinBoundary::mono(T, 2, 0));
    auto M = glauber_matrix(space);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) CHECK(M.P(x, y) == doctest::Approx(M.pi[y]).epsilon(1e-12));
}

TEST_CASE("block sw with the whole tree reproduces sw") {
    auto T = build_tree(2, 1);
    PottsParams pp(2, std::log(2.0));
    SpinSpace space(T, pp, SpinBoundary::mono(T, 2, 0));
    auto M1 = sw_matrix(space);
    auto M2 = block_sw_matrix(space, BlockSpec::whole_tree(T));
    CHECK((M1.P - M2.P).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("tiled block heat-bath is stationary for mu") {
    auto T = build_tree(2, 2);
    PottsParams pp(2, std::log(2.0));
    SpinSpace space(T, pp, SpinBoundary::mono(T, 2, 0));
    auto M = tiled_block_matrix(space, 1);
    CHECK(M.stationarity_error() <= 1e-12);
}

TEST_CASE("rc kernels: stationarity and reversibility on the wired tree") {
    for (int h : {0, 1}) {
        auto T = build_tree(2, h);
        auto inst = rc_instance_from_tree(T, RCBoundary::wired());
        double p = 0.5;
        int q = 2;
        for (auto M : {rc_edge_matrix(inst, p, q), rc_sw_matrix(inst, p, q),
                       single_bond_matrix(inst, p, q)}) {
            CHECK(M.max_row_sum_error() <= 1e-12);
            CHECK(M.stationarity_error() <= 1e-12);
            CHECK(M.detailed_balance_error() <= 1e-10);
        }
    }
}

TEST_CASE("rc edge heat-bath inclusion probabilities") {
    auto T = build_tree(2, 0);
    auto inst = rc_instance_from_tree(T, RCBoundary::wired());
    auto M = rc_edge_matrix(inst, 0.5, 2);
    // from the empty set both edges are cut-edges: inclusion probability 1/3
    CHECK(M.P(0, 1) == doctest::Approx((1.0 / 3) / 2).epsilon(1e-13));
    CHECK(M.P(0, 2) == doctest::Approx((1.0 / 3) / 2).epsilon(1e-13));
    // with the other edge present, the chosen edge still toggles the wired count
    auto inst_free = rc_instance_from_tree(T, RCBoundary::free());
    auto Mf = rc_edge_matrix(inst_free, 0.5, 1);
    // q=1: inclusion probability p regardless of cut status
    CHECK(Mf.P(0, 1) == doctest::Approx(0.5 / 2).epsilon(1e-13));
}

TEST_CASE("rc sw with q=1 forgets the state") {
    auto T = build_tree(2, 0);
    auto inst = rc_instance_from_tree(T, RCBoundary::wired());
    double p = 0.3;
    auto M = rc_sw_matrix(inst, p, 1);
    for (int64_t x = 0; x < M.size(); ++x)
        for (uint64_t y = 0; y < 4; ++y) {
            int k = __builtin_popcountll(y);
            CHECK(M.P(x, y) == doctest::Approx(std::pow(p, k) * std::pow(1 - p, 2 - k)).epsilon(1e-12));
        }
    CHECK_THROWS_AS(rc_sw_matrix(rc_instance_from_tree(T, RCBoundary::free()), p, 2), Error);
}

TEST_CASE("single bond updates a same-component edge with probability p") {
    auto T = build_tree(2, 1);
    auto inst = rc_instance_from_tree(T, RCBoundary::wired());
    double p = 0.4;
    auto M = single_bond_matrix(inst, p, 2);
    uint64_t full = (uint64_t(1) << inst.g.edges.size()) - 1;
    int m = static_cast<int>(inst.g.edges.size());
    for (int e = 0; e < m; ++e)
        CHECK(M.P(full, full & ~(uint64_t(1) << e)) == doctest::Approx((1 - p) / m).epsilon(1e-13));
}

TEST_CASE("ullrich decomposition SW = T R T*") {
    for (int q : {2, 3})
        for (int h : {0, 1}) {
            auto T = build_tree(2, h);
            PottsParams pp(q, std::log(2.0));
            SpinSpace space(T, pp, SpinBoundary::mono(T, q, 0));
            auto blocks = BlockSpec::tiled(T, 1);
            auto F = ullrich_factors(space, &blocks);
            auto SW = sw_matrix(space);
            Eigen::MatrixXd recon = F.T * F.R * F.Tstar;
            CHECK((SW.P - recon).cwiseAbs().maxCoeff() <= 1e-12);

            Eigen::MatrixXd reconD = Eigen::MatrixXd::Zero(space.n_states, space.n_states);
            for (const auto& Qk : F.Q) reconD += F.T * Qk * F.Tstar;
            reconD /= double(F.Q.size());
            auto SWD = block_sw_matrix(space, blocks);
            CHECK((SWD.P - reconD).cwiseAbs().maxCoeff() <= 1e-12);

            CHECK(F.adjoint_error() <= 1e-12);
            for (size_t k = 0; k < F.Q.size(); ++k) {
                CHECK(F.idempotent_error(k) <= 1e-12);
                CHECK(F.sandwich_error(k) <= 1e-12);
            }
        }
}

TEST_CASE("comparison chain: dirichlet ordering and gamma_min") {
    auto T = build_tree(2, 1);
    PottsParams pp(2, std::log(2.0));
    SpinSpace space(T, pp, SpinBoundary::mono(T, 2, 0));
    auto blocks = BlockSpec::tiled(T, 1);
    auto SW = sw_matrix(space);
    auto SWD = block_sw_matrix(space, blocks);
    auto BD = block_hb_matrix(space, blocks);
    double gamma = comparison_gamma_min(space, blocks);
    CHECK(gamma > 0.0);

    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int t = 0; t < 200; ++t) {
        Eigen::VectorXd f(space.n_states);
        for (uint64_t i = 0; i < space.n_states; ++i) f[i] = U(gen);
        double e_sw = dirichlet_form(SW, f), e_swd = dirichlet_form(SWD, f),
               e_bd = dirichlet_form(BD, f);
        CHECK(e_sw >= e_swd - 1e-12);
        CHECK(e_swd >= gamma * e_bd - 1e-12);
    }
    CHECK(spectral_gap(SW).gap >= gamma * spectral_gap(BD).gap - 1e-12);

    // product structure: gap of the block-restricted SW equals the piece minimum
    for (size_t k = 0; k < blocks.blocks.size(); ++k) {
        for (uint64_t eta_code = 0; eta_code < space.n_states; eta_code += 3) {
            SpinConfig eta = space.config(eta_code);
            auto whole = sw_restricted_matrix(space, blocks.blocks[k], eta);
            double expect = 1.0;
            for (const auto& piece : blocks.pieces[k])
                expect = std::min(expect, spectral_gap(sw_restricted_matrix(space, piece, eta)).gap);
            CHECK(spectral_gap(whole).gap == doctest::Approx(expect).epsilon(1e-9));
            // one-step coupling bound: gap >= exp(-beta |E_kj|)
            for (const auto& piece : blocks.pieces[k]) {
                int ekj = 0;
                std::vector<char> in_piece(T.n_total, 0);
                for (int v : piece) in_piece[v] = 1;
                for (const auto& e : T.edges) ekj += in_piece[e.u] || in_piece[e.v];
                CHECK(spectral_gap(sw_restricted_matrix(space, piece, eta)).gap >=
                      std::exp(-pp.beta * ekj) - 1e-12);
            }
        }
    }
}

TEST_CASE("restricted sw matrices are stationary for the conditional measure") {
    auto T = build_tree(2, 1);
    PottsParams pp(3, 0.7);
    SpinSpace space(T, pp, SpinBoundary::random(T, 3, 5));
    auto blocks = BlockSpec::tiled(T, 1);
    SpinConfig eta = space.config(11);
    auto M = sw_restricted_matrix(space, blocks.blocks[0], eta);
    CHECK(M.max_row_sum_error() <= 1e-12);
    CHECK(M.stationarity_error() <= 1e-12);
    CHECK(M.detailed_balance_error() <= 1e-10);
}
