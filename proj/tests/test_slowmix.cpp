#include "doctest.h"
#include "swtree/slowmix.hpp"

#include <cmath>
#include <set>

using namespace swtree;

TEST_CASE("subdivision counts and shapes") {
    Graph single = read_edge_list("2 1\n0 1\n");
    auto sh = subdivide(single);
    CHECK(sh.nv == 3);
    CHECK(sh.edges.size() == 2);

    Graph triangle = read_edge_list("3 3\n0 1\n1 2\n0 2\n");
    auto th = subdivide(triangle);
    CHECK(th.nv == 6);
    CHECK(th.edges.size() == 6);
    std::vector<int> deg(th.nv, 0);
    for (auto [u, v] : th.edges) {
        ++deg[u];
        ++deg[v];
    }
    for (int d : deg) CHECK(d == 2);  // a six-cycle

    Graph ten = read_edge_list("6 10\n0 1\n0 2\n0 3\n0 4\n0 5\n1 2\n1 3\n1 4\n1 5\n2 3\n");
    CHECK(subdivide(ten).edges.size() == 20);

    CHECK_THROWS_AS(read_edge_list("2 2\n0 1\n1 0\n"), Error);
    CHECK_THROWS_AS(read_edge_list("2 1\n0 0\n"), Error);
}

TEST_CASE("transferred parameter formula") {
    CHECK(transferred_p(0.5, 2) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(transferred_p(1.0 / 3, 3) ==
          doctest::Approx((1.0 / 9) / (1.0 / 9 + 2.0 * (1.0 / 3) * (2.0 / 3) + (4.0 / 9) * 3))
              .epsilon(1e-13));
}

TEST_CASE("embedding of a single edge and of a path") {
    Graph single = read_edge_list("2 1\n0 1\n");
    auto spec = embed_boundary(single, 2, 1);
    CHECK(spec.gadgets() == 1);
    CHECK(spec.tree.wiring.empty());  // degree-1 classes are free singletons
    CHECK(spec.a[0] == 3);            // left-most leaves of the first subtree
    CHECK(spec.b[0] == 4);
    CHECK(spec.c[0] == 1);
    CHECK(spec.gadget_edges.size() == 2);
    CHECK(spec.interior.size() == 3);

    Graph path2 = read_edge_list("3 2\n0 1\n1 2\n");
    auto spec2 = embed_boundary(path2, 3, 1);
    // the shared endpoint has degree 2 and wires one leaf of each gadget
    CHECK(spec2.tree.wiring.size() == 1);
    CHECK(spec2.tree.wiring[0].size() == 2);
    std::set<int> cls(spec2.tree.wiring[0].begin(), spec2.tree.wiring[0].end());
    CHECK(cls.count(spec2.b[0]));  // edge 0 = (0,1): endpoint 1 lands on b_0
    CHECK(cls.count(spec2.a[1]));  // edge 1 = (1,2): endpoint 1 lands on a_1

    CHECK_NOTHROW(embed_boundary(path2, 2, 1));  // capacity 2^{h-ell} = 2 = |E|
    CHECK_NOTHROW(embed_boundary(path2, 3, 2));
    Graph big = read_edge_list("4 3\n0 1\n1 2\n2 3\n");
    CHECK_THROWS_AS(embed_boundary(big, 2, 1), Error);
}

TEST_CASE("gap transfer: equal gaps and the projection identity") {
    for (auto [ph, q] : std::vector<std::pair<double, int>>{{0.5, 2}, {1.0 / 3, 3}}) {
        for (const char* g : {"2 1\n0 1\n", "3 2\n0 1\n1 2\n"}) {
            auto rep = gap_transfer_check(read_edge_list(g), ph, q);
            CHECK(rep.gap_diff <= 1e-10);
            CHECK(rep.projection_max_err <= 1e-12);
        }
    }
}

TEST_CASE("both gadget edges present with probability p when endpoints are wired") {
    // u and v connected off the gadget: model by wiring them directly
    double ph = 0.4;
    int q = 3;
    RCInstance inst;
    inst.g.nv = 3;
    inst.g.edges = {{0, 1}, {1, 2}};
    inst.is_boundary = {false, false, false};
    inst.wiring = {{0, 2}};
    auto table = rc_measure(inst, ph, q);
    CHECK(table.prob[3] == doctest::Approx(transferred_p(ph, q)).epsilon(1e-13));
}

TEST_CASE("mhb on the smallest embeddable instance") {
    Graph single = read_edge_list("2 1\n0 1\n");
    auto spec = embed_boundary(single, 2, 1);
    auto M = mhb_matrix(spec, 0.5, 2);
    CHECK(M.size() == 64);
    CHECK(M.max_row_sum_error() <= 1e-12);
    CHECK(M.stationarity_error() <= 1e-11);
    CHECK(M.detailed_balance_error() <= 1e-10);
    CHECK(spectral_gap(M).psd);
}

TEST_CASE("mhb with no gadgets degenerates to a full refresh") {
    Graph empty = read_edge_list("2 0\n");
    auto spec = embed_boundary(empty, 2, 1);
    CHECK(spec.gadgets() == 0);
    auto M = mhb_matrix(spec, 0.5, 2);
    for (int64_t x = 0; x < M.size(); ++x)
        for (int64_t y = 0; y < M.size(); ++y)
            CHECK(M.P(x, y) == doctest::Approx(M.pi[y]).epsilon(1e-12));
}

TEST_CASE("bad set conductance report on the h=3 instance") {
    Graph single = read_edge_list("2 1\n0 1\n");
    auto spec = embed_boundary(single, 3, 1);
    auto rep = bad_set_conductance(spec, 0.5, 2, 1, std::nullopt);
    CHECK(rep.n_states == 16384);
    CHECK(rep.pi_am + rep.pi_am_c == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.phi_am >= 0.0);
    CHECK(rep.phi_am_c >= 0.0);
    CHECK(rep.cheeger_ok);
    CHECK(rep.am_bound_ok);
    CHECK(rep.gap_mhb > 0.0);
}

TEST_CASE("explicit empty or invalid S* is rejected") {
    Graph single = read_edge_list("2 1\n0 1\n");
    auto spec = embed_boundary(single, 2, 1);
    CHECK_THROWS_AS(bad_set_conductance(spec, 0.5, 2, 1, std::vector<uint64_t>{}), Error);
    CHECK_THROWS_AS(bad_set_conductance(spec, 0.5, 2, 1, std::vector<uint64_t>{99}), Error);
}

TEST_CASE("tail monte carlo against the exact binomial oracle") {
    auto rep = tail_monte_carlo(8, 3, 0.5, 6, 200000, 11);
    CHECK(rep.r == doctest::Approx(0.25));
    CHECK(rep.inside_ci);
    CHECK(rep.max_abs_pair_cov <= 0.01);

    auto rep2 = tail_monte_carlo(8, 3, 1e-9, 0, 20000, 4);
    CHECK(rep2.freq == 0.0);

    // M = m: every gadget must connect
    auto rep3 = tail_monte_carlo(6, 2, 0.5, 6, 50000, 5);
    CHECK(rep3.freq == 0.0);
    CHECK(rep3.exact_tail == 0.0);
}
