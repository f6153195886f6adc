#include "doctest.h"
#include "swtree/model.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace swtree;

namespace {

// independent single-site oracle: enumerate spins at one vertex directly
std::vector<double> single_site_oracle(int q, double beta, const std::vector<int>& nbr_spins) {
    std::vector<double> w(q), out(q);
    double z = 0;
    for (int s = 0; s < q; ++s) {
        int bi = 0;
        for (int t : nbr_spins) bi += (t != s);
        w[s] = std::exp(-beta * bi);
        z += w[s];
    }
    for (int s = 0; s < q; ++s) out[s] = w[s] / z;
    return out;
}

}  // namespace

TEST_CASE("potts at beta=0 is uniform") {
    auto T = build_tree(2, 1);
    PottsParams pp(3, 0.0);
    auto b = SpinBoundary::mono(T, 3, 0);
    auto eta = SpinConfig::from_code(T, 3, 0, b);
    std::vector<int> region{0, 1, 2};
    auto table = potts_measure(T, region, eta, pp);
    CHECK(table.size() == 27);
    for (double p : table.prob) CHECK(p == doctest::Approx(1.0 / 27).epsilon(1e-13));
}

TEST_CASE("single leaf conditional: mu(0) = 8/9 at q=2 beta=ln2") {
    auto T = build_tree(2, 1);
    PottsParams pp(2, std::log(2.0));
    auto b = SpinBoundary::mono(T, 2, 0);
    auto eta = SpinConfig::from_code(T, 2, 0, b);  // everything spin 0
    int leaf = 1;
    auto table = potts_measure(T, {leaf}, eta, pp);
    auto oracle = single_site_oracle(2, std::log(2.0), {0, 0, 0});
    CHECK(table.prob[0] == doctest::Approx(oracle[0]).epsilon(1e-14));
    CHECK(table.prob[0] == doctest::Approx(8.0 / 9.0).epsilon(1e-14));
    CHECK(table.prob[1] == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("empty region is the point mass") {
    auto T = build_tree(2, 1);
    PottsParams pp(2, 1.0);
    auto b = SpinBoundary::mono(T, 2, 1);
    auto eta = SpinConfig::from_code(T, 2, 5, b);
    auto table = potts_measure(T, {}, eta, pp);
    CHECK(table.size() == 1);
    CHECK(table.prob[0] == 1.0);
}

TEST_CASE("partition function invariant under relabeling the mono boundary") {
    auto T = build_tree(2, 2);
    PottsParams pp(3, 0.7);
    std::vector<int> region;
    for (int v = 0; v < T.n_internal; ++v) region.push_back(v);
    double z0 = 0, z2 = 0;
    {
        auto b = SpinBoundary::mono(T, 3, 0);
        auto eta = SpinConfig::from_code(T, 3, 0, b);
        z0 = potts_measure(T, region, eta, pp).logZ;
    }
    {
        auto b = SpinBoundary::mono(T, 3, 2);
        auto eta = SpinConfig::from_code(T, 3, 0, b);
        z2 = potts_measure(T, region, eta, pp).logZ;
    }
    CHECK(z0 == doctest::Approx(z2).epsilon(1e-13));
}

TEST_CASE("rc wired on d=2 h=0: pi(both edges open) = 1/5 at p=1/2 q=2") {
    auto T = build_tree(2, 0);
    auto inst = rc_instance_from_tree(T, RCBoundary::wired());
    auto table = rc_measure(inst, 0.5, 2);
    CHECK(table.size() == 4);
    CHECK(table.prob[3] == doctest::Approx(0.2).epsilon(1e-14));
    // hand enumeration: weights 1, 1/2, 1/2, 1/2 after scaling
    double w_empty = table.prob[0];
    CHECK(table.prob[1] == doctest::Approx(w_empty / 2).epsilon(1e-13));
}

TEST_CASE("rc free boundary equals product percolation") {
    auto T = build_tree(2, 1);
    auto inst = rc_instance_from_tree(T, RCBoundary::free());
    double p = 0.5;
    int q = 2;
    auto table = rc_measure(inst, p, q);
    double r = p / (q * (1 - p) + p);
    CHECK(r == doctest::Approx(1.0 / 3).epsilon(1e-15));
    int m = static_cast<int>(inst.g.edges.size());
    std::vector<double> prod(table.size());
    for (uint64_t mask = 0; mask < (uint64_t)table.size(); ++mask) {
        int k = __builtin_popcountll(mask);
        prod[mask] = std::pow(r, k) * std::pow(1 - r, m - k);
    }
    CHECK(tv_distance(table.prob, prod) <= 1e-12);
}

TEST_CASE("rc with q=1 is Bernoulli(p) regardless of wiring") {
    auto T = build_tree(2, 1);
    for (auto bc : {RCBoundary::free(), RCBoundary::wired()}) {
        auto inst = rc_instance_from_tree(T, bc);
        double p = 0.37;
        auto table = rc_measure(inst, p, 1);
        int m = static_cast<int>(inst.g.edges.size());
        for (uint64_t mask = 0; mask < (uint64_t)table.size(); ++mask) {
            int k = __builtin_popcountll(mask);
            CHECK(table.prob[mask] ==
                  doctest::Approx(std::pow(p, k) * std::pow(1 - p, m - k)).epsilon(1e-12));
        }
    }
}

TEST_CASE("component counts") {
    auto T = build_tree(2, 0);
    auto free_inst = rc_instance_from_tree(T, RCBoundary::free());
    auto rep = components(free_inst, 0);
    CHECK(rep.c_xi == 3);
    CHECK(rep.c_free == 1);  // just the root

    auto wired = rc_instance_from_tree(T, RCBoundary::wired());
    rep = components(wired, 0);
    CHECK(rep.c_xi == 2);
    rep = components(wired, 0b11);
    CHECK(rep.c_xi == 1);
    CHECK(rep.c_free == 0);
}

TEST_CASE("edwards-sokal: support, marginals") {
    auto T = build_tree(2, 0);
    PottsParams pp(2, std::log(2.0));
    auto b = SpinBoundary::mono(T, 2, 0);
    auto es = edwards_sokal_measure(T, b, pp);
    uint64_t n_edge = 4;

    // A not contained in M(sigma) has zero mass
    for (uint64_t code = 0; code < 2; ++code) {
        SpinConfig sc = SpinConfig::from_code(T, 2, code, b);
        uint64_t mono = mono_mask(T, sc);
        for (uint64_t a = 0; a < n_edge; ++a)
            if ((a & mono) != a) CHECK(es.prob[code * n_edge + a] == 0.0);
    }

    // spin marginal matches the exact Potts table
    auto spin_marg = es_spin_marginal(T, es);
    auto potts = potts_measure(T, {0}, SpinConfig::from_code(T, 2, 0, b), pp);
    for (int i = 0; i < 2; ++i)
        CHECK(spin_marg[i] == doctest::Approx(potts.prob[i]).epsilon(1e-12));

    // edge marginal matches the wired random-cluster measure (mono boundary)
    auto edge_marg = es_edge_marginal(T, es);
    auto rc = rc_measure(rc_instance_from_tree(T, RCBoundary::wired()), pp.p(), 2);
    CHECK(tv_distance(edge_marg, rc.prob) <= 1e-12);
}

TEST_CASE("edwards-sokal at beta=0 concentrates on the empty edge set") {
    auto T = build_tree(2, 1);
    PottsParams pp(2, 0.0);
    auto b = SpinBoundary::mono(T, 2, 0);
    auto es = edwards_sokal_measure(T, b, pp);
    uint64_t n_edge = uint64_t(1) << T.edges.size();
    auto edge_marg = es_edge_marginal(T, es);
    CHECK(edge_marg[0] == doctest::Approx(1.0).epsilon(1e-14));
    auto spin_marg = es_spin_marginal(T, es);
    for (double x : spin_marg) CHECK(x == doctest::Approx(1.0 / 8).epsilon(1e-13));
    CHECK(n_edge == 64);
}

TEST_CASE("table caps produce explicit errors") {
    auto T = build_tree(2, 2);
    PottsParams pp(2, 1.0);
    auto b = SpinBoundary::mono(T, 2, 0);
    auto eta = SpinConfig::from_code(T, 2, 0, b);
    std::vector<int> region;
    for (int v = 0; v < T.n_internal; ++v) region.push_back(v);
    CHECK_THROWS_AS(potts_measure(T, region, eta, pp, 64), Error);
    CHECK_THROWS_AS(rc_measure(rc_instance_from_tree(T, RCBoundary::free()), 0.5, 2, 64), Error);
}

TEST_CASE("edge marginal dp agrees with brute-force enumeration") {
    auto T = build_tree(2, 2);
    PottsParams pp(2, std::log(2.0));
    auto b = SpinBoundary::random(T, 2, 11);
    auto eta = SpinConfig::from_code(T, 2, 0, b);
    std::vector<int> region;
    for (int v = 0; v < T.n_internal; ++v) region.push_back(v);
    auto table = potts_measure(T, region, eta, pp);

    int u = 1, v = 3;  // internal edge
    std::vector<double> brute(4, 0.0);
    for (uint64_t code = 0; code < (uint64_t)table.size(); ++code) {
        SpinConfig sc = SpinConfig::from_code(T, 2, code, b);
        brute[sc.s[u] * 2 + sc.s[v]] += table.prob[code];
    }
    auto dp = edge_marginal_dp(T, eta, u, v, pp, -1, true);
    for (int i = 0; i < 4; ++i) CHECK(dp[i] == doctest::Approx(brute[i]).epsilon(1e-11));
}

TEST_CASE("conditional sampling hits the exact conditional frequencies") {
    auto T = build_tree(2, 1);
    PottsParams pp(2, std::log(2.0));
    auto b = SpinBoundary::mono(T, 2, 0);
    SpinConfig spins = SpinConfig::from_code(T, 2, 0, b);
    CounterRng rng{123};
    int hits = 0, trials = 200000;
    for (int t = 0; t < trials; ++t) {
        spins.s[1] = 1;  // scramble, sampler must overwrite
        conditional_sample(T, spins, {1}, pp, rng, t);
        hits += spins.s[1] == 0;
    }
    double freq = hits / double(trials);
    double se = std::sqrt((8.0 / 9) * (1.0 / 9) / trials);
    CHECK(std::abs(freq - 8.0 / 9) < 3.5 * se);
}

TEST_CASE("spin marginal of the joint measure equals potts for any boundary") {
    auto T = build_tree(2, 1);
    PottsParams pp(2, 0.8);
    for (auto b : {SpinBoundary::mono(T, 2, 1), SpinBoundary::random(T, 2, 31)}) {
        auto es = edwards_sokal_measure(T, b, pp);
        auto spin_marg = es_spin_marginal(T, es);
        std::vector<int> region{0, 1, 2};
        auto potts = potts_measure(T, region, SpinConfig::from_code(T, 2, 0, b), pp);
        for (size_t i = 0; i < spin_marg.size(); ++i)
            CHECK(spin_marg[i] == doctest::Approx(potts.prob[i]).epsilon(1e-12));
    }
}

TEST_CASE("infinite beta (p = 1) is rejected at construction") {
    CHECK_THROWS_AS(PottsParams(2, std::numeric_limits<double>::infinity()), Error);
    CHECK_THROWS_AS(PottsParams(1, 1.0), Error);
    CHECK_THROWS_AS(PottsParams(2, -0.5), Error);
}
