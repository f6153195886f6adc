#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "swtree/bigmix.hpp"
#include "swtree/dynamics.hpp"
#include "swtree/exact.hpp"
#include "swtree/experiments.hpp"
#include "swtree/kernels.hpp"
#include "swtree/mixcond.hpp"
#include "swtree/slowmix.hpp"

namespace py = pybind11;
using namespace swtree;

namespace {

SpinBoundary make_boundary(const TreeTopology& T, int q, const std::string& spec) {
    if (spec.rfind("mono:", 0) == 0) return SpinBoundary::mono(T, q, std::stoi(spec.substr(5)));
    if (spec.rfind("random:", 0) == 0)
        return SpinBoundary::random(T, q, std::stoull(spec.substr(7)));
    throw Error("boundary spec must be mono:K or random:SEED");
}

RCBoundary make_rc_boundary(const std::string& spec) {
    if (spec == "free") return RCBoundary::free();
    if (spec == "wired") return RCBoundary::wired();
    throw Error("rc boundary spec must be free or wired");
}

std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& M) {
    std::vector<std::vector<double>> out(M.rows());
    for (int64_t i = 0; i < M.rows(); ++i)
        for (int64_t j = 0; j < M.cols(); ++j) out[i].push_back(M(i, j));
    return out;
}

TransitionMatrix make_chain(const std::string& chain, int d, int h, int q, double beta, double p,
                            const std::string& boundary, int ell) {
    auto T = build_tree(d, h);
    if (chain == "sw" || chain == "glauber" || chain == "block-hb" || chain == "block-sw") {
        SpinSpace space(T, PottsParams(q, beta), make_boundary(T, q, boundary));
        if (chain == "sw") return sw_matrix(space);
        if (chain == "glauber") return glauber_matrix(space);
        auto blocks = BlockSpec::tiled(T, ell);
        return chain == "block-hb" ? block_hb_matrix(space, blocks)
                                   : block_sw_matrix(space, blocks);
    }
    auto inst = rc_instance_from_tree(T, make_rc_boundary(boundary));
    if (chain == "rc-edge") return rc_edge_matrix(inst, p, q);
    if (chain == "rc-sw") return rc_sw_matrix(inst, p, q);
    if (chain == "single-bond") return single_bond_matrix(inst, p, q);
    throw Error("unknown chain: " + chain);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exact and sampled Swendsen-Wang / random-cluster dynamics on complete d-ary trees";

    py::register_exception<Error>(m, "SwtreeError");

    m.def(
        "tree_info",
        [](int d, int h, int ell) {
            auto T = build_tree(d, h);
            auto ls = level_sets(T);
            auto bf = decompose(T, ell);
            py::dict out;
            out["n_internal"] = T.n_internal;
            out["n_boundary"] = T.n_boundary;
            out["n_edges"] = T.edges.size();
            out["levels"] = ls.L;
            out["even"] = ls.even;
            out["odd"] = ls.odd;
            out["tiles"] = bf.tiles;
            return out;
        },
        py::arg("d"), py::arg("h"), py::arg("ell") = 1);

    m.def(
        "potts_probs",
        [](int d, int h, int q, double beta, const std::string& boundary) {
            auto T = build_tree(d, h);
            SpinSpace space(T, PottsParams(q, beta), make_boundary(T, q, boundary));
            return space.pi;
        },
        py::arg("d"), py::arg("h"), py::arg("q"), py::arg("beta"), py::arg("boundary") = "mono:0");

    m.def(
        "rc_probs",
        [](int d, int h, double p, int q, const std::string& boundary) {
            auto T = build_tree(d, h);
            auto inst = rc_instance_from_tree(T, make_rc_boundary(boundary));
            return rc_measure(inst, p, q).prob;
        },
        py::arg("d"), py::arg("h"), py::arg("p"), py::arg("q"), py::arg("boundary") = "wired");

    m.def(
        "transition_matrix",
        [](const std::string& chain, int d, int h, int q, double beta, double p,
           const std::string& boundary, int ell) {
            auto M = make_chain(chain, d, h, q, beta, p, boundary, ell);
            py::dict out;
            out["P"] = to_rows(M.P);
            out["pi"] = std::vector<double>(M.pi.begin(), M.pi.end());
            out["row_sum_error"] = M.max_row_sum_error();
            out["stationarity_error"] = M.stationarity_error();
            out["detailed_balance_error"] = M.detailed_balance_error();
            return out;
        },
        py::arg("chain"), py::arg("d"), py::arg("h"), py::arg("q") = 2, py::arg("beta") = 0.0,
        py::arg("p") = 0.5, py::arg("boundary") = "mono:0", py::arg("ell") = 1);

    m.def(
        "spectral_gap",
        [](const std::string& chain, int d, int h, int q, double beta, double p,
           const std::string& boundary, int ell) {
            auto M = make_chain(chain, d, h, q, beta, p, boundary, ell);
            auto s = spectral_gap(M);
            py::dict out;
            out["gap"] = s.gap;
            out["lambda2"] = s.lambda2;
            out["lambda_min"] = s.lambda_min;
            out["psd"] = s.psd;
            return out;
        },
        py::arg("chain"), py::arg("d"), py::arg("h"), py::arg("q") = 2, py::arg("beta") = 0.0,
        py::arg("p") = 0.5, py::arg("boundary") = "mono:0", py::arg("ell") = 1);

    m.def(
        "mixing_time",
        [](const std::string& chain, int d, int h, int q, double beta, double p,
           const std::string& boundary, int ell) {
            auto M = make_chain(chain, d, h, q, beta, p, boundary, ell);
            return tv_mixing_time(M, 1 << 20).t_mix;
        },
        py::arg("chain"), py::arg("d"), py::arg("h"), py::arg("q") = 2, py::arg("beta") = 0.0,
        py::arg("p") = 0.5, py::arg("boundary") = "mono:0", py::arg("ell") = 1);

    m.def(
        "vm_epsilon",
        [](int d, int h, int q, double beta, const std::string& boundary, int ell) {
            auto T = build_tree(d, h);
            SpinSpace space(T, PottsParams(q, beta), make_boundary(T, q, boundary));
            return vm_epsilon(space, ell, "exhaustive").eps;
        },
        py::arg("d"), py::arg("h"), py::arg("q"), py::arg("beta"), py::arg("boundary") = "mono:0",
        py::arg("ell") = 1);

    m.def(
        "pvm_epsilon",
        [](int d, int h, int q, double beta, const std::string& boundary, int ell) {
            auto T = build_tree(d, h);
            SpinSpace space(T, PottsParams(q, beta), make_boundary(T, q, boundary));
            return pvm_epsilon(space, ell, "exhaustive").eps;
        },
        py::arg("d"), py::arg("h"), py::arg("q"), py::arg("beta"), py::arg("boundary") = "mono:0",
        py::arg("ell") = 1);

    m.def(
        "simulate_sw",
        [](int d, int h, int q, double beta, const std::string& boundary, int64_t steps,
           uint64_t seed) {
            auto T = build_tree(d, h);
            PottsParams params(q, beta);
            auto b = make_boundary(T, q, boundary);
            ChainState st{SpinConfig::from_code(T, q, 0, b), 0, 0, CounterRng{seed}};
            std::vector<int64_t> mono;
            for (int64_t t = 0; t < steps; ++t) {
                sw_step(T, st, params);
                mono.push_back(__builtin_popcountll(mono_mask(T, st.spins)));
            }
            return mono;
        },
        py::arg("d"), py::arg("h"), py::arg("q"), py::arg("beta"), py::arg("boundary") = "mono:0",
        py::arg("steps") = 100, py::arg("seed") = 1);

    m.def("gap_transfer",
          [](int64_t nv, const std::vector<std::pair<int, int>>& edges, double p_hat, int q) {
              Graph g;
              g.nv = nv;
              g.edges = edges;
              auto rep = gap_transfer_check(g, p_hat, q);
              py::dict out;
              out["p"] = rep.p;
              out["gap_m"] = rep.gap_m;
              out["gap_m_hat"] = rep.gap_m_hat;
              out["gap_diff"] = rep.gap_diff;
              out["projection_max_err"] = rep.projection_max_err;
              return out;
          });

    m.def("tail_monte_carlo",
          [](int m_gadgets, int ell, double p_hat, int M, int64_t samples, uint64_t seed) {
              auto rep = tail_monte_carlo(m_gadgets, ell, p_hat, M, samples, seed);
              py::dict out;
              out["freq"] = rep.freq;
              out["exact_tail"] = rep.exact_tail;
              out["inside_ci"] = rep.inside_ci;
              return out;
          });

    m.def("decay_profile", [](int d, const std::vector<int>& heights, int q, double beta,
                              const std::string& boundary, int i, int j) {
        auto prof = decay_profile(d, heights, q, beta, boundary, i, j);
        py::dict out;
        out["tv"] = prof.tv;
        out["rate"] = prof.rate;
        return out;
    });
}
