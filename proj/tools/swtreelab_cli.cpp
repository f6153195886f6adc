#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "swtree/bigmix.hpp"
#include "swtree/dynamics.hpp"
#include "swtree/exact.hpp"
#include "swtree/experiments.hpp"
#include "swtree/jsonio.hpp"
#include "swtree/kernels.hpp"
#include "swtree/mixcond.hpp"
#include "swtree/slowmix.hpp"

using namespace swtree;

namespace {

CLI::App* sub(CLI::App* a) {
    a->set_help_flag("--help", "print help");
    a->fallthrough();  // global --out/--seed/--config may follow the subcommand
    return a;
}

uint64_t default_seed() {
    const char* env = std::getenv("SWTREE_SEED");
    return env ? std::strtoull(env, nullptr, 10) : 1;
}

Json load_config(const std::string& path) {
    if (path.empty()) return Json::object();
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    Json j;
    in >> j;
    return j;
}

struct Out {
    std::string dir = "out";
    Json config;

    void open(const std::string& command) {
        config["command"] = command;
        write_manifest(dir, config);
    }
    void json(const std::string& name, const Json& j) {
        write_text(dir + "/" + name, j.dump(2) + "\n");
        std::cout << j.dump(2) << "\n";
    }
    void csv(const std::string& name, const std::string& text) {
        write_text(dir + "/" + name, text);
        std::cout << text;
    }
};

Json spectrum_json(const SpectrumInfo& s) {
    return Json{{"gap", s.gap},
                {"lambda2", s.lambda2},
                {"lambda_min", s.lambda_min},
                {"psd", s.psd}};
}

struct ChainArgs {
    std::string chain = "sw";
    int d = 2, h = 1, q = 2;
    double beta = -1, p = -1;
    std::string boundary = "mono:0";
    std::string rc_boundary = "wired";
    int ell = 1;
    std::string graph;

    bool is_rc() const {
        return chain == "rc-edge" || chain == "rc-sw" || chain == "single-bond" ||
               chain == "mhb";
    }
    double rc_p() const {
        if (p >= 0) return p;
        if (beta >= 0) return -std::expm1(-beta);
        throw Error("rc chains need --p or --beta");
    }
    PottsParams params() const { return PottsParams(q, beta >= 0 ? beta : 0.0); }
};

TransitionMatrix build_matrix(const ChainArgs& a) {
    auto T = build_tree(a.d, a.h);
    if (!a.is_rc()) {
        SpinSpace space(T, a.params(), parse_spin_boundary(a.boundary, T, a.q));
        if (a.chain == "sw") return sw_matrix(space);
        if (a.chain == "glauber") return glauber_matrix(space);
        if (a.chain == "block-hb") return block_hb_matrix(space, BlockSpec::tiled(T, a.ell));
        if (a.chain == "block-sw") return block_sw_matrix(space, BlockSpec::tiled(T, a.ell));
        throw Error("unknown chain: " + a.chain);
    }
    if (a.chain == "mhb") {
        if (a.graph.empty()) throw Error("mhb needs --graph");
        auto spec = embed_boundary(load_graph(a.graph), a.h, a.ell);
        return mhb_matrix(spec, a.rc_p(), a.q);
    }
    auto inst = rc_instance_from_tree(T, parse_rc_boundary(a.rc_boundary));
    if (a.chain == "rc-edge") return rc_edge_matrix(inst, a.rc_p(), a.q);
    if (a.chain == "rc-sw") return rc_sw_matrix(inst, a.rc_p(), a.q);
    if (a.chain == "single-bond") return single_bond_matrix(inst, a.rc_p(), a.q);
    throw Error("unknown chain: " + a.chain);
}

void add_chain_options(CLI::App* cmd, ChainArgs& a) {
    cmd->add_option("--chain", a.chain, "chain name");
    cmd->add_option("--d", a.d, "branching factor");
    cmd->add_option("--h", a.h, "tree height");
    cmd->add_option("--q", a.q, "number of spins");
    cmd->add_option("--beta", a.beta, "inverse temperature");
    cmd->add_option("--p", a.p, "random-cluster edge parameter");
    cmd->add_option("--boundary", a.boundary, "spin boundary");
    cmd->add_option("--rc-boundary", a.rc_boundary, "rc boundary");
    cmd->add_option("--ell", a.ell, "block height parameter");
    cmd->add_option("--graph", a.graph, "edge-list file");
}

Json chain_config(const ChainArgs& a) {
    return Json{{"chain", a.chain}, {"d", a.d},     {"h", a.h},
                {"q", a.q},         {"beta", a.beta}, {"p", a.p},
                {"boundary", a.boundary}, {"rc_boundary", a.rc_boundary},
                {"ell", a.ell},     {"graph", a.graph}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Swendsen-Wang tree laboratory"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);
    std::string config_path, out_dir = "out";
    uint64_t seed = default_seed();
    app.add_option("--config", config_path, "JSON config file (flags override)");
    app.add_option("--out", out_dir, "artifact directory");
    app.add_option("--seed", seed, "default rng seed");

    // tree-info
    auto* cmd_tree = sub(sub(&app)->add_subcommand("tree-info", "tree decomposition as JSON"));
    int ti_d = 2, ti_h = 2, ti_ell = 1;
    cmd_tree->add_option("--d", ti_d);
    cmd_tree->add_option("--h", ti_h);
    cmd_tree->add_option("--ell", ti_ell);

    // exact {matrix,gap,mix,ullrich,compare}
    auto* cmd_exact = sub(sub(&app)->add_subcommand("exact", "exact kernels and spectra"));
    cmd_exact->require_subcommand(1);
    auto* cmd_matrix = sub(sub(cmd_exact)->add_subcommand("matrix", "export the kernel"));
    auto* cmd_gap = sub(sub(cmd_exact)->add_subcommand("gap", "absolute spectral gap"));
    auto* cmd_mix = sub(sub(cmd_exact)->add_subcommand("mix", "worst-start mixing time"));
    auto* cmd_ullrich = sub(sub(cmd_exact)->add_subcommand("ullrich", "SW = T R T* checks"));
    auto* cmd_compare = sub(sub(cmd_exact)->add_subcommand("compare", "SW vs block dynamics"));
    ChainArgs a_matrix, a_gap, a_mix, a_ull, a_cmp;
    add_chain_options(cmd_matrix, a_matrix);
    add_chain_options(cmd_gap, a_gap);
    add_chain_options(cmd_mix, a_mix);
    add_chain_options(cmd_ullrich, a_ull);
    add_chain_options(cmd_compare, a_cmp);
    int64_t compare_budget = 1000;
    cmd_compare->add_option("--budget", compare_budget, "random test functions");

    // check {gvm,vm,pvm,em,factorization}
    auto* cmd_checks = sub(sub(&app)->add_subcommand("check", "mixing-condition certificates"));
    cmd_checks->require_subcommand(1);
    auto* cmd_gvm = sub(sub(cmd_checks)->add_subcommand("gvm", "GVM of a joint distribution"));
    std::string rho_spec;
    cmd_gvm->add_option("--rho", rho_spec, "joint distribution (JSON matrix or file)")->required();
    auto* cmd_vm = sub(sub(cmd_checks)->add_subcommand("vm", "variance mixing"));
    auto* cmd_pvm = sub(sub(cmd_checks)->add_subcommand("pvm", "parallel variance mixing"));
    auto* cmd_em = sub(sub(cmd_checks)->add_subcommand("em", "entropy mixing lower bound"));
    auto* cmd_fact = sub(sub(cmd_checks)->add_subcommand("factorization", "inequality audit"));
    ChainArgs a_vm, a_pvm, a_em, a_fact;
    add_chain_options(cmd_vm, a_vm);
    add_chain_options(cmd_pvm, a_pvm);
    add_chain_options(cmd_em, a_em);
    add_chain_options(cmd_fact, a_fact);
    std::string mode = "exhaustive";
    int64_t budget = 1000;
    cmd_vm->add_option("--mode", mode, "exhaustive|sampled");
    cmd_pvm->add_option("--mode", mode, "exhaustive|sampled");
    cmd_vm->add_option("--budget", budget, "eta samples");
    cmd_pvm->add_option("--budget", budget, "eta samples");
    cmd_em->add_option("--budget", budget, "optimizer restarts");
    cmd_fact->add_option("--budget", budget, "random test functions");

    // simulate
    auto* cmd_sim = sub(sub(&app)->add_subcommand("simulate", "seeded trajectories as CSV"));
    ChainArgs a_sim;
    add_chain_options(cmd_sim, a_sim);
    int64_t steps = 100;
    std::string observables = "energy,mono,root";
    std::string init = "code:0";
    cmd_sim->add_option("--steps", steps, "number of steps");
    cmd_sim->add_option("--observables", observables, "comma list");
    cmd_sim->add_option("--init", init, "code:<int> | full | empty");

    // lowerbound
    auto* cmd_lb = sub(sub(&app)->add_subcommand("lowerbound", "the coupled SW lower-bound experiment"));
    LBExperimentSpec lb;
    cmd_lb->add_option("--d", lb.d);
    cmd_lb->add_option("--h", lb.h);
    cmd_lb->add_option("--q", lb.q);
    cmd_lb->add_option("--beta", lb.beta);
    cmd_lb->add_option("--replicas", lb.replicas);
    cmd_lb->add_option("--xi", lb.xi, "R_hat = ceil(n^xi)");
    cmd_lb->add_option("--alphas", lb.alphas, "horizon sweep: tau = ceil(alpha ln n)");

    // cmd-check
    auto* cmd_cmd = sub(sub(&app)->add_subcommand("cmd-check", "completely monotone decrease check"));
    ChainArgs a_cmdc;
    add_chain_options(cmd_cmd, a_cmdc);
    int64_t horizon = 50;
    int64_t n_events = 20;
    cmd_cmd->add_option("--horizon", horizon);
    cmd_cmd->add_option("--events", n_events, "random events tested");

    // decay
    auto* cmd_decay = sub(sub(&app)->add_subcommand("decay", "edge-marginal decay profile"));
    int dc_d = 2, dc_q = 2, dc_i = 0, dc_j = 1;
    double dc_beta = std::log(2.0);
    std::vector<int> dc_heights{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::string dc_boundary = "free";
    cmd_decay->add_option("--d", dc_d);
    cmd_decay->add_option("--q", dc_q);
    cmd_decay->add_option("--beta", dc_beta);
    cmd_decay->add_option("--heights", dc_heights);
    cmd_decay->add_option("--boundary", dc_boundary, "free | mono:K | random:SEED");
    cmd_decay->add_option("--spin-i", dc_i);
    cmd_decay->add_option("--spin-j", dc_j);

    // scaling
    auto* cmd_scale = sub(sub(&app)->add_subcommand("scaling", "mixing time vs size"));
    std::string sc_chain = "sw";
    std::string sc_mode = "exact";
    int sc_d = 2, sc_q = 2;
    int64_t sc_replicas = 20000, sc_tmax = 32;
    double sc_beta = std::log(2.0), sc_p = 0.5;
    std::vector<int> sc_heights{1, 2, 3};
    cmd_scale->add_option("--chain", sc_chain, "sw | rc-edge");
    cmd_scale->add_option("--mode", sc_mode, "exact | statistical");
    cmd_scale->add_option("--replicas", sc_replicas, "statistical mode sample size");
    cmd_scale->add_option("--t-max", sc_tmax, "statistical mode horizon");
    cmd_scale->add_option("--d", sc_d);
    cmd_scale->add_option("--q", sc_q);
    cmd_scale->add_option("--beta", sc_beta);
    cmd_scale->add_option("--p", sc_p);
    cmd_scale->add_option("--heights", sc_heights);

    // slowmix {embed,gap-transfer,conductance,tail}
    auto* cmd_slow = sub(sub(&app)->add_subcommand("slowmix", "boundary-embedding constructions"));
    cmd_slow->require_subcommand(1);
    auto* cmd_embed = sub(sub(cmd_slow)->add_subcommand("embed", "embedding spec as JSON"));
    auto* cmd_gapt = sub(sub(cmd_slow)->add_subcommand("gap-transfer", "two-edge block chain gap"));
    auto* cmd_cond = sub(sub(cmd_slow)->add_subcommand("conductance", "bad-set conductance report"));
    auto* cmd_tail = sub(sub(cmd_slow)->add_subcommand("tail", "dominating percolation tail"));
    std::string sm_graph;
    int sm_h = 3, sm_ell = 1, sm_q = 2, sm_M = 1, sm_m = 8;
    double sm_phat = 0.5;
    int64_t sm_samples = 100000;
    std::vector<uint64_t> sm_sstar;
    cmd_embed->add_option("--graph", sm_graph)->required();
    cmd_embed->add_option("--h", sm_h);
    cmd_embed->add_option("--ell", sm_ell);
    cmd_gapt->add_option("--graph", sm_graph)->required();
    cmd_gapt->add_option("--phat", sm_phat);
    cmd_gapt->add_option("--q", sm_q);
    cmd_cond->add_option("--graph", sm_graph)->required();
    cmd_cond->add_option("--h", sm_h);
    cmd_cond->add_option("--ell", sm_ell);
    cmd_cond->add_option("--phat", sm_phat);
    cmd_cond->add_option("--q", sm_q);
    cmd_cond->add_option("--M", sm_M);
    cmd_cond->add_option("--sstar", sm_sstar, "explicit S* states (G-hat edge masks)");
    cmd_tail->add_option("--m", sm_m);
    cmd_tail->add_option("--ell", sm_ell);
    cmd_tail->add_option("--phat", sm_phat);
    cmd_tail->add_option("--M", sm_M);
    cmd_tail->add_option("--samples", sm_samples);

    // config file keys are long option names; explicit flags take precedence
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        for (size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] != "--config") continue;
            Json cfg = load_config(args[i + 1]);
            for (auto& [key, value] : cfg.items()) {
                std::string flag = "--" + key;
                if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
                args.push_back(flag);
                if (value.is_array())
                    for (auto& v : value) args.push_back(v.is_string() ? v.get<std::string>()
                                                                       : v.dump());
                else
                    args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    {
        std::vector<const char*> cargs{argv[0]};
        for (const auto& a : args) cargs.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(cargs.size()), cargs.data());
        } catch (const CLI::ParseError& e) {
            return app.exit(e);
        }
    }

    try {
        Out out;
        out.dir = out_dir;

        if (*cmd_tree) {
            out.config = Json{{"d", ti_d}, {"h", ti_h}, {"ell", ti_ell}};
            out.open("tree-info");
            auto T = build_tree(ti_d, ti_h);
            auto ls = level_sets(T);
            auto bf = decompose(T, ti_ell);
            Json j{{"d", ti_d},
                   {"h", ti_h},
                   {"ell", ti_ell},
                   {"n_internal", T.n_internal},
                   {"n_boundary", T.n_boundary},
                   {"n_edges", T.edges.size()},
                   {"levels", ls.L},
                   {"even", ls.even},
                   {"odd", ls.odd},
                   {"tiles", bf.tiles}};
            Json blocks = Json::array();
            for (int i = 1; i <= T.h + ti_ell; ++i) blocks.push_back(bf.B[i]);
            j["B_i"] = blocks;
            out.json("tree-info.json", j);
        } else if (*cmd_matrix) {
            out.config = chain_config(a_matrix);
            out.open("exact-matrix");
            auto M = build_matrix(a_matrix);
            Json header{{"rows", M.size()},
                        {"cols", M.size()},
                        {"layout", "row-major float64"},
                        {"encoding", a_matrix.is_rc() ? "edge bitmask over the deterministic edge order"
                                                      : "base-q little-endian over BFS vertices"},
                        {"config", chain_config(a_matrix)}};
            write_text(out.dir + "/matrix.json", header.dump(2) + "\n");
            std::ofstream bin(out.dir + "/matrix.bin", std::ios::binary);
            bin.write(reinterpret_cast<const char*>(M.P.data()),
                      sizeof(double) * M.size() * M.size());
            // Eigen stores column-major; write explicit row-major stream
            bin.seekp(0);
            for (int64_t i = 0; i < M.size(); ++i)
                for (int64_t j = 0; j < M.size(); ++j) {
                    double v = M.P(i, j);
                    bin.write(reinterpret_cast<const char*>(&v), sizeof(double));
                }
            std::cout << header.dump(2) << "\n";
        } else if (*cmd_gap) {
            out.config = chain_config(a_gap);
            out.open("exact-gap");
            auto M = build_matrix(a_gap);
            auto s = spectral_gap(M);
            Json j = spectrum_json(s);
            j["states"] = M.size();
            j["row_sum_error"] = M.max_row_sum_error();
            j["stationarity_error"] = M.stationarity_error();
            j["detailed_balance_error"] = M.detailed_balance_error();
            out.json("gap.json", j);
        } else if (*cmd_mix) {
            out.config = chain_config(a_mix);
            out.open("exact-mix");
            Json j;
            auto T = build_tree(a_mix.d, a_mix.h);
            uint64_t spin_states = 1;
            for (int64_t v = 0; v < T.n_internal; ++v) spin_states *= a_mix.q;
            bool big_spin = !a_mix.is_rc() && spin_states > (uint64_t(1) << 12);
            bool big_rc = a_mix.is_rc() && T.edges.size() > 12;
            if (a_mix.chain == "sw" && big_spin) {
                auto res = sw_worst_start_mixing(T, a_mix.params(), 0);
                j = Json{{"t_mix", res.t_mix}, {"d_at_tmix", res.d_at_tmix},
                         {"d_before", res.d_before}, {"orbits", res.n_orbits}};
            } else if (a_mix.chain == "rc-edge" && big_rc) {
                auto res = rc_edge_worst_start_mixing(T, a_mix.rc_p(), a_mix.q);
                j = Json{{"t_mix", res.t_mix}, {"d_at_tmix", res.d_at_tmix},
                         {"d_before", res.d_before}, {"orbits", res.n_orbits}};
            } else {
                auto M = build_matrix(a_mix);
                auto rep = tv_mixing_time(M, 1 << 20);
                j = Json{{"t_mix", rep.t_mix},
                         {"divergent", rep.divergent},
                         {"gap", rep.gap},
                         {"lower_bracket", rep.lower_bracket},
                         {"upper_bracket", rep.upper_bracket}};
            }
            out.json("mix.json", j);
        } else if (*cmd_ullrich) {
            out.config = chain_config(a_ull);
            out.open("exact-ullrich");
            auto T = build_tree(a_ull.d, a_ull.h);
            SpinSpace space(T, a_ull.params(), parse_spin_boundary(a_ull.boundary, T, a_ull.q));
            auto blocks = BlockSpec::tiled(T, a_ull.ell);
            auto F = ullrich_factors(space, &blocks);
            auto SW = sw_matrix(space);
            auto SWD = block_sw_matrix(space, blocks);
            Eigen::MatrixXd recon = F.T * F.R * F.Tstar;
            Eigen::MatrixXd reconD = Eigen::MatrixXd::Zero(space.n_states, space.n_states);
            for (const auto& Qk : F.Q) reconD += F.T * Qk * F.Tstar;
            reconD /= double(F.Q.size());
            double qerr = 0, serr = 0;
            for (size_t k = 0; k < F.Q.size(); ++k) {
                qerr = std::max(qerr, F.idempotent_error(k));
                serr = std::max(serr, F.sandwich_error(k));
            }
            out.json("ullrich.json",
                     Json{{"sw_minus_trt_max", (SW.P - recon).cwiseAbs().maxCoeff()},
                          {"swd_minus_avg_tqt_max", (SWD.P - reconD).cwiseAbs().maxCoeff()},
                          {"adjoint_error", F.adjoint_error()},
                          {"idempotent_error", qerr},
                          {"sandwich_error", serr},
                          {"joint_states", F.R.rows()}});
        } else if (*cmd_compare) {
            out.config = chain_config(a_cmp);
            out.config["budget"] = compare_budget;
            out.open("exact-compare");
            auto T = build_tree(a_cmp.d, a_cmp.h);
            SpinSpace space(T, a_cmp.params(), parse_spin_boundary(a_cmp.boundary, T, a_cmp.q));
            auto blocks = BlockSpec::tiled(T, a_cmp.ell);
            auto SW = sw_matrix(space);
            auto SWD = block_sw_matrix(space, blocks);
            auto BD = block_hb_matrix(space, blocks);
            double gamma = comparison_gamma_min(space, blocks);
            CounterRng rng{seed};
            double slack1 = 1e300, slack2 = 1e300;
            for (int64_t t = 0; t < compare_budget; ++t) {
                Eigen::VectorXd f(space.n_states);
                for (uint64_t i = 0; i < space.n_states; ++i)
                    f[i] = 2 * rng.uniform(t, kTagFunction, i) - 1;
                double esw = dirichlet_form(SW, f), eswd = dirichlet_form(SWD, f),
                       ebd = dirichlet_form(BD, f);
                slack1 = std::min(slack1, esw - eswd);
                slack2 = std::min(slack2, eswd - gamma * ebd);
            }
            out.json("compare.json",
                     Json{{"gamma_min", gamma},
                          {"min_slack_sw_vs_swd", slack1},
                          {"min_slack_swd_vs_gamma_bd", slack2},
                          {"gap_sw", spectral_gap(SW).gap},
                          {"gap_bd", spectral_gap(BD).gap},
                          {"gap_ordering_ok",
                           spectral_gap(SW).gap >= gamma * spectral_gap(BD).gap - 1e-12}});
        } else if (*cmd_gvm) {
            out.config = Json{{"rho", rho_spec}};
            out.open("check-gvm");
            Json jr = rho_spec[0] == '[' ? Json::parse(rho_spec) : [&] {
                std::ifstream in(rho_spec);
                if (!in) throw Error("cannot open rho file: " + rho_spec);
                Json j;
                in >> j;
                return j;
            }();
            auto rows = jr.get<std::vector<std::vector<double>>>();
            Eigen::MatrixXd rho(rows.size(), rows[0].size());
            for (size_t i = 0; i < rows.size(); ++i)
                for (size_t j = 0; j < rows[i].size(); ++j) rho(i, j) = rows[i][j];
            auto ud = updown_gap(rho);
            out.json("gvm.json", Json{{"condition", "GVM"},
                                      {"eps", ud.eps_gvm},
                                      {"degenerate", ud.degenerate},
                                      {"phi", rho.rows()},
                                      {"psi", rho.cols()}});
        } else if (*cmd_vm || *cmd_pvm || *cmd_em) {
            const ChainArgs& a = *cmd_vm ? a_vm : (*cmd_pvm ? a_pvm : a_em);
            std::string which = *cmd_vm ? "vm" : (*cmd_pvm ? "pvm" : "em");
            out.config = chain_config(a);
            out.config["mode"] = mode;
            out.config["budget"] = budget;
            out.config["seed"] = seed;
            out.open("check-" + which);
            auto T = build_tree(a.d, a.h);
            SpinSpace space(T, a.params(), parse_spin_boundary(a.boundary, T, a.q));
            MixingCertificate cert;
            if (*cmd_vm)
                cert = vm_epsilon(space, a.ell, mode, budget, seed);
            else if (*cmd_pvm)
                cert = pvm_epsilon(space, a.ell, mode, budget, seed);
            else
                cert = em_epsilon_estimate(space, a.ell, budget, seed);
            out.json(which + ".json",
                     Json{{"condition", cert.condition},
                          {"ell", cert.ell},
                          {"eps", cert.eps},
                          {"mode", cert.mode},
                          {"arg_site", cert.arg_site},
                          {"arg_eta", cert.arg_eta},
                          {"budget", cert.budget},
                          {"seed", cert.seed},
                          {"lower_bound_only", cert.lower_bound_only},
                          {"instance", Json{{"d", a.d}, {"h", a.h}, {"q", a.q},
                                            {"beta", a.beta}, {"boundary", a.boundary}}}});
        } else if (*cmd_fact) {
            out.config = chain_config(a_fact);
            out.config["budget"] = budget;
            out.config["seed"] = seed;
            out.open("check-factorization");
            auto T = build_tree(a_fact.d, a_fact.h);
            SpinSpace space(T, a_fact.params(), parse_spin_boundary(a_fact.boundary, T, a_fact.q));
            auto rep = factorization_audit(space, a_fact.ell, budget, seed);
            out.json("factorization.json",
                     Json{{"ell", rep.ell},
                          {"budget", rep.budget},
                          {"seed", rep.seed},
                          {"cal_e_max_abs_diff", rep.cal_e_max_abs_diff},
                          {"dirich_min_slack", rep.dirich_min_slack},
                          {"pvm_eps", rep.pvm_eps},
                          {"var_bound_applicable", rep.var_bound_applicable},
                          {"var_bound_min_slack", rep.var_bound_min_slack},
                          {"pvm_varbound_min_slack", rep.pvm_varbound_min_slack},
                          {"pvm_varbound_skipped", rep.pvm_varbound_skipped},
                          {"tb_gap", rep.tb_gap},
                          {"tb_gap_bound", rep.tb_gap_bound},
                          {"tb_gap_applicable", rep.tb_gap_applicable},
                          {"ent1_min_slack", rep.ent1_min_slack},
                          {"em_eps_hat", rep.em_eps_hat},
                          {"p_min", rep.p_min},
                          {"eps_prime", rep.eps_prime},
                          {"em_entbound_applicable", rep.em_entbound_applicable},
                          {"em_entbound_min_slack", rep.em_entbound_min_slack},
                          {"c_eo", rep.c_eo},
                          {"c_tb", rep.c_tb},
                          {"eo_min_slack", rep.eo_min_slack},
                          {"tbf_min_slack", rep.tbf_min_slack},
                          {"skipped_zero_denominator", rep.skipped_zero_denominator}});
        } else if (*cmd_sim) {
            out.config = chain_config(a_sim);
            out.config["steps"] = steps;
            out.config["seed"] = seed;
            out.config["observables"] = observables;
            out.config["init"] = init;
            out.open("simulate");
            auto T = build_tree(a_sim.d, a_sim.h);
            std::vector<std::string> obs;
            {
                std::stringstream ss(observables);
                std::string tok;
                while (std::getline(ss, tok, ',')) obs.push_back(tok);
            }
            std::ostringstream csv;
            csv << "step";
            for (const auto& o : obs) csv << "," << o;
            csv << "\n";
            if (!a_sim.is_rc()) {
                PottsParams params = a_sim.params();
                auto b = parse_spin_boundary(a_sim.boundary, T, a_sim.q);
                uint64_t code = init.rfind("code:", 0) == 0 ? std::stoull(init.substr(5)) : 0;
                ChainState st{SpinConfig::from_code(T, a_sim.q, code, b), 0, 0, CounterRng{seed}};
                auto blocks = BlockSpec::tiled(T, a_sim.ell);
                auto emit = [&](int64_t t) {
                    csv << t;
                    for (const auto& o : obs) {
                        uint64_t mono = mono_mask(T, st.spins);
                        if (o == "energy")
                            csv << "," << (T.edges.size() - __builtin_popcountll(mono));
                        else if (o == "mono")
                            csv << "," << __builtin_popcountll(mono);
                        else if (o == "root")
                            csv << "," << int(st.spins.s[0]);
                        else if (o == "mag")
                            csv << "," << std::count(st.spins.s.begin(),
                                                     st.spins.s.begin() + T.n_internal, 0);
                        else
                            throw Error("unknown observable: " + o);
                    }
                    csv << "\n";
                };
                emit(0);
                for (int64_t t = 1; t <= steps; ++t) {
                    if (a_sim.chain == "sw")
                        sw_step(T, st, params);
                    else if (a_sim.chain == "glauber")
                        glauber_step(T, st, params);
                    else if (a_sim.chain == "block-hb")
                        block_step(T, st, params, blocks, BlockKind::HeatBath);
                    else if (a_sim.chain == "block-sw")
                        block_step(T, st, params, blocks, BlockKind::Sw);
                    else
                        throw Error("unknown chain: " + a_sim.chain);
                    emit(t);
                }
            } else {
                double p = a_sim.rc_p();
                RCInstance inst;
                EmbeddingSpec spec;
                if (a_sim.chain == "mhb") {
                    if (a_sim.graph.empty()) throw Error("mhb needs --graph");
                    spec = embed_boundary(load_graph(a_sim.graph), a_sim.h, a_sim.ell);
                    inst = spec.tree;
                } else {
                    inst = rc_instance_from_tree(T, parse_rc_boundary(a_sim.rc_boundary));
                }
                uint64_t e0 = 0;
                if (init == "full") e0 = (uint64_t(1) << inst.g.edges.size()) - 1;
                else if (init.rfind("code:", 0) == 0) e0 = std::stoull(init.substr(5));
                ChainState st{{}, e0, 0, CounterRng{seed}};
                std::optional<MhbChain> mhb;
                if (a_sim.chain == "mhb") mhb.emplace(spec, p, a_sim.q);
                auto emit = [&](int64_t t) {
                    csv << t;
                    for (const auto& o : obs) {
                        if (o == "open")
                            csv << "," << __builtin_popcountll(st.edges);
                        else if (o == "components")
                            csv << "," << components(inst, st.edges).c_xi;
                        else
                            throw Error("unknown observable: " + o);
                    }
                    csv << "\n";
                };
                emit(0);
                for (int64_t t = 1; t <= steps; ++t) {
                    if (a_sim.chain == "rc-edge")
                        rc_edge_hb_step(inst, st, p, a_sim.q);
                    else if (a_sim.chain == "rc-sw")
                        rc_sw_step(inst, st, p, a_sim.q);
                    else if (a_sim.chain == "single-bond")
                        single_bond_step(inst, st, p, a_sim.q);
                    else if (a_sim.chain == "mhb")
                        mhb->step(st);
                    else
                        throw Error("unknown chain: " + a_sim.chain);
                    emit(t);
                }
            }
            out.csv("trajectory.csv", csv.str());
        } else if (*cmd_lb) {
            lb.seed = seed;
            out.config = Json{{"d", lb.d},       {"h", lb.h},   {"q", lb.q},
                              {"beta", lb.beta}, {"xi", lb.xi}, {"alphas", lb.alphas},
                              {"replicas", lb.replicas}, {"seed", lb.seed}};
            out.open("lowerbound");
            auto rep = lb_experiment(lb);
            std::ostringstream csv;
            csv << "alpha,tau_steps,containment,ci_lo,ci_hi,tv_lower_estimate\n";
            for (const auto& a : rep.per_alpha)
                csv << format_double(a.alpha) << "," << a.tau_steps << ","
                    << format_double(a.containment) << "," << format_double(a.ci_lo) << ","
                    << format_double(a.ci_hi) << "," << format_double(a.tv_lower_estimate)
                    << "\n";
            out.csv("lowerbound.csv", csv.str());
            std::ostringstream bcsv;
            bcsv << "block_root,mu_ai,pr_y1_ai,surplus,surplus_bound,sigma,surplus_ok\n";
            for (const auto& b : rep.blocks)
                bcsv << b.root << "," << format_double(b.mu_ai) << ","
                     << format_double(b.pr_y1_ai) << "," << format_double(b.surplus) << ","
                     << format_double(b.surplus_bound) << "," << format_double(b.sigma) << ","
                     << b.surplus_ok << "\n";
            write_text(out.dir + "/lowerbound_blocks.csv", bcsv.str());
        } else if (*cmd_cmd) {
            out.config = chain_config(a_cmdc);
            out.config["horizon"] = horizon;
            out.config["events"] = n_events;
            out.config["seed"] = seed;
            out.open("cmd-check");
            auto M = build_matrix(a_cmdc);
            CounterRng rng{seed};
            std::ostringstream csv;
            csv << "event,pi_b,pr1,min_slack_mono,min_slack_bound\n";
            double worst_mono = 1e300, worst_bound = 1e300;
            for (int64_t e = 0; e < n_events; ++e) {
                std::vector<int64_t> B;
                for (int64_t x = 0; x < M.size(); ++x)
                    if (rng.uniform(e, kTagFunction, x) < 0.5) B.push_back(x);
                if (B.empty() || (int64_t)B.size() == M.size()) B = {0};
                auto rep = cmd_check(M, B, horizon);
                worst_mono = std::min(worst_mono, rep.min_slack_mono);
                worst_bound = std::min(worst_bound, rep.min_slack_bound);
                csv << e << "," << format_double(rep.pi_b) << "," << format_double(rep.pr1)
                    << "," << format_double(rep.min_slack_mono) << ","
                    << format_double(rep.min_slack_bound) << "\n";
            }
            out.csv("cmd.csv", csv.str());
            std::cout << "worst_mono_slack=" << format_double(worst_mono)
                      << " worst_bound_slack=" << format_double(worst_bound) << "\n";
        } else if (*cmd_decay) {
            out.config = Json{{"d", dc_d},         {"q", dc_q},
                              {"beta", dc_beta},   {"heights", dc_heights},
                              {"boundary", dc_boundary}, {"spin_i", dc_i},
                              {"spin_j", dc_j}};
            out.open("decay");
            auto prof = decay_profile(dc_d, dc_heights, dc_q, dc_beta, dc_boundary, dc_i, dc_j);
            std::ostringstream csv;
            csv << "height,tv\n";
            for (size_t i = 0; i < prof.heights.size(); ++i)
                csv << prof.heights[i] << "," << format_double(prof.tv[i]) << "\n";
            out.csv("decay.csv", csv.str());
            std::cout << "rate=" << format_double(prof.rate)
                      << " max_fit_residual=" << format_double(prof.max_fit_residual) << "\n";
        } else if (*cmd_scale) {
            out.config = Json{{"chain", sc_chain}, {"mode", sc_mode}, {"d", sc_d},
                              {"q", sc_q},         {"beta", sc_beta}, {"p", sc_p},
                              {"heights", sc_heights}, {"seed", seed}};
            out.open("scaling");
            if (sc_mode == "statistical") {
                if (sc_chain != "sw") throw Error("statistical scaling mode covers sw");
                std::ostringstream csv;
                csv << "h,t,tv_empirical\n";
                for (int h : sc_heights) {
                    auto rows = statistical_mixing_sw(sc_d, h, sc_q, sc_beta, 0, sc_replicas,
                                                      sc_tmax, seed);
                    for (const auto& r : rows)
                        csv << h << "," << r.t << "," << format_double(r.tv_empirical) << "\n";
                }
                out.csv("scaling.csv", csv.str());
            } else {
                ScalingReport rep = sc_chain == "sw"
                                        ? mixing_scaling_sw(sc_d, sc_q, sc_beta, 0, sc_heights)
                                        : mixing_scaling_rc(sc_d, sc_p, sc_q, sc_heights);
                std::ostringstream csv;
                csv << "h,n,states,t_mix,per_level,per_nlogn\n";
                for (const auto& r : rep.rows)
                    csv << r.h << "," << r.n << "," << r.states << "," << r.t_mix << ","
                        << format_double(r.per_level) << "," << format_double(r.per_nlogn)
                        << "\n";
                out.csv("scaling.csv", csv.str());
                std::cout << "better_fit=" << rep.better_fit
                          << " log_residual=" << format_double(rep.fit_log_residual)
                          << " lin_residual=" << format_double(rep.fit_lin_residual) << "\n";
            }
        } else if (*cmd_embed) {
            out.config = Json{{"graph", sm_graph}, {"h", sm_h}, {"ell", sm_ell}};
            out.open("slowmix-embed");
            auto spec = embed_boundary(load_graph(sm_graph), sm_h, sm_ell);
            Json wiring = Json::array();
            for (const auto& cls : spec.tree.wiring) wiring.push_back(cls);
            out.json("embed.json", Json{{"h", spec.h},
                                        {"ell", spec.ell},
                                        {"gadgets", spec.gadgets()},
                                        {"a", spec.a},
                                        {"b", spec.b},
                                        {"c", spec.c},
                                        {"gadget_edges", spec.gadget_edges},
                                        {"wiring", wiring},
                                        {"interior", spec.interior}});
        } else if (*cmd_gapt) {
            out.config = Json{{"graph", sm_graph}, {"phat", sm_phat}, {"q", sm_q}};
            out.open("slowmix-gap-transfer");
            auto rep = gap_transfer_check(load_graph(sm_graph), sm_phat, sm_q);
            out.json("gap_transfer.json", Json{{"p_hat", rep.p_hat},
                                               {"p", rep.p},
                                               {"q", rep.q},
                                               {"gap_m", rep.gap_m},
                                               {"gap_m_hat", rep.gap_m_hat},
                                               {"gap_diff", rep.gap_diff},
                                               {"projection_max_err", rep.projection_max_err}});
        } else if (*cmd_cond) {
            out.config = Json{{"graph", sm_graph}, {"h", sm_h},    {"ell", sm_ell},
                              {"phat", sm_phat},   {"q", sm_q},    {"M", sm_M},
                              {"sstar", sm_sstar}};
            out.open("slowmix-conductance");
            auto spec = embed_boundary(load_graph(sm_graph), sm_h, sm_ell);
            auto rep = bad_set_conductance(
                spec, sm_phat, sm_q, sm_M,
                cmd_cond->count("--sstar") ? std::optional(sm_sstar) : std::nullopt);
            out.json("conductance.json",
                     Json{{"p_hat", rep.p_hat},
                          {"q", rep.q},
                          {"M", rep.M},
                          {"m", rep.m},
                          {"r", rep.r},
                          {"s_star", rep.s_star},
                          {"pi_am", rep.pi_am},
                          {"pi_am_c", rep.pi_am_c},
                          {"edge_flow", rep.edge_flow},
                          {"phi_am", rep.phi_am},
                          {"phi_am_c", rep.phi_am_c},
                          {"gap_mhb", rep.gap_mhb},
                          {"cheeger_ratio", rep.cheeger_ratio},
                          {"cheeger_ok", rep.cheeger_ok},
                          {"pi_ghat_s_star", rep.pi_ghat_s_star},
                          {"pi_r_m", rep.pi_r_m},
                          {"am_lower_bound", rep.am_lower_bound},
                          {"am_bound_ok", rep.am_bound_ok},
                          {"n_states", rep.n_states}});
        } else if (*cmd_tail) {
            out.config = Json{{"m", sm_m},       {"ell", sm_ell},       {"phat", sm_phat},
                              {"M", sm_M},       {"samples", sm_samples}, {"seed", seed}};
            out.open("slowmix-tail");
            auto rep = tail_monte_carlo(sm_m, sm_ell, sm_phat, sm_M, sm_samples, seed);
            out.json("tail.json", Json{{"m", rep.m},
                                       {"ell", rep.ell},
                                       {"M", rep.M},
                                       {"p_hat", rep.p_hat},
                                       {"r", rep.r},
                                       {"samples", rep.samples},
                                       {"seed", rep.seed},
                                       {"freq", rep.freq},
                                       {"exact_tail", rep.exact_tail},
                                       {"ci_lo", rep.ci_lo},
                                       {"ci_hi", rep.ci_hi},
                                       {"inside_ci", rep.inside_ci},
                                       {"max_abs_pair_cov", rep.max_abs_pair_cov}});
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
