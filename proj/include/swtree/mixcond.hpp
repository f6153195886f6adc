#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "swtree/exact.hpp"
#include "swtree/model.hpp"

namespace swtree {

// Up/down pair of a joint distribution rho on Phi x Psi:
// up(x,y) = rho(y|x), down(y,x) = rho(x|y).
struct UpDownPair {
    Eigen::MatrixXd rho;
    Eigen::VectorXd nu;  // Phi marginal
    Eigen::VectorXd pi;  // Psi marginal
    Eigen::MatrixXd up, down;
    double eps_gvm = 0.0;  // lambda2 of up*down (= of down*up)
    bool degenerate = false;
    Eigen::VectorXd witness;              // maximizing f on the Phi side
    std::vector<double> spectrum_phi, spectrum_psi;
};

UpDownPair updown_gap(const Eigen::MatrixXd& rho);

struct MixingCertificate {
    std::string condition;  // GVM | VM | PVM | EM
    int ell = 0;
    double eps = 0.0;
    std::string instance;
    std::string mode;  // exhaustive | sampled
    int arg_site = -1;      // vertex (VM/EM) or level (PVM) attaining the max
    uint64_t arg_eta = 0;   // conditioning code attaining the max
    int64_t budget = 0;
    uint64_t seed = 0;
    bool lower_bound_only = false;  // EM
};

MixingCertificate vm_epsilon(const SpinSpace& space, int ell, const std::string& mode,
                             int64_t budget = 0, uint64_t seed = 0);
MixingCertificate pvm_epsilon(const SpinSpace& space, int ell, const std::string& mode,
                              int64_t budget = 0, uint64_t seed = 0);
MixingCertificate em_epsilon_estimate(const SpinSpace& space, int ell, int64_t budget,
                                      uint64_t seed);

// per-level chain Q_{L_i} eps (exhaustive over conditioning frames); used by
// the VM=PVM equality and the product-gap identity
double pvm_level_eps(const SpinSpace& space, int ell, int level);
double vm_vertex_eps(const SpinSpace& space, int ell, int v, const SpinConfig& eta);
double vm_vertex_eps_max(const SpinSpace& space, int ell, int v);  // over all eta

// exact minimum over (vertex, neighbor pattern, spin) of the single-site
// conditional probability
double p_min_exact(int d, int q, double beta);

struct FactorizationReport {
    int ell = 0;
    int64_t budget = 0;
    uint64_t seed = 0;
    int64_t skipped_zero_denominator = 0;

    double cal_e_max_abs_diff = 0.0;   // tiled-block Dirichlet form identity
    double dirich_min_slack = 0.0;     // variance tiled-block vs level bound
    double pvm_eps = 0.0;
    bool var_bound_applicable = false;
    double var_bound_min_slack = 0.0;  // (2/delta) sum >= Var(f)
    double pvm_varbound_min_slack = 0.0;
    int64_t pvm_varbound_skipped = 0;  // fibers with eps >= 1/2
    double tb_gap = 0.0, tb_gap_bound = 0.0;
    bool tb_gap_applicable = false;

    double ent1_min_slack = 0.0;       // entropy tiled-block vs level bound
    double em_eps_hat = 0.0, p_min = 0.0, eps_prime = 0.0;
    bool em_entbound_applicable = false;
    double em_entbound_min_slack = 0.0;
    // measured factorization constants: suprema over the search budget
    // (random functions plus hill-climb refinement) and a fresh pass
    double c_eo = 0.0, c_tb = 0.0;
    double c_eo_search = 0.0, c_tb_search = 0.0;  // before the fresh pass
    double eo_min_slack = 0.0, tbf_min_slack = 0.0;  // vs the final constants
};

FactorizationReport factorization_audit(const SpinSpace& space, int ell, int64_t budget,
                                        uint64_t seed, int64_t em_budget = 24);

}  // namespace swtree
