#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "swtree/model.hpp"
#include "swtree/tree.hpp"

namespace swtree {

inline constexpr uint64_t kDefaultMatrixCap = uint64_t(1) << 16;

struct TransitionMatrix {
    Eigen::MatrixXd P;
    Eigen::VectorXd pi;

    int64_t size() const { return P.rows(); }
    double max_row_sum_error() const;
    double detailed_balance_error() const;
    double stationarity_error() const;  // ||pi^T P - pi^T||_inf
};

// Enumerated spin state space q^{V(T)} with a fixed boundary; pi is the
// Gibbs measure. Codes are base-q little-endian over the BFS vertex order.
struct SpinSpace {
    const TreeTopology* T;
    PottsParams params;
    SpinBoundary boundary;
    uint64_t n_states = 0;
    std::vector<double> pi;

    SpinSpace(const TreeTopology& T_, const PottsParams& p_, const SpinBoundary& b_,
              uint64_t cap = kDefaultMatrixCap);
    SpinConfig config(uint64_t code) const {
        return SpinConfig::from_code(*T, params.q, code, boundary);
    }
};

// Fibers of a state space under "fix the configuration off A": conditional
// expectation / variance / entropy as functions on the space.
struct Fibration {
    std::vector<int> fiber;          // fiber id per state
    std::vector<double> fiber_mass;  // stationary mass per fiber
    const std::vector<double>* pi;
    int64_t n_fibers = 0;

    Eigen::VectorXd cond_expectation(const Eigen::VectorXd& f) const;
    Eigen::VectorXd cond_variance(const Eigen::VectorXd& f) const;
    Eigen::VectorXd cond_entropy(const Eigen::VectorXd& f) const;  // f >= 0
    // heat-bath kernel that resamples A from the conditional measure
    Eigen::MatrixXd projection_kernel() const;
};

Fibration spin_fibration(const SpinSpace& space, const std::vector<int>& region);

double measure_mean(const std::vector<double>& pi, const Eigen::VectorXd& f);
double measure_variance(const std::vector<double>& pi, const Eigen::VectorXd& f);
double measure_entropy(const std::vector<double>& pi, const Eigen::VectorXd& f);

struct SpectrumInfo {
    double lambda2 = 0.0;      // second largest eigenvalue
    double lambda_min = 0.0;   // smallest
    double gap = 0.0;          // absolute spectral gap 1 - max(|l2|, |lmin|)
    bool psd = false;          // lambda_min >= -1e-10
    Eigen::VectorXd eigenvalues;  // ascending
};

// Reversible chains only (checked); eigenvalues of D^{1/2} P D^{-1/2}.
SpectrumInfo spectral_gap(const TransitionMatrix& M, double reversibility_tol = 1e-8);

double dirichlet_form(const TransitionMatrix& M, const Eigen::VectorXd& f);
double dirichlet_form_operator(const TransitionMatrix& M, const Eigen::VectorXd& f);

struct MixingReport {
    int64_t t_mix = -1;  // -1: no finite answer within the horizon
    bool divergent = false;
    double gap = 0.0;
    double lower_bracket = 0.0;  // (gap^{-1}-1) ln 2
    double upper_bracket = 0.0;  // gap^{-1} log(4/pi_min)
};

MixingReport tv_mixing_time(const TransitionMatrix& M, int64_t horizon = 100000);

double conductance(const TransitionMatrix& M, const std::vector<int64_t>& S);
// exhaustive minimum over subsets with pi(S) <= 1/2 (state count <= 24)
std::pair<double, uint64_t> min_conductance_exhaustive(const TransitionMatrix& M);

}  // namespace swtree
