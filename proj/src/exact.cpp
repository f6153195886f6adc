#include "swtree/exact.hpp"

#include <algorithm>
#include <cmath>

namespace swtree {

double TransitionMatrix::max_row_sum_error() const {
    return (P.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double TransitionMatrix::detailed_balance_error() const {
    double err = 0.0;
    for (int64_t i = 0; i < P.rows(); ++i)
        for (int64_t j = i + 1; j < P.cols(); ++j)
            err = std::max(err, std::abs(pi[i] * P(i, j) - pi[j] * P(j, i)));
    return err;
}

double TransitionMatrix::stationarity_error() const {
    Eigen::VectorXd left = P.transpose() * pi;
    return (left - pi).cwiseAbs().maxCoeff();
}

SpinSpace::SpinSpace(const TreeTopology& T_, const PottsParams& p_, const SpinBoundary& b_,
                     uint64_t cap)
    : T(&T_), params(p_), boundary(b_) {
    n_states = pow_checked(params.q, static_cast<int>(T->n_internal), cap, "spin space");
    std::vector<int> region(T->n_internal);
    for (int v = 0; v < T->n_internal; ++v) region[v] = v;
    SpinConfig eta = SpinConfig::from_code(*T, params.q, 0, boundary);
    pi = potts_measure(*T, region, eta, params, cap).prob;
}

Fibration spin_fibration(const SpinSpace& space, const std::vector<int>& region) {
    const auto& T = *space.T;
    int q = space.params.q;
    std::vector<char> in_region(T.n_internal, 0);
    for (int v : region) in_region[v] = 1;

    // fiber key: base-q code over off-region vertices
    Fibration fib;
    fib.pi = &space.pi;
    fib.fiber.resize(space.n_states);
    std::vector<int> off;
    for (int v = 0; v < T.n_internal; ++v)
        if (!in_region[v]) off.push_back(v);
    std::vector<uint64_t> qpow(T.n_internal, 1);
    for (int64_t v = 1; v < T.n_internal; ++v) qpow[v] = qpow[v - 1] * q;

    std::vector<int64_t> key_to_fiber(
        static_cast<size_t>(std::pow(double(q), double(off.size())) + 0.5), -1);
    int64_t next = 0;
    for (uint64_t code = 0; code < space.n_states; ++code) {
        uint64_t key = 0, mult = 1;
        for (int v : off) {
            key += (code / qpow[v]) % q * mult;
            mult *= q;
        }
        if (key_to_fiber[key] < 0) key_to_fiber[key] = next++;
        fib.fiber[code] = static_cast<int>(key_to_fiber[key]);
    }
    fib.n_fibers = next;
    fib.fiber_mass.assign(next, 0.0);
    for (uint64_t code = 0; code < space.n_states; ++code)
        fib.fiber_mass[fib.fiber[code]] += space.pi[code];
    return fib;
}

Eigen::VectorXd Fibration::cond_expectation(const Eigen::VectorXd& f) const {
    std::vector<double> num(n_fibers, 0.0);
    for (size_t x = 0; x < fiber.size(); ++x) num[fiber[x]] += (*pi)[x] * f[x];
    Eigen::VectorXd out(f.size());
    for (size_t x = 0; x < fiber.size(); ++x)
        out[x] = fiber_mass[fiber[x]] > 0 ? num[fiber[x]] / fiber_mass[fiber[x]] : 0.0;
    return out;
}

Eigen::VectorXd Fibration::cond_variance(const Eigen::VectorXd& f) const {
    std::vector<double> num1(n_fibers, 0.0), num2(n_fibers, 0.0);
    for (size_t x = 0; x < fiber.size(); ++x) {
        num1[fiber[x]] += (*pi)[x] * f[x];
        num2[fiber[x]] += (*pi)[x] * f[x] * f[x];
    }
    Eigen::VectorXd out(f.size());
    for (size_t x = 0; x < fiber.size(); ++x) {
        double m = fiber_mass[fiber[x]];
        if (m <= 0) {
            out[x] = 0.0;
            continue;
        }
        double e1 = num1[fiber[x]] / m, e2 = num2[fiber[x]] / m;
        out[x] = std::max(0.0, e2 - e1 * e1);
    }
    return out;
}

Eigen::VectorXd Fibration::cond_entropy(const Eigen::VectorXd& f) const {
    if ((f.array() < 0).any()) throw Error("cond_entropy: f must be nonnegative");
    auto xlogx = [](double x) { return x > 0 ? x * std::log(x) : 0.0; };
    std::vector<double> num1(n_fibers, 0.0), numl(n_fibers, 0.0);
    for (size_t x = 0; x < fiber.size(); ++x) {
        num1[fiber[x]] += (*pi)[x] * f[x];
        numl[fiber[x]] += (*pi)[x] * xlogx(f[x]);
    }
    Eigen::VectorXd out(f.size());
    for (size_t x = 0; x < fiber.size(); ++x) {
        double m = fiber_mass[fiber[x]];
        if (m <= 0) {
            out[x] = 0.0;
            continue;
        }
        double e1 = num1[fiber[x]] / m, el = numl[fiber[x]] / m;
        out[x] = std::max(0.0, el - xlogx(e1));
    }
    return out;
}

Eigen::MatrixXd Fibration::projection_kernel() const {
    int64_t n = static_cast<int64_t>(fiber.size());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (int64_t x = 0; x < n; ++x)
        for (int64_t y = 0; y < n; ++y)
            if (fiber[x] == fiber[y] && fiber_mass[fiber[x]] > 0)
                P(x, y) = (*pi)[y] / fiber_mass[fiber[x]];
    return P;
}

double measure_mean(const std::vector<double>& pi, const Eigen::VectorXd& f) {
    double s = 0.0;
    for (size_t i = 0; i < pi.size(); ++i) s += pi[i] * f[i];
    return s;
}

double measure_variance(const std::vector<double>& pi, const Eigen::VectorXd& f) {
    double m = measure_mean(pi, f), s = 0.0;
    for (size_t i = 0; i < pi.size(); ++i) s += pi[i] * (f[i] - m) * (f[i] - m);
    return s;
}

double measure_entropy(const std::vector<double>& pi, const Eigen::VectorXd& f) {
    auto xlogx = [](double x) { return x > 0 ? x * std::log(x) : 0.0; };
    double m = 0.0, s = 0.0;
    for (size_t i = 0; i < pi.size(); ++i) {
        m += pi[i] * f[i];
        s += pi[i] * xlogx(f[i]);
    }
    return s - xlogx(m);
}

SpectrumInfo spectral_gap(const TransitionMatrix& M, double reversibility_tol) {
    if (M.detailed_balance_error() > reversibility_tol)
        throw Error("spectral_gap: chain is not reversible");
    int64_t n = M.size();
    Eigen::VectorXd sq = M.pi.cwiseSqrt();
    Eigen::MatrixXd S(n, n);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j)
            S(i, j) = M.P(i, j) * (sq[i] / (sq[j] > 0 ? sq[j] : 1.0));
    S = 0.5 * (S + S.transpose());  // symmetrize roundoff
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    SpectrumInfo info;
    info.eigenvalues = es.eigenvalues();
    info.lambda_min = info.eigenvalues[0];
    info.lambda2 = n >= 2 ? info.eigenvalues[n - 2] : info.eigenvalues[n - 1];
    info.gap = 1.0 - std::max(std::abs(info.lambda2), std::abs(info.lambda_min));
    info.psd = info.lambda_min >= -1e-10;
    return info;
}

double dirichlet_form(const TransitionMatrix& M, const Eigen::VectorXd& f) {
    double s = 0.0;
    for (int64_t x = 0; x < M.size(); ++x)
        for (int64_t y = 0; y < M.size(); ++y) {
            double d = f[x] - f[y];
            s += M.pi[x] * M.P(x, y) * d * d;
        }
    return 0.5 * s;
}

double dirichlet_form_operator(const TransitionMatrix& M, const Eigen::VectorXd& f) {
    Eigen::VectorXd g = f - M.P * f;
    double s = 0.0;
    for (int64_t x = 0; x < M.size(); ++x) s += M.pi[x] * f[x] * g[x];
    return s;
}

MixingReport tv_mixing_time(const TransitionMatrix& M, int64_t horizon) {
    MixingReport rep;
    auto spec = spectral_gap(M);
    rep.gap = spec.gap;
    double pi_min = M.pi.minCoeff();
    if (rep.gap > 0) {
        rep.lower_bracket = (1.0 / rep.gap - 1.0) * std::log(2.0);
        rep.upper_bracket = std::log(4.0 / pi_min) / rep.gap;
    }
    int64_t n = M.size();
    Eigen::MatrixXd Pt = M.P;
    for (int64_t t = 1; t <= horizon; ++t) {
        double worst = 0.0;
        for (int64_t x = 0; x < n; ++x) {
            double tv = 0.0;
            for (int64_t y = 0; y < n; ++y) tv += std::abs(Pt(x, y) - M.pi[y]);
            worst = std::max(worst, 0.5 * tv);
        }
        if (worst <= 0.25) {
            rep.t_mix = t;
            return rep;
        }
        if (t < horizon) Pt = Pt * M.P;
        // an exact-gap-zero chain never gets there
        if (rep.gap <= 1e-14 && t >= 64) break;
    }
    rep.divergent = true;
    return rep;
}

double conductance(const TransitionMatrix& M, const std::vector<int64_t>& S) {
    std::vector<char> in(M.size(), 0);
    double mass = 0.0;
    for (int64_t x : S) {
        in[x] = 1;
        mass += M.pi[x];
    }
    if (mass <= 0) throw Error("conductance: pi(S) = 0");
    double q = 0.0;
    for (int64_t x : S)
        for (int64_t y = 0; y < M.size(); ++y)
            if (!in[y]) q += M.pi[x] * M.P(x, y);
    return q / mass;
}

std::pair<double, uint64_t> min_conductance_exhaustive(const TransitionMatrix& M) {
    int64_t n = M.size();
    if (n > 24) throw Error("min_conductance_exhaustive: too many states");
    double best = std::numeric_limits<double>::infinity();
    uint64_t best_mask = 0;
    for (uint64_t mask = 1; mask + 1 < (uint64_t(1) << n); ++mask) {
        double pmass = 0.0;
        for (int64_t x = 0; x < n; ++x)
            if (mask >> x & 1) pmass += M.pi[x];
        if (pmass > 0.5 || pmass <= 0) continue;
        double q = 0.0;
        for (int64_t x = 0; x < n; ++x)
            if (mask >> x & 1)
                for (int64_t y = 0; y < n; ++y)
                    if (!(mask >> y & 1)) q += M.pi[x] * M.P(x, y);
        double phi = q / pmass;
        if (phi < best) {
            best = phi;
            best_mask = mask;
        }
    }
    return {best, best_mask};
}

}  // namespace swtree
