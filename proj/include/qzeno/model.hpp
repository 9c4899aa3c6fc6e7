#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qzeno/errors.hpp"
#include "qzeno/linalg.hpp"

namespace qzeno {

// ---- spin models and reference states ----

inline constexpr int kMaxSpins = 12; // dense 4096-dim cap

struct SpinModel {
    int n_spins = 0;
    double omega = 0.0; // rad/s
    std::vector<Eigen::Vector3d> couplings;
    Matrix hamiltonian;

    Eigen::Index dim() const { return Eigen::Index{1} << n_spins; }
};

inline std::vector<Eigen::Vector3d> all_x_couplings(int n) {
    return std::vector<Eigen::Vector3d>(static_cast<std::size_t>(n), Eigen::Vector3d(1, 0, 0));
}

inline std::vector<Eigen::Vector3d> all_z_couplings(int n) {
    return std::vector<Eigen::Vector3d>(static_cast<std::size_t>(n), Eigen::Vector3d(0, 0, 1));
}

// H = omega * sum_n alpha_n . sigma_n with unit-normalized alpha_n.
inline SpinModel build_spin_model(int n_spins, double omega,
                                  const std::vector<Eigen::Vector3d>& alphas) {
    if (n_spins < 1 || n_spins > kMaxSpins) {
        throw ResourceError("spin count " + std::to_string(n_spins) +
                            " outside supported range 1.." + std::to_string(kMaxSpins));
    }
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw ArgumentError("omega must be positive and finite");
    }
    if (alphas.size() != static_cast<std::size_t>(n_spins)) {
        throw ArgumentError("expected one coupling vector per spin");
    }

    SpinModel model;
    model.n_spins = n_spins;
    model.omega = omega;
    model.couplings.reserve(alphas.size());
    for (const auto& a : alphas) {
        const double norm = a.norm();
        if (!(norm > 1e-14) || !std::isfinite(norm)) {
            throw ArgumentError("coupling vector must be non-zero");
        }
        model.couplings.push_back(a / norm);
    }

    const Eigen::Index dim = model.dim();
    const Matrix sx = pauli_x(), sy = pauli_y(), sz = pauli_z(), id = identity_matrix(2);
    model.hamiltonian = Matrix::Zero(dim, dim);
    for (int n = 0; n < n_spins; ++n) {
        const Eigen::Vector3d& a = model.couplings[static_cast<std::size_t>(n)];
        Matrix site = a.x() * sx + a.y() * sy + a.z() * sz;
        std::vector<Matrix> factors;
        factors.reserve(static_cast<std::size_t>(n_spins));
        for (int k = 0; k < n_spins; ++k) factors.push_back(k == n ? site : id);
        model.hamiltonian += kron_chain(factors);
    }
    model.hamiltonian *= omega;
    return model;
}

inline Vector product_zero_state(int n_spins) {
    if (n_spins < 1 || n_spins > kMaxSpins) {
        throw ResourceError("spin count outside supported range");
    }
    Vector psi = Vector::Zero(Eigen::Index{1} << n_spins);
    psi[0] = Complex(1, 0);
    return psi;
}

// (|0..0> - i |1..1>)/sqrt(2).
inline Vector ghz_state(int n_spins) {
    if (n_spins < 1 || n_spins > kMaxSpins) {
        throw ResourceError("spin count outside supported range");
    }
    const Eigen::Index dim = Eigen::Index{1} << n_spins;
    Vector psi = Vector::Zero(dim);
    const double r = 1.0 / std::sqrt(2.0);
    psi[0] = Complex(r, 0);
    psi[dim - 1] = Complex(0, -r);
    return psi;
}

// ---- variance of the off-subspace Hamiltonian ----

// <H_P^2> - <H_P>^2 in psi0 with H_P = H - PHP. For a rank-one projector onto
// psi0 this reduces to <H^2> - <H>^2.
inline double variance_hpi(const SpinModel& model, const Vector& psi0,
                           const ZenoSubspace& subspace) {
    const Matrix& h = model.hamiltonian;
    if (psi0.size() != h.rows() || subspace.projector.rows() != h.rows()) {
        throw ArgumentError("dimension mismatch between model, state, and projector");
    }
    if (!is_normalized(psi0)) throw ArgumentError("state must be normalized");
    if (subspace.is_rank_one()) {
        const Vector proj = subspace.projector * psi0;
        if ((proj - psi0).norm() > 1e-10) {
            throw ArgumentError("rank-one projector must contain the initial state");
        }
    }
    const Matrix hp = h - subspace.projector * h * subspace.projector;
    const Vector hpsi = hp * psi0;
    const double mean = (psi0.adjoint() * hpsi)(0).real();
    const double second = hpsi.squaredNorm();
    return std::max(0.0, second - mean * mean);
}

// ---- exact single-measurement survival ----

// q(mu) = |<psi0| exp(-i H mu) |psi0>|^2. Decomposes H on every call; use
// SurvivalModel for repeated evaluation. Negative mu is accepted so evenness
// in mu can be probed directly.
inline double survival_q(const SpinModel& model, const ZenoSubspace& subspace,
                         const Vector& psi0, double mu) {
    if (!subspace.is_rank_one()) {
        throw ArgumentError("survival_q handles rank-one subspaces; use the "
                            "sequential trajectory mode for higher rank");
    }
    if (psi0.size() != model.hamiltonian.rows()) {
        throw ArgumentError("state dimension does not match model");
    }
    const Vector evolved = evolve(model.hamiltonian, mu, psi0);
    const Complex amp = (psi0.adjoint() * evolved)(0);
    return std::norm(amp);
}

// ---- finite-difference weights (Fornberg recurrence) ----

// Weights w_j with sum_j w_j f(nodes[j]) approximating the order-th
// derivative of f at x0.
inline std::vector<double> finite_difference_weights(int order,
                                                     const std::vector<double>& nodes,
                                                     double x0) {
    const int n = static_cast<int>(nodes.size());
    if (order < 0) throw ArgumentError("derivative order must be non-negative");
    if (n < order + 1) throw ArgumentError("stencil too small for requested derivative");
    std::vector<std::vector<double>> c(
        static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(order) + 1, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[static_cast<std::size_t>(i)] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) {
                    c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                        c1 * (k * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)] -
                              c5 * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)]) / c2;
                }
                c[static_cast<std::size_t>(i)][0] = -c1 * c5 * c[static_cast<std::size_t>(i - 1)][0] / c2;
            }
            for (int k = mn; k >= 1; --k) {
                c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
                    (c4 * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] -
                     k * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k - 1)]) / c3;
            }
            c[static_cast<std::size_t>(j)][0] = c4 * c[static_cast<std::size_t>(j)][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        w[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)][static_cast<std::size_t>(order)];
    }
    return w;
}

namespace detail {

// Minimal symmetric stencil value for the k-th derivative of f at 0 with
// spacing h. Nodes are paired as (+j, -j) before weighting, so for even f the
// odd-derivative estimates vanish identically rather than to roundoff.
inline double central_derivative(const std::function<double(double)>& f, int k, double h) {
    const bool even = (k % 2 == 0);
    const int half = even ? k / 2 : (k + 1) / 2;
    std::vector<double> nodes;
    for (int j = -half; j <= half; ++j) {
        if (!even && j == 0) continue;
        nodes.push_back(static_cast<double>(j));
    }
    const std::vector<double> w = finite_difference_weights(k, nodes, 0.0);

    double acc = 0.0;
    const std::size_t count = nodes.size();
    for (std::size_t i = 0; i < count; ++i) {
        const double node = nodes[i];
        if (node <= 0.0) continue;
        const double fp = f(node * h);
        const double fm = f(-node * h);
        acc += w[i] * (even ? fp + fm : fp - fm);
    }
    if (even) {
        const std::size_t center = count / 2;
        acc += w[center] * f(0.0);
    }
    return acc / std::pow(h, k);
}

} // namespace detail

// Derivatives beta_k = d^k ln q / d mu^k at mu = 0 for k = 1..k_max
// (beta[0] unused). Richardson-extrapolated central differences over spacings
// (h, 2h, 4h) with h = 0.05/sqrt(variance); extrapolating from the coarser
// side keeps the stencil values well above roundoff.
inline std::vector<double> beta_from_log_q(const std::function<double(double)>& log_q,
                                           double variance, int k_max) {
    if (k_max < 1 || k_max > 8) throw ArgumentError("beta order must be in 1..8");
    std::vector<double> beta(static_cast<std::size_t>(k_max) + 1, 0.0);
    if (variance == 0.0) return beta; // constant q
    if (!(variance > 0.0)) throw ArgumentError("variance must be non-negative");
    const double h = 0.05 / std::sqrt(variance);
    for (int k = 1; k <= k_max; ++k) {
        const double d1 = detail::central_derivative(log_q, k, h);
        const double d2 = detail::central_derivative(log_q, k, 2.0 * h);
        const double d4 = detail::central_derivative(log_q, k, 4.0 * h);
        const double r1 = (4.0 * d1 - d2) / 3.0;
        const double r2 = (4.0 * d2 - d4) / 3.0;
        beta[static_cast<std::size_t>(k)] = (16.0 * r1 - r2) / 15.0;
    }
    return beta;
}

// ---- cached survival model ----

// Rank-one survival probability held as spectral lines: the return amplitude
// is a(mu) = sum_k w_k exp(-i lambda_k mu) with w_k = |<v_k|psi0>|^2. Up to
// 64 distinct lines q is evaluated through the pairwise deficit
// 1 - q = sum_{j<k} 4 w_j w_k sin^2((lambda_k - lambda_j) mu / 2), which keeps
// ln q accurate to relative rounding error deep in the Zeno regime; beyond
// that the direct O(#lines) amplitude sum is used. Lines at equal eigenvalues
// are merged. Immutable after construction.
class SurvivalModel {
public:
    static SurvivalModel from_hamiltonian(const Matrix& h, const Vector& psi0) {
        if (psi0.size() != h.rows()) throw ArgumentError("state dimension does not match H");
        if (!is_normalized(psi0)) throw ArgumentError("state must be normalized");
        const SpectralDecomposition dec = eig_hermitian(h);
        const Vector amps = dec.eigenvectors.adjoint() * psi0;
        std::vector<double> lambdas(static_cast<std::size_t>(amps.size()));
        std::vector<double> weights(static_cast<std::size_t>(amps.size()));
        for (Eigen::Index k = 0; k < amps.size(); ++k) {
            lambdas[static_cast<std::size_t>(k)] = dec.eigenvalues[k];
            weights[static_cast<std::size_t>(k)] = std::norm(amps[k]);
        }
        return from_lines(lambdas, weights);
    }

    static SurvivalModel from_spin_model(const SpinModel& model, const Vector& psi0) {
        return from_hamiltonian(model.hamiltonian, psi0);
    }

    // lambdas in rad/s, weights summing to 1 (the line strengths of a
    // normalized state).
    static SurvivalModel from_lines(std::vector<double> lambdas, std::vector<double> weights) {
        if (lambdas.size() != weights.size() || lambdas.empty()) {
            throw ArgumentError("need matching non-empty line arrays");
        }
        std::vector<std::size_t> order(lambdas.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return lambdas[a] < lambdas[b]; });

        double scale = 1.0;
        for (double l : lambdas) {
            if (!std::isfinite(l)) throw ArgumentError("eigenvalues must be finite");
            scale = std::max(scale, std::abs(l));
        }
        const double merge_tol = 1e-12 * scale;

        SurvivalModel m;
        for (std::size_t idx : order) {
            const double l = lambdas[idx];
            const double w = weights[idx];
            if (!(w >= 0.0)) throw ArgumentError("line weights must be non-negative");
            if (w == 0.0) continue;
            if (!m.lambda_.empty() && l - m.lambda_.back() <= merge_tol) {
                // weighted-average position keeps merged lines unbiased
                const double wt = m.weight_.back() + w;
                m.lambda_.back() = (m.lambda_.back() * m.weight_.back() + l * w) / wt;
                m.weight_.back() = wt;
            } else {
                m.lambda_.push_back(l);
                m.weight_.push_back(w);
            }
        }
        if (m.lambda_.empty()) throw ArgumentError("all line weights are zero");

        double sum = m.eval_weight_sum();
        if (std::abs(sum - 1.0) > 1e-12) {
            throw ArgumentError("line weights must sum to 1 (normalized state)");
        }
        // Nudge the trailing weight until the evaluation-order sum is exactly
        // one, so q(0) == 1 without a tolerance.
        for (int pass = 0; pass < 10 && sum != 1.0; ++pass) {
            m.weight_.back() += 1.0 - sum;
            sum = m.eval_weight_sum();
        }

        // Pairwise deficit form: 1 - q = sum_{j<k} 4 w_j w_k sin^2((l_k - l_j) mu / 2),
        // every term non-negative, so 1 - q keeps full relative precision where
        // q -> 1 and ln q would otherwise drown in the eps-level noise of |a|^2.
        if (m.lambda_.size() <= kMaxPairLines) {
            m.use_pairs_ = true;
            const std::size_t n = m.lambda_.size();
            m.pair_coeff_.reserve(n * (n - 1) / 2);
            m.pair_half_gap_.reserve(n * (n - 1) / 2);
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t k = j + 1; k < n; ++k) {
                    m.pair_coeff_.push_back(4.0 * m.weight_[j] * m.weight_[k]);
                    m.pair_half_gap_.push_back(0.5 * (m.lambda_[k] - m.lambda_[j]));
                }
            }
        }

        double mean = 0.0, second = 0.0;
        for (std::size_t i = 0; i < m.lambda_.size(); ++i) {
            mean += m.weight_[i] * m.lambda_[i];
            second += m.weight_[i] * m.lambda_[i] * m.lambda_[i];
        }
        m.mean_level_ = mean;
        m.variance_ = std::max(0.0, second - mean * mean);
        m.mu_max_ = m.variance_ > 0.0 ? 0.5 / std::sqrt(m.variance_)
                                      : std::numeric_limits<double>::infinity();
        m.beta_ = beta_from_log_q([&m](double mu) { return m.log_q(mu); }, m.variance_, 8);
        return m;
    }

    double q(double mu) const {
        if (use_pairs_) return std::max(0.0, 1.0 - deficit(mu));
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < lambda_.size(); ++i) {
            const double phase = lambda_[i] * mu;
            re += weight_[i] * std::cos(phase);
            im -= weight_[i] * std::sin(phase);
        }
        return re * re + im * im;
    }

    double log_q(double mu) const {
        if (use_pairs_) {
            const double s = deficit(mu);
            if (!(s < 1.0)) {
                throw EvaluationError("survival probability vanished at mu = " +
                                      std::to_string(mu));
            }
            return std::log1p(-s);
        }
        const double value = q(mu);
        if (!(value > 0.0)) {
            throw EvaluationError("survival probability vanished at mu = " +
                                  std::to_string(mu));
        }
        return std::log(value);
    }

    double variance() const { return variance_; }
    double mean_level() const { return mean_level_; }
    double mu_max() const { return mu_max_; }
    std::size_t line_count() const { return lambda_.size(); }
    const std::vector<double>& lambdas() const { return lambda_; }
    const std::vector<double>& weights() const { return weight_; }

    // beta[k] = d^k ln q/d mu^k at 0, k = 1..8; beta[0] = 0.
    const std::vector<double>& beta() const { return beta_; }

private:
    // Above this the O(lines^2) pair table stops paying for itself; the direct
    // amplitude sum takes over with its eps-level absolute noise floor.
    static constexpr std::size_t kMaxPairLines = 64;

    double eval_weight_sum() const {
        double s = 0.0;
        for (double w : weight_) s += w;
        return s;
    }

    // 1 - q(mu) to full relative precision (pair path only).
    double deficit(double mu) const {
        double s = 0.0;
        for (std::size_t i = 0; i < pair_coeff_.size(); ++i) {
            const double sn = std::sin(pair_half_gap_[i] * mu);
            s += pair_coeff_[i] * sn * sn;
        }
        return s;
    }

    std::vector<double> lambda_;
    std::vector<double> weight_;
    std::vector<double> pair_coeff_;
    std::vector<double> pair_half_gap_;
    bool use_pairs_ = false;
    double mean_level_ = 0.0;
    double variance_ = 0.0;
    double mu_max_ = 0.0;
    std::vector<double> beta_;
};

// Derivatives of ln q at 0 up to k_max, recomputed when k_max != 8.
inline std::vector<double> beta_coefficients(const SurvivalModel& survival, int k_max) {
    if (k_max == 8) return survival.beta();
    return beta_from_log_q([&survival](double mu) { return survival.log_q(mu); },
                           survival.variance(), k_max);
}

} // namespace qzeno
