#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qzeno/distributions.hpp"
#include "qzeno/errors.hpp"
#include "qzeno/model.hpp"
#include "qzeno/quadrature.hpp"

namespace qzeno {

namespace detail {

inline double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

} // namespace detail

// ---- most probable survival probability ----

// P* = exp(m I) with I = int p ln q. one_minus_pstar goes through expm1 so
// the Zeno regime (P* -> 1) keeps full relative precision.
struct SurvivalEstimate {
    long long m = 0;
    double mean_log_q = 0.0; // I = int p ln q, per measurement
    double log_pstar = 0.0;
    double pstar = 1.0;
    double one_minus_pstar = 0.0;

    static SurvivalEstimate from_mean_log_q(long long m, double mean_log_q) {
        if (m < 1) throw ArgumentError("measurement count must be at least 1");
        if (!std::isfinite(mean_log_q)) throw EvaluationError("mean log-survival is not finite");
        SurvivalEstimate e;
        e.m = m;
        e.mean_log_q = mean_log_q;
        e.log_pstar = static_cast<double>(m) * mean_log_q;
        e.pstar = std::exp(e.log_pstar);
        e.one_minus_pstar = -std::expm1(e.log_pstar);
        return e;
    }
};

inline SurvivalEstimate most_probable_survival(const IntervalDistribution& p,
                                               const SurvivalModel& q, long long m) {
    const double mean_log = pair_with_log_q(p, [&q](double mu) { return q.log_q(mu); });
    return SurvivalEstimate::from_mean_log_q(m, mean_log);
}

// P*[p + c f]: the perturbed measure keeps f's point masses exact and folds
// its continuous part into the quadrature integrand. The continuous part of
// p + c f must stay non-negative.
inline SurvivalEstimate most_probable_survival_perturbed(const IntervalDistribution& p,
                                                         const PerturbationDirection& f,
                                                         double c, const SurvivalModel& q,
                                                         long long m) {
    if (!p.has_density()) {
        throw ArgumentError("perturbed survival needs a density to perturb");
    }
    const double lo = std::min(p.support().low, f.density_support().low);
    const double hi = std::max(p.support().high, f.density_support().high);
    double scale = 0.0;
    for (int i = 0; i < 65; ++i) {
        const double mu = lo + (hi - lo) * (i + 0.5) / 65.0;
        const double val = p.pdf(mu) + c * f.density(mu);
        scale = std::max(scale, std::abs(val));
        if (val < -1e-10 * std::max(1.0, scale)) {
            throw ArgumentError("perturbation drives the density negative; reduce |c|");
        }
    }
    double mean_log = integrate_adaptive(
                          [&](double mu) {
                              return (p.pdf(mu) + c * f.density(mu)) * q.log_q(mu);
                          },
                          lo, hi)
                          .value;
    for (const auto& pm : f.masses()) mean_log += c * pm.weight * q.log_q(pm.location);
    return SurvivalEstimate::from_mean_log_q(m, mean_log);
}

// ---- moment-series survival (truncated expansion) ----

struct MomentSeriesSurvival {
    SurvivalEstimate estimate;
    int k_used = 0;
    double remainder_estimate = 0.0; // |beta_K chi_K / K!| per measurement
    double remainder_ratio = 0.0;    // remainder relative to |mean log q|
    bool series_trusted = true;
};

// P* from ln P* = m sum_{k<=K} beta_k chi_k / k!.
inline MomentSeriesSurvival survival_from_moments(std::span<const double> beta,
                                                  std::span<const double> chi,
                                                  long long m, int k_max) {
    if (k_max < 1) throw ArgumentError("series order must be at least 1");
    if (beta.size() < static_cast<std::size_t>(k_max) + 1 ||
        chi.size() < static_cast<std::size_t>(k_max) + 1) {
        throw ArgumentError("need beta and chi up to order K");
    }
    double mean_log = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        mean_log += beta[static_cast<std::size_t>(k)] * chi[static_cast<std::size_t>(k)] /
                    detail::factorial(k);
    }
    MomentSeriesSurvival r;
    r.estimate = SurvivalEstimate::from_mean_log_q(m, mean_log);
    r.k_used = k_max;
    r.remainder_estimate = std::abs(beta[static_cast<std::size_t>(k_max)] *
                                    chi[static_cast<std::size_t>(k_max)] /
                                    detail::factorial(k_max));
    r.remainder_ratio = mean_log == 0.0 ? 0.0 : r.remainder_estimate / std::abs(mean_log);
    r.series_trusted = r.remainder_ratio <= 1e-6;
    return r;
}

// ---- functional derivative ----

// dP*/dc along f: m P* <f|ln q>.
inline double functional_derivative_pairing(const PerturbationDirection& f,
                                            const SurvivalModel& q, long long m,
                                            double pstar) {
    if (m < 1) throw ArgumentError("measurement count must be at least 1");
    const double pairing = pair_with_log_q(f, [&q](double mu) { return q.log_q(mu); });
    return static_cast<double>(m) * pstar * pairing;
}

// ---- Zeno confinement quality ----

struct ConfinementReport {
    double approx_error = 0.0; // -m int p ln q, the linearized 1 - P*
    double exact_error = 0.0;  // 1 - P*
    double ratio = 1.0;        // approx / exact >= 1
    bool zeno_regime = true;   // approx below threshold
};

inline ConfinementReport zeno_confinement(const IntervalDistribution& p,
                                          const SurvivalModel& q, long long m,
                                          double threshold = 0.2) {
    const SurvivalEstimate est = most_probable_survival(p, q, m);
    ConfinementReport r;
    r.approx_error = -est.log_pstar;
    r.exact_error = est.one_minus_pstar;
    r.zeno_regime = r.approx_error < threshold;
    r.ratio = r.exact_error > 0.0 ? r.approx_error / r.exact_error : 1.0;
    return r;
}

// ---- Fisher information: operator eigenvalue and matrix ----

// m^2 P*/(1 - P*), the scalar prefactor of every Fisher quantity.
inline double fisher_prefactor(const SurvivalEstimate& est) {
    if (!(est.one_minus_pstar > 0.0)) {
        throw SingularityError("survival is deterministic (P* = 1); the binary "
                               "outcome carries no information");
    }
    if (!(est.pstar > 0.0)) {
        throw SingularityError("survival probability vanished (P* = 0)");
    }
    const double md = static_cast<double>(est.m);
    return md * md * est.pstar / est.one_minus_pstar;
}

// ||ln q||^2 = int_0^upper (ln q)^2 dmu. The L2 domain is [0, mu_max] by
// convention; Fisher identities must use the same domain on both sides.
inline double log_q_norm_sq(const SurvivalModel& q,
                            double upper = std::numeric_limits<double>::quiet_NaN()) {
    if (std::isnan(upper)) upper = q.mu_max();
    if (!std::isfinite(upper)) return 0.0; // constant q == 1
    return integrate_adaptive(
               [&q](double mu) {
                   const double l = q.log_q(mu);
                   return l * l;
               },
               0.0, upper)
        .value;
}

// F_v = m^2 P*/(1-P*) ||ln q||^2, the single non-zero eigenvalue of the
// Fisher information operator.
inline double fio_eigenvalue(const SurvivalModel& q, const SurvivalEstimate& est) {
    const double norm_sq = log_q_norm_sq(q);
    if (!(norm_sq > 0.0)) {
        throw SingularityError("ln q vanishes on the evaluation window; the "
                               "information operator is zero");
    }
    return fisher_prefactor(est) * norm_sq;
}

struct FisherReport {
    long long m = 0;
    int k = 0;
    MomentSeriesSurvival survival;     // P* from the same (beta, chi, m, K)
    double prefactor = 0.0;            // m^2 P*/(1 - P*)
    Eigen::MatrixXd fim;               // F_ij = prefactor * (beta_i/i!)(beta_j/j!)
    double fim_eigenvalue = 0.0;       // from power iteration on fim
    double fim_eigenvalue_solver = 0.0;// from the dense symmetric solver
    Eigen::VectorXd eigenvector;       // non-normalized convention v_i = beta_i/i!
    double eigenvector_norm_sq = 0.0;  // sum_k (beta_k/k!)^2 per the fim itself
};

// Builds the K x K Fisher information matrix over moment coordinates and
// extracts its rank-one eigenstructure. The eigenvector is recovered by power
// iteration: for a rank-one matrix one application of fim is exact per
// component, where a dense solver would lose the relatively tiny components.
inline FisherReport fim_report(std::span<const double> beta, std::span<const double> chi,
                               long long m, int k_max) {
    FisherReport rep;
    rep.m = m;
    rep.k = k_max;
    rep.survival = survival_from_moments(beta, chi, m, k_max);
    rep.prefactor = fisher_prefactor(rep.survival.estimate);

    Eigen::VectorXd v(k_max);
    for (int k = 1; k <= k_max; ++k) {
        v[k - 1] = beta[static_cast<std::size_t>(k)] / detail::factorial(k);
    }
    rep.fim.resize(k_max, k_max);
    for (int i = 0; i < k_max; ++i) {
        for (int j = 0; j < k_max; ++j) rep.fim(i, j) = rep.prefactor * (v[i] * v[j]);
    }

    // power iteration with a deterministic start
    Eigen::VectorXd x = Eigen::VectorXd::Ones(k_max);
    x /= x.norm();
    double lambda = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::VectorXd y = rep.fim * x;
        const double norm = y.norm();
        if (!(norm > 0.0)) {
            // start vector orthogonal to the range; restart at the largest diagonal
            Eigen::Index imax = 0;
            rep.fim.diagonal().maxCoeff(&imax);
            x = Eigen::VectorXd::Unit(k_max, imax);
            continue;
        }
        y /= norm;
        const double step = std::min((y - x).norm(), (y + x).norm());
        x = y;
        lambda = x.dot(rep.fim * x);
        if (step < 1e-15) break;
    }
    rep.fim_eigenvalue = lambda;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(rep.fim);
    if (solver.info() != Eigen::Success) {
        throw EvaluationError("FIM eigendecomposition failed");
    }
    rep.fim_eigenvalue_solver = solver.eigenvalues().maxCoeff();

    rep.eigenvector_norm_sq = lambda / rep.prefactor;
    rep.eigenvector = x * std::sqrt(rep.eigenvector_norm_sq);
    // orient along v, the convention the struct documents
    if (rep.eigenvector.dot(v) < 0.0) rep.eigenvector = -rep.eigenvector;
    return rep;
}

// ---- directional Fisher information and the Cramer-Rao bound ----

struct DirectionalFisher {
    double fisher_functional = 0.0; // prefactor * <f|ln q>^2
    double fisher_moment = 0.0;     // prefactor * (sum beta_k xi_k / k!)^2
    double rel_gap = 0.0;
    bool series_trusted = true;
    double pairing = 0.0; // <f|ln q>
    double crb = 0.0;     // 1 / fisher_functional
    bool crb_infinite = false;
    double single_measurement_reference = 0.0; // 4 var(H), quantum bound per shot
    SurvivalEstimate survival;                 // quadrature P*
};

// Computes the directional information both ways: the functional pairing
// <f|ln q> by quadrature and the moment series sum beta_k xi_k / k!. The two
// share only the P* prefactor, so their gap measures series truncation.
inline DirectionalFisher fisher_along_direction(const IntervalDistribution& p,
                                                const PerturbationDirection& f,
                                                const SurvivalModel& q, long long m,
                                                int k_max = 8) {
    DirectionalFisher r;
    r.survival = most_probable_survival(p, q, m);
    const double pref = fisher_prefactor(r.survival);

    r.pairing = pair_with_log_q(f, [&q](double mu) { return q.log_q(mu); });
    r.fisher_functional = pref * (r.pairing * r.pairing);

    const std::vector<double>& beta = q.beta();
    if (static_cast<int>(beta.size()) < k_max + 1) {
        throw ArgumentError("survival model carries fewer beta coefficients than K");
    }
    double series = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        series += beta[static_cast<std::size_t>(k)] * f.moment(k) / detail::factorial(k);
    }
    r.fisher_moment = pref * (series * series);
    const double tail = std::abs(beta[static_cast<std::size_t>(k_max)] * f.moment(k_max) /
                                 detail::factorial(k_max));
    r.series_trusted = series != 0.0 && tail <= 1e-6 * std::abs(series);

    const double scale = std::max(r.fisher_functional, r.fisher_moment);
    r.rel_gap = scale > 0.0 ? std::abs(r.fisher_functional - r.fisher_moment) / scale : 0.0;

    r.single_measurement_reference = 4.0 * q.variance();
    if (r.fisher_functional > 0.0) {
        r.crb = 1.0 / r.fisher_functional;
    } else {
        r.crb = std::numeric_limits<double>::infinity();
        r.crb_infinite = true;
    }
    return r;
}

// Binary-outcome definition (dP*/dc)^2 / (P*(1-P*)) with the derivative taken
// by Richardson-extrapolated central differences of the exact quadrature
// P*[p + c f]. Fully independent of the pairing and series paths.
inline double finite_difference_fisher(const IntervalDistribution& p,
                                       const PerturbationDirection& f,
                                       const SurvivalModel& q, long long m,
                                       double step) {
    if (!(step > 0.0)) throw ArgumentError("finite-difference step must be positive");
    const auto pstar_at = [&](double c) {
        return most_probable_survival_perturbed(p, f, c, q, m).pstar;
    };
    const double d1 = (pstar_at(step) - pstar_at(-step)) / (2.0 * step);
    const double d2 = (pstar_at(2.0 * step) - pstar_at(-2.0 * step)) / (4.0 * step);
    const double deriv = (4.0 * d1 - d2) / 3.0;
    const SurvivalEstimate est = most_probable_survival(p, q, m);
    if (!(est.pstar > 0.0) || !(est.one_minus_pstar > 0.0)) {
        throw SingularityError("binary outcome is deterministic; no information");
    }
    return deriv * deriv / (est.pstar * est.one_minus_pstar);
}

// ---- closed-form Fisher information for the uniform upper endpoint ----

struct ClosedFormFisher {
    double fisher = 0.0; // m * var(H) * (mu2^2 - chi2)^2 / (chi2 (mu2 - mu1)^2)
    double chi2 = 0.0;
    double moment_ratio = 0.0; // (mu2^2 - chi2)^2 / (chi2 (mu2 - mu1)^2)
    double zeno_x = 0.0;       // m * var(H) * chi2, the expansion parameter
    bool zeno_ok = false;      // zeno_x < 0.2
};

// Quadratic-regime closed form for estimating mu2 of a uniform density. The
// product is ordered m * (var * ratio) so doubling m or var rescales the
// result bit-exactly.
inline ClosedFormFisher uniform_mu2_fisher(double variance_hpi, double mu1, double mu2,
                                           long long m) {
    if (!(mu2 > mu1) || !(mu1 >= 0.0)) throw ArgumentError("need 0 <= mu1 < mu2");
    if (m < 1) throw ArgumentError("measurement count must be at least 1");
    if (!(variance_hpi >= 0.0)) throw ArgumentError("variance must be non-negative");
    ClosedFormFisher r;
    const double width = mu2 - mu1;
    r.chi2 = (std::pow(mu2, 3) - std::pow(mu1, 3)) / (3.0 * width);
    const double excess = mu2 * mu2 - r.chi2;
    r.moment_ratio = (excess * excess) / (r.chi2 * width * width);
    r.fisher = static_cast<double>(m) * (variance_hpi * r.moment_ratio);
    r.zeno_x = static_cast<double>(m) * (variance_hpi * r.chi2);
    r.zeno_ok = r.zeno_x < 0.2;
    return r;
}

// Ratio F_f / (F_chi2 * (d chi2/d mu2)^2); the chain rule makes it 1. The
// three factors come from independent code paths.
inline double chain_rule_check(double mu1, double mu2) {
    if (!(mu2 > mu1) || !(mu1 >= 0.0)) throw ArgumentError("need 0 <= mu1 < mu2");
    const double f_direction = uniform_mu2_fisher(1.0, mu1, mu2, 1).fisher;
    const IntervalDistribution p = IntervalDistribution::uniform(mu1, mu2);
    const double f_chi2 = 1.0 / p.moment(2); // m var / chi2 at m = var = 1
    const double xi2 = mu2_shift_direction(p, 2).moment(2);
    return f_direction / (f_chi2 * xi2 * xi2);
}

// ---- Zeno-limit diagnostics ----

struct ZenoLimitRow {
    long long m = 0;
    double expected_total_time = 0.0; // m * chi_1
    double rate = 0.0;                // -m int p ln q
    double one_minus_pstar = 0.0;
};

// Table of the confinement error along a family p_m with fixed expected total
// time T = m chi_1(p_m); the rate must fall to zero as m grows.
inline std::vector<ZenoLimitRow> zeno_limit_condition(
    const std::function<IntervalDistribution(long long)>& family, const SurvivalModel& q,
    double total_time, std::span<const long long> ms) {
    std::vector<ZenoLimitRow> rows;
    rows.reserve(ms.size());
    for (long long m : ms) {
        if (m < 1) throw ArgumentError("measurement counts must be positive");
        const IntervalDistribution p = family(m);
        ZenoLimitRow row;
        row.m = m;
        row.expected_total_time = static_cast<double>(m) * p.moment(1);
        if (std::abs(row.expected_total_time - total_time) > 1e-9 * std::abs(total_time)) {
            throw ArgumentError("family breaks the fixed total-time constraint at m = " +
                                std::to_string(m));
        }
        const SurvivalEstimate est = most_probable_survival(p, q, m);
        row.rate = -est.log_pstar;
        row.one_minus_pstar = est.one_minus_pstar;
        rows.push_back(row);
    }
    return rows;
}

// ---- formal self-information relation ----

struct SelfInformationCheck {
    double fim_eigenvalue = 0.0;  // m^2 Ptilde/(1-Ptilde) sum (beta_k/k!)^2
    double via_surprisal = 0.0;   // -m Ptilde/(1-Ptilde) * (-ln Ptilde)
    double formal_pstar = 0.0;    // exp(m sum (beta_k/k!)^2) — exceeds 1
};

// Formal substitution chi_k -> v_k = beta_k/k!. The resulting "survival"
// exceeds one (1 - P < 0), so this is an algebraic identity check only.
inline SelfInformationCheck self_information_identity(std::span<const double> beta,
                                                      long long m, int k_max) {
    if (m < 1) throw ArgumentError("measurement count must be at least 1");
    double norm_sq = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        const double vk = beta[static_cast<std::size_t>(k)] / detail::factorial(k);
        norm_sq += vk * vk;
    }
    SelfInformationCheck r;
    const double md = static_cast<double>(m);
    r.formal_pstar = std::exp(md * norm_sq);
    if (!std::isfinite(r.formal_pstar)) {
        throw EvaluationError("formal substitution overflowed; rescale beta");
    }
    const double one_minus = -std::expm1(md * norm_sq); // negative
    r.fim_eigenvalue = md * md * r.formal_pstar / one_minus * norm_sq;
    const double surprisal = -std::log(r.formal_pstar);
    r.via_surprisal = -md * r.formal_pstar / one_minus * surprisal;
    return r;
}

} // namespace qzeno
