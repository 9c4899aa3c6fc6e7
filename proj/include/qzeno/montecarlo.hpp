#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qzeno/chebyshev.hpp"
#include "qzeno/distributions.hpp"
#include "qzeno/errors.hpp"
#include "qzeno/fisher.hpp"
#include "qzeno/linalg.hpp"
#include "qzeno/model.hpp"
#include "qzeno/rng.hpp"

namespace qzeno {

// ---- single-trajectory survival ----

enum class TrajectoryMode { product, sequential };

namespace detail {

inline double trajectory_survival_impl(const SpectralDecomposition& dec,
                                       const ZenoSubspace& subspace, const Vector& psi0,
                                       std::span<const double> intervals,
                                       TrajectoryMode mode) {
    if (mode == TrajectoryMode::product) {
        if (!subspace.is_rank_one()) {
            throw ArgumentError("product mode factorizes through a rank-one projector");
        }
        const Vector amps = dec.eigenvectors.adjoint() * psi0;
        double total = 1.0;
        for (double mu : intervals) {
            Complex a(0, 0);
            for (Eigen::Index k = 0; k < amps.size(); ++k) {
                a += std::norm(amps[k]) * std::polar(1.0, -dec.eigenvalues[k] * mu);
            }
            total *= std::norm(a);
        }
        return total;
    }
    Vector psi = psi0;
    double total = 1.0;
    for (double mu : intervals) {
        psi = dec.evolve(mu, psi);
        psi = subspace.projector * psi;
        const double w = psi.squaredNorm();
        total *= w;
        if (!(w > 0.0)) return 0.0; // trajectory died; not an error
        psi /= std::sqrt(w);
    }
    return total;
}

} // namespace detail

// Survival probability of one trajectory with the given spacings. Product
// mode multiplies the rank-one q(mu_j); sequential mode evolves, projects,
// and renormalizes, which also covers higher-rank projectors.
inline double trajectory_survival(const SpinModel& model, const ZenoSubspace& subspace,
                                  const Vector& psi0, std::span<const double> intervals,
                                  TrajectoryMode mode) {
    if (psi0.size() != model.hamiltonian.rows() ||
        subspace.projector.rows() != model.hamiltonian.rows()) {
        throw ArgumentError("dimension mismatch between model, state, and projector");
    }
    for (double mu : intervals) {
        if (!(mu >= 0.0)) throw ArgumentError("intervals must be non-negative");
    }
    return detail::trajectory_survival_impl(eig_hermitian(model.hamiltonian), subspace,
                                            psi0, intervals, mode);
}

// ---- ensembles ----

struct EnsembleOptions {
    long long runs = 0;
    long long m = 0;
    std::uint64_t seed = 0;
    std::uint64_t run_offset = 0; // global index of the first run
    int threads = 1;
    long long sample_budget = 4'000'000'000LL; // cap on runs * m
    bool store_log_survival = true;
    bool use_interpolant = true; // Chebyshev-compressed ln q for bulk sampling
};

struct TrajectoryEnsemble {
    std::vector<std::uint8_t> outcomes; // one survived/died bit per run
    std::vector<double> log_survival;   // per-run sum of ln q (when stored)
    long long survived = 0;
    double p_hat = 0.0;
    double std_error = 0.0;
};

namespace detail {

inline void check_ensemble_options(const EnsembleOptions& opt) {
    if (opt.runs < 1 || opt.m < 1) throw ArgumentError("runs and m must be at least 1");
    if (opt.threads < 1) throw ArgumentError("thread count must be at least 1");
    if (static_cast<long double>(opt.runs) * static_cast<long double>(opt.m) >
        static_cast<long double>(opt.sample_budget)) {
        throw ResourceError("ensemble of " + std::to_string(opt.runs) + " runs x " +
                            std::to_string(opt.m) + " measurements exceeds the sample budget " +
                            std::to_string(opt.sample_budget));
    }
}

// Runs [begin, end) of the ensemble; each run owns stream (seed, offset+run),
// so the split over threads cannot change any outcome.
template <class RunBody>
void for_each_run_threaded(long long runs, int threads, RunBody&& body) {
    if (threads == 1 || runs < 2 * threads) {
        body(0, runs);
        return;
    }
    std::vector<std::thread> pool;
    const long long chunk = (runs + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long long lo = t * chunk;
        const long long hi = std::min(runs, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

inline void finalize_ensemble(TrajectoryEnsemble& ens) {
    long long survived = 0;
    for (std::uint8_t bit : ens.outcomes) survived += bit; // fixed run order
    ens.survived = survived;
    const double r = static_cast<double>(ens.outcomes.size());
    ens.p_hat = static_cast<double>(survived) / r;
    ens.std_error = std::sqrt(ens.p_hat * (1.0 - ens.p_hat) / r);
}

} // namespace detail

// Product-mode ensemble: R runs of m spacings; each run accumulates
// sum_j ln q(mu_j) and registers a single Bernoulli outcome with probability
// exp(sum). Deterministic for a given (seed, run_offset) at any thread count.
inline TrajectoryEnsemble simulate_ensemble(const SurvivalModel& q,
                                            const IntervalDistribution& p,
                                            const EnsembleOptions& opt) {
    detail::check_ensemble_options(opt);
    TrajectoryEnsemble ens;
    ens.outcomes.assign(static_cast<std::size_t>(opt.runs), 0);
    if (opt.store_log_survival) {
        ens.log_survival.assign(static_cast<std::size_t>(opt.runs), 0.0);
    }

    const auto log_q_exact = [&q](double mu) { return q.log_q(mu); };
    const bool dirac = !p.has_density();
    const double dirac_log = dirac ? static_cast<double>(opt.m) * q.log_q(p.support().low) : 0.0;

    const bool uniform = p.kind() == IntervalDistribution::Kind::uniform;
    ChebyshevSeries interp;
    bool use_interp = false;
    if (!dirac && opt.use_interpolant) {
        interp = ChebyshevSeries::fit_to_tolerance(log_q_exact, p.support().low,
                                                   p.support().high, 1e-12);
        use_interp = true;
    }

    detail::for_each_run_threaded(opt.runs, opt.threads, [&](long long lo, long long hi) {
        for (long long r = lo; r < hi; ++r) {
            RngStream stream = RngStream::for_run(opt.seed, opt.run_offset +
                                                                static_cast<std::uint64_t>(r));
            double acc;
            if (dirac) {
                acc = dirac_log;
            } else if (use_interp && uniform) {
                // uniform draws map to the Chebyshev unit variable directly
                acc = 0.0;
                for (long long j = 0; j < opt.m; ++j) {
                    acc += interp.eval_unit(2.0 * stream.uniform01() - 1.0);
                }
            } else if (use_interp) {
                acc = 0.0;
                for (long long j = 0; j < opt.m; ++j) acc += interp(p.sample_one(stream));
            } else {
                acc = 0.0;
                for (long long j = 0; j < opt.m; ++j) acc += q.log_q(p.sample_one(stream));
            }
            const bool alive = stream.uniform01() < std::exp(acc);
            ens.outcomes[static_cast<std::size_t>(r)] = alive ? 1 : 0;
            if (opt.store_log_survival) ens.log_survival[static_cast<std::size_t>(r)] = acc;
        }
    });

    detail::finalize_ensemble(ens);
    return ens;
}

// Sequential-mode ensemble on the full state vector; supports any projector
// rank. Intended for small dimensions.
inline TrajectoryEnsemble simulate_ensemble_sequential(const SpinModel& model,
                                                       const ZenoSubspace& subspace,
                                                       const Vector& psi0,
                                                       const IntervalDistribution& p,
                                                       const EnsembleOptions& opt) {
    detail::check_ensemble_options(opt);
    const SpectralDecomposition dec = eig_hermitian(model.hamiltonian);
    TrajectoryEnsemble ens;
    ens.outcomes.assign(static_cast<std::size_t>(opt.runs), 0);
    if (opt.store_log_survival) {
        ens.log_survival.assign(static_cast<std::size_t>(opt.runs), 0.0);
    }

    detail::for_each_run_threaded(opt.runs, opt.threads, [&](long long lo, long long hi) {
        std::vector<double> intervals(static_cast<std::size_t>(opt.m));
        for (long long r = lo; r < hi; ++r) {
            RngStream stream = RngStream::for_run(opt.seed, opt.run_offset +
                                                                static_cast<std::uint64_t>(r));
            p.sample(stream, intervals);
            const double prob = detail::trajectory_survival_impl(
                dec, subspace, psi0, intervals, TrajectoryMode::sequential);
            const bool alive = stream.uniform01() < prob;
            ens.outcomes[static_cast<std::size_t>(r)] = alive ? 1 : 0;
            if (opt.store_log_survival) {
                ens.log_survival[static_cast<std::size_t>(r)] =
                    prob > 0.0 ? std::log(prob) : -std::numeric_limits<double>::infinity();
            }
        }
    });

    detail::finalize_ensemble(ens);
    return ens;
}

// ---- ordinary least squares, used by the convergence and scaling fits ----

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
};

inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ArgumentError("linear fit needs at least two points");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw ArgumentError("linear fit needs distinct x values");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_res = syy - fit.slope * sxy;
    fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
    return fit;
}

// ---- large-deviation convergence of the empirical rate ----

struct LdRow {
    long long m = 0;
    double mean_rate = 0.0;     // mean over runs of (1/m) sum ln q
    double sd_rate = 0.0;       // spread over runs
    double sem_rate = 0.0;      // sd / sqrt(R)
    double expected_rate = 0.0; // int p ln q
    double deviation = 0.0;
    bool within_4se = true;
};

struct LdTable {
    std::vector<LdRow> rows;
    double sd_slope = std::numeric_limits<double>::quiet_NaN(); // d ln sd / d ln m
    double sd_fit_r_squared = std::numeric_limits<double>::quiet_NaN();
};

// For each m, the empirical rate (1/m) sum_j ln q(mu_j) concentrates at
// int p ln q with spread proportional to m^(-1/2); the log-log slope of the
// spread is fitted across the sweep.
inline LdTable ld_convergence(const SurvivalModel& q, const IntervalDistribution& p,
                              std::span<const long long> ms, long long runs,
                              const EnsembleOptions& base_options) {
    if (ms.empty()) throw ArgumentError("m sweep must be non-empty");
    for (std::size_t i = 0; i + 1 < ms.size(); ++i) {
        if (ms[i + 1] <= ms[i]) throw ArgumentError("m sweep must be ascending");
    }
    const double expected = pair_with_log_q(p, [&q](double mu) { return q.log_q(mu); });

    LdTable table;
    std::vector<double> log_m, log_sd;
    std::uint64_t offset = base_options.run_offset;
    for (long long m : ms) {
        EnsembleOptions opt = base_options;
        opt.runs = runs;
        opt.m = m;
        opt.run_offset = offset;
        opt.store_log_survival = true;
        offset += static_cast<std::uint64_t>(runs);
        const TrajectoryEnsemble ens = simulate_ensemble(q, p, opt);

        LdRow row;
        row.m = m;
        row.expected_rate = expected;
        const auto [mn, mx] = std::minmax_element(ens.log_survival.begin(),
                                                  ens.log_survival.end());
        double mean = 0.0, var = 0.0;
        if (*mn == *mx) {
            // deterministic spacing: the spread is exactly zero, not the
            // accumulation noise a two-pass variance would report
            mean = *mn / static_cast<double>(m);
        } else {
            for (double ls : ens.log_survival) mean += ls / static_cast<double>(m);
            mean /= static_cast<double>(runs);
            for (double ls : ens.log_survival) {
                const double d = ls / static_cast<double>(m) - mean;
                var += d * d;
            }
            var /= static_cast<double>(runs - 1);
        }
        row.mean_rate = mean;
        row.sd_rate = std::sqrt(var);
        row.sem_rate = row.sd_rate / std::sqrt(static_cast<double>(runs));
        row.deviation = std::abs(mean - expected);
        row.within_4se = row.deviation <= 4.0 * row.sem_rate || row.sem_rate == 0.0;
        table.rows.push_back(row);

        if (row.sd_rate > 0.0) {
            log_m.push_back(std::log(static_cast<double>(m)));
            log_sd.push_back(std::log(row.sd_rate));
        }
    }
    if (log_m.size() >= 2) {
        const LinearFit fit = linear_fit(log_m, log_sd);
        table.sd_slope = fit.slope;
        table.sd_fit_r_squared = fit.r_squared;
    }
    return table;
}

// ---- maximum-likelihood inversion of the survival fraction ----

// Solves P*(mu2_hat) = p_hat for the upper endpoint of a uniform density by
// bisection on the exact quadrature P*, which is strictly decreasing in mu2
// throughout the Zeno regime.
inline double mle_mu2(double p_hat, const SurvivalModel& q, double mu1, double mu2_guess,
                      long long m, double abs_tol = 1e-12) {
    if (!(p_hat > 0.0) || !(p_hat < 1.0)) {
        throw EstimationError("survival fraction " + std::to_string(p_hat) +
                              " is at the boundary; mu2 cannot be inferred");
    }
    if (!(mu2_guess > mu1) || !(mu1 >= 0.0)) throw ArgumentError("need 0 <= mu1 < mu2 guess");
    double lo = mu1 + 1e-3 * (mu2_guess - mu1);
    double hi = 3.0 * mu2_guess;

    const auto log_pstar_at = [&](double mu2) {
        return most_probable_survival(IntervalDistribution::uniform(mu1, mu2), q, m).log_pstar;
    };
    const double target = std::log(p_hat);
    const double at_lo = log_pstar_at(lo);
    const double at_hi = log_pstar_at(hi);
    if (!(at_lo > at_hi)) {
        throw ArgumentError("survival is not decreasing across the bracket; "
                            "outside the Zeno regime");
    }
    if (target > at_lo || target < at_hi) {
        throw EstimationError("observed survival fraction is outside the attainable "
                              "range of the bracket");
    }
    while (hi - lo > abs_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // floating-point resolution
        if (log_pstar_at(mid) >= target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// ---- Cramer-Rao saturation experiment ----

struct CrbExperiment {
    std::vector<double> p_hats;
    std::vector<double> mu2_hats; // seconds
    double mean_mu2 = 0.0;
    double sample_variance = 0.0; // over batches, s^2
    double crb = 0.0;             // 1 / (runs * F_f)
    double saturation_ratio = 0.0;
    double empirical_fisher = 0.0; // 1 / (runs * sample variance)
    DirectionalFisher fisher;      // exact directional information at truth
    long long batches = 0;
    long long runs = 0;
};

// B independent batches of R runs each; every batch yields one MLE mu2_hat,
// and the spread over batches is compared against the Cramer-Rao bound
// 1/(R F_f). Batch b uses global run indices [b R, (b+1) R).
inline CrbExperiment crb_saturation_experiment(const SurvivalModel& q, double mu1,
                                               double mu2, long long m, long long batches,
                                               long long runs,
                                               const EnsembleOptions& base_options) {
    if (batches < 2) throw ArgumentError("need at least two batches for a variance");
    const IntervalDistribution p = IntervalDistribution::uniform(mu1, mu2);
    CrbExperiment result;
    result.batches = batches;
    result.runs = runs;
    result.fisher = fisher_along_direction(p, mu2_shift_direction(p), q, m);
    if (result.fisher.crb_infinite) {
        throw SingularityError("direction carries no information; CRB is infinite");
    }
    result.crb = result.fisher.crb / static_cast<double>(runs);

    for (long long b = 0; b < batches; ++b) {
        EnsembleOptions opt = base_options;
        opt.runs = runs;
        opt.m = m;
        opt.run_offset = base_options.run_offset +
                         static_cast<std::uint64_t>(b) * static_cast<std::uint64_t>(runs);
        opt.store_log_survival = false;
        const TrajectoryEnsemble ens = simulate_ensemble(q, p, opt);
        result.p_hats.push_back(ens.p_hat);
        result.mu2_hats.push_back(mle_mu2(ens.p_hat, q, mu1, mu2, m));
    }

    double mean = 0.0;
    for (double v : result.mu2_hats) mean += v;
    mean /= static_cast<double>(batches);
    double var = 0.0;
    for (double v : result.mu2_hats) var += (v - mean) * (v - mean);
    var /= static_cast<double>(batches - 1);
    result.mean_mu2 = mean;
    result.sample_variance = var;
    result.saturation_ratio = var / result.crb;
    result.empirical_fisher = 1.0 / (static_cast<double>(runs) * var);
    return result;
}

} // namespace qzeno
