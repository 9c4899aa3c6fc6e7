#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "qzeno/config.hpp"
#include "qzeno/errors.hpp"
#include "qzeno/fisher.hpp"
#include "qzeno/montecarlo.hpp"

namespace qzeno {

// ---- CSV output ----
//
// Layout: '#'-prefixed metadata lines, one header line, then data rows with
// doubles at 17 significant digits so reruns can be compared byte for byte.

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    void comment(const std::string& text) { os_ << "# " << text << "\n"; }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) os_ << ",";
            os_ << cells[i];
        }
        os_ << "\n";
    }

    static std::string num(double v) {
        if (std::isnan(v)) return "nan";
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.16e", v);
        return buf;
    }
    static std::string num(long long v) { return std::to_string(v); }
    static std::string num(int v) { return std::to_string(v); }
    static std::string flag(bool v) { return v ? "1" : "0"; }

private:
    std::ostream& os_;
};

namespace detail {

// Thread count is deliberately absent: output bytes must not depend on it.
inline void write_metadata(CsvWriter& csv, const ExperimentConfig& cfg, const char* command) {
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
    csv.comment(std::string("artifact_version=") + kArtifactVersion);
    csv.comment(std::string("command=") + command);
    csv.comment(std::string("generator=") + kGeneratorId);
    csv.comment("seed=" + std::to_string(cfg.seed));
    csv.comment(std::string("calibration=") + cfg.calibration);
    csv.comment(std::string("config_hash=") + hash);
}

inline SurvivalModel survival_for_n(const ExperimentConfig& cfg, int n) {
    std::vector<Eigen::Vector3d> couplings;
    if (cfg.model.couplings == "all_x") {
        couplings = all_x_couplings(n);
    } else if (cfg.model.couplings == "all_z") {
        couplings = all_z_couplings(n);
    } else {
        throw ArgumentError("spin-count sweeps need all_x or all_z couplings");
    }
    SpinModel model = build_spin_model(n, cfg.omega_rad_per_s(), couplings);
    Vector psi0 = cfg.model.state == "ghz" ? ghz_state(n) : product_zero_state(n);
    return SurvivalModel::from_spin_model(model, psi0);
}

} // namespace detail

// ---- surface: most-probable survival and the rank-one Fisher eigenvalue
//      over a (mu1, mu2) grid of uniform waiting-time distributions ----

inline void run_surface(const ExperimentConfig& cfg, std::ostream& os) {
    CsvWriter csv(os);
    detail::write_metadata(csv, cfg, "surface");
    csv.comment("fim_eigenvalue uses moment coordinates with mu in ns;"
                " fim_eigenvalue_normalized is the coordinate-free eigenvalue/|v|^2 ratio");

    SurvivalModel q = cfg.build_survival();
    const auto& beta = q.beta();
    const int k_max = std::min<int>(cfg.k_moments, static_cast<int>(beta.size()) - 1);
    double norm_sq_ns = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        const double beta_ns = beta[k] * std::pow(kNsToS, k);
        const double vk = beta_ns / detail::factorial(k);
        norm_sq_ns += vk * vk;
    }

    csv.row({"mu1_ns", "mu2_ns", "valid", "pstar", "one_minus_pstar", "fim_ok",
             "fim_eigenvalue", "fim_eigenvalue_normalized"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < cfg.surface.mu1.count; ++i) {
        for (int j = 0; j < cfg.surface.mu2.count; ++j) {
            const double mu1_ns = cfg.surface.mu1.value(i);
            const double mu2_ns = cfg.surface.mu2.value(j);
            bool valid = mu2_ns > mu1_ns && mu1_ns >= 0.0;
            bool fim_ok = false;
            double pstar = nan, one_minus = nan, eig = nan, eig_norm = nan;
            if (valid) {
                try {
                    auto p = IntervalDistribution::uniform(mu1_ns * kNsToS, mu2_ns * kNsToS);
                    auto est = most_probable_survival(p, q, cfg.m);
                    pstar = est.pstar;
                    one_minus = est.one_minus_pstar;
                    const double pref = fisher_prefactor(est);
                    eig = pref * norm_sq_ns;
                    eig_norm = pref;
                    fim_ok = true;
                } catch (const SingularityError&) {
                    // survival saturated at 0 or 1: Fisher columns stay nan
                } catch (const EvaluationError&) {
                    valid = false;
                    pstar = one_minus = nan;
                }
            }
            csv.row({CsvWriter::num(mu1_ns), CsvWriter::num(mu2_ns), CsvWriter::flag(valid),
                     CsvWriter::num(pstar), CsvWriter::num(one_minus), CsvWriter::flag(fim_ok),
                     CsvWriter::num(eig), CsvWriter::num(eig_norm)});
        }
    }
}

// ---- scaling: Fisher information versus spin count and measurement count ----

inline void run_scaling(const ExperimentConfig& cfg, std::ostream& os) {
    if (cfg.distribution.type != "uniform") {
        throw ArgumentError("scaling sweeps the upper endpoint of a uniform distribution");
    }
    CsvWriter csv(os);
    detail::write_metadata(csv, cfg, "scaling");
    csv.comment("fisher columns in 1/ns^2; fit is least squares of closed form versus m per n");

    csv.row({"n", "m", "zeno_ok", "fisher_closed_ns2", "fd_ok", "fisher_fd_ns2",
             "empirical_ok", "fisher_empirical_ns2", "fit_slope_ns2", "fit_r2"});

    const double mu1_s = cfg.distribution.mu1_ns * kNsToS;
    const double mu2_s = cfg.distribution.mu2_ns * kNsToS;
    const double s2_to_ns2 = kNsToS * kNsToS; // 1/s^2 -> 1/ns^2
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const bool want_empirical = cfg.scaling.batches >= 2 && cfg.scaling.runs >= 2;

    struct Cell {
        long long m;
        bool zeno_ok, fd_ok, empirical_ok;
        double closed, fd, empirical;
    };

    long long cell_index = 0;
    for (int n : cfg.scaling.n_values) {
        SurvivalModel q = detail::survival_for_n(cfg, n);
        auto p = IntervalDistribution::uniform(mu1_s, mu2_s);
        std::vector<Cell> cells;
        std::vector<double> fit_m, fit_f;
        for (long long m : cfg.scaling.m_values) {
            Cell cell{m, false, false, false, nan, nan, nan};
            ClosedFormFisher closed = uniform_mu2_fisher(q.variance(), mu1_s, mu2_s, m);
            cell.closed = closed.fisher * s2_to_ns2;
            cell.zeno_ok = closed.zeno_ok;
            fit_m.push_back(static_cast<double>(m));
            fit_f.push_back(cell.closed);
            try {
                auto f = mu2_shift_direction(p, cfg.k_moments);
                const double step = 1e-3 * (mu2_s - mu1_s);
                cell.fd = finite_difference_fisher(p, f, q, m, step) * s2_to_ns2;
                cell.fd_ok = std::isfinite(cell.fd);
            } catch (const SingularityError&) {
            } catch (const EvaluationError&) {
            }
            if (want_empirical) {
                try {
                    EnsembleOptions opts;
                    opts.seed = cfg.seed;
                    opts.run_offset = cell_index * cfg.scaling.batches * cfg.scaling.runs;
                    opts.threads = cfg.threads;
                    opts.sample_budget = cfg.sample_budget;
                    auto exp_result = crb_saturation_experiment(
                        q, mu1_s, mu2_s, m, cfg.scaling.batches, cfg.scaling.runs, opts);
                    cell.empirical = exp_result.empirical_fisher * s2_to_ns2;
                    cell.empirical_ok = std::isfinite(cell.empirical);
                } catch (const SingularityError&) {
                } catch (const EstimationError&) {
                } catch (const EvaluationError&) {
                }
            }
            cells.push_back(cell);
            ++cell_index;
        }
        double slope = nan, r2 = nan;
        if (fit_m.size() >= 2) {
            LinearFit fit = linear_fit(fit_m, fit_f);
            slope = fit.slope;
            r2 = fit.r_squared;
        }
        for (const Cell& c : cells) {
            csv.row({CsvWriter::num(n), CsvWriter::num(c.m), CsvWriter::flag(c.zeno_ok),
                     CsvWriter::num(c.closed), CsvWriter::flag(c.fd_ok), CsvWriter::num(c.fd),
                     CsvWriter::flag(c.empirical_ok), CsvWriter::num(c.empirical),
                     CsvWriter::num(slope), CsvWriter::num(r2)});
        }
    }
}

// ---- crb: estimator variance over batches against the Cramer-Rao bound ----

inline void run_crb(const ExperimentConfig& cfg, std::ostream& os) {
    if (cfg.distribution.type != "uniform") {
        throw ArgumentError("crb estimates the upper endpoint of a uniform distribution");
    }
    CsvWriter csv(os);
    detail::write_metadata(csv, cfg, "crb");

    SurvivalModel q = cfg.build_survival();
    const double mu1_s = cfg.distribution.mu1_ns * kNsToS;
    const double mu2_s = cfg.distribution.mu2_ns * kNsToS;

    EnsembleOptions opts;
    opts.seed = cfg.seed;
    opts.threads = cfg.threads;
    opts.sample_budget = cfg.sample_budget;
    auto exp_result =
        crb_saturation_experiment(q, mu1_s, mu2_s, cfg.m, cfg.crb.batches, cfg.crb.runs, opts);

    ClosedFormFisher closed = uniform_mu2_fisher(q.variance(), mu1_s, mu2_s, cfg.m);
    const double s2_to_ns2 = kNsToS * kNsToS;
    const double sns = 1.0 / kNsToS; // s -> ns

    csv.row({"batch", "p_hat", "mu2_hat_ns", "mean_mu2_ns", "sample_variance_ns2", "crb_ns2",
             "saturation_ratio", "empirical_fisher_ns2", "fisher_exact_ns2",
             "fisher_closed_ns2"});
    for (long long b = 0; b < exp_result.batches; ++b) {
        csv.row({CsvWriter::num(b), CsvWriter::num(exp_result.p_hats[b]),
                 CsvWriter::num(exp_result.mu2_hats[b] * sns),
                 CsvWriter::num(exp_result.mean_mu2 * sns),
                 CsvWriter::num(exp_result.sample_variance * sns * sns),
                 CsvWriter::num(exp_result.crb * sns * sns),
                 CsvWriter::num(exp_result.saturation_ratio),
                 CsvWriter::num(exp_result.empirical_fisher * s2_to_ns2),
                 CsvWriter::num(exp_result.fisher.fisher_functional * s2_to_ns2),
                 CsvWriter::num(closed.fisher * s2_to_ns2)});
    }
}

// ---- ld: spread of the per-measurement log-survival rate versus m ----

inline void run_ld(const ExperimentConfig& cfg, std::ostream& os) {
    CsvWriter csv(os);
    detail::write_metadata(csv, cfg, "ld");
    csv.comment("rates are log-survival per measurement; sd_slope fits ln(sd) vs ln(m)");

    SurvivalModel q = cfg.build_survival();
    IntervalDistribution p = cfg.build_distribution();

    EnsembleOptions opts;
    opts.seed = cfg.seed;
    opts.threads = cfg.threads;
    opts.sample_budget = cfg.sample_budget;
    LdTable table = ld_convergence(q, p, cfg.ld.m_values, cfg.ld.runs, opts);

    csv.row({"m", "mean_rate", "sd_rate", "sem_rate", "expected_rate", "deviation",
             "within_4se", "sd_slope", "sd_fit_r2"});
    for (const LdRow& r : table.rows) {
        csv.row({CsvWriter::num(r.m), CsvWriter::num(r.mean_rate), CsvWriter::num(r.sd_rate),
                 CsvWriter::num(r.sem_rate), CsvWriter::num(r.expected_rate),
                 CsvWriter::num(r.deviation), CsvWriter::flag(r.within_4se),
                 CsvWriter::num(table.sd_slope), CsvWriter::num(table.sd_fit_r_squared)});
    }
}

} // namespace qzeno
