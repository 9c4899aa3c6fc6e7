#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qzeno/errors.hpp"
#include "qzeno/quadrature.hpp"
#include "qzeno/rng.hpp"

namespace qzeno {

struct Support {
    double low = 0.0;
    double high = 0.0;
    double width() const { return high - low; }
};

// ---- waiting-time densities ----

// Density of the random spacing between consecutive measurements. Uniform and
// dirac kinds have analytic moments and samplers; tabulated densities are
// piecewise linear on a grid.
class IntervalDistribution {
public:
    enum class Kind { uniform, dirac, tabulated };

    static IntervalDistribution uniform(double mu1, double mu2) {
        if (!(mu1 >= 0.0) || !(mu2 > mu1)) {
            throw ArgumentError("uniform support needs 0 <= mu1 < mu2");
        }
        IntervalDistribution d;
        d.kind_ = Kind::uniform;
        d.support_ = {mu1, mu2};
        return d;
    }

    static IntervalDistribution dirac(double mu) {
        if (!(mu >= 0.0)) throw ArgumentError("dirac location must be non-negative");
        IntervalDistribution d;
        d.kind_ = Kind::dirac;
        d.support_ = {mu, mu};
        return d;
    }

    // Piecewise-linear density through (grid[i], weights[i]); weights are
    // rescaled so the density integrates to one.
    static IntervalDistribution tabulated(std::vector<double> grid, std::vector<double> weights) {
        if (grid.size() != weights.size() || grid.size() < 2) {
            throw ArgumentError("tabulated density needs at least two grid points");
        }
        if (!(grid.front() >= 0.0)) throw ArgumentError("support must be non-negative");
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            if (!(grid[i + 1] > grid[i])) throw ArgumentError("grid must be strictly increasing");
        }
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            if (!(weights[i] >= 0.0) || !(weights[i + 1] >= 0.0)) {
                throw ArgumentError("density values must be non-negative");
            }
            total += 0.5 * (weights[i] + weights[i + 1]) * (grid[i + 1] - grid[i]);
        }
        if (!(total > 0.0)) throw ArgumentError("tabulated density has zero total weight");
        for (auto& w : weights) w /= total;

        IntervalDistribution d;
        d.kind_ = Kind::tabulated;
        d.support_ = {grid.front(), grid.back()};
        d.grid_ = std::move(grid);
        d.values_ = std::move(weights);
        d.cdf_.assign(d.grid_.size(), 0.0);
        for (std::size_t i = 0; i + 1 < d.grid_.size(); ++i) {
            d.cdf_[i + 1] = d.cdf_[i] + 0.5 * (d.values_[i] + d.values_[i + 1]) *
                                            (d.grid_[i + 1] - d.grid_[i]);
        }
        const QuadratureResult norm = integrate_adaptive(
            [&d](double mu) { return d.pdf(mu); }, d.support_.low, d.support_.high);
        if (std::abs(norm.value - 1.0) > 1e-10) {
            throw EvaluationError("tabulated density failed the normalization check");
        }
        return d;
    }

    Kind kind() const { return kind_; }
    const Support& support() const { return support_; }
    bool has_density() const { return kind_ != Kind::dirac; }

    double pdf(double mu) const {
        switch (kind_) {
        case Kind::uniform:
            return (mu >= support_.low && mu <= support_.high) ? 1.0 / support_.width() : 0.0;
        case Kind::tabulated: {
            if (mu < support_.low || mu > support_.high) return 0.0;
            const auto it = std::upper_bound(grid_.begin(), grid_.end(), mu);
            const std::size_t i = std::min(grid_.size() - 2,
                                           static_cast<std::size_t>(it - grid_.begin()) - 1);
            const double t = (mu - grid_[i]) / (grid_[i + 1] - grid_[i]);
            return values_[i] + t * (values_[i + 1] - values_[i]);
        }
        case Kind::dirac:
            throw ArgumentError("a point mass has no density; branch on has_density()");
        }
        throw ArgumentError("unreachable distribution kind");
    }

    // k-th statistical moment. Uniform: (mu2^{k+1} - mu1^{k+1}) / ((k+1)(mu2 - mu1)).
    double moment(int k) const {
        if (k < 0) throw ArgumentError("moment order must be non-negative");
        switch (kind_) {
        case Kind::uniform: {
            const double a = support_.low, b = support_.high;
            return (std::pow(b, k + 1) - std::pow(a, k + 1)) / ((k + 1) * (b - a));
        }
        case Kind::dirac:
            return std::pow(support_.low, k);
        case Kind::tabulated:
            return integrate_adaptive(
                       [this, k](double mu) { return pdf(mu) * std::pow(mu, k); },
                       support_.low, support_.high)
                .value;
        }
        throw ArgumentError("unreachable distribution kind");
    }

    double sample_one(RngStream& stream) const {
        switch (kind_) {
        case Kind::uniform:
            return stream.uniform(support_.low, support_.high);
        case Kind::dirac:
            return support_.low; // consumes no randomness
        case Kind::tabulated: {
            const double u = stream.uniform01();
            const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
            const std::size_t i = std::min(cdf_.size() - 2,
                                           static_cast<std::size_t>(it - cdf_.begin()) - 1);
            const double r = u - cdf_[i];
            const double dx = grid_[i + 1] - grid_[i];
            const double slope_half = 0.5 * (values_[i + 1] - values_[i]) / dx;
            const double disc = values_[i] * values_[i] + 4.0 * slope_half * r;
            const double denom = values_[i] + std::sqrt(std::max(0.0, disc));
            const double xi = denom > 0.0 ? 2.0 * r / denom : 0.0;
            return grid_[i] + std::min(xi, dx);
        }
        }
        throw ArgumentError("unreachable distribution kind");
    }

    void sample(RngStream& stream, std::span<double> out) const {
        for (auto& mu : out) mu = sample_one(stream);
    }

private:
    Kind kind_ = Kind::dirac;
    Support support_;
    std::vector<double> grid_;
    std::vector<double> values_;
    std::vector<double> cdf_;
};

inline std::vector<double> moments(const IntervalDistribution& dist, int k_max) {
    if (k_max < 0) throw ArgumentError("moment order must be non-negative");
    std::vector<double> chi(static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) chi[static_cast<std::size_t>(k)] = dist.moment(k);
    return chi;
}

// ---- tangent-space perturbations of the density ----

struct PointMass {
    double location = 0.0;
    double weight = 0.0;
};

// A signed measure f with zero total mass: p + c*f stays a density for small
// c. Point masses are held exactly; the continuous part is a callable
// density. Moments xi_k = int f(mu) mu^k dmu.
class PerturbationDirection {
public:
    PerturbationDirection(std::vector<PointMass> masses,
                          std::function<double(double)> density, Support density_support,
                          std::string tag, std::vector<double> analytic_moments = {})
        : masses_(std::move(masses)),
          density_(std::move(density)),
          density_support_(density_support),
          tag_(std::move(tag)),
          analytic_moments_(std::move(analytic_moments)) {
        double total = 0.0;
        double scale = 0.0;
        for (const auto& pm : masses_) {
            total += pm.weight;
            scale += std::abs(pm.weight);
        }
        if (density_) {
            const double cont =
                integrate_adaptive(density_, density_support_.low, density_support_.high).value;
            total += cont;
            scale += std::abs(cont);
        }
        // zero net mass up to roundoff of the two large cancelling parts
        if (std::abs(total) > 1e-9 * std::max(scale, 1.0)) {
            throw ArgumentError("perturbation direction must integrate to zero");
        }
    }

    const std::vector<PointMass>& masses() const { return masses_; }
    bool has_density() const { return static_cast<bool>(density_); }
    double density(double mu) const { return density_ ? density_(mu) : 0.0; }
    const Support& density_support() const { return density_support_; }
    const std::string& tag() const { return tag_; }

    double moment(int k) const {
        if (k < 0) throw ArgumentError("moment order must be non-negative");
        if (static_cast<std::size_t>(k) < analytic_moments_.size()) {
            return analytic_moments_[static_cast<std::size_t>(k)];
        }
        double xi = 0.0;
        for (const auto& pm : masses_) xi += pm.weight * std::pow(pm.location, k);
        if (density_) {
            xi += integrate_adaptive(
                      [this, k](double mu) { return density_(mu) * std::pow(mu, k); },
                      density_support_.low, density_support_.high)
                      .value;
        }
        return xi;
    }

private:
    std::vector<PointMass> masses_;
    std::function<double(double)> density_;
    Support density_support_;
    std::string tag_;
    std::vector<double> analytic_moments_;
};

inline std::vector<double> moments(const PerturbationDirection& dir, int k_max) {
    if (k_max < 0) throw ArgumentError("moment order must be non-negative");
    std::vector<double> xi(static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) xi[static_cast<std::size_t>(k)] = dir.moment(k);
    return xi;
}

// Direction of an upper-endpoint shift of a uniform density:
// f(mu) = (delta(mu - mu2) - p(mu)) / (mu2 - mu1), the derivative of p with
// respect to mu2. Analytic moments are the endpoint derivatives of chi_k:
// xi_k = ((k+1) mu2^k (mu2 - mu1) - (mu2^{k+1} - mu1^{k+1})) / ((k+1)(mu2 - mu1)^2).
inline PerturbationDirection mu2_shift_direction(const IntervalDistribution& dist,
                                                 int k_moments = 8) {
    if (dist.kind() != IntervalDistribution::Kind::uniform) {
        throw ArgumentError("mu2 shift is defined for uniform densities");
    }
    const double mu1 = dist.support().low;
    const double mu2 = dist.support().high;
    const double width = mu2 - mu1;
    std::vector<double> xi(static_cast<std::size_t>(k_moments) + 1);
    for (int k = 0; k <= k_moments; ++k) {
        xi[static_cast<std::size_t>(k)] =
            ((k + 1) * std::pow(mu2, k) * width - (std::pow(mu2, k + 1) - std::pow(mu1, k + 1))) /
            ((k + 1) * width * width);
    }
    return PerturbationDirection(
        {{mu2, 1.0 / width}},
        [mu1, mu2, width](double mu) {
            return (mu >= mu1 && mu <= mu2) ? -1.0 / (width * (mu2 - mu1)) : 0.0;
        },
        {mu1, mu2}, "mu2-shift", std::move(xi));
}

// ---- pairings <.|ln q> ----

// int f(mu) ln q(mu) dmu: point masses exactly, continuous part by quadrature.
inline double pair_with_log_q(const PerturbationDirection& f,
                              const std::function<double(double)>& log_q) {
    double acc = 0.0;
    for (const auto& pm : f.masses()) acc += pm.weight * log_q(pm.location);
    if (f.has_density()) {
        acc += integrate_adaptive([&](double mu) { return f.density(mu) * log_q(mu); },
                                  f.density_support().low, f.density_support().high)
                   .value;
    }
    return acc;
}

// int p(mu) ln q(mu) dmu for a density (dirac: ln q at the point).
inline double pair_with_log_q(const IntervalDistribution& p,
                              const std::function<double(double)>& log_q) {
    if (!p.has_density()) return log_q(p.support().low);
    return integrate_adaptive([&](double mu) { return p.pdf(mu) * log_q(mu); },
                              p.support().low, p.support().high)
        .value;
}

} // namespace qzeno
