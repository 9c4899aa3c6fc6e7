#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qzeno/distributions.hpp"
#include "qzeno/quadrature.hpp"

using namespace qzeno;

namespace {

const double kMu1 = 10e-9;
const double kMu2 = 60e-9;

double quadrature_moment(const IntervalDistribution& p, int k) {
    return integrate_adaptive([&p, k](double mu) { return p.pdf(mu) * std::pow(mu, k); },
                              p.support().low, p.support().high)
        .value;
}

} // namespace

TEST(Distributions, ConstructionValidation) {
    EXPECT_THROW(IntervalDistribution::uniform(-1.0, 1.0), ArgumentError);
    EXPECT_THROW(IntervalDistribution::uniform(2.0, 2.0), ArgumentError);
    EXPECT_THROW(IntervalDistribution::dirac(-1e-9), ArgumentError);
    EXPECT_THROW(IntervalDistribution::tabulated({0.0}, {1.0}), ArgumentError);
    EXPECT_THROW(IntervalDistribution::tabulated({0.0, 0.0}, {1.0, 1.0}), ArgumentError);
    EXPECT_THROW(IntervalDistribution::tabulated({0.0, 1.0}, {1.0, -1.0}), ArgumentError);
    EXPECT_THROW(IntervalDistribution::tabulated({0.0, 1.0}, {0.0, 0.0}), ArgumentError);
}

TEST(Distributions, UniformMomentsMatchQuadrature) {
    const auto p = IntervalDistribution::uniform(kMu1, kMu2);
    for (int k = 0; k <= 8; ++k) {
        const double analytic = p.moment(k);
        const double numeric = quadrature_moment(p, k);
        EXPECT_NEAR(analytic, numeric, 1e-12 * std::abs(analytic)) << "k " << k;
    }
    // chi_2 of uniform(10, 60) ns is 4300/3 ns^2
    EXPECT_NEAR(p.moment(2), 4300.0 / 3.0 * 1e-18, 1e-12 * 1.5e-15);
    EXPECT_THROW(p.moment(-1), ArgumentError);
}

TEST(Distributions, DiracMomentsArePowers) {
    const auto p = IntervalDistribution::dirac(35e-9);
    for (int k = 0; k <= 8; ++k) {
        EXPECT_EQ(p.moment(k), std::pow(35e-9, k));
    }
    EXPECT_FALSE(p.has_density());
    EXPECT_THROW(p.pdf(35e-9), ArgumentError);
}

TEST(Distributions, TriangleDensityMoments) {
    const auto p = IntervalDistribution::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
    EXPECT_NEAR(p.moment(0), 1.0, 1e-12);
    EXPECT_NEAR(p.moment(1), 1.0, 1e-12);
    EXPECT_NEAR(p.moment(2), 7.0 / 6.0, 1e-12);
    EXPECT_NEAR(p.pdf(1.0), 1.0, 1e-12);
    EXPECT_NEAR(p.pdf(0.5), 0.5, 1e-12);
    EXPECT_EQ(p.pdf(3.0), 0.0);
}

TEST(Distributions, TabulatedDensityIsRescaledToUnitMass) {
    const auto p = IntervalDistribution::tabulated({0.0, 2.0}, {3.0, 3.0});
    EXPECT_NEAR(p.pdf(1.0), 0.5, 1e-14);
    EXPECT_NEAR(p.moment(0), 1.0, 1e-12);
}

TEST(Distributions, SamplerIsDeterministicPerStream) {
    const auto uniform = IntervalDistribution::uniform(kMu1, kMu2);
    const auto triangle = IntervalDistribution::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
    for (const auto& p : {uniform, triangle}) {
        RngStream a = RngStream::for_run(42, 7);
        RngStream b = RngStream::for_run(42, 7);
        std::vector<double> sa(256), sb(256);
        p.sample(a, sa);
        p.sample(b, sb);
        for (std::size_t i = 0; i < sa.size(); ++i) ASSERT_EQ(sa[i], sb[i]);
    }
}

TEST(Distributions, UniformSamplesStayInSupport) {
    const auto p = IntervalDistribution::uniform(kMu1, kMu2);
    RngStream rng = RngStream::from_seed(11);
    for (int i = 0; i < 20000; ++i) {
        const double mu = p.sample_one(rng);
        ASSERT_GE(mu, kMu1);
        ASSERT_LT(mu, kMu2);
    }
}

TEST(Distributions, DiracSamplingConsumesNoRandomness) {
    const auto p = IntervalDistribution::dirac(35e-9);
    RngStream used = RngStream::from_seed(5);
    RngStream fresh = RngStream::from_seed(5);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(p.sample_one(used), 35e-9);
    EXPECT_EQ(used.next_u64(), fresh.next_u64());
}

TEST(Distributions, EmpiricalMomentsMatchWithinFourSigma) {
    const auto p = IntervalDistribution::uniform(kMu1, kMu2);
    RngStream rng = RngStream::from_seed(314);
    const int n = 100000;
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += p.sample_one(rng);
    mean /= n;
    const double want = p.moment(1);
    const double sd = std::sqrt(p.moment(2) - want * want);
    EXPECT_NEAR(mean, want, 4.0 * sd / std::sqrt(double(n)));

    const auto tri = IntervalDistribution::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
    double tmean = 0.0;
    for (int i = 0; i < n; ++i) tmean += tri.sample_one(rng);
    tmean /= n;
    EXPECT_NEAR(tmean, 1.0, 4.0 * std::sqrt(1.0 / 6.0 / n));
}

TEST(Directions, MassOnlyDirectionPairsExactly) {
    PerturbationDirection f({{2.0, 1.0}, {3.0, -1.0}}, nullptr, {0.0, 0.0}, "two-point");
    EXPECT_FALSE(f.has_density());
    EXPECT_EQ(f.moment(0), 0.0);
    EXPECT_NEAR(f.moment(2), 4.0 - 9.0, 1e-14);
    const auto log_q = [](double mu) { return -mu * mu; };
    EXPECT_DOUBLE_EQ(pair_with_log_q(f, log_q), -4.0 + 9.0);
}

TEST(Directions, MustIntegrateToZero) {
    EXPECT_THROW(PerturbationDirection({{2.0, 0.5}}, nullptr, {0.0, 0.0}, "bad"),
                 ArgumentError);
}

TEST(Directions, EndpointShiftRequiresUniform) {
    EXPECT_THROW(mu2_shift_direction(IntervalDistribution::dirac(1e-8)), ArgumentError);
}

// xi_1 = 1/2 for every uniform window; xi_2 of (10, 60) ns is 130/3 ns.
TEST(Directions, EndpointShiftAnalyticMoments) {
    const auto p = IntervalDistribution::uniform(kMu1, kMu2);
    const auto f = mu2_shift_direction(p);
    EXPECT_EQ(f.moment(0), 0.0);
    EXPECT_NEAR(f.moment(1), 0.5, 1e-12);
    EXPECT_NEAR(f.moment(2), 130.0 / 3.0 * 1e-9, 1e-12 * 4.4e-8);
}

// The analytic xi_k must match the quadrature moments of the same masses and
// density evaluated without the closed form.
TEST(Directions, EndpointShiftMomentsMatchQuadrature) {
    const double w = kMu2 - kMu1;
    PerturbationDirection numeric(
        {{kMu2, 1.0 / w}},
        [w](double mu) { return (mu >= kMu1 && mu <= kMu2) ? -1.0 / (w * w) : 0.0; },
        {kMu1, kMu2}, "endpoint-shift-numeric");
    const auto p = IntervalDistribution::uniform(kMu1, kMu2);
    const auto analytic = mu2_shift_direction(p);
    for (int k = 1; k <= 8; ++k) {
        const double a = analytic.moment(k);
        const double b = numeric.moment(k);
        EXPECT_NEAR(a, b, 1e-9 * std::abs(a)) << "k " << k;
    }
}

// Central differences of chi_k in the upper endpoint reproduce xi_k.
TEST(Directions, EndpointShiftMatchesFiniteDifferences) {
    const auto p = IntervalDistribution::uniform(kMu1, kMu2);
    const auto f = mu2_shift_direction(p);
    const double h = 1e-4 * (kMu2 - kMu1);
    for (int k = 1; k <= 8; ++k) {
        const double up = IntervalDistribution::uniform(kMu1, kMu2 + h).moment(k);
        const double dn = IntervalDistribution::uniform(kMu1, kMu2 - h).moment(k);
        const double fd = (up - dn) / (2.0 * h);
        EXPECT_NEAR(f.moment(k), fd, 1e-6 * std::abs(fd)) << "k " << k;
    }
}

// chi_k(mu2 + c) - chi_k(mu2) - c xi_k shrinks quadratically in c.
TEST(Directions, PerturbedMomentsAreFirstOrderAccurate) {
    const auto p = IntervalDistribution::uniform(kMu1, kMu2);
    const auto f = mu2_shift_direction(p);
    for (int k : {2, 3}) {
        std::vector<double> lc, le;
        for (double rel : {1e-2, 3e-3, 1e-3, 3e-4}) {
            const double c = rel * (kMu2 - kMu1);
            const double shifted = IntervalDistribution::uniform(kMu1, kMu2 + c).moment(k);
            const double err = std::abs(shifted - p.moment(k) - c * f.moment(k));
            ASSERT_GT(err, 0.0);
            lc.push_back(std::log(c));
            le.push_back(std::log(err));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(lc.size());
        for (std::size_t i = 0; i < lc.size(); ++i) {
            sx += lc[i];
            sy += le[i];
            sxx += lc[i] * lc[i];
            sxy += lc[i] * le[i];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        EXPECT_GE(slope, 1.9) << "k " << k;
    }
}

TEST(Pairings, DensityAgainstLogSurvival) {
    const auto p = IntervalDistribution::uniform(0.0, 2.0);
    // int (1/2) (-mu^2) over [0, 2] = -4/3
    EXPECT_NEAR(pair_with_log_q(p, [](double mu) { return -mu * mu; }), -4.0 / 3.0, 1e-12);
    const auto d = IntervalDistribution::dirac(1.5);
    EXPECT_DOUBLE_EQ(pair_with_log_q(d, [](double mu) { return -mu * mu; }), -2.25);
}
