#include <cmath>

#include <gtest/gtest.h>

#include "qzeno/chebyshev.hpp"
#include "qzeno/errors.hpp"

using qzeno::ArgumentError;
using qzeno::ChebyshevSeries;
using qzeno::EvaluationError;

TEST(Chebyshev, InterpolatesExpToMachinePrecision) {
    const auto s = ChebyshevSeries::fit([](double x) { return std::exp(x); }, -1.0, 1.0, 20);
    for (int i = 0; i <= 100; ++i) {
        const double x = -1.0 + 2.0 * i / 100.0;
        EXPECT_NEAR(s(x), std::exp(x), 1e-14 * std::exp(1.0));
    }
}

// A degree-n interpolant reproduces polynomials of degree <= n exactly.
TEST(Chebyshev, CubicOnShiftedIntervalIsExact) {
    const auto cubic = [](double x) { return ((2.0 * x - 3.0) * x + 5.0) * x - 7.0; };
    const auto s = ChebyshevSeries::fit(cubic, 2.0, 5.0, 3);
    for (int i = 0; i <= 50; ++i) {
        const double x = 2.0 + 3.0 * i / 50.0;
        EXPECT_NEAR(s(x), cubic(x), 1e-12 * std::abs(cubic(5.0)));
    }
    EXPECT_EQ(s.degree(), 3);
    EXPECT_EQ(s.lower(), 2.0);
    EXPECT_EQ(s.upper(), 5.0);
}

TEST(Chebyshev, FitToToleranceMeetsRequestedAccuracy) {
    const auto s = ChebyshevSeries::fit_to_tolerance(
        [](double x) { return std::sin(x); }, 0.0, 3.0, 1e-12);
    for (int i = 0; i <= 1000; ++i) {
        const double x = 3.0 * i / 1000.0;
        ASSERT_NEAR(s(x), std::sin(x), 1e-11);
    }
}

TEST(Chebyshev, FitToToleranceHandlesRungeFunction) {
    const auto runge = [](double x) { return 1.0 / (1.0 + 25.0 * x * x); };
    const auto s = ChebyshevSeries::fit_to_tolerance(runge, -1.0, 1.0, 1e-10);
    for (int i = 0; i <= 500; ++i) {
        const double x = -1.0 + 2.0 * i / 500.0;
        ASSERT_NEAR(s(x), runge(x), 1e-9);
    }
}

TEST(Chebyshev, UnitEvaluationMatchesMappedEvaluation) {
    const auto s = ChebyshevSeries::fit([](double x) { return std::cos(x); }, 1.0, 4.0, 24);
    const double x = 2.37;
    const double t = (2.0 * x - 5.0) / 3.0;
    EXPECT_DOUBLE_EQ(s(x), s.eval_unit(t));
}

TEST(Chebyshev, DiscontinuityNeverReachesTolerance) {
    EXPECT_THROW(ChebyshevSeries::fit_to_tolerance(
                     [](double x) { return x < 0.5 ? 0.0 : 1.0; }, 0.0, 1.0, 1e-12),
                 EvaluationError);
}

TEST(Chebyshev, RejectsBadArguments) {
    EXPECT_THROW(ChebyshevSeries::fit([](double x) { return x; }, 1.0, 1.0, 4), ArgumentError);
    EXPECT_THROW(ChebyshevSeries::fit([](double x) { return x; }, 0.0, 1.0, -1), ArgumentError);
    EXPECT_THROW(ChebyshevSeries::fit([](double) { return std::nan(""); }, 0.0, 1.0, 4),
                 EvaluationError);
}
