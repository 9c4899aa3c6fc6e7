#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "qzeno/model.hpp"
#include "qzeno/rng.hpp"

using namespace qzeno;

namespace {

const double kOmega = 2.0 * std::numbers::pi * 5000.0; // rad/s

SpinModel product_x_model(int n) { return build_spin_model(n, kOmega, all_x_couplings(n)); }

std::vector<Eigen::Vector3d> random_couplings(int n, std::uint64_t seed) {
    RngStream rng = RngStream::from_seed(seed);
    std::vector<Eigen::Vector3d> alphas;
    for (int i = 0; i < n; ++i) {
        alphas.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                            rng.uniform(-1.0, 1.0));
    }
    return alphas;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace

TEST(SpinModel, BuildValidatesArguments) {
    EXPECT_THROW(build_spin_model(0, kOmega, {}), ResourceError);
    EXPECT_THROW(build_spin_model(13, kOmega, all_x_couplings(13)), ResourceError);
    EXPECT_THROW(build_spin_model(2, 0.0, all_x_couplings(2)), ArgumentError);
    EXPECT_THROW(build_spin_model(2, -1.0, all_x_couplings(2)), ArgumentError);
    EXPECT_THROW(build_spin_model(2, kOmega, all_x_couplings(3)), ArgumentError);
    std::vector<Eigen::Vector3d> alphas = all_x_couplings(2);
    alphas[1] = Eigen::Vector3d::Zero();
    EXPECT_THROW(build_spin_model(2, kOmega, alphas), ArgumentError);
}

TEST(SpinModel, CouplingsAreNormalizedAndHIsHermitian) {
    std::vector<Eigen::Vector3d> alphas{{2.0, 0.0, 0.0}, {0.0, 3.0, 4.0}};
    const SpinModel model = build_spin_model(2, kOmega, alphas);
    EXPECT_NEAR(model.couplings[0].norm(), 1.0, 1e-15);
    EXPECT_NEAR(model.couplings[1].norm(), 1.0, 1e-15);
    EXPECT_NEAR(model.couplings[1].y(), 0.6, 1e-15);
    EXPECT_TRUE(is_hermitian(model.hamiltonian));
    EXPECT_EQ(model.dim(), 4);
}

TEST(SpinModel, ReferenceStates) {
    const Vector p = product_zero_state(3);
    EXPECT_TRUE(is_normalized(p));
    EXPECT_EQ(p[0], Complex(1, 0));
    const Vector g = ghz_state(3);
    EXPECT_TRUE(is_normalized(g));
    EXPECT_NEAR(std::abs(g[0] - Complex(1.0 / std::sqrt(2.0), 0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(g[7] - Complex(0, -1.0 / std::sqrt(2.0))), 0.0, 1e-15);
    EXPECT_THROW(product_zero_state(0), ResourceError);
    EXPECT_THROW(ghz_state(13), ResourceError);
}

// Single spin along x from |0>: q(mu) = cos^2(omega mu).
TEST(Survival, RabiClosedForm) {
    const SpinModel model = product_x_model(1);
    const Vector psi0 = product_zero_state(1);
    const ZenoSubspace sub = ZenoSubspace::from_state(psi0);
    for (double mu : {0.0, 1e-6, 7e-6, 3e-5, 9e-5}) {
        const double c = std::cos(kOmega * mu);
        EXPECT_NEAR(survival_q(model, sub, psi0, mu), c * c, 1e-12) << "mu " << mu;
    }
}

// Product state, independent spins: q factorizes into cos^{2N}.
TEST(Survival, ProductStateFactorizes) {
    const int n = 3;
    const SpinModel model = product_x_model(n);
    const Vector psi0 = product_zero_state(n);
    const SurvivalModel q = SurvivalModel::from_spin_model(model, psi0);
    for (double mu : {0.0, 2e-6, 1.3e-5, 4e-5}) {
        EXPECT_NEAR(q.q(mu), std::pow(std::cos(kOmega * mu), 2 * n), 1e-12) << "mu " << mu;
    }
}

// GHZ state under collective z rotation: the two branches beat at N omega.
TEST(Survival, GhzCollectivePhase) {
    const int n = 4;
    const SpinModel model = build_spin_model(n, kOmega, all_z_couplings(n));
    const Vector psi0 = ghz_state(n);
    const SurvivalModel q = SurvivalModel::from_spin_model(model, psi0);
    for (double mu : {0.0, 3e-6, 1.7e-5}) {
        const double c = std::cos(n * kOmega * mu);
        EXPECT_NEAR(q.q(mu), c * c, 1e-12) << "mu " << mu;
    }
    EXPECT_NEAR(q.variance(), double(n) * n * kOmega * kOmega,
                1e-9 * n * n * kOmega * kOmega);
}

TEST(Survival, EvennessInMu) {
    const SpinModel model = build_spin_model(3, kOmega, random_couplings(3, 5));
    const Vector psi0 = product_zero_state(3);
    const ZenoSubspace sub = ZenoSubspace::from_state(psi0);
    const SurvivalModel cached = SurvivalModel::from_spin_model(model, psi0);
    RngStream rng = RngStream::from_seed(21);
    for (int i = 0; i < 20; ++i) {
        const double mu = rng.uniform(0.0, 2e-4);
        EXPECT_NEAR(survival_q(model, sub, psi0, -mu), survival_q(model, sub, psi0, mu), 1e-12);
        EXPECT_DOUBLE_EQ(cached.q(-mu), cached.q(mu));
    }
}

TEST(Survival, RankOneOnly) {
    const SpinModel model = product_x_model(2);
    const Vector psi0 = product_zero_state(2);
    const ZenoSubspace sub = ZenoSubspace::from_basis_states(4, {0, 3});
    EXPECT_THROW(survival_q(model, sub, psi0, 1e-6), ArgumentError);
}

TEST(Survival, CachedModelMatchesDenseEvolution) {
    const SpinModel model = build_spin_model(3, kOmega, random_couplings(3, 77));
    const Vector psi0 = product_zero_state(3);
    const ZenoSubspace sub = ZenoSubspace::from_state(psi0);
    const SurvivalModel cached = SurvivalModel::from_spin_model(model, psi0);
    for (double mu : {1e-6, 8e-6, 5e-5, 2e-4}) {
        EXPECT_NEAR(cached.q(mu), survival_q(model, sub, psi0, mu), 1e-12) << "mu " << mu;
    }
}

TEST(VarianceHpi, ProductAllXMatchesNOmegaSq) {
    for (int n = 1; n <= 9; ++n) {
        const SpinModel model = product_x_model(n);
        const Vector psi0 = product_zero_state(n);
        const double var = variance_hpi(model, psi0, ZenoSubspace::from_state(psi0));
        EXPECT_NEAR(var, n * kOmega * kOmega, 1e-9 * n * kOmega * kOmega) << "n " << n;
    }
}

TEST(VarianceHpi, HigherRankProjector) {
    // Pi spans {|00>, |11>}; PHP vanishes for the pure-x coupling, so the
    // variance stays <H^2> = 2 omega^2.
    const SpinModel model = product_x_model(2);
    const Vector psi0 = product_zero_state(2);
    const ZenoSubspace sub = ZenoSubspace::from_basis_states(4, {0, 3});
    EXPECT_NEAR(variance_hpi(model, psi0, sub), 2.0 * kOmega * kOmega,
                1e-9 * kOmega * kOmega);
}

TEST(VarianceHpi, FullSpaceProjectorGivesZero) {
    const SpinModel model = product_x_model(2);
    const Vector psi0 = product_zero_state(2);
    const ZenoSubspace sub = ZenoSubspace::from_basis_states(4, {0, 1, 2, 3});
    EXPECT_EQ(variance_hpi(model, psi0, sub), 0.0);
}

TEST(VarianceHpi, RankOneProjectorMustContainTheState) {
    const SpinModel model = product_x_model(2);
    const Vector psi0 = product_zero_state(2);
    Vector other = Vector::Zero(4);
    other[2] = Complex(1, 0);
    EXPECT_THROW(variance_hpi(model, psi0, ZenoSubspace::from_state(other)), ArgumentError);
}

TEST(FdWeights, ClassicStencils) {
    const auto d1 = finite_difference_weights(1, {-1.0, 0.0, 1.0}, 0.0);
    EXPECT_NEAR(d1[0], -0.5, 1e-14);
    EXPECT_NEAR(d1[1], 0.0, 1e-14);
    EXPECT_NEAR(d1[2], 0.5, 1e-14);

    const auto d2 = finite_difference_weights(2, {-1.0, 0.0, 1.0}, 0.0);
    EXPECT_NEAR(d2[0], 1.0, 1e-13);
    EXPECT_NEAR(d2[1], -2.0, 1e-13);
    EXPECT_NEAR(d2[2], 1.0, 1e-13);

    const auto d2w = finite_difference_weights(2, {-2.0, -1.0, 0.0, 1.0, 2.0}, 0.0);
    EXPECT_NEAR(d2w[0], -1.0 / 12.0, 1e-13);
    EXPECT_NEAR(d2w[1], 4.0 / 3.0, 1e-13);
    EXPECT_NEAR(d2w[2], -5.0 / 2.0, 1e-13);

    const auto d4 = finite_difference_weights(4, {-2.0, -1.0, 0.0, 1.0, 2.0}, 0.0);
    EXPECT_NEAR(d4[0], 1.0, 1e-12);
    EXPECT_NEAR(d4[1], -4.0, 1e-12);
    EXPECT_NEAR(d4[2], 6.0, 1e-12);

    EXPECT_THROW(finite_difference_weights(3, {-1.0, 0.0, 1.0}, 0.0), ArgumentError);
    EXPECT_THROW(finite_difference_weights(-1, {0.0}, 0.0), ArgumentError);
}

// ln q = 2N ln cos(omega mu) gives beta_2 = -2N w^2, beta_4 = -4N w^4,
// beta_6 = -32N w^6, beta_8 = -544N w^8, odd orders zero.
TEST(Beta, ProductAllXOracles) {
    const int n = 9;
    const SpinModel model = product_x_model(n);
    const SurvivalModel q = SurvivalModel::from_spin_model(model, product_zero_state(n));
    const std::vector<double>& beta = q.beta();
    ASSERT_EQ(beta.size(), 9u);
    const double w2 = kOmega * kOmega;
    EXPECT_NEAR(beta[2], -2.0 * n * w2, 1e-9 * 2.0 * n * w2);
    EXPECT_NEAR(beta[4], -4.0 * n * w2 * w2, 1e-5 * 4.0 * n * w2 * w2);
    EXPECT_NEAR(beta[6], -32.0 * n * std::pow(kOmega, 6), 1e-3 * 32.0 * n * std::pow(kOmega, 6));
    EXPECT_NEAR(beta[8], -544.0 * n * std::pow(kOmega, 8),
                5e-2 * 544.0 * n * std::pow(kOmega, 8));
    EXPECT_EQ(beta[1], 0.0);
    EXPECT_EQ(beta[3], 0.0);
    EXPECT_EQ(beta[5], 0.0);
    EXPECT_EQ(beta[7], 0.0);
}

TEST(Beta, SecondDerivativeMatchesVarianceOnRandomModels) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const int n = 1 + static_cast<int>(seed % 4);
        const SpinModel model = build_spin_model(n, kOmega, random_couplings(n, seed));
        const Vector psi0 = product_zero_state(n);
        const SurvivalModel q = SurvivalModel::from_spin_model(model, psi0);
        const double var = variance_hpi(model, psi0, ZenoSubspace::from_state(psi0));
        if (var < 1e-3 * kOmega * kOmega) continue; // degenerate draw carries no signal
        EXPECT_NEAR(q.beta()[2], -2.0 * var, 1e-6 * 2.0 * var) << "seed " << seed;
    }
}

// With the exact series coefficients the residual of the order-8 expansion
// falls like mu^10; the fitted slope must clear K + 0.5.
TEST(Beta, TaylorRemainderSlopeWithExactCoefficients) {
    const int n = 3;
    const double w = kOmega;
    const double c[9] = {0, 0, -2.0 * n * w * w, 0, -4.0 * n * std::pow(w, 4), 0,
                         -32.0 * n * std::pow(w, 6), 0, -544.0 * n * std::pow(w, 8)};
    const SurvivalModel q =
        SurvivalModel::from_spin_model(product_x_model(n), product_zero_state(n));
    std::vector<double> lx, ly;
    for (double u = 0.05; u <= 0.51; u *= 1.6) {
        const double mu = u / w;
        double series = 0.0, fact = 1.0;
        for (int k = 1; k <= 8; ++k) {
            fact *= k;
            series += c[k] * std::pow(mu, k) / fact;
        }
        const double rem = std::abs(q.log_q(mu) - series);
        ASSERT_GT(rem, 0.0);
        lx.push_back(std::log(mu));
        ly.push_back(std::log(rem));
    }
    EXPECT_GE(fit_slope(lx, ly), 8.5);
}

// Extracted coefficients at K = 4: the residual is the genuine mu^6 tail.
TEST(Beta, TaylorRemainderSlopeWithExtractedCoefficients) {
    const int n = 2;
    const SurvivalModel q =
        SurvivalModel::from_spin_model(product_x_model(n), product_zero_state(n));
    const std::vector<double> beta = beta_coefficients(q, 4);
    std::vector<double> lx, ly;
    for (double u = 0.05; u <= 0.51; u *= 1.6) {
        const double mu = u / kOmega;
        double series = 0.0, fact = 1.0;
        for (int k = 1; k <= 4; ++k) {
            fact *= k;
            series += beta[static_cast<std::size_t>(k)] * std::pow(mu, k) / fact;
        }
        const double rem = std::abs(q.log_q(mu) - series);
        ASSERT_GT(rem, 0.0);
        lx.push_back(std::log(mu));
        ly.push_back(std::log(rem));
    }
    EXPECT_GE(fit_slope(lx, ly), 4.5);
}

TEST(Beta, OrderValidation) {
    const SurvivalModel q =
        SurvivalModel::from_spin_model(product_x_model(1), product_zero_state(1));
    EXPECT_THROW(beta_coefficients(q, 0), ArgumentError);
    EXPECT_THROW(beta_coefficients(q, 9), ArgumentError);
    EXPECT_EQ(beta_coefficients(q, 8), q.beta());
}

TEST(Beta, StencilFailurePropagates) {
    const auto bad_log_q = [](double mu) -> double {
        if (std::abs(mu) > 1e-3) throw EvaluationError("survival probability vanished");
        return -mu * mu;
    };
    // h = 0.05/sqrt(var): make the widest stencil point exceed the valid range
    EXPECT_THROW(beta_from_log_q(bad_log_q, 1.0, 8), EvaluationError);
}

TEST(SurvivalModel, LineValidationAndMerging) {
    EXPECT_THROW(SurvivalModel::from_lines({}, {}), ArgumentError);
    EXPECT_THROW(SurvivalModel::from_lines({1.0, 2.0}, {0.5}), ArgumentError);
    EXPECT_THROW(SurvivalModel::from_lines({1.0, 2.0}, {0.5, 0.4}), ArgumentError);
    EXPECT_THROW(SurvivalModel::from_lines({1.0, 2.0}, {1.5, -0.5}), ArgumentError);
    EXPECT_THROW(SurvivalModel::from_lines({std::nan("")}, {1.0}), ArgumentError);

    // lines closer than 1e-12 of the spectral scale coalesce
    const SurvivalModel merged = SurvivalModel::from_lines(
        {1e4, 1e4 * (1.0 + 1e-13), 2e4}, {0.25, 0.25, 0.5});
    EXPECT_EQ(merged.line_count(), 2u);
    EXPECT_NEAR(merged.weights()[0], 0.5, 1e-15);

    // zero-weight lines are dropped entirely
    const SurvivalModel dropped = SurvivalModel::from_lines({1e4, 2e4}, {1.0, 0.0});
    EXPECT_EQ(dropped.line_count(), 1u);
    EXPECT_EQ(dropped.variance(), 0.0);
    EXPECT_TRUE(std::isinf(dropped.mu_max()));
}

TEST(SurvivalModel, UnitSurvivalAtZeroIsExact) {
    RngStream rng = RngStream::from_seed(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int lines = 2 + static_cast<int>(rng.next_u64() % 15);
        std::vector<double> lambdas, weights;
        double total = 0.0;
        for (int i = 0; i < lines; ++i) {
            lambdas.push_back(rng.uniform(-1e5, 1e5));
            weights.push_back(rng.uniform(0.01, 1.0));
            total += weights.back();
        }
        for (double& w : weights) w /= total;
        const SurvivalModel q = SurvivalModel::from_lines(lambdas, weights);
        ASSERT_EQ(q.q(0.0), 1.0) << "trial " << trial;
    }
}

TEST(SurvivalModel, MuMaxTracksTheVariance) {
    const int n = 4;
    const SurvivalModel q =
        SurvivalModel::from_spin_model(product_x_model(n), product_zero_state(n));
    EXPECT_NEAR(q.mu_max(), 0.5 / (2.0 * kOmega), 1e-12 * q.mu_max());
    EXPECT_NEAR(q.mean_level(), 0.0, 1e-10 * kOmega);
}

TEST(SurvivalModel, LogOfVanishingSurvivalThrows) {
    // two equal lines at +-lambda: q = cos^2(lambda mu), zero at the quarter
    // period up to roundoff; probing far beyond any physical window must not
    // return -inf silently
    const SurvivalModel q = SurvivalModel::from_lines({-1.0, 1.0}, {0.5, 0.5});
    const double root = std::numbers::pi / 2.0;
    const double val = q.q(root);
    if (val > 0.0) {
        EXPECT_NO_THROW(q.log_q(root));
    } else {
        EXPECT_THROW(q.log_q(root), EvaluationError);
    }
}
