#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

namespace re = robust_ergodic;
using test_support::baseline;

namespace {

re::ModelParams no_jump_limit() {
    re::ModelParams p;
    p.b = 0.0;
    p.delta = 0.0;
    p.eps = 0.0;
    p.sigma = 1.0;
    p.r = 0.0;
    return p;
}

std::string domain_message(const re::ModelParams& p) {
    try {
        re::validate(p);
    } catch (const re::DomainError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Validate, BaselineIsAdmissible) { EXPECT_NO_THROW(re::validate(baseline())); }

TEST(Validate, EpsOneRejected) {
    auto p = baseline();
    p.eps = 1.0;
    EXPECT_EQ(domain_message(p), "eps must be < 1");
}

TEST(Validate, ZeroSigmaRejected) {
    auto p = baseline();
    p.sigma = 0.0;
    EXPECT_EQ(domain_message(p), "sigma must be > 0");
}

TEST(Validate, EachBoundIsNamed) {
    auto p = baseline();
    p.r = 0.0;
    EXPECT_EQ(domain_message(p), "r must be > 0");
    p = baseline();
    p.mu = -1.0;
    EXPECT_EQ(domain_message(p), "mu must be > 0");
    p = baseline();
    p.cU = 0.0;
    EXPECT_EQ(domain_message(p), "cU must be > 0");
    p = baseline();
    p.cD = 0.0;
    EXPECT_EQ(domain_message(p), "cD must be > 0");
    p = baseline();
    p.delta = -0.1;
    EXPECT_EQ(domain_message(p), "delta must be >= 0");
    p = baseline();
    p.eps = -0.1;
    EXPECT_EQ(domain_message(p), "eps must be >= 0");
}

TEST(JumpMoments, NegativeExponential) {
    re::ModelParams p;
    p.mu = 4.0;
    EXPECT_DOUBLE_EQ(p.mean_jump(), -0.25);
    EXPECT_DOUBLE_EQ(p.mean_abs_jump(), 0.25);
    EXPECT_DOUBLE_EQ(p.second_moment_jump(), 0.125);
}

TEST(InterventionRateBound, NoJumpLimit) {
    EXPECT_DOUBLE_EQ(re::intervention_rate_bound(no_jump_limit(), -1.0, 1.0), 0.5);
}

TEST(InterventionRateBound, EpsOneArithmetic) {
    re::ModelParams p;
    p.b = 0.0;
    p.delta = 0.0;
    p.eps = 1.0;
    p.r = 1.0;
    p.sigma = 1.0;
    p.mu = 1.0;
    // 1 + (1 + 2 * 2) / 1
    EXPECT_DOUBLE_EQ(re::intervention_rate_bound(p, 0.0, 1.0), 6.0);
}

TEST(InterventionRateBound, DriftAndAmbiguity) {
    auto p = no_jump_limit();
    p.b = 1.0;
    p.delta = 1.0;
    p.sigma = 2.0;
    EXPECT_DOUBLE_EQ(re::intervention_rate_bound(p, 0.0, 2.0), 5.0);
}

TEST(InterventionRateBound, RequiresOrderedPair) {
    EXPECT_THROW(re::intervention_rate_bound(baseline(), 1.0, 1.0), re::DomainError);
    EXPECT_THROW(re::intervention_rate_bound(baseline(), 2.0, 1.0), re::DomainError);
}

TEST(InterventionRateBound, StrictlyDecreasingInWidth) {
    const auto p = baseline();
    double prev = INFINITY;
    for (double w = 0.05; w < 20.0; w *= 1.3) {
        const double k = re::intervention_rate_bound(p, -0.3, -0.3 + w);
        EXPECT_LT(k, prev) << "width " << w;
        prev = k;
    }
}

TEST(GammaUpperBound, NoJumpLimit) { EXPECT_DOUBLE_EQ(re::gamma_upper_bound(no_jump_limit(), -1.0, 1.0), 2.0); }

TEST(GammaUpperBound, DegenerateBandRejected) {
    EXPECT_THROW(re::gamma_upper_bound(baseline(), 0.5, 0.5), re::DomainError);
}

TEST(GammaUpperBound, DominatesInterventionTerm) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto p = test_support::random_params(rng);
        const double x1 = std::uniform_real_distribution<double>(-3, 1)(rng);
        const double x2 = x1 + std::uniform_real_distribution<double>(0.01, 3)(rng);
        EXPECT_GE(re::gamma_upper_bound(p, x1, x2), (p.cU + p.cD) * re::intervention_rate_bound(p, x1, x2));
    }
}

TEST(MinGammaUpperBound, NoJumpLimit) {
    EXPECT_NEAR(re::min_gamma_upper_bound(no_jump_limit()), 3.0 * std::pow(0.5, 2.0 / 3.0), 1e-15);
    EXPECT_NEAR(re::min_gamma_upper_bound(no_jump_limit()), 1.889882, 1e-6);
}

TEST(MinGammaUpperBound, AttainedAtCentredMinimiser) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto p = test_support::random_params(rng);
        // Independent width: L^3 = 2 (cU + cD) (sigma^2 + r (1 + eps) 2 / mu^2).
        const double k2 = p.sigma * p.sigma + p.r * (1.0 + p.eps) * 2.0 / (p.mu * p.mu);
        const double L = std::cbrt(2.0 * (p.cU + p.cD) * k2);
        const double bound = re::min_gamma_upper_bound(p);
        EXPECT_NEAR(bound, re::gamma_upper_bound(p, -L / 2, L / 2), 1e-12 * std::max(1.0, bound));
        EXPECT_NEAR(re::bound_minimizing_width(p), L, 1e-12 * L);
        EXPECT_GE(bound, 0.0);
    }
}

TEST(MinGammaUpperBound, BelowEveryBand) {
    std::mt19937_64 rng(13);
    const auto p = baseline();
    const double m = re::min_gamma_upper_bound(p);
    for (int i = 0; i < 1000; ++i) {
        const double x1 = std::uniform_real_distribution<double>(-5, 5)(rng);
        const double x2 = x1 + std::uniform_real_distribution<double>(1e-3, 10)(rng);
        EXPECT_LE(m, re::gamma_upper_bound(p, x1, x2) + 1e-12);
    }
}

TEST(Regime1Sufficient, LargeIntensityFollowsRecipe) {
    re::ModelParams p;
    p.b = 0.0;
    p.delta = 0.5;
    p.eps = 0.1;
    p.sigma = 1.0;
    p.mu = 1.0;
    p.cU = 1.0;
    p.cD = 1.0;
    const auto probe = re::regime1_sufficient(p);
    ASSERT_GT(probe.k1, 0.0);
    // Choose r so that (r/mu)^{1/3} is twice the required threshold.
    const double need = std::max(2.0 * probe.k3 / probe.k1, std::cbrt(2.0 * probe.k2 / probe.k1));
    p.r = p.mu * std::pow(2.0 * need, 3.0);
    const auto c = re::regime1_sufficient(p);
    EXPECT_TRUE(c.holds);
    EXPECT_TRUE(c.simple_holds);
}

TEST(Regime1Sufficient, NegativeRightHandSide) {
    re::ModelParams p;
    p.b = -10.0;
    p.delta = 0.0;
    p.r = 0.1;
    const auto c = re::regime1_sufficient(p);
    EXPECT_FALSE(c.holds);
    EXPECT_FALSE(c.simple_holds);
}

TEST(Regime1Sufficient, SimpleImpliesMain) {
    std::mt19937_64 rng(17);
    auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    int simple_count = 0;
    for (int i = 0; i < 10000; ++i) {
        re::ModelParams p;
        p.b = u(-1.0, 3.0);
        p.delta = u(0.0, 1.0);
        p.eps = u(0.0, 0.6);
        p.sigma = u(0.2, 2.0);
        p.mu = u(0.2, 3.0);
        p.cU = u(0.2, 3.0);
        p.cD = u(0.2, 3.0);
        p.r = std::exp(u(0.0, 9.0));
        const auto c = re::regime1_sufficient(p);
        if (c.simple_holds) {
            ++simple_count;
            EXPECT_TRUE(c.holds) << "draw " << i;
        }
    }
    EXPECT_GT(simple_count, 100);
}

TEST(WorstCaseDrift, TieAndSides) {
    const auto p = baseline();
    const re::Thresholds th{-1.0, 0.2, 0.6, 1.0};
    EXPECT_EQ(re::worst_case_drift(0.2, th, p), p.delta);
    EXPECT_EQ(re::worst_case_drift(0.2 - 1.0, th, p), -p.delta);
    auto q = p;
    q.delta = 0.0;
    for (double x = -3; x < 3; x += 0.25) EXPECT_EQ(re::worst_case_drift(x, th, q), 0.0);
}

TEST(WorstCaseIntensity, TieAndSides) {
    const auto p = baseline();
    const re::Thresholds th{-1.0, 0.2, 0.6, 1.0};
    EXPECT_DOUBLE_EQ(re::worst_case_intensity(0.6, th, p), 1.5);
    EXPECT_DOUBLE_EQ(re::worst_case_intensity(1.6, th, p), 0.5);
    auto q = p;
    q.eps = 0.0;
    for (double x = -3; x < 3; x += 0.25) EXPECT_EQ(re::worst_case_intensity(x, th, q), q.r);
}

TEST(WorstCasePolicies, ExactlyOneSwitchEach) {
    const auto p = baseline();
    const re::Thresholds th{-1.0, 0.2, 0.6, 1.0};
    int kappa_switches = 0, lambda_switches = 0;
    double prev_k = re::worst_case_drift(-5.0, th, p);
    double prev_l = re::worst_case_intensity(-5.0, th, p);
    for (int i = 1; i <= 10000; ++i) {
        const double x = -5.0 + 10.0 * i / 10000.0;
        const double k = re::worst_case_drift(x, th, p);
        const double l = re::worst_case_intensity(x, th, p);
        kappa_switches += k != prev_k;
        lambda_switches += l != prev_l;
        prev_k = k;
        prev_l = l;
    }
    EXPECT_EQ(kappa_switches, 1);
    EXPECT_EQ(lambda_switches, 1);
}

TEST(GammaStar, HandValue) {
    re::ModelParams p = baseline();
    EXPECT_DOUBLE_EQ(re::gamma_star(p, -0.5), 1.75);
}

TEST(GammaStar, ZeroWithoutAmbiguityOrDrift) {
    re::ModelParams p;
    p.b = 0.0;
    p.delta = 0.0;
    p.eps = 0.0;
    EXPECT_EQ(re::gamma_star(p, 0.0), 0.0);
}

TEST(GammaStar, MatchesConvergedGamma) {
    const auto& rep = test_support::baseline_solution();
    ASSERT_TRUE(rep.converged);
    EXPECT_NEAR(re::gamma_star(rep.solution.params, rep.solution.th.x_low), rep.solution.gamma, 1e-8);
}

TEST(Thresholds, Classification) {
    EXPECT_EQ(re::classify({-1, 0, 0.5, 1}), re::Regime::Regime1);
    EXPECT_EQ(re::classify({-1, 0, 1.0, 1}), re::Regime::Regime2);
    EXPECT_EQ(re::classify({-1, 0, 2.0, 1}), re::Regime::Regime2);
    EXPECT_FALSE(re::is_ordered({0, 0, 1, 2}));
    EXPECT_FALSE(re::is_ordered({0, 1, 0.5, 2}));
    EXPECT_TRUE(re::is_ordered({0, 1, 3, 2}));
    EXPECT_EQ(re::regime_from_string("Regime2"), re::Regime::Regime2);
    EXPECT_THROW(re::regime_from_string("Regime3"), re::DomainError);
}
