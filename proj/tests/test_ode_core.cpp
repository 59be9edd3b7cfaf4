#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <tuple>

#include "test_support.hpp"

namespace re = robust_ergodic;
using test_support::baseline;

namespace {

double ode_residual(const re::IntervalSystem& s, const re::AnchoredCoefficients& u, double gamma, double mu,
                    double x) {
    return s.a3 * re::eval_Hsecond(s, u, x, gamma) + s.a2 * re::eval_Hprime(s, u, x, gamma) + s.a1 * re::eval_H(s, u, gamma, x) +
           mu * x * x + 2.0 * x - mu * gamma;
}

double ode_scale(const re::IntervalSystem& s, const re::AnchoredCoefficients& u, double gamma, double mu, double x) {
    return std::max({1.0, std::abs(s.a3 * re::eval_Hsecond(s, u, x, gamma)), std::abs(s.a2 * re::eval_Hprime(s, u, x, gamma)),
                     std::abs(s.a1 * re::eval_H(s, u, gamma, x)), mu * x * x, std::abs(mu * gamma)});
}

// Parameters that make a1 vanish on interval 1: mu (b - sigma delta + r/mu) = r (1 + eps).
re::ModelParams degenerate_interval1() {
    auto p = baseline();
    p.b = p.sigma * p.delta + p.eps * p.r / p.mu;
    return p;
}

} // namespace

TEST(CharacteristicRoots, HandSolvable) {
    const auto r = re::characteristic_roots(1.0, 0.0, -1.0);
    EXPECT_DOUBLE_EQ(r.discriminant, 4.0);
    EXPECT_DOUBLE_EQ(r.plus, 1.0);
    EXPECT_DOUBLE_EQ(r.minus, -1.0);
}

TEST(CharacteristicRoots, DiscriminantPositiveOnRandomDraws) {
    std::mt19937_64 rng(101);
    for (int i = 0; i < 10000; ++i) {
        const auto p = test_support::random_params(rng);
        const auto th = test_support::random_thresholds(rng, true);
        for (int k = 1; k <= 3; ++k) {
            const auto s = re::build_interval(p, th, k, re::Regime::Regime1);
            ASSERT_GT(s.discriminant, 0.0);
            ASSERT_GT(s.rho_plus, s.rho_minus);
        }
    }
}

TEST(BuildInterval, BaselineDuplicateFormulaOracle) {
    const auto p = baseline();
    const re::Thresholds th{-1.0, -0.2, 0.5, 0.8};
    const auto s = re::build_interval(p, th, 1, re::Regime::Regime1);

    const double a_star = p.b - p.sigma * p.delta + p.r / p.mu;
    const double lambda = p.r * (1.0 + p.eps);
    const double a3 = p.sigma * p.sigma / 2.0;
    const double a2 = a_star + p.mu * p.sigma * p.sigma / 2.0;
    const double a1 = p.mu * a_star - lambda;
    const double disc = a2 * a2 - 4.0 * a3 * a1;
    EXPECT_NEAR(s.a3, a3, 1e-14);
    EXPECT_NEAR(s.a2, a2, 1e-14);
    EXPECT_NEAR(s.a1, a1, 1e-14);
    EXPECT_NEAR(s.discriminant, disc, 1e-14);
    EXPECT_NEAR(s.rho_plus, (a2 + std::sqrt(disc)) / (2.0 * a3), 1e-14);
    EXPECT_NEAR(s.rho_minus, (a2 - std::sqrt(disc)) / (2.0 * a3), 1e-14);
    EXPECT_EQ(s.branch, re::PolyBranch::Quadratic);
    EXPECT_NEAR(s.q[2], -p.mu / a1, 1e-14);
    EXPECT_NEAR(s.q[1], 2.0 * (p.mu * a2 - a1) / (a1 * a1), 1e-14);
    EXPECT_NEAR(s.q[0], (2.0 * a1 * a2 + 2.0 * p.mu * a1 * a3 - 2.0 * p.mu * a2 * a2) / (a1 * a1 * a1), 1e-14);
    EXPECT_NEAR(s.gamma_const, p.mu / a1, 1e-14);
    EXPECT_EQ(s.kappa, -p.delta);
    EXPECT_EQ(s.lambda, lambda);
}

TEST(BuildInterval, DistortionAssignment) {
    const auto p = baseline();
    const re::Thresholds th{-1.0, -0.2, 0.5, 0.8};
    const auto s2 = re::build_interval(p, th, 2, re::Regime::Regime1);
    const auto s3 = re::build_interval(p, th, 3, re::Regime::Regime1);
    EXPECT_EQ(s2.kappa, p.delta);
    EXPECT_EQ(s2.lambda, 1.5);
    EXPECT_EQ(s2.right, 0.5);
    EXPECT_EQ(s3.kappa, p.delta);
    EXPECT_EQ(s3.lambda, 0.5);
    const re::Thresholds th2{-1.0, -0.2, 1.5, 0.8};
    EXPECT_EQ(re::build_interval(p, th2, 2, re::Regime::Regime2).right, 0.8);
    EXPECT_THROW(re::build_interval(p, th2, 3, re::Regime::Regime2), re::DomainError);
}

TEST(AnchorRule, BasisInUnitIntervalInside) {
    std::mt19937_64 rng(103);
    for (int i = 0; i < 2000; ++i) {
        const auto p = test_support::random_params(rng);
        const auto th = test_support::random_thresholds(rng, true);
        for (int k = 1; k <= 3; ++k) {
            const auto s = re::build_interval(p, th, k, re::Regime::Regime1);
            for (int j = 0; j <= 20; ++j) {
                const double x = j == 20 ? s.right : s.left + (s.right - s.left) * j / 20.0;
                for (int sign : {-1, 1}) {
                    EXPECT_LE(-s.rho(sign) * (x - s.anchor(sign)), 0.0);
                    const double v = re::basis(s, sign, x);
                    EXPECT_GT(v, 0.0);
                    EXPECT_LE(v, 1.0);
                }
            }
        }
    }
}

TEST(Roots, SignPatternAndVieta) {
    std::mt19937_64 rng(107);
    for (int i = 0; i < 5000; ++i) {
        const auto p = test_support::random_params(rng);
        const auto th = test_support::random_thresholds(rng, true);
        for (int k = 1; k <= 3; ++k) {
            const auto s = re::build_interval(p, th, k, re::Regime::Regime1);
            if (s.a1 < 0.0) {
                EXPECT_GT(s.rho_plus, 0.0);
                EXPECT_LT(s.rho_minus, 0.0);
            }
            const double scale = std::max({1.0, std::abs(s.a1 / s.a3), std::abs(s.a2 / s.a3)});
            EXPECT_NEAR(s.rho_plus * s.rho_minus, s.a1 / s.a3, 1e-12 * scale);
            EXPECT_NEAR(s.rho_plus + s.rho_minus, s.a2 / s.a3, 1e-12 * scale);
        }
    }
}

TEST(EvalH, ZeroCoefficientsGiveParticularSolution) {
    const auto p = baseline();
    const auto s = re::build_interval(p, {-1.0, -0.2, 0.5, 0.8}, 3, re::Regime::Regime1);
    ASSERT_EQ(s.branch, re::PolyBranch::Quadratic);
    const double gamma = 2.3;
    for (double x = 0.5; x <= 0.8; x += 0.03) {
        const double q = s.q[0] + s.q[1] * x + s.q[2] * x * x;
        const double h = p.mu * gamma / s.a1 + q;
        EXPECT_NEAR(re::eval_H(s, {}, gamma, x), h, 1e-14 * std::max(1.0, std::abs(h)));
        const double d = 2.0 * s.q[2] * x + s.q[1];
        EXPECT_NEAR(re::eval_Hprime(s, {}, x), d, 1e-14 * std::max(1.0, std::abs(d)));
    }
}

TEST(EvalH, UnitExponentialAtAnchor) {
    re::IntervalSystem s;
    s.rho_plus = 2.5;
    s.rho_minus = -0.7;
    s.left = 0.3;
    s.right = 1.1;
    s.anchor_plus = s.left;
    s.anchor_minus = s.right;
    EXPECT_DOUBLE_EQ(re::eval_H(s, {0.0, 1.0}, 0.0, s.anchor_plus), 1.0);
    EXPECT_DOUBLE_EQ(re::eval_H(s, {1.0, 0.0}, 0.0, s.anchor_minus), 1.0);
}

TEST(EvalH, DerivativeMatchesCentralDifference) {
    std::mt19937_64 rng(109);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const auto p = test_support::random_params(rng);
        const auto th = test_support::random_thresholds(rng, true);
        for (int k = 1; k <= 3; ++k) {
            const auto s = re::build_interval(p, th, k, re::Regime::Regime1);
            const re::AnchoredCoefficients u{n(rng), n(rng)};
            const double gamma = 3.0 * n(rng);
            const double h = 1e-4 / std::max({1.0, std::abs(s.rho_plus), std::abs(s.rho_minus)});
            for (int j = 1; j < 10; ++j) {
                const double x = s.left + (s.right - s.left) * j / 10.0;
                const double fd = (re::eval_H(s, u, gamma, x + h) - re::eval_H(s, u, gamma, x - h)) / (2.0 * h);
                const double exact = re::eval_Hprime(s, u, x, gamma);
                const double scale = std::max({1.0, std::abs(re::eval_H(s, u, gamma, x)), std::abs(exact)});
                EXPECT_LE(std::abs(fd - exact), 1e-6 * scale);
            }
        }
    }
}

TEST(EvalH, SlopeIndependentOfGammaInQuadraticBranch) {
    const auto s = re::build_interval(baseline(), {-1.0, -0.2, 0.5, 0.8}, 3, re::Regime::Regime1);
    ASSERT_EQ(s.branch, re::PolyBranch::Quadratic);
    const re::AnchoredCoefficients u{0.3, -0.4};
    for (double x = 0.5; x <= 0.8; x += 0.05) {
        EXPECT_EQ(re::eval_Hprime(s, u, x, 1.0), re::eval_Hprime(s, u, x, 7.5));
    }
}

TEST(EvalH, BothBranchesSolveTheOde) {
    std::mt19937_64 rng(113);
    std::normal_distribution<double> n(0.0, 1.0);
    int factored = 0;
    for (int i = 0; i < 600; ++i) {
        auto p = test_support::random_params(rng);
        // Every third draw puts interval 2 near a1 = 0.
        if (i % 3 == 0) p.b = -p.sigma * p.delta + p.eps * p.r / p.mu + 0.01 * n(rng);
        const auto th = test_support::random_thresholds(rng, true);
        for (int k = 1; k <= 3; ++k) {
            const auto s = re::build_interval(p, th, k, re::Regime::Regime1);
            factored += s.branch == re::PolyBranch::Factored;
            const re::AnchoredCoefficients u{n(rng), n(rng)};
            const double gamma = 2.0 * n(rng);
            for (int j = 0; j <= 10; ++j) {
                const double x = s.left + (s.right - s.left) * j / 10.0;
                EXPECT_LE(std::abs(ode_residual(s, u, gamma, p.mu, x)), 1e-8 * ode_scale(s, u, gamma, p.mu, x));
            }
        }
    }
    EXPECT_GT(factored, 100);
}

TEST(FactoredBranch, EngagesWithWarningAtZeroA1) {
    const auto p = degenerate_interval1();
    const re::Thresholds th{-1.0, -0.2, 0.5, 0.8};
    const auto s = re::build_interval(p, th, 1, re::Regime::Regime1);
    EXPECT_EQ(s.a1, 0.0);
    ASSERT_EQ(s.branch, re::PolyBranch::Factored);
    EXPECT_EQ(s.rho(s.small_sign), 0.0);
    EXPECT_FALSE(s.warnings.empty());
    // With a1 = 0 the cubic c1 x + c2 x^2 + c3 x^3 + gamma mu x / a2 is a particular
    // solution; it may differ from ours only by a homogeneous term, so the second
    // differences of the gap must satisfy a3 g'' + a2 g' = 0.
    const double c3 = -p.mu / (3.0 * s.a2);
    const double c2 = -(6.0 * s.a3 * c3 + 2.0) / (2.0 * s.a2);
    const double c1 = -(2.0 * s.a3 * c2) / s.a2;
    const double gamma = 1.3;
    auto cubic = [&](double x) { return x * (c1 + gamma * p.mu / s.a2 + x * (c2 + x * c3)); };
    auto cubic_slope = [&](double x) { return c1 + gamma * p.mu / s.a2 + x * (2.0 * c2 + 3.0 * x * c3); };
    auto cubic_curv = [&](double x) { return 2.0 * c2 + 6.0 * c3 * x; };
    for (double x = th.x_low; x <= th.x_kappa; x += 0.1) {
        const double g1 = re::eval_Hprime(s, {}, x, gamma) - cubic_slope(x);
        const double g2 = re::eval_Hsecond(s, {}, x, gamma) - cubic_curv(x);
        EXPECT_NEAR(s.a3 * g2 + s.a2 * g1, 0.0, 1e-12);
        EXPECT_TRUE(std::isfinite(re::eval_H(s, {}, gamma, x) - cubic(x)));
    }
}

TEST(FactoredBranch, BoundaryValueSolutionContinuousAcrossZeroA1) {
    // The small mode's anchor flips with the sign of a1, so compare solutions of
    // the same boundary problem rather than raw coefficients.
    const auto p = degenerate_interval1();
    const re::Thresholds th{-1.0, -0.2, 0.5, 0.8};
    auto solved = [&](double db) {
        auto q = p;
        q.b += db;
        const auto s = re::build_interval(q, th, 1, re::Regime::Regime1);
        EXPECT_EQ(s.branch, re::PolyBranch::Factored);
        const auto r = re::solve_gamma_system(q, s, th.x_low, th.x_kappa, 0.0);
        return std::make_tuple(s, r.u, r.gamma);
    };
    const auto [s0, u0, g0] = solved(0.0);
    for (double db : {-1e-9, 1e-9}) {
        const auto [s, u, g] = solved(db);
        EXPECT_NEAR(g, g0, 1e-8);
        for (double x = th.x_low; x <= th.x_kappa; x += 0.1) {
            EXPECT_NEAR(re::eval_H(s, u, g, x), re::eval_H(s0, u0, g0, x), 1e-8);
        }
    }
}

TEST(FactoredBranch, SolvesTheOdeAndMatchesFiniteDifferences) {
    const auto p = degenerate_interval1();
    const re::Thresholds th{-1.0, -0.2, 0.5, 0.8};
    const auto s = re::build_interval(p, th, 1, re::Regime::Regime1);
    const re::AnchoredCoefficients u{0.2, -0.5};
    for (double gamma : {0.0, 1.7}) {
        for (int j = 0; j <= 10; ++j) {
            const double x = s.left + (s.right - s.left) * j / 10.0;
            EXPECT_LE(std::abs(ode_residual(s, u, gamma, p.mu, x)), 1e-8 * ode_scale(s, u, gamma, p.mu, x));
            const double h = 1e-5;
            const double fd = (re::eval_H(s, u, gamma, x + h) - re::eval_H(s, u, gamma, x - h)) / (2.0 * h);
            EXPECT_NEAR(fd, re::eval_Hprime(s, u, x, gamma), 1e-6);
        }
    }
}

TEST(StableMath, PhiFunctions) {
    EXPECT_EQ(re::phi_stable(1, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(re::phi_stable(2, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(re::phi_stable(3, 0.0), 1.0 / 6.0);
    EXPECT_NEAR(re::phi_stable(2, -2.0), (std::exp(-2.0) - 1.0 + 2.0) / 4.0, 1e-15);
    EXPECT_NEAR(re::phi_stable(3, -3.0), (std::exp(-3.0) - 1.0 + 3.0 - 4.5) / -27.0, 1e-15);
    for (int k = 1; k <= 3; ++k) {
        // Series and recurrence meet at |z| = 1; the jump must be of the size phi' * 2e-12.
        EXPECT_NEAR(re::phi_stable(k, 1.0 - 1e-12), re::phi_stable(k, 1.0 + 1e-12), 1e-11);
        EXPECT_NEAR(re::phi_stable(k, -1.0 + 1e-12), re::phi_stable(k, -1.0 - 1e-12), 1e-11);
    }
    for (double z : {-40.0, -0.7, 0.3, 5.0}) EXPECT_NEAR(re::phi_stable(1, z), re::exprel_stable(z), 1e-15);
}

TEST(StableMath, Expm1AndExprel) {
    EXPECT_EQ(re::exprel_stable(0.0), 1.0);
    EXPECT_NEAR(re::expm1_stable(1e-12), 1e-12 + 5e-25, 1e-27);
    EXPECT_NEAR(re::exprel_stable(1.0), std::exp(1.0) - 1.0, 1e-15);
    EXPECT_NEAR(re::exprel_stable(1.0), 1.718281828, 1e-9);
    for (double x : {-1e-3, -1e-6, -1e-9, 1e-9, 1e-6, 9e-6, 1.1e-5, 1e-3}) {
        // exprel(x) = 1 + x/2 + x^2/6 + ...
        EXPECT_NEAR(re::exprel_stable(x), 1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0 + x * x * x * x / 120.0, 1e-15);
    }
    EXPECT_NEAR(re::exprel_stable(-50.0), (std::exp(-50.0) - 1.0) / -50.0, 1e-17);
}
