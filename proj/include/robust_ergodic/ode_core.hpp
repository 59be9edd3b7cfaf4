#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "model.hpp"
#include "stable_math.hpp"

namespace robust_ergodic {

enum class PolyBranch { Quadratic, Factored };

/// Constant-coefficient data of the gradient ODE
///   a3 H'' + a2 H' + a1 H + mu x^2 + 2 x - mu gamma = 0
/// on one interval of constant worst-case distortion, with the anchored
/// exponential basis e^{-rho (x - anchor)}.
struct IntervalSystem {
    int index = 0;
    double kappa = 0.0;  ///< drift distortion on the interval
    double lambda = 0.0; ///< jump intensity on the interval
    double left = 0.0;
    double right = 0.0;

    double a3 = 0.0;
    double a2 = 0.0;
    double a1 = 0.0;
    double discriminant = 0.0;
    double rho_plus = 0.0;
    double rho_minus = 0.0;

    /// Quadratic: particular part q(x) + gamma mu / a1.
    /// Factored: (D + rho_small) P = V with P(center) = 0 and V a quadratic in
    /// y = x - center, used when a1 is small relative to a2 and 1/a1 would blow up q.
    PolyBranch branch = PolyBranch::Quadratic;
    std::array<double, 4> q{}; ///< q[0] + q[1] x + q[2] x^2 (q[3] unused)
    double gamma_const = 0.0;
    int small_sign = -1; ///< sign of the root computed as a1 / t
    double center = 0.0;
    std::array<double, 3> v{};
    double v_gamma = 0.0;

    double anchor_plus = 0.0;
    double anchor_minus = 0.0;

    std::vector<std::string> warnings;

    double rho(int sign) const { return sign > 0 ? rho_plus : rho_minus; }
    double anchor(int sign) const { return sign > 0 ? anchor_plus : anchor_minus; }
    bool contains(double x) const { return left <= x && x <= right; }
};

/// Scaled coefficients u = c e^{-rho * anchor} of the two exponential modes.
struct AnchoredCoefficients {
    double u_minus = 0.0;
    double u_plus = 0.0;

    double operator[](int sign) const { return sign > 0 ? u_plus : u_minus; }
    bool operator==(const AnchoredCoefficients&) const = default;
};

inline constexpr double kDegenerateA1Tol = 1e-10;
inline constexpr double kNearDoubleRootTol = 1e-8;
/// Largest |rho_small / rho_big| for which the factored branch is used.
inline constexpr double kFactorRatio = 0.1;

struct CharacteristicRoots {
    double plus = 0.0;
    double minus = 0.0;
    double discriminant = 0.0;
};

/// Roots of a3 t^2 - a2 t + a1 = 0 (so that e^{-t x} solves the homogeneous
/// ODE), computed without cancellation. Requires a positive discriminant.
inline CharacteristicRoots characteristic_roots(double a3, double a2, double a1, double discriminant) {
    const double s = std::sqrt(discriminant);
    CharacteristicRoots out;
    out.discriminant = discriminant;
    if (a2 >= 0.0) {
        const double t = 0.5 * (a2 + s);
        out.plus = t / a3;
        out.minus = a1 / t;
    } else {
        const double t = 0.5 * (a2 - s);
        out.minus = t / a3;
        out.plus = a1 / t;
    }
    return out;
}

inline CharacteristicRoots characteristic_roots(double a3, double a2, double a1) {
    return characteristic_roots(a3, a2, a1, a2 * a2 - 4.0 * a3 * a1);
}

/// Builds the interval data for a constant distortion pair on [left, right].
inline IntervalSystem make_interval(const ModelParams& p, int index, double kappa, double lambda, double left,
                                    double right) {
    IntervalSystem s;
    s.index = index;
    s.kappa = kappa;
    s.lambda = lambda;
    s.left = left;
    s.right = right;

    const double mu = p.mu;
    const double drift = p.b + p.sigma * kappa + p.r / mu;
    s.a3 = 0.5 * p.sigma * p.sigma;
    s.a2 = drift + 0.5 * mu * p.sigma * p.sigma;
    s.a1 = mu * drift - lambda;

    const double shifted = drift - 0.5 * mu * p.sigma * p.sigma;
    const auto roots =
        characteristic_roots(s.a3, s.a2, s.a1, shifted * shifted + 2.0 * p.sigma * p.sigma * lambda);
    s.discriminant = roots.discriminant;
    s.rho_plus = roots.plus;
    s.rho_minus = roots.minus;
    if (s.rho_plus - s.rho_minus < kNearDoubleRootTol) {
        s.warnings.push_back("interval " + std::to_string(index) + ": near double characteristic root");
    }

    const double a1 = s.a1, a2 = s.a2, a3 = s.a3;
    // Growing modes are anchored where they are smallest, so every in-interval
    // basis value lies in (0, 1].
    s.anchor_plus = s.rho_plus >= 0.0 ? left : right;
    s.anchor_minus = s.rho_minus >= 0.0 ? left : right;

    s.small_sign = a2 >= 0.0 ? -1 : +1;
    const double rs = s.rho(s.small_sign);
    const double rb = s.rho(-s.small_sign);
    if (std::abs(rs) <= kFactorRatio * std::abs(rb) && std::abs(rs) <= 0.5 * mu && mu / rb <= 0.8) {
        s.branch = PolyBranch::Factored;
        if (std::abs(a1) < kDegenerateA1Tol * std::max(1.0, std::abs(a2))) {
            s.warnings.push_back("interval " + std::to_string(index) + ": degenerate a1, factored particular solution");
        }
        // L = a3 (D + rho_big)(D + rho_small); V solves (D + rho_big) V = rhs / a3.
        const double c = s.anchor(s.small_sign);
        s.center = c;
        const double g2 = -mu / a3;
        const double g1 = -2.0 * (mu * c + 1.0) / a3;
        const double g0 = -(mu * c * c + 2.0 * c) / a3;
        const double v2 = g2 / rb;
        const double v1 = (g1 - 2.0 * v2) / rb;
        const double v0 = (g0 - v1) / rb;
        s.v = {v0, v1, v2};
        s.v_gamma = mu / (a3 * rb);
    } else {
        s.branch = PolyBranch::Quadratic;
        const double c2 = -mu / a1;
        const double c1 = 2.0 * (mu * a2 - a1) / (a1 * a1);
        const double d0 = (2.0 * a1 * a2 + 2.0 * mu * a1 * a3 - 2.0 * mu * a2 * a2) / (a1 * a1 * a1);
        s.q = {d0, c1, c2, 0.0};
        s.gamma_const = mu / a1;
    }
    return s;
}
/// Interval i of the robust problem: 1 = [x_low, x_kappa], 2 = [x_kappa, x_lambda]
/// (or [x_kappa, x_high] in Regime 2), 3 = [x_lambda, x_high] (Regime 1 only).
inline IntervalSystem build_interval(const ModelParams& p, const Thresholds& th, int i, Regime regime) {
    const double high = p.r * (1.0 + p.eps);
    const double low = p.r * (1.0 - p.eps);
    switch (i) {
    case 1:
        return make_interval(p, 1, -p.delta, high, th.x_low, th.x_kappa);
    case 2:
        return make_interval(p, 2, p.delta, high, th.x_kappa,
                             regime == Regime::Regime1 ? th.x_lambda : th.x_high);
    case 3:
        if (regime != Regime::Regime1) throw DomainError("interval 3 does not exist in Regime 2");
        return make_interval(p, 3, p.delta, low, th.x_lambda, th.x_high);
    default:
        throw DomainError("interval index must be 1, 2 or 3");
    }
}

/// e^{-rho (x - anchor)} for the mode of the given sign.
inline double basis(const IntervalSystem& s, int sign, double x) {
    return std::exp(-s.rho(sign) * (x - s.anchor(sign)));
}

inline double poly_value(const std::array<double, 4>& c, double x) {
    return c[0] + x * (c[1] + x * (c[2] + x * c[3]));
}

inline double poly_slope(const std::array<double, 4>& c, double x) {
    return c[1] + x * (2.0 * c[2] + 3.0 * x * c[3]);
}

inline double poly_curvature(const std::array<double, 4>& c, double x) { return 2.0 * c[2] + 6.0 * c[3] * x; }

namespace detail {

/// P, P', P'' of the factored particular solution with right-hand side V(y) = w0 + w1 y + w2 y^2.
inline std::array<double, 3> factored_particular(const IntervalSystem& s, double w0, double w1, double w2, double x) {
    const double r = s.rho(s.small_sign);
    const double y = x - s.center;
    const double z = -r * y;
    const double p = y * (w0 * phi_stable(1, z) + y * (w1 * phi_stable(2, z) + 2.0 * w2 * y * phi_stable(3, z)));
    const double p1 = w0 + y * (w1 + y * w2) - r * p;
    const double p2 = w1 + 2.0 * w2 * y - r * p1;
    return {p, p1, p2};
}

} // namespace detail

/// gamma-free particular solution.
inline double particular(const IntervalSystem& s, double x) {
    if (s.branch == PolyBranch::Quadratic) return poly_value(s.q, x);
    return detail::factored_particular(s, s.v[0], s.v[1], s.v[2], x)[0];
}

inline double particular_slope(const IntervalSystem& s, double x) {
    if (s.branch == PolyBranch::Quadratic) return poly_slope(s.q, x);
    return detail::factored_particular(s, s.v[0], s.v[1], s.v[2], x)[1];
}

inline double particular_curvature(const IntervalSystem& s, double x) {
    if (s.branch == PolyBranch::Quadratic) return poly_curvature(s.q, x);
    return detail::factored_particular(s, s.v[0], s.v[1], s.v[2], x)[2];
}

/// Factor multiplying gamma in H at x, and its derivatives.
inline double gamma_weight(const IntervalSystem& s, double x) {
    if (s.branch == PolyBranch::Quadratic) return s.gamma_const;
    return detail::factored_particular(s, s.v_gamma, 0.0, 0.0, x)[0];
}

inline double gamma_weight_slope(const IntervalSystem& s, double x) {
    if (s.branch == PolyBranch::Quadratic) return 0.0;
    return detail::factored_particular(s, s.v_gamma, 0.0, 0.0, x)[1];
}

inline double gamma_weight_curvature(const IntervalSystem& s, double x) {
    if (s.branch == PolyBranch::Quadratic) return 0.0;
    return detail::factored_particular(s, s.v_gamma, 0.0, 0.0, x)[2];
}

inline double eval_H(const IntervalSystem& s, const AnchoredCoefficients& u, double gamma, double x) {
    return u.u_minus * basis(s, -1, x) + u.u_plus * basis(s, +1, x) + gamma * gamma_weight(s, x) + particular(s, x);
}

inline double eval_Hprime(const IntervalSystem& s, const AnchoredCoefficients& u, double x, double gamma = 0.0) {
    return -s.rho_minus * u.u_minus * basis(s, -1, x) - s.rho_plus * u.u_plus * basis(s, +1, x) +
           gamma * gamma_weight_slope(s, x) + particular_slope(s, x);
}

inline double eval_Hsecond(const IntervalSystem& s, const AnchoredCoefficients& u, double x, double gamma = 0.0) {
    return s.rho_minus * s.rho_minus * u.u_minus * basis(s, -1, x) +
           s.rho_plus * s.rho_plus * u.u_plus * basis(s, +1, x) + gamma * gamma_weight_curvature(s, x) +
           particular_curvature(s, x);
}

} // namespace robust_ergodic
