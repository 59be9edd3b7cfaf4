#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "linear2.hpp"
#include "model.hpp"
#include "ode_core.hpp"
#include "stable_math.hpp"

namespace robust_ergodic {

inline constexpr double kResonanceTol = 1e-8;

/// Piecewise gradient H and the data that produced it, for one threshold quadruple.
struct InnerSolution {
    ModelParams params;
    Thresholds th;
    Regime regime = Regime::Regime1;
    double gamma = 0.0;
    /// systems[2] and coeffs[2] are unused (zero) in Regime 2, where H = cD on [x_high, inf).
    std::array<IntervalSystem, 3> systems;
    std::array<AnchoredCoefficients, 3> coeffs{};
    std::array<double, 4> residuals{};
    /// Determinants of the three value systems (rows in the order documented on
    /// each solve_*). determinants[2] is NaN in Regime 2.
    std::array<double, 3> determinants{};
    std::array<double, 3> conditions{};
    std::vector<std::string> warnings;

    int interval_count() const { return regime == Regime::Regime1 ? 3 : 2; }
    /// Right end of interval i (0-based).
    double interval_right(int i) const {
        if (i == 0) return th.x_kappa;
        if (i == 1) return regime == Regime::Regime1 ? th.x_lambda : th.x_high;
        return th.x_high;
    }
};

// --- closed-form pieces of (I H)(x) = int_{-inf}^x H(s) mu e^{mu (s - x)} ds -----------

namespace detail {

/// int_a^b e^{-rho (s - anchor)} mu e^{mu (s - x)} ds for a <= b <= x, written so that
/// no exponential has a positive argument inside the interval.
inline double exp_piece_integral(const IntervalSystem& s, int sign, double a, double b, double x, double mu) {
    const double d = b - a;
    if (!(d > 0.0)) return 0.0;
    const double k = mu - s.rho(sign);
    if (k >= 0.0) {
        return mu * basis(s, sign, b) * std::exp(mu * (b - x)) * d * exprel_stable(-k * d);
    }
    return mu * basis(s, sign, a) * std::exp(mu * (a - x)) * d * exprel_stable(k * d);
}

/// int_a^b P(s) mu e^{mu (s - x)} ds for a cubic P, by repeated integration by parts.
inline double poly_piece_integral(const std::array<double, 4>& c, double a, double b, double x, double mu) {
    if (!(b > a)) return 0.0;
    auto antiderivative = [&](double s) {
        const double p0 = poly_value(c, s);
        const double p1 = poly_slope(c, s);
        const double p2 = poly_curvature(c, s);
        const double p3 = 6.0 * c[3];
        return std::exp(mu * (s - x)) * (p0 - p1 / mu + p2 / (mu * mu) - p3 / (mu * mu * mu));
    };
    return antiderivative(b) - antiderivative(a);
}

/// int_a^b of the particular part (gamma included) against mu e^{mu (s - x)}.
/// Factored branch: with P' = V - rho P, integration by parts gives
/// (1 - rho/mu) J = [P e^{mu (s - x)}]_a^b - (1/mu) int_a^b V mu e^{mu (s - x)} ds.
inline double particular_piece_integral(const IntervalSystem& s, double gamma, double a, double b, double x,
                                        double mu) {
    if (!(b > a)) return 0.0;
    if (s.branch == PolyBranch::Quadratic) {
        auto c = s.q;
        c[0] += gamma * s.gamma_const;
        return poly_piece_integral(c, a, b, x, mu);
    }
    const double r = s.rho(s.small_sign);
    auto value = [&](double t) { return particular(s, t) + gamma * gamma_weight(s, t); };
    const std::array<double, 4> v{s.v[0] + gamma * s.v_gamma, s.v[1], s.v[2], 0.0};
    const double iv = poly_piece_integral(v, a - s.center, b - s.center, x - s.center, mu);
    const double ends = value(b) * std::exp(mu * (b - x)) - value(a) * std::exp(mu * (a - x));
    return (ends - iv / mu) / (1.0 - r / mu);
}

inline double piece_integral(const IntervalSystem& s, const AnchoredCoefficients& u, double gamma, double a,
                             double b, double x, double mu) {
    return u.u_minus * exp_piece_integral(s, -1, a, b, x, mu) + u.u_plus * exp_piece_integral(s, +1, a, b, x, mu) +
           particular_piece_integral(s, gamma, a, b, x, mu);
}

inline double lower_tail_integral(const ModelParams& p, double x_low, double x) {
    return -p.cU * std::exp(p.mu * (std::min(x, x_low) - x));
}

inline double upper_tail_integral(const ModelParams& p, double x_high, double x) {
    if (x <= x_high) return 0.0;
    return -p.cD * expm1_stable(p.mu * (x_high - x));
}

inline void note_resonance(const IntervalSystem& s, double mu, std::vector<std::string>& warnings) {
    for (int sign : {-1, +1}) {
        if (std::abs(mu - s.rho(sign)) < kResonanceTol) {
            warnings.push_back("interval " + std::to_string(s.index) + ": near resonance mu = rho" +
                               (sign > 0 ? "+" : "-") + ", limit form used");
        }
    }
}

} // namespace detail

// --- the value systems ---------------------------------------------------------------

struct System1Result {
    AnchoredCoefficients u;
    double gamma = 0.0;
    /// gamma = gamma0 + w_minus u_minus + w_plus u_plus
    double gamma0 = 0.0;
    double w_minus = 0.0;
    double w_plus = 0.0;
    Linear2Result linear;
};

struct LinearStep {
    AnchoredCoefficients u;
    Linear2Result linear;
};

/// Rows: H(x_low) = -cU and H(x_right) = target on one interval, with
/// gamma = sigma^2/2 H'(x_low) + gamma_star substituted so that gamma is an
/// affine function of the coefficients.
inline System1Result solve_gamma_system(const ModelParams& p, const IntervalSystem& s1, double x_low, double x_right,
                                        double target) {
    const double half_var = 0.5 * p.sigma * p.sigma;
    const double scale = 1.0 - half_var * gamma_weight_slope(s1, x_low);

    System1Result out;
    out.gamma0 = (half_var * particular_slope(s1, x_low) + gamma_star(p, x_low)) / scale;
    out.w_minus = -half_var * s1.rho_minus * basis(s1, -1, x_low) / scale;
    out.w_plus = -half_var * s1.rho_plus * basis(s1, +1, x_low) / scale;

    auto row = [&](double x, double t, double& m_minus, double& m_plus, double& beta) {
        const double g = gamma_weight(s1, x);
        m_minus = basis(s1, -1, x) + g * out.w_minus;
        m_plus = basis(s1, +1, x) + g * out.w_plus;
        beta = t - particular(s1, x) - g * out.gamma0;
    };
    double m11, m12, b1, m21, m22, b2;
    row(x_low, -p.cU, m11, m12, b1);
    row(x_right, target, m21, m22, b2);
    out.linear = solve_linear2(m11, m12, m21, m22, b1, b2);
    out.u = {out.linear.x[0], out.linear.x[1]};
    out.gamma = out.gamma0 + out.w_minus * out.u.u_minus + out.w_plus * out.u.u_plus;
    return out;
}

/// Rows: H1(x_low) = -cU, H1(x_kappa) = 0, gamma substituted as in solve_gamma_system.
inline System1Result solve_system1(const ModelParams& p, const IntervalSystem& s1, const Thresholds& th) {
    return solve_gamma_system(p, s1, th.x_low, th.x_kappa, 0.0);
}

inline System1Result solve_system1(const ModelParams& p, const Thresholds& th) {
    require_ordered(th);
    return solve_system1(p, build_interval(p, th, 1, classify(th)), th);
}

/// Rows: H2(x_kappa) = 0, (I H)(x_lambda) = 0. Regime 1 only.
inline LinearStep solve_system2(const ModelParams& p, const IntervalSystem& s1, const IntervalSystem& s2,
                                const Thresholds& th, const AnchoredCoefficients& u1, double gamma) {
    const double xk = th.x_kappa;
    const double xl = th.x_lambda;
    const double mu = p.mu;

    const double m11 = basis(s2, -1, xk);
    const double m12 = basis(s2, +1, xk);
    const double b1 = -particular(s2, xk) - gamma * gamma_weight(s2, xk);

    const double m21 = detail::exp_piece_integral(s2, -1, xk, xl, xl, mu);
    const double m22 = detail::exp_piece_integral(s2, +1, xk, xl, xl, mu);
    const double known = detail::lower_tail_integral(p, th.x_low, xl) +
                         detail::piece_integral(s1, u1, gamma, th.x_low, xk, xl, mu) +
                         detail::particular_piece_integral(s2, gamma, xk, xl, xl, mu);
    LinearStep out;
    out.linear = solve_linear2(m11, m12, m21, m22, b1, -known);
    out.u = {out.linear.x[0], out.linear.x[1]};
    return out;
}

inline LinearStep solve_system2(const ModelParams& p, const Thresholds& th, const AnchoredCoefficients& u1,
                                double gamma) {
    require_ordered(th);
    if (classify(th) != Regime::Regime1) throw DomainError("solve_system2 requires x_lambda < x_high");
    return solve_system2(p, build_interval(p, th, 1, Regime::Regime1), build_interval(p, th, 2, Regime::Regime1), th,
                         u1, gamma);
}

/// Rows: H3(x_high) = cD, H3(x_lambda) = H2(x_lambda). Regime 1 only.
inline LinearStep solve_system3(const ModelParams& p, const IntervalSystem& s2, const IntervalSystem& s3,
                                const Thresholds& th, const AnchoredCoefficients& u2, double gamma) {
    const double xh = th.x_high;
    const double xl = th.x_lambda;
    const double m11 = basis(s3, -1, xh);
    const double m12 = basis(s3, +1, xh);
    const double b1 = p.cD - particular(s3, xh) - gamma * gamma_weight(s3, xh);
    const double m21 = basis(s3, -1, xl);
    const double m22 = basis(s3, +1, xl);
    const double b2 = eval_H(s2, u2, gamma, xl) - particular(s3, xl) - gamma * gamma_weight(s3, xl);
    LinearStep out;
    out.linear = solve_linear2(m11, m12, m21, m22, b1, b2);
    out.u = {out.linear.x[0], out.linear.x[1]};
    return out;
}

inline LinearStep solve_system3(const ModelParams& p, const Thresholds& th, const AnchoredCoefficients& u2,
                                double gamma) {
    require_ordered(th);
    if (classify(th) != Regime::Regime1) throw DomainError("solve_system3 requires x_lambda < x_high");
    return solve_system3(p, build_interval(p, th, 2, Regime::Regime1), build_interval(p, th, 3, Regime::Regime1), th,
                         u2, gamma);
}

/// Regime 2, interval 2 = [x_kappa, x_high]. Rows: H2(x_kappa) = 0, H2(x_high) = cD.
inline LinearStep solve_regime2(const ModelParams& p, const IntervalSystem& s2, const Thresholds& th, double gamma) {
    const double xk = th.x_kappa;
    const double xh = th.x_high;
    const double m11 = basis(s2, -1, xk);
    const double m12 = basis(s2, +1, xk);
    const double b1 = -particular(s2, xk) - gamma * gamma_weight(s2, xk);
    const double m21 = basis(s2, -1, xh);
    const double m22 = basis(s2, +1, xh);
    const double b2 = p.cD - particular(s2, xh) - gamma * gamma_weight(s2, xh);
    LinearStep out;
    out.linear = solve_linear2(m11, m12, m21, m22, b1, b2);
    out.u = {out.linear.x[0], out.linear.x[1]};
    return out;
}

inline LinearStep solve_regime2(const ModelParams& p, const Thresholds& th, double gamma) {
    require_ordered(th);
    if (classify(th) != Regime::Regime2) throw DomainError("solve_regime2 requires x_lambda >= x_high");
    return solve_regime2(p, build_interval(p, th, 2, Regime::Regime2), th, gamma);
}

// --- evaluation of the assembled H on the whole line -----------------------------------

/// -1 below the band, 0..2 for the interval containing x, 3 above the band.
inline int locate(const InnerSolution& sol, double x) {
    if (x < sol.th.x_low) return -1;
    if (x > sol.th.x_high) return 3;
    if (x <= sol.th.x_kappa) return 0;
    if (sol.regime == Regime::Regime2 || x <= sol.th.x_lambda) return 1;
    return 2;
}

inline double H(const InnerSolution& sol, double x) {
    const int i = locate(sol, x);
    if (i < 0) return -sol.params.cU;
    if (i > 2) return sol.params.cD;
    return eval_H(sol.systems[i], sol.coeffs[i], sol.gamma, x);
}

/// H' with H' = 0 outside the band.
inline double Hprime(const InnerSolution& sol, double x) {
    const int i = locate(sol, x);
    if (i < 0 || i > 2) return 0.0;
    return eval_Hprime(sol.systems[i], sol.coeffs[i], x, sol.gamma);
}

inline double Hsecond(const InnerSolution& sol, double x) {
    const int i = locate(sol, x);
    if (i < 0 || i > 2) return 0.0;
    return eval_Hsecond(sol.systems[i], sol.coeffs[i], x, sol.gamma);
}

/// (I H)(x) = E[H(x + Y)] = int_{-inf}^0 H(x + y) mu e^{mu y} dy, in closed form.
inline double integral_IH(const InnerSolution& sol, double x) {
    const auto& p = sol.params;
    double total = detail::lower_tail_integral(p, sol.th.x_low, x);
    double left = sol.th.x_low;
    for (int i = 0; i < sol.interval_count() && left < x; ++i) {
        const double right = std::min(sol.interval_right(i), x);
        total += detail::piece_integral(sol.systems[i], sol.coeffs[i], sol.gamma, left, right, x, p.mu);
        left = sol.interval_right(i);
    }
    return total + detail::upper_tail_integral(p, sol.th.x_high, x);
}

/// Smooth-fit residuals of the current H (see InnerSolution::residuals).
inline std::array<double, 4> compute_residuals(const InnerSolution& sol) {
    const auto& s = sol.systems;
    const auto& u = sol.coeffs;
    const auto& th = sol.th;
    const double g = sol.gamma;
    std::array<double, 4> r{};
    r[0] = eval_Hprime(s[0], u[0], th.x_low, g);
    r[2] = eval_Hprime(s[0], u[0], th.x_kappa, g) - eval_Hprime(s[1], u[1], th.x_kappa, g);
    if (sol.regime == Regime::Regime1) {
        r[1] = eval_Hprime(s[2], u[2], th.x_high, g);
        r[3] = eval_Hprime(s[1], u[1], th.x_lambda, g) - eval_Hprime(s[2], u[2], th.x_lambda, g);
    } else {
        r[1] = eval_Hprime(s[1], u[1], th.x_high, g);
        r[3] = integral_IH(sol, th.x_lambda);
    }
    return r;
}

/// Solves all value systems at `th` and evaluates the residual vector. The
/// regime is inferred from x_lambda versus x_high.
inline InnerSolution inner_solve(const ModelParams& p, const Thresholds& th) {
    validate(p);
    require_ordered(th);

    InnerSolution sol;
    sol.params = p;
    sol.th = th;
    sol.regime = classify(th);

    sol.systems[0] = build_interval(p, th, 1, sol.regime);
    sol.systems[1] = build_interval(p, th, 2, sol.regime);
    const auto s1 = solve_system1(p, sol.systems[0], th);
    sol.coeffs[0] = s1.u;
    sol.gamma = s1.gamma;
    sol.determinants[0] = s1.linear.determinant;
    sol.conditions[0] = s1.linear.condition;

    if (sol.regime == Regime::Regime1) {
        sol.systems[2] = build_interval(p, th, 3, sol.regime);
        const auto s2 = solve_system2(p, sol.systems[0], sol.systems[1], th, s1.u, s1.gamma);
        sol.coeffs[1] = s2.u;
        sol.determinants[1] = s2.linear.determinant;
        sol.conditions[1] = s2.linear.condition;
        const auto s3 = solve_system3(p, sol.systems[1], sol.systems[2], th, s2.u, s1.gamma);
        sol.coeffs[2] = s3.u;
        sol.determinants[2] = s3.linear.determinant;
        sol.conditions[2] = s3.linear.condition;
    } else {
        sol.systems[2] = IntervalSystem{};
        sol.systems[2].index = 3;
        sol.systems[2].left = sol.systems[2].right = th.x_high;
        const auto s2 = solve_regime2(p, sol.systems[1], th, s1.gamma);
        sol.coeffs[1] = s2.u;
        sol.coeffs[2] = {};
        sol.determinants[1] = s2.linear.determinant;
        sol.conditions[1] = s2.linear.condition;
        sol.determinants[2] = std::numeric_limits<double>::quiet_NaN();
        sol.conditions[2] = std::numeric_limits<double>::quiet_NaN();
    }

    for (int i = 0; i < sol.interval_count(); ++i) {
        for (const auto& w : sol.systems[i].warnings) sol.warnings.push_back(w);
        detail::note_resonance(sol.systems[i], p.mu, sol.warnings);
    }
    sol.residuals = compute_residuals(sol);
    return sol;
}

/// Convenience wrapper matching the residual map used by the outer solver.
inline std::array<double, 4> residuals(const ModelParams& p, const Thresholds& th) {
    return inner_solve(p, th).residuals;
}

} // namespace robust_ergodic
