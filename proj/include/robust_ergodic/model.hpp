#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace robust_ergodic {

/// One problem instance: constant drift, ambiguity radii, diffusion,
/// negative exponential jumps with rate mu, proportional push costs.
struct ModelParams {
    double b = 0.0;     ///< benchmark drift
    double delta = 0.0; ///< drift-ambiguity radius, per unit volatility
    double r = 1.0;     ///< benchmark jump intensity
    double eps = 0.0;   ///< relative intensity ambiguity, in [0, 1)
    double sigma = 1.0; ///< diffusion volatility
    double mu = 1.0;    ///< jump-size rate; jumps are -Exp(mu)
    double cU = 1.0;    ///< cost per unit of upward push
    double cD = 1.0;    ///< cost per unit of downward push

    double mean_jump() const { return -1.0 / mu; }
    double mean_abs_jump() const { return 1.0 / mu; }
    double second_moment_jump() const { return 2.0 / (mu * mu); }

    bool operator==(const ModelParams&) const = default;
};

/// Reflecting barriers and ambiguity switch points, ordered as
/// x_low < x_kappa < x_high and x_kappa < x_lambda.
struct Thresholds {
    double x_low = 0.0;
    double x_kappa = 0.0;
    double x_lambda = 0.0;
    double x_high = 0.0;

    bool operator==(const Thresholds&) const = default;
};

enum class Regime { Regime1, Regime2 };

inline const char* to_string(Regime regime) {
    return regime == Regime::Regime1 ? "Regime1" : "Regime2";
}

inline Regime regime_from_string(const std::string& s) {
    if (s == "Regime1") return Regime::Regime1;
    if (s == "Regime2") return Regime::Regime2;
    throw DomainError("unknown regime tag '" + s + "'");
}

inline bool is_ordered(const Thresholds& th) {
    return th.x_low < th.x_kappa && th.x_kappa < th.x_high && th.x_kappa < th.x_lambda &&
           std::isfinite(th.x_low) && std::isfinite(th.x_lambda) && std::isfinite(th.x_high);
}

inline Regime classify(const Thresholds& th) {
    return th.x_lambda < th.x_high ? Regime::Regime1 : Regime::Regime2;
}

inline void require_ordered(const Thresholds& th) {
    if (!is_ordered(th)) throw DomainError("thresholds must satisfy x_low < x_kappa < x_high and x_kappa < x_lambda");
}

namespace detail {

inline void require(bool ok, const char* message) {
    if (!ok) throw DomainError(message);
}

} // namespace detail

/// Throws DomainError naming the first violated bound.
inline void validate(const ModelParams& p) {
    using detail::require;
    require(std::isfinite(p.b), "b must be finite");
    require(p.sigma > 0.0 && std::isfinite(p.sigma), "sigma must be > 0");
    require(p.r > 0.0 && std::isfinite(p.r), "r must be > 0");
    require(p.mu > 0.0 && std::isfinite(p.mu), "mu must be > 0");
    require(p.cU > 0.0 && std::isfinite(p.cU), "cU must be > 0");
    require(p.cD > 0.0 && std::isfinite(p.cD), "cD must be > 0");
    require(p.delta >= 0.0 && std::isfinite(p.delta), "delta must be >= 0");
    require(p.eps >= 0.0, "eps must be >= 0");
    require(p.eps < 1.0, "eps must be < 1");
}

// The bound formulas below are pure arithmetic and also accept the r = 0
// and eps = 1 limits.

/// Long-run intervention-rate bound K(x1, x2) for the band [x1, x2].
inline double intervention_rate_bound(const ModelParams& p, double x1, double x2) {
    if (!(x1 < x2)) throw DomainError("intervention_rate_bound requires x1 < x2");
    const double level = std::abs(p.b) + p.sigma * p.delta + p.eps * p.r * p.mean_abs_jump();
    const double spread = p.sigma * p.sigma + p.r * (1.0 + p.eps) * p.second_moment_jump();
    return level + spread / (x2 - x1);
}

/// Upper bound on the ergodic value achieved by reflecting at x1 and x2.
inline double gamma_upper_bound(const ModelParams& p, double x1, double x2) {
    const double k = intervention_rate_bound(p, x1, x2);
    return std::max(x1 * x1, x2 * x2) + (p.cU + p.cD) * k;
}

/// Width of the band minimising gamma_upper_bound; the optimum is centred at 0.
inline double bound_minimizing_width(const ModelParams& p) {
    const double spread = p.sigma * p.sigma + p.r * (1.0 + p.eps) * p.second_moment_jump();
    return std::cbrt(2.0 * (p.cU + p.cD) * spread);
}

inline double min_gamma_upper_bound(const ModelParams& p) {
    const double alpha = p.cU + p.cD;
    const double level = std::abs(p.b) + p.sigma * p.delta + p.eps * p.r * p.mean_abs_jump();
    const double spread = p.sigma * p.sigma + p.r * (1.0 + p.eps) * p.second_moment_jump();
    return alpha * level + 3.0 * std::pow(alpha * spread / 4.0, 2.0 / 3.0);
}

struct Regime1Condition {
    bool holds = false;        ///< min bound < cD (delta sigma + b + r/mu)
    bool simple_holds = false; ///< the coarser parameter test, which implies `holds`
    double k1 = 0.0;
    double k2 = 0.0;
    double k3 = 0.0;
};

/// Parameter-only sufficient conditions for x_lambda < x_high.
inline Regime1Condition regime1_sufficient(const ModelParams& p) {
    Regime1Condition out;
    out.holds = min_gamma_upper_bound(p) < p.cD * (p.delta * p.sigma + p.b + p.r / p.mu);

    const double alpha = p.cU + p.cD;
    out.k1 = p.cD - alpha * p.eps;
    out.k2 = p.cU * (p.b + p.delta * p.sigma) + 3.0 * std::pow(alpha * p.sigma * p.sigma / 4.0, 2.0 / 3.0);
    out.k3 = 3.0 * std::pow(alpha / 4.0, 2.0 / 3.0) * std::pow(2.0 * (1.0 + p.eps) / p.mu, 2.0 / 3.0);
    if (p.b >= 0.0 && p.eps < p.cD / alpha && out.k1 > 0.0) {
        const double y = std::cbrt(p.r / p.mu);
        out.simple_holds = y > std::max(2.0 * out.k3 / out.k1, std::cbrt(2.0 * out.k2 / out.k1));
    }
    return out;
}

/// Worst-case drift distortion: +delta on [x_kappa, inf), -delta below.
inline double worst_case_drift(double x, const Thresholds& th, const ModelParams& p) {
    return x >= th.x_kappa ? p.delta : -p.delta;
}

/// Worst-case jump intensity: high on (-inf, x_lambda], low above.
inline double worst_case_intensity(double x, const Thresholds& th, const ModelParams& p) {
    return x <= th.x_lambda ? p.r * (1.0 + p.eps) : p.r * (1.0 - p.eps);
}

/// Ergodic value implied by the lower barrier once smooth fit holds there.
inline double gamma_star(const ModelParams& p, double x_low) {
    return p.cU * (p.delta * p.sigma - p.b + p.eps * p.r / p.mu) + x_low * x_low;
}

} // namespace robust_ergodic
