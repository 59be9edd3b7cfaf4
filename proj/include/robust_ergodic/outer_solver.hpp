#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "broyden.hpp"
#include "inner_solver.hpp"
#include "model.hpp"

namespace robust_ergodic {

/// (x_low, log(x_kappa - x_low), log(x_lambda - x_kappa), log(x_high - x_kappa))
using GapVector = std::array<double, 4>;

inline GapVector to_gaps(const Thresholds& th) {
    require_ordered(th);
    return {th.x_low, std::log(th.x_kappa - th.x_low), std::log(th.x_lambda - th.x_kappa),
            std::log(th.x_high - th.x_kappa)};
}

inline Thresholds from_gaps(const GapVector& z) {
    Thresholds th;
    th.x_low = z[0];
    th.x_kappa = z[0] + std::exp(z[1]);
    th.x_lambda = th.x_kappa + std::exp(z[2]);
    th.x_high = th.x_kappa + std::exp(z[3]);
    return th;
}

struct SolverOptions {
    double tol = 1e-10;
    int max_iter = 100;
    double fd_step = 1e-7;
    int max_halvings = 30;

    BroydenOptions broyden() const {
        BroydenOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        o.fd_step = fd_step;
        o.max_halvings = max_halvings;
        return o;
    }
};

struct SolveReport {
    InnerSolution solution;
    int iterations = 0;
    double final_residual_norm = INFINITY;
    bool converged = false;
    int regime_switches = 0;
    std::vector<std::string> warnings;
    std::string message;
};

/// Band of width (2 (cU + cD) spread)^{1/3}, shifted against positive drift.
inline Thresholds default_initializer(const ModelParams& p) {
    const double width = bound_minimizing_width(p);
    Thresholds th;
    th.x_low = -0.5 * width - std::max(0.0, p.b / 4.0);
    th.x_kappa = th.x_low + 0.3 * width;
    th.x_lambda = th.x_low + 0.6 * width;
    th.x_high = th.x_low + width;
    if (!is_ordered(th)) throw InitializationError("default initializer produced unordered thresholds");
    return th;
}

namespace detail {

inline Eigen::VectorXd to_eigen(const GapVector& z) { return Eigen::Map<const Eigen::Vector4d>(z.data()); }

inline GapVector from_eigen(const Eigen::VectorXd& v) { return {v[0], v[1], v[2], v[3]}; }

} // namespace detail

namespace detail {

/// Regime-1 coordinates (x_low, log(x_kappa - x_low), log(x_lambda - x_kappa), log(x_high - x_lambda)).
/// Used only as a fallback: near x_lambda = x_high the residual is steep in
/// the short interval-3 width, which these coordinates resolve on a log scale.
inline GapVector to_regime1_gaps(const Thresholds& th) {
    return {th.x_low, std::log(th.x_kappa - th.x_low), std::log(th.x_lambda - th.x_kappa),
            std::log(th.x_high - th.x_lambda)};
}

inline Thresholds from_regime1_gaps(const GapVector& z) {
    Thresholds th;
    th.x_low = z[0];
    th.x_kappa = z[0] + std::exp(z[1]);
    th.x_lambda = th.x_kappa + std::exp(z[2]);
    th.x_high = th.x_lambda + std::exp(z[3]);
    return th;
}

template <class ToZ, class FromZ>
SolveReport solve_robust_once(const ModelParams& p, const Thresholds& start, const SolverOptions& opt, ToZ to_z,
                              FromZ from_z) {
    auto fn = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        const auto r = inner_solve(p, from_z(from_eigen(z))).residuals;
        return Eigen::Map<const Eigen::Vector4d>(r.data());
    };

    SolveReport report;
    Regime last = classify(start);
    auto on_accept = [&](const Eigen::VectorXd& z) {
        const Regime now = classify(from_z(from_eigen(z)));
        if (now != last) ++report.regime_switches;
        last = now;
    };
    const auto res = broyden_root(fn, to_eigen(to_z(start)), opt.broyden(), on_accept);

    report.iterations = res.iterations;
    report.final_residual_norm = res.norm;
    report.converged = res.converged;
    report.message = res.message;
    try {
        report.solution = inner_solve(p, from_z(from_eigen(res.z)));
        report.warnings = report.solution.warnings;
    } catch (const std::exception& e) {
        report.converged = false;
        report.message = e.what();
    }
    return report;
}

} // namespace detail

/// Robust free-boundary solve: Broyden iteration on the four smooth-fit
/// residuals over the log-gap coordinates.
///
/// The fourth residual changes definition across x_lambda = x_high, and the
/// Regime-1 residual is steep when interval 3 is short, so an iterate can stall
/// on that boundary. A failed run is restarted from its best iterate, first in
/// Regime-1 coordinates with x_lambda moved to the middle of [x_kappa, x_high],
/// then in the usual coordinates on the Regime-2 side. The report carries the
/// iteration count summed over all runs.
inline SolveReport solve_robust(const ModelParams& p, const std::optional<Thresholds>& init = std::nullopt,
                                const SolverOptions& opt = {}) {
    validate(p);
    const Thresholds start = init ? *init : default_initializer(p);
    if (!is_ordered(start)) throw InitializationError("initial thresholds are not ordered");

    SolveReport report = detail::solve_robust_once(p, start, opt, to_gaps, from_gaps);
    if (report.converged) return report;

    const Thresholds stalled = report.solution.th;
    if (!is_ordered(stalled)) return report;
    int iterations = report.iterations;
    int switches = report.regime_switches;
    auto keep = [&](SolveReport retry) {
        iterations += retry.iterations;
        switches += retry.regime_switches;
        if (retry.converged || retry.final_residual_norm < report.final_residual_norm) report = std::move(retry);
    };

    Thresholds inside = stalled;
    inside.x_lambda = stalled.x_kappa + 0.5 * (stalled.x_high - stalled.x_kappa);
    keep(detail::solve_robust_once(p, inside, opt, detail::to_regime1_gaps, detail::from_regime1_gaps));
    if (!report.converged) {
        Thresholds outside = stalled;
        outside.x_lambda = stalled.x_kappa + 1.5 * (stalled.x_high - stalled.x_kappa);
        keep(detail::solve_robust_once(p, outside, opt, to_gaps, from_gaps));
    }
    report.iterations = iterations;
    report.regime_switches = switches;
    return report;
}

inline const SolveReport& require_converged(const SolveReport& r) {
    if (!r.converged) throw NoConvergence("solver did not converge: " + r.message);
    return r;
}

// --- benchmark (non-robust) problem -----------------------------------------------

/// Single-interval solution of the benchmark model (no drift or intensity distortion).
struct NonRobustSolution {
    ModelParams params; ///< the caller's parameters; delta and eps are ignored
    double x_low = 0.0;
    double x_high = 0.0;
    double gamma = 0.0;
    IntervalSystem system;
    AnchoredCoefficients coeffs;
    std::array<double, 2> residuals{};
    double determinant = 0.0;
    std::vector<std::string> warnings;

    double H(double x) const {
        if (x < x_low) return -params.cU;
        if (x > x_high) return params.cD;
        return eval_H(system, coeffs, gamma, x);
    }
    double Hprime(double x) const {
        if (x < x_low || x > x_high) return 0.0;
        return eval_Hprime(system, coeffs, x, gamma);
    }
};

struct NonRobustReport {
    NonRobustSolution solution;
    int iterations = 0;
    double final_residual_norm = INFINITY;
    bool converged = false;
    std::string message;
};

inline ModelParams benchmark_params(ModelParams p) {
    p.delta = 0.0;
    p.eps = 0.0;
    return p;
}

/// Value system of the benchmark problem on the band [x_low, x_high].
inline NonRobustSolution nonrobust_inner(const ModelParams& p, double x_low, double x_high) {
    if (!(x_low < x_high)) throw DomainError("band requires x_low < x_high");
    const ModelParams q = benchmark_params(p);
    NonRobustSolution sol;
    sol.params = p;
    sol.x_low = x_low;
    sol.x_high = x_high;
    sol.system = make_interval(q, 1, 0.0, q.r, x_low, x_high);
    const auto s = solve_gamma_system(q, sol.system, x_low, x_high, q.cD);
    sol.coeffs = s.u;
    sol.gamma = s.gamma;
    sol.determinant = s.linear.determinant;
    sol.residuals = {eval_Hprime(sol.system, sol.coeffs, x_low, sol.gamma),
                     eval_Hprime(sol.system, sol.coeffs, x_high, sol.gamma)};
    sol.warnings = sol.system.warnings;
    return sol;
}

/// Benchmark-model optimal band: smooth fit at both barriers over (x_low, log width).
inline NonRobustReport solve_nonrobust(const ModelParams& p, const std::optional<std::array<double, 2>>& init = std::nullopt,
                                       const SolverOptions& opt = {}) {
    validate(p);
    std::array<double, 2> band;
    if (init) {
        band = *init;
    } else {
        const auto th = default_initializer(benchmark_params(p));
        band = {th.x_low, th.x_high};
    }
    if (!(band[0] < band[1])) throw InitializationError("initial band is not ordered");

    auto fn = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        const auto sol = nonrobust_inner(p, z[0], z[0] + std::exp(z[1]));
        return Eigen::Vector2d(sol.residuals[0], sol.residuals[1]);
    };
    const auto res = broyden_root(fn, Eigen::Vector2d(band[0], std::log(band[1] - band[0])), opt.broyden());

    NonRobustReport report;
    report.iterations = res.iterations;
    report.final_residual_norm = res.norm;
    report.converged = res.converged;
    report.message = res.message;
    try {
        report.solution = nonrobust_inner(p, res.z[0], res.z[0] + std::exp(res.z[1]));
    } catch (const std::exception& e) {
        report.converged = false;
        report.message = e.what();
    }
    return report;
}

// --- worst-case value of a fixed band ---------------------------------------------

/// Worst-case ergodic cost of reflecting at a fixed band: the barriers are held,
/// (x_kappa, x_lambda) are solved from derivative matching at the two switches.
/// x_kappa is kept inside the band by a logistic map.
inline SolveReport worstcase_value_of_policy(const ModelParams& p, double x_low, double x_high,
                                             const std::optional<std::array<double, 2>>& init_switches = std::nullopt,
                                             const SolverOptions& opt = {}) {
    validate(p);
    if (!(x_low < x_high)) throw DomainError("band requires x_low < x_high");
    const double width = x_high - x_low;

    double xk0 = x_low + 0.3 * width;
    double xl0 = x_low + 0.6 * width;
    if (init_switches) {
        const auto [k, l] = *init_switches;
        if (x_low < k && k < x_high) xk0 = k;
        xl0 = l > xk0 ? l : xk0 + 0.3 * width;
    }

    auto to_th = [&](const Eigen::VectorXd& z) {
        Thresholds th;
        th.x_low = x_low;
        th.x_high = x_high;
        th.x_kappa = x_low + width / (1.0 + std::exp(-z[0]));
        th.x_lambda = th.x_kappa + std::exp(z[1]);
        return th;
    };
    auto fn = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        const auto th = to_th(z);
        if (!is_ordered(th)) throw DomainError("switch point left the band");
        const auto r = inner_solve(p, th).residuals;
        return Eigen::Vector2d(r[2], r[3]);
    };
    const double frac = (xk0 - x_low) / width;
    const Eigen::Vector2d z0(std::log(frac / (1.0 - frac)), std::log(xl0 - xk0));

    SolveReport report;
    Regime last = xl0 < x_high ? Regime::Regime1 : Regime::Regime2;
    auto on_accept = [&](const Eigen::VectorXd& z) {
        const Regime now = classify(to_th(z));
        if (now != last) ++report.regime_switches;
        last = now;
    };
    const auto res = broyden_root(fn, z0, opt.broyden(), on_accept);

    report.iterations = res.iterations;
    report.final_residual_norm = res.norm;
    report.converged = res.converged;
    report.message = res.message;
    try {
        report.solution = inner_solve(p, to_th(res.z));
        report.warnings = report.solution.warnings;
    } catch (const std::exception& e) {
        report.converged = false;
        report.message = e.what();
    }
    return report;
}

} // namespace robust_ergodic
