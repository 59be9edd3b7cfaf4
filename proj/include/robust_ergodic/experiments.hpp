#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "model.hpp"
#include "outer_solver.hpp"

namespace robust_ergodic {

struct SweepSpec {
    ModelParams base;
    std::string param_name; ///< b, delta, r, eps, sigma, inv_mu, cU or cD
    std::vector<double> grid;
};

struct SweepRow {
    std::string param;
    double value = 0.0;
    Thresholds th;
    double gamma = NAN;
    Regime regime = Regime::Regime1;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// Returns `base` with one named parameter replaced; inv_mu sets mu = 1 / value.
inline ModelParams with_param(ModelParams base, const std::string& name, double value) {
    if (name == "b") base.b = value;
    else if (name == "delta") base.delta = value;
    else if (name == "r") base.r = value;
    else if (name == "eps") base.eps = value;
    else if (name == "sigma") base.sigma = value;
    else if (name == "inv_mu") {
        if (!(value > 0.0)) throw DomainError("inv_mu must be > 0");
        base.mu = 1.0 / value;
    } else if (name == "mu") base.mu = value;
    else if (name == "cU") base.cU = value;
    else if (name == "cD") base.cD = value;
    else throw DomainError("unknown sweep parameter '" + name + "'");
    return base;
}

/// `points` evenly spaced values from `from` to `to` inclusive.
inline std::vector<double> linspace(double from, double to, int points) {
    if (points < 1) throw DomainError("points must be >= 1");
    std::vector<double> out(points);
    for (int i = 0; i < points; ++i) {
        out[i] = points == 1 ? from : from + (to - from) * static_cast<double>(i) / (points - 1);
    }
    return out;
}

inline void validate_sweep(const SweepSpec& spec) {
    if (spec.grid.empty()) throw DomainError("sweep grid is empty");
    const bool up = spec.grid.size() < 2 || spec.grid[1] > spec.grid[0];
    for (std::size_t i = 1; i < spec.grid.size(); ++i) {
        if (up ? !(spec.grid[i] > spec.grid[i - 1]) : !(spec.grid[i] < spec.grid[i - 1])) {
            throw DomainError("sweep grid must be strictly monotone");
        }
    }
    for (double v : spec.grid) validate(with_param(spec.base, spec.param_name, v));
}

/// Solves along the grid, warm-starting each point from the last converged
/// row and falling back to a cold start. Failed points are kept as rows.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SolverOptions& opt = {}) {
    validate_sweep(spec);
    std::vector<SweepRow> rows;
    std::optional<Thresholds> warm;
    for (double v : spec.grid) {
        const ModelParams p = with_param(spec.base, spec.param_name, v);
        SweepRow row;
        row.param = spec.param_name;
        row.value = v;
        SolveReport rep = solve_robust(p, warm, opt);
        if (!rep.converged && warm) {
            SolveReport cold = solve_robust(p, std::nullopt, opt);
            if (cold.converged || cold.final_residual_norm < rep.final_residual_norm) rep = std::move(cold);
        }
        row.converged = rep.converged;
        row.th = rep.solution.th;
        row.gamma = rep.solution.gamma;
        row.regime = rep.solution.regime;
        row.warnings = rep.warnings;
        if (!rep.converged) row.warnings.push_back("not converged: " + rep.message);
        if (rep.converged) warm = rep.solution.th;
        rows.push_back(std::move(row));
    }
    return rows;
}

// --- relative misspecification cost ------------------------------------------------

inline constexpr double kEpsBoundary = 1.0 - 1e-6;

struct RmcCell {
    double b = 0.0;
    double delta = 0.0;
    double eps = 0.0; ///< as requested; eps = 1 is evaluated at kEpsBoundary
    double gamma_robust = NAN;
    double gamma_nr_wc = NAN;
    double rmc_pct = NAN;
    /// ok, eps_boundary_approx, or unavailable: <reason>
    std::string status;
    Thresholds robust_th; ///< robust thresholds, reused as the next warm start
    bool robust_converged = false;
};

/// RMC = (gamma^{NR,WC} - gamma^R) / gamma^R * 100, where gamma^{NR,WC} is the
/// worst-case cost of the benchmark-optimal band.
inline RmcCell compute_rmc(ModelParams p, const std::optional<Thresholds>& warm = std::nullopt,
                           const SolverOptions& opt = {}) {
    RmcCell cell;
    cell.b = p.b;
    cell.delta = p.delta;
    cell.eps = p.eps;
    const bool boundary = p.eps == 1.0;
    if (boundary) p.eps = kEpsBoundary;
    validate(p);

    SolveReport robust = solve_robust(p, warm, opt);
    if (!robust.converged && warm) {
        SolveReport cold = solve_robust(p, std::nullopt, opt);
        if (cold.converged || cold.final_residual_norm < robust.final_residual_norm) robust = std::move(cold);
    }
    cell.robust_converged = robust.converged;
    cell.robust_th = robust.solution.th;
    if (!robust.converged) {
        cell.status = "unavailable: robust solve did not converge";
        return cell;
    }
    cell.gamma_robust = robust.solution.gamma;

    if (p.delta == 0.0 && p.eps == 0.0) {
        // Both problems coincide; reuse the same solve so the RMC is exactly 0.
        cell.gamma_nr_wc = cell.gamma_robust;
        cell.rmc_pct = 0.0;
        cell.status = "ok";
        return cell;
    }

    const NonRobustReport nr = solve_nonrobust(p, std::nullopt, opt);
    if (!nr.converged) {
        cell.status = "unavailable: benchmark solve did not converge";
        return cell;
    }
    const auto& th = robust.solution.th;
    const SolveReport wc = worstcase_value_of_policy(p, nr.solution.x_low, nr.solution.x_high,
                                                     std::array<double, 2>{th.x_kappa, th.x_lambda}, opt);
    if (!wc.converged) {
        cell.status = "unavailable: worst-case evaluation did not converge";
        return cell;
    }
    cell.gamma_nr_wc = wc.solution.gamma;
    cell.rmc_pct = (cell.gamma_nr_wc - cell.gamma_robust) / cell.gamma_robust * 100.0;
    cell.status = boundary ? "eps_boundary_approx" : "ok";
    return cell;
}

/// Cartesian grid, one row per delta; each row warm-starts along eps and rows
/// run on up to `jobs` threads. Output is in (delta, eps) index order.
inline std::vector<RmcCell> rmc_table(const ModelParams& base, const std::vector<double>& delta_grid,
                                      const std::vector<double>& eps_grid, int jobs = 1,
                                      const SolverOptions& opt = {}) {
    const std::size_t nd = delta_grid.size();
    const std::size_t ne = eps_grid.size();
    std::vector<RmcCell> cells(nd * ne);

    auto run_row = [&](std::size_t i) {
        std::optional<Thresholds> warm;
        for (std::size_t j = 0; j < ne; ++j) {
            ModelParams p = base;
            p.delta = delta_grid[i];
            p.eps = eps_grid[j];
            RmcCell cell;
            try {
                cell = compute_rmc(p, warm, opt);
            } catch (const std::exception& e) {
                cell.b = p.b;
                cell.delta = p.delta;
                cell.eps = p.eps;
                cell.status = std::string("unavailable: ") + e.what();
            }
            if (cell.robust_converged) warm = cell.robust_th;
            cells[i * ne + j] = std::move(cell);
        }
    };

    const int workers = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(nd, 1)));
    if (workers == 1) {
        for (std::size_t i = 0; i < nd; ++i) run_row(i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < nd; i += workers) run_row(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    return cells;
}

} // namespace robust_ergodic
