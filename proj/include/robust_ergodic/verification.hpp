#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "inner_solver.hpp"
#include "model.hpp"

namespace robust_ergodic {

inline constexpr double kHjbInteriorTol = 1e-6;
inline constexpr double kHjbExteriorTol = 1e-6;
inline constexpr double kSmoothFitTol = 1e-8;

struct VerificationReport {
    double hjb_interior_max_abs = 0.0;
    double hjb_exterior_min = INFINITY;
    double smooth_fit_max_abs = 0.0; ///< max |residual| recomputed from the stored thresholds
    bool smooth_fit_ok = false;
    bool gradient_band_ok = false; ///< -cU <= H <= cD on the band, H(x_low) = -cU, H(x_high) = cD
    bool monotone_ok = false;      ///< H strictly increasing across the band grid
    bool kappa_sign_ok = false;    ///< H < 0 left of x_kappa, H > 0 right of it
    bool lambda_sign_ok = false;   ///< I H changes sign once, - to +, within a grid cell of x_lambda
    int lambda_sign_changes = 0;
    bool bound_ok = false; ///< gamma <= min_gamma_upper_bound
    bool detsign_ok = false;
    bool barrier_signs_ok = false; ///< x_low <= 0 < x_high
    int grid_size = 0;

    bool passed() const {
        return hjb_interior_max_abs < kHjbInteriorTol && hjb_exterior_min > -kHjbExteriorTol && smooth_fit_ok &&
               gradient_band_ok && monotone_ok && kappa_sign_ok && lambda_sign_ok && bound_ok && detsign_ok &&
               barrier_signs_ok;
    }
};

/// x^2 + sigma^2/2 H' + a*(x) H - lambda*(x) (I H)(x) / mu - gamma, with H
/// extended by -cU below and cD above the band.
inline double hjb_residual(const InnerSolution& sol, double x) {
    const auto& p = sol.params;
    const double drift = p.b + p.sigma * worst_case_drift(x, sol.th, p) + p.r / p.mu;
    const double lambda = worst_case_intensity(x, sol.th, p);
    return x * x + 0.5 * p.sigma * p.sigma * Hprime(sol, x) + drift * H(sol, x) - lambda * integral_IH(sol, x) / p.mu -
           sol.gamma;
}

inline bool determinant_signs_ok(const InnerSolution& sol) {
    const auto& d = sol.determinants;
    if (sol.regime == Regime::Regime1) return d[0] < 0.0 && d[1] < 0.0 && d[2] > 0.0;
    return d[0] < 0.0 && std::isfinite(d[1]) && d[1] != 0.0;
}

/// Scans `grid_size` uniform points over [x_low - 5/mu, x_high + 5/mu].
inline VerificationReport verify(const InnerSolution& sol, int grid_size = 2001) {
    const auto& p = sol.params;
    const auto& th = sol.th;
    VerificationReport rep;
    rep.grid_size = std::max(grid_size, 3);

    const double lo = th.x_low - 5.0 / p.mu;
    const double hi = th.x_high + 5.0 / p.mu;
    const double step = (hi - lo) / (rep.grid_size - 1);
    const double value_tol = 1e-9;

    bool band_ok = std::abs(H(sol, th.x_low) + p.cU) < kSmoothFitTol && std::abs(H(sol, th.x_high) - p.cD) < kSmoothFitTol;
    bool mono_ok = true;
    bool kappa_ok = true;
    double prev_h = -p.cU;
    bool prev_in_band = false;

    double prev_ih = NAN;
    double prev_x = NAN;
    double sign_change_at = NAN;
    bool wrong_direction = false;

    for (int k = 0; k < rep.grid_size; ++k) {
        const double x = lo + step * k;
        const double r = hjb_residual(sol, x);
        const bool in_band = th.x_low < x && x < th.x_high;
        if (in_band) {
            rep.hjb_interior_max_abs = std::max(rep.hjb_interior_max_abs, std::abs(r));
            const double h = H(sol, x);
            if (h < -p.cU - value_tol || h > p.cD + value_tol) band_ok = false;
            if (prev_in_band && !(h > prev_h)) mono_ok = false;
            if (x < th.x_kappa - value_tol && !(h < 0.0)) kappa_ok = false;
            if (x > th.x_kappa + value_tol && !(h > 0.0)) kappa_ok = false;
            prev_h = h;
        } else {
            rep.hjb_exterior_min = std::min(rep.hjb_exterior_min, r);
        }
        prev_in_band = in_band;

        const double ih = integral_IH(sol, x);
        if (k > 0 && (std::signbit(ih) != std::signbit(prev_ih))) {
            ++rep.lambda_sign_changes;
            if (ih < prev_ih) wrong_direction = true;
            sign_change_at = 0.5 * (x + prev_x);
        }
        prev_ih = ih;
        prev_x = x;
    }

    rep.gradient_band_ok = band_ok;
    rep.monotone_ok = mono_ok;
    rep.kappa_sign_ok = kappa_ok;
    rep.lambda_sign_ok = rep.lambda_sign_changes == 1 && !wrong_direction &&
                         (th.x_lambda > hi || std::abs(sign_change_at - th.x_lambda) <= step);

    const auto res = compute_residuals(sol);
    for (double v : res) rep.smooth_fit_max_abs = std::max(rep.smooth_fit_max_abs, std::abs(v));
    rep.smooth_fit_ok = rep.smooth_fit_max_abs < kSmoothFitTol;

    rep.bound_ok = sol.gamma <= min_gamma_upper_bound(p);
    rep.detsign_ok = determinant_signs_ok(sol);
    rep.barrier_signs_ok = th.x_low <= 0.0 && th.x_high > 0.0;
    return rep;
}

} // namespace robust_ergodic
