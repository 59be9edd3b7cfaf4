#pragma once

#include <cmath>
#include <exception>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace robust_ergodic {

struct BroydenOptions {
    double tol = 1e-10;
    int max_iter = 100;
    double fd_step = 1e-7; ///< relative forward-difference step, scaled by max(1, |z_j|)
    int max_halvings = 30;
    /// Recompute the Jacobian by finite differences when a step needed more than
    /// this many halvings.
    int refresh_after_halvings = 4;
};

struct BroydenResult {
    Eigen::VectorXd z;
    Eigen::VectorXd f;
    double norm = INFINITY;
    int iterations = 0;
    int jacobian_refreshes = 0;
    bool converged = false;
    std::string message;
};

namespace detail {

/// Evaluates fn, mapping exceptions and non-finite output to nullopt.
template <class Fn>
std::optional<Eigen::VectorXd> try_eval(Fn& fn, const Eigen::VectorXd& z) {
    try {
        Eigen::VectorXd f = fn(z);
        if (!f.allFinite()) return std::nullopt;
        return f;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

template <class Fn>
std::optional<Eigen::MatrixXd> fd_jacobian(Fn& fn, const Eigen::VectorXd& z, const Eigen::VectorXd& f,
                                           double rel_step) {
    const auto n = z.size();
    Eigen::MatrixXd J(f.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double h = rel_step * std::max(1.0, std::abs(z[j]));
        Eigen::VectorXd zp = z;
        zp[j] += h;
        if (auto fp = try_eval(fn, zp)) {
            J.col(j) = (*fp - f) / h;
            continue;
        }
        zp[j] = z[j] - h;
        if (auto fm = try_eval(fn, zp)) {
            J.col(j) = (f - *fm) / h;
            continue;
        }
        return std::nullopt;
    }
    return J;
}

} // namespace detail

/// Quasi-Newton root search: finite-difference initial Jacobian, good-Broyden
/// rank-one updates, step halving until the residual max-norm does not grow.
/// `on_accept(z)` is called after every accepted step. Never throws on
/// non-convergence; the best iterate seen is returned instead.
template <class Fn, class OnAccept>
BroydenResult broyden_root(Fn&& fn, const Eigen::VectorXd& z0, const BroydenOptions& opt, OnAccept&& on_accept) {
    BroydenResult best;
    best.z = z0;

    auto f0 = detail::try_eval(fn, z0);
    if (!f0) {
        best.message = "residual not computable at the initial point";
        return best;
    }
    Eigen::VectorXd z = z0;
    Eigen::VectorXd f = *f0;
    double norm = f.lpNorm<Eigen::Infinity>();
    best.f = f;
    best.norm = norm;

    auto record_best = [&](int iterations) {
        best.iterations = iterations;
        if (norm < best.norm) {
            best.z = z;
            best.f = f;
            best.norm = norm;
        }
    };

    auto J0 = detail::fd_jacobian(fn, z, f, opt.fd_step);
    if (!J0) {
        best.message = "finite-difference Jacobian failed at the initial point";
        return best;
    }
    Eigen::MatrixXd J = *J0;
    bool fresh = true;

    int it = 0;
    for (; it < opt.max_iter; ++it) {
        if (norm < opt.tol) break;

        Eigen::VectorXd dz = J.colPivHouseholderQr().solve(-f);
        if (!dz.allFinite()) {
            if (fresh) {
                best.message = "Jacobian is singular";
                break;
            }
            auto Jn = detail::fd_jacobian(fn, z, f, opt.fd_step);
            if (!Jn) {
                best.message = "finite-difference Jacobian failed";
                break;
            }
            J = *Jn;
            fresh = true;
            ++best.jacobian_refreshes;
            continue;
        }

        double t = 1.0;
        int halvings = 0;
        std::optional<Eigen::VectorXd> ft;
        Eigen::VectorXd zt;
        for (; halvings <= opt.max_halvings; ++halvings, t *= 0.5) {
            zt = z + t * dz;
            ft = detail::try_eval(fn, zt);
            if (ft && ft->lpNorm<Eigen::Infinity>() <= norm) break;
            ft.reset();
        }

        if (!ft) {
            if (fresh) {
                best.message = "line search failed with a fresh Jacobian";
                break;
            }
            auto Jn = detail::fd_jacobian(fn, z, f, opt.fd_step);
            if (!Jn) {
                best.message = "finite-difference Jacobian failed";
                break;
            }
            J = *Jn;
            fresh = true;
            ++best.jacobian_refreshes;
            continue;
        }

        const Eigen::VectorXd s = zt - z;
        const Eigen::VectorXd y = *ft - f;
        z = zt;
        f = *ft;
        norm = f.lpNorm<Eigen::Infinity>();
        on_accept(z);
        record_best(it + 1);

        if (halvings > opt.refresh_after_halvings) {
            if (auto Jn = detail::fd_jacobian(fn, z, f, opt.fd_step)) {
                J = *Jn;
                fresh = true;
                ++best.jacobian_refreshes;
                continue;
            }
        }
        const double ss = s.squaredNorm();
        if (ss > 0.0) J += ((y - J * s) * s.transpose()) / ss;
        fresh = false;
    }

    record_best(it);
    best.converged = best.norm < opt.tol;
    if (best.converged) {
        best.message.clear();
    } else if (best.message.empty()) {
        best.message = "maximum iterations reached";
    }
    return best;
}

template <class Fn>
BroydenResult broyden_root(Fn&& fn, const Eigen::VectorXd& z0, const BroydenOptions& opt = {}) {
    return broyden_root(std::forward<Fn>(fn), z0, opt, [](const Eigen::VectorXd&) {});
}

} // namespace robust_ergodic
