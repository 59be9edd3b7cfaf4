#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace robust_ergodic {

enum class ReflectionScheme {
    /// Euler step, then projection onto the band.
    Projection,
    /// Euler step with the Brownian-bridge extremum of the step used to book
    /// the push, which removes the O(sqrt(dt)) under-count of plain projection.
    Bridge,
};

struct SimConfig {
    double horizon = 1e4;
    double dt = 1e-3;
    int n_paths = 64;
    std::uint64_t seed = 1;
    double burn_in_fraction = 0.2;
    double x0 = NAN; ///< NaN starts at the band midpoint
    ReflectionScheme scheme = ReflectionScheme::Bridge;
    int jobs = 1;
};

/// Which drift/intensity the simulated model uses.
struct Distortion {
    bool bang_bang = false; ///< false: benchmark model (kappa = 0, lambda = r)
    double x_kappa = 0.0;
    double x_lambda = 0.0;

    static Distortion none() { return {}; }
    static Distortion worst_case(const Thresholds& th) { return {true, th.x_kappa, th.x_lambda}; }
};

struct SimEstimate {
    double cost_rate_mean = 0.0;
    double cost_rate_stderr = 0.0;
    double up_rate = 0.0;   ///< mean dU per unit time
    double down_rate = 0.0; ///< mean dD per unit time
    double up_rate_stderr = 0.0;
    double down_rate_stderr = 0.0;
    int path_count = 0;
};

struct PathPoint {
    double t = 0.0;
    double x = 0.0;
    double u = 0.0;
    double d = 0.0;
};

/// Simulation accepts r = 0 (no jumps) on top of the usual parameter bounds.
inline void validate_simulation(const ModelParams& p, double x_low, double x_high, const SimConfig& cfg) {
    ModelParams q = p;
    if (q.r == 0.0) q.r = 1.0;
    validate(q);
    if (!(x_low < x_high)) throw ConfigError("band requires x_low < x_high");
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be > 0");
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) throw ConfigError("horizon must be > 0");
    if (!(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0)) {
        throw ConfigError("burn_in_fraction must lie in [0, 1)");
    }
    if (cfg.n_paths < 1) throw ConfigError("n_paths must be >= 1");
    if (cfg.dt * p.r * (1.0 + p.eps) > 0.1) throw ConfigError("dt must satisfy dt * r (1 + eps) <= 0.1");
    if (cfg.horizon * (1.0 - cfg.burn_in_fraction) < cfg.dt) throw ConfigError("no steps left after burn-in");
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// One generator per (seed, path); independent of how many paths run.
inline std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t path) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(path + 0x632BE59BD9B4E019ull)));
}

/// One reflected Euler step. Returns the post-step state and writes the pushes.
class Stepper {
public:
    Stepper(const ModelParams& p, double x_low, double x_high, const Distortion& dist, const SimConfig& cfg)
        : p_(p), lo_(x_low), hi_(x_high), dist_(dist), dt_(cfg.dt), scheme_(cfg.scheme),
          sd_(p.sigma * std::sqrt(cfg.dt)), var_(p.sigma * p.sigma * cfg.dt) {}

    double step(double x, std::mt19937_64& rng, double& du, double& dd) {
        du = 0.0;
        dd = 0.0;
        double kappa = 0.0;
        double lambda = p_.r;
        if (dist_.bang_bang) {
            kappa = x >= dist_.x_kappa ? p_.delta : -p_.delta;
            lambda = x <= dist_.x_lambda ? p_.r * (1.0 + p_.eps) : p_.r * (1.0 - p_.eps);
        }
        // Jumps are raw -Exp(mu); the benchmark compensator r/mu sits in the drift.
        const double drift = p_.b + p_.sigma * kappa + p_.r / p_.mu;
        const double end = x + drift * dt_ + sd_ * normal_(rng);

        double y = end;
        if (scheme_ == ReflectionScheme::Bridge) {
            const double up = overshoot_above(x, end, rng);
            const double down = overshoot_below(x, end, rng);
            if (up > 0.0 && down > 0.0) {
                y = std::clamp(end, lo_, hi_);
                if (end > hi_) dd = end - hi_;
                if (end < lo_) du = lo_ - end;
            } else {
                dd = up;
                du = down;
                y = std::clamp(end - up + down, lo_, hi_);
            }
        } else {
            if (end > hi_) dd = end - hi_;
            if (end < lo_) du = lo_ - end;
            y = std::clamp(end, lo_, hi_);
        }

        if (lambda > 0.0 && uniform_(rng) < lambda * dt_) {
            y -= jump_(rng) / p_.mu;
            if (y < lo_) {
                du += lo_ - y;
                y = lo_;
            }
        }
        return y;
    }

private:
    // Push needed at the upper barrier: sampled maximum of the Brownian bridge
    // from a to b over the step, minus x_high.
    double overshoot_above(double a, double b, std::mt19937_64& rng) {
        const double ga = hi_ - a;
        const double gb = hi_ - b;
        if (ga > 0.0 && gb > 0.0 && 2.0 * ga * gb > 40.0 * var_) return 0.0;
        const double m = 0.5 * (a + b + std::sqrt((b - a) * (b - a) - 2.0 * var_ * std::log(open_uniform(rng))));
        return std::max(0.0, m - hi_);
    }

    double overshoot_below(double a, double b, std::mt19937_64& rng) {
        const double ga = a - lo_;
        const double gb = b - lo_;
        if (ga > 0.0 && gb > 0.0 && 2.0 * ga * gb > 40.0 * var_) return 0.0;
        const double m = 0.5 * (a + b - std::sqrt((b - a) * (b - a) - 2.0 * var_ * std::log(open_uniform(rng))));
        return std::max(0.0, lo_ - m);
    }

    double open_uniform(std::mt19937_64& rng) {
        double u;
        do {
            u = uniform_(rng);
        } while (u <= 0.0);
        return u;
    }

    ModelParams p_;
    double lo_, hi_;
    Distortion dist_;
    double dt_;
    ReflectionScheme scheme_;
    double sd_;
    double var_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::exponential_distribution<double> jump_{1.0};
};

struct PathTotals {
    double cost_rate = 0.0;
    double up_rate = 0.0;
    double down_rate = 0.0;
};

inline PathTotals run_path(const ModelParams& p, double x_low, double x_high, const Distortion& dist,
                           const SimConfig& cfg, int path) {
    auto rng = path_stream(cfg.seed, static_cast<std::uint64_t>(path));
    Stepper stepper(p, x_low, x_high, dist, cfg);
    const auto n_steps = static_cast<long long>(std::llround(cfg.horizon / cfg.dt));
    const auto burn = static_cast<long long>(std::llround(cfg.burn_in_fraction * n_steps));

    double x = std::isnan(cfg.x0) ? 0.5 * (x_low + x_high) : std::clamp(cfg.x0, x_low, x_high);
    double running = 0.0, ups = 0.0, downs = 0.0;
    for (long long k = 0; k < n_steps; ++k) {
        double du, dd;
        const double next = stepper.step(x, rng, du, dd);
        if (k >= burn) {
            running += 0.5 * (x * x + next * next) * cfg.dt;
            ups += du;
            downs += dd;
        }
        x = next;
    }
    const double span = static_cast<double>(n_steps - burn) * cfg.dt;
    PathTotals out;
    out.up_rate = ups / span;
    out.down_rate = downs / span;
    out.cost_rate = running / span + p.cU * out.up_rate + p.cD * out.down_rate;
    return out;
}

inline void mean_and_stderr(const std::vector<double>& v, double& mean, double& se) {
    const double n = static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += x;
    mean = s / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

} // namespace detail

/// Long-run average cost of reflecting at [x_low, x_high] under `dist`,
/// estimated from independent paths after burn-in.
inline SimEstimate simulate_band(const ModelParams& p, double x_low, double x_high, const Distortion& dist,
                                 const SimConfig& cfg) {
    validate_simulation(p, x_low, x_high, cfg);
    std::vector<detail::PathTotals> totals(cfg.n_paths);
    const int jobs = std::clamp(cfg.jobs, 1, cfg.n_paths);
    if (jobs == 1) {
        for (int i = 0; i < cfg.n_paths; ++i) totals[i] = detail::run_path(p, x_low, x_high, dist, cfg, i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w) {
            pool.emplace_back([&, w] {
                for (int i = w; i < cfg.n_paths; i += jobs) totals[i] = detail::run_path(p, x_low, x_high, dist, cfg, i);
            });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<double> cost, up, down;
    for (const auto& t : totals) {
        cost.push_back(t.cost_rate);
        up.push_back(t.up_rate);
        down.push_back(t.down_rate);
    }
    SimEstimate est;
    est.path_count = cfg.n_paths;
    detail::mean_and_stderr(cost, est.cost_rate_mean, est.cost_rate_stderr);
    detail::mean_and_stderr(up, est.up_rate, est.up_rate_stderr);
    detail::mean_and_stderr(down, est.down_rate, est.down_rate_stderr);
    return est;
}

/// Path 0 of the same dynamics, recorded every `record_every` steps up to t_max
/// (U and D cumulative from t = 0).
inline std::vector<PathPoint> sample_path(const ModelParams& p, double x_low, double x_high, const Distortion& dist,
                                          const SimConfig& cfg, double t_max, int record_every = 1) {
    validate_simulation(p, x_low, x_high, cfg);
    if (!(t_max > 0.0)) throw ConfigError("t_max must be > 0");
    if (record_every < 1) throw ConfigError("record_every must be >= 1");
    auto rng = detail::path_stream(cfg.seed, 0);
    detail::Stepper stepper(p, x_low, x_high, dist, cfg);
    const auto n_steps = static_cast<long long>(std::llround(t_max / cfg.dt));

    std::vector<PathPoint> out;
    PathPoint pt;
    pt.x = std::isnan(cfg.x0) ? 0.5 * (x_low + x_high) : std::clamp(cfg.x0, x_low, x_high);
    out.push_back(pt);
    for (long long k = 1; k <= n_steps; ++k) {
        double du, dd;
        pt.x = stepper.step(pt.x, rng, du, dd);
        pt.u += du;
        pt.d += dd;
        pt.t = static_cast<double>(k) * cfg.dt;
        if (k % record_every == 0 || k == n_steps) out.push_back(pt);
    }
    return out;
}

} // namespace robust_ergodic
