#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "experiments.hpp"
#include "model.hpp"
#include "outer_solver.hpp"
#include "simulate.hpp"
#include "verification.hpp"

namespace robust_ergodic {

using json = nlohmann::json;

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// --- JSON ----------------------------------------------------------------------------

inline json to_json(const ModelParams& p) {
    return json{{"b", p.b},         {"delta", p.delta}, {"r", p.r},   {"eps", p.eps},
                {"sigma", p.sigma}, {"mu", p.mu},       {"cU", p.cU}, {"cD", p.cD}};
}

/// Missing keys keep their ModelParams defaults; unknown keys are rejected.
inline ModelParams params_from_json(const json& j) {
    if (!j.is_object()) throw DomainError("params must be a JSON object");
    ModelParams p;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) throw DomainError("params key '" + key + "' must be a number");
        const double v = value.get<double>();
        if (key == "b") p.b = v;
        else if (key == "delta") p.delta = v;
        else if (key == "r") p.r = v;
        else if (key == "eps") p.eps = v;
        else if (key == "sigma") p.sigma = v;
        else if (key == "mu") p.mu = v;
        else if (key == "cU") p.cU = v;
        else if (key == "cD") p.cD = v;
        else throw DomainError("unknown params key '" + key + "'");
    }
    return p;
}

inline json to_json(const Thresholds& th) {
    return json{{"x_low", th.x_low}, {"x_kappa", th.x_kappa}, {"x_lambda", th.x_lambda}, {"x_high", th.x_high}};
}

inline Thresholds thresholds_from_json(const json& j) {
    Thresholds th;
    th.x_low = j.at("x_low").get<double>();
    th.x_kappa = j.at("x_kappa").get<double>();
    th.x_lambda = j.at("x_lambda").get<double>();
    th.x_high = j.at("x_high").get<double>();
    return th;
}

/// Non-finite doubles become null (JSON has no NaN).
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const SolveReport& rep) {
    const auto& s = rep.solution;
    json coeffs;
    for (int i = 0; i < 3; ++i) {
        coeffs["u" + std::to_string(i + 1) + "_minus"] = s.coeffs[i].u_minus;
        coeffs["u" + std::to_string(i + 1) + "_plus"] = s.coeffs[i].u_plus;
    }
    json dets;
    for (int i = 0; i < 3; ++i) dets["theta" + std::to_string(i + 1)] = number_or_null(s.determinants[i]);
    json diag{{"iterations", rep.iterations},
              {"residual_norm", number_or_null(rep.final_residual_norm)},
              {"converged", rep.converged},
              {"regime_switches", rep.regime_switches},
              {"residual_1", s.residuals[0]},
              {"residual_2", s.residuals[1]},
              {"residual_3", s.residuals[2]},
              {"residual_4", s.residuals[3]}};
    if (!rep.message.empty()) diag["message"] = rep.message;
    return json{{"params", to_json(s.params)},
                {"thresholds", to_json(s.th)},
                {"gamma", s.gamma},
                {"regime", to_string(s.regime)},
                {"coefficients", coeffs},
                {"determinants", dets},
                {"diagnostics", diag},
                {"warnings", rep.warnings}};
}

/// Rebuilds the piecewise solution from a solve artifact by re-running the
/// inner linear systems at the stored thresholds.
inline InnerSolution solution_from_json(const json& j) {
    return inner_solve(params_from_json(j.at("params")), thresholds_from_json(j.at("thresholds")));
}

inline json to_json(const VerificationReport& r) {
    return json{{"pass", r.passed()},
                {"hjb_interior_max_abs", r.hjb_interior_max_abs},
                {"hjb_exterior_min", number_or_null(r.hjb_exterior_min)},
                {"smooth_fit_max_abs", r.smooth_fit_max_abs},
                {"smooth_fit_ok", r.smooth_fit_ok},
                {"gradient_band_ok", r.gradient_band_ok},
                {"monotone_ok", r.monotone_ok},
                {"kappa_sign_ok", r.kappa_sign_ok},
                {"lambda_sign_ok", r.lambda_sign_ok},
                {"lambda_sign_changes", r.lambda_sign_changes},
                {"bound_ok", r.bound_ok},
                {"detsign_ok", r.detsign_ok},
                {"barrier_signs_ok", r.barrier_signs_ok},
                {"grid_size", r.grid_size}};
}

inline json to_json(const SimEstimate& e) {
    return json{{"cost_rate_mean", e.cost_rate_mean},
                {"cost_rate_stderr", e.cost_rate_stderr},
                {"up_rate", e.up_rate},
                {"down_rate", e.down_rate},
                {"up_rate_stderr", e.up_rate_stderr},
                {"down_rate_stderr", e.down_rate_stderr},
                {"path_count", e.path_count}};
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return json::parse(in);
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// --- CSV -----------------------------------------------------------------------------

inline constexpr const char* kSweepHeader = "param,value,x_low,x_kappa,x_lambda,x_high,gamma,regime,converged";
inline constexpr const char* kRmcHeader = "b,delta,eps,gamma_robust,gamma_nr_wc,rmc_pct,status";
inline constexpr const char* kPathHeader = "t,x,u,d";

/// Non-converged rows keep their last iterate's numbers; readers must filter on `converged`.
inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << kSweepHeader << '\n';
    for (const auto& r : rows) {
        out << r.param << ',' << format_double(r.value) << ',' << format_double(r.th.x_low) << ','
            << format_double(r.th.x_kappa) << ',' << format_double(r.th.x_lambda) << ','
            << format_double(r.th.x_high) << ',' << format_double(r.gamma) << ',' << to_string(r.regime) << ','
            << (r.converged ? "true" : "false") << '\n';
    }
    return out.str();
}

inline std::string rmc_csv(const std::vector<RmcCell>& cells) {
    std::ostringstream out;
    out << kRmcHeader << '\n';
    for (const auto& c : cells) {
        std::string status = c.status;
        for (char& ch : status) {
            if (ch == ',' || ch == '\n') ch = ';';
        }
        out << format_double(c.b) << ',' << format_double(c.delta) << ',' << format_double(c.eps) << ','
            << format_double(c.gamma_robust) << ',' << format_double(c.gamma_nr_wc) << ','
            << format_double(c.rmc_pct) << ',' << status << '\n';
    }
    return out.str();
}

inline std::string path_csv(const std::vector<PathPoint>& path) {
    std::ostringstream out;
    out << kPathHeader << '\n';
    for (const auto& p : path) {
        out << format_double(p.t) << ',' << format_double(p.x) << ',' << format_double(p.u) << ','
            << format_double(p.d) << '\n';
    }
    return out.str();
}

/// Parses "0,0.2,0.4" into doubles.
inline std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find(',', pos), text.size());
        const std::string item = text.substr(pos, end - pos);
        double v = 0.0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
            throw DomainError("cannot parse number '" + item + "' in list '" + text + "'");
        }
        out.push_back(v);
        pos = end + 1;
    }
    return out;
}

} // namespace robust_ergodic
