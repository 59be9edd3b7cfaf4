// Command-line driver: solve, sweep, rmc, simulate, verify.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "robust_ergodic/robust_ergodic.hpp"

namespace re = robust_ergodic;

namespace {

enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level() {
    const char* v = std::getenv("SOLVER_LOG");
    if (!v) return LogLevel::Info;
    const std::string s(v);
    if (s == "quiet") return LogLevel::Quiet;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

void info(const std::string& msg) {
    if (log_level() != LogLevel::Quiet) std::cerr << msg << '\n';
}

void debug(const std::string& msg) {
    if (log_level() == LogLevel::Debug) std::cerr << msg << '\n';
}

int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

re::ModelParams load_params(const std::string& path) { return re::params_from_json(re::read_json_file(path)); }

int cmd_solve(const std::string& params_path, const std::string& init, const std::string& out_path) {
    const auto p = load_params(params_path);
    std::optional<re::Thresholds> start;
    if (!init.empty()) {
        const auto v = re::parse_list(init);
        if (v.size() != 4) throw re::DomainError("--init needs four comma-separated values");
        start = re::Thresholds{v[0], v[1], v[2], v[3]};
    }
    const auto rep = re::solve_robust(p, start);
    re::write_text_file(out_path, re::to_json(rep).dump(2) + "\n");
    debug("iterations " + std::to_string(rep.iterations) + ", residual " + re::format_double(rep.final_residual_norm));
    for (const auto& w : rep.warnings) info("warning: " + w);
    if (!rep.converged) {
        info("solve did not converge: " + rep.message);
        return 1;
    }
    info("converged: " + std::string(re::to_string(rep.solution.regime)) + ", gamma " +
         re::format_double(rep.solution.gamma));
    return 0;
}

int cmd_sweep(const std::string& params_path, const std::string& name, double from, double to, int points,
              const std::string& out_path) {
    re::SweepSpec spec;
    spec.base = load_params(params_path);
    spec.param_name = name;
    spec.grid = re::linspace(from, to, points);
    const auto rows = re::run_sweep(spec);
    re::write_text_file(out_path, re::sweep_csv(rows));
    int failed = 0;
    for (const auto& r : rows) {
        if (!r.converged) {
            ++failed;
            debug(name + "=" + re::format_double(r.value) + " did not converge");
        }
    }
    info(std::to_string(rows.size() - failed) + "/" + std::to_string(rows.size()) + " points converged");
    return 0;
}

int cmd_rmc(const std::string& params_path, const std::string& delta_grid, const std::string& eps_grid,
            const std::string& out_path, int jobs) {
    const auto base = load_params(params_path);
    const auto cells = re::rmc_table(base, re::parse_list(delta_grid), re::parse_list(eps_grid), jobs);
    re::write_text_file(out_path, re::rmc_csv(cells));
    int unavailable = 0;
    for (const auto& c : cells) {
        if (c.status.rfind("unavailable", 0) == 0) {
            ++unavailable;
            debug("delta=" + re::format_double(c.delta) + " eps=" + re::format_double(c.eps) + ": " + c.status);
        }
    }
    info(std::to_string(cells.size() - unavailable) + "/" + std::to_string(cells.size()) + " cells computed");
    return 0;
}

int cmd_simulate(const std::string& sol_path, const re::SimConfig& cfg, const std::string& distortion,
                 const std::string& path_out, double path_t, const std::string& out_path) {
    const auto sol = re::solution_from_json(re::read_json_file(sol_path));
    re::Distortion dist;
    if (distortion == "worst_case") dist = re::Distortion::worst_case(sol.th);
    else if (distortion == "none") dist = re::Distortion::none();
    else throw re::ConfigError("--distortion must be worst_case or none");

    const auto est = re::simulate_band(sol.params, sol.th.x_low, sol.th.x_high, dist, cfg);
    auto j = re::to_json(est);
    j["gamma"] = sol.gamma;
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty()) std::cout << text;
    else re::write_text_file(out_path, text);

    if (!path_out.empty()) {
        const int every = std::max(1, static_cast<int>(std::lround(0.01 / cfg.dt)));
        re::write_text_file(path_out,
                            re::path_csv(re::sample_path(sol.params, sol.th.x_low, sol.th.x_high, dist, cfg, path_t, every)));
    }
    return 0;
}

int cmd_verify(const std::string& sol_path, int grid, const std::string& out_path) {
    const auto sol = re::solution_from_json(re::read_json_file(sol_path));
    const auto rep = re::verify(sol, grid);
    re::write_text_file(out_path, re::to_json(rep).dump(2) + "\n");
    info(rep.passed() ? "PASS" : "FAIL");
    return rep.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust ergodic two-barrier control: solver and experiments"};
    app.require_subcommand(1);

    std::string params_path, out_path, init;
    auto* solve = app.add_subcommand("solve", "Solve for barriers, switch points and gamma");
    solve->add_option("--params", params_path, "Parameter JSON file")->required();
    solve->add_option("--init", init, "Initial x_low,x_kappa,x_lambda,x_high");
    solve->add_option("--out", out_path, "Solution JSON output")->required();

    std::string name;
    double from = 0.0, to = 0.0;
    int points = 50;
    auto* sweep = app.add_subcommand("sweep", "Comparative statics in one parameter");
    sweep->add_option("--params", params_path, "Base parameter JSON file")->required();
    sweep->add_option("--param", name, "b, delta, r, eps, sigma, inv_mu, cU or cD")->required();
    sweep->add_option("--from", from, "First grid value")->required();
    sweep->add_option("--to", to, "Last grid value")->required();
    sweep->add_option("--points", points, "Number of grid points")->check(CLI::PositiveNumber);
    sweep->add_option("--out", out_path, "CSV output")->required();
    int sweep_jobs = default_jobs();
    sweep->add_option("--jobs", sweep_jobs, "Accepted for symmetry; a sweep is one warm-start chain");

    std::string delta_grid = "0,0.2,0.4,0.6,0.8,1", eps_grid = "0,0.2,0.4,0.6,0.8,1";
    int jobs = default_jobs();
    auto* rmc = app.add_subcommand("rmc", "Relative misspecification cost over a (delta, eps) grid");
    rmc->add_option("--params", params_path, "Base parameter JSON file")->required();
    rmc->add_option("--delta-grid", delta_grid, "Comma-separated delta values");
    rmc->add_option("--eps-grid", eps_grid, "Comma-separated eps values (1 is evaluated at 1 - 1e-6)");
    rmc->add_option("--out", out_path, "CSV output")->required();
    rmc->add_option("--jobs", jobs, "Worker threads (one delta row each)")->check(CLI::PositiveNumber);

    std::string sol_path, path_out, distortion = "worst_case";
    re::SimConfig cfg;
    double path_t = 8.0;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo cost of the solved band");
    simulate->add_option("--solution", sol_path, "Solution JSON from solve")->required();
    simulate->add_option("--t", cfg.horizon, "Horizon per path");
    simulate->add_option("--dt", cfg.dt, "Time step");
    simulate->add_option("--paths", cfg.n_paths, "Number of paths");
    simulate->add_option("--seed", cfg.seed, "RNG seed");
    simulate->add_option("--burn-in", cfg.burn_in_fraction, "Burn-in fraction of the horizon");
    simulate->add_option("--distortion", distortion, "worst_case or none");
    simulate->add_option("--path-out", path_out, "Write one sample path CSV (t,x,u,d)");
    simulate->add_option("--path-t", path_t, "Sample path length");
    simulate->add_option("--out", out_path, "Estimate JSON output (default stdout)");
    simulate->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
    bool projection = false;
    simulate->add_flag("--projection", projection, "Plain projection instead of the bridge-corrected push");

    int grid = 2001;
    auto* verify = app.add_subcommand("verify", "Certify a solution against the HJB conditions");
    verify->add_option("--solution", sol_path, "Solution JSON from solve")->required();
    verify->add_option("--grid", grid, "Grid points")->check(CLI::Range(3, 10000000));
    verify->add_option("--out", out_path, "Report JSON output")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*solve) return cmd_solve(params_path, init, out_path);
        if (*sweep) return cmd_sweep(params_path, name, from, to, points, out_path);
        if (*rmc) return cmd_rmc(params_path, delta_grid, eps_grid, out_path, jobs);
        if (*simulate) {
            if (projection) cfg.scheme = re::ReflectionScheme::Projection;
            return cmd_simulate(sol_path, cfg, distortion, path_out, path_t, out_path);
        }
        if (*verify) return cmd_verify(sol_path, grid, out_path);
    } catch (const re::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 2;
    } catch (const re::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
