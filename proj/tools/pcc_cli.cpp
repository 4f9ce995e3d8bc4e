// Command-line front end: solve, check-uc, obs-constant, models list.
#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

#include <CLI11.hpp>

#include "pcc/pcc.hpp"

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level log_level() {
    const char* env = std::getenv("PCC_LOG_LEVEL");
    if (env == nullptr) return Level::warn;
    const std::string_view v(env);
    if (v == "error") return Level::error;
    if (v == "info") return Level::info;
    if (v == "debug") return Level::debug;
    return Level::warn;
}

void log(Level at, const std::string& msg) {
    static const Level threshold = log_level();
    if (at > threshold) return;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[pcc " << names[static_cast<int>(at)] << "] " << msg << "\n";
}

int code(pcc::ExitCode c) { return static_cast<int>(c); }

int cmd_solve(const std::string& config_path, const std::string& out_dir) {
    const pcc::RunConfig cfg = pcc::load_run_config(config_path);
    log(Level::info, "loaded " + config_path);
    const pcc::RunOutcome outcome = pcc::run_config(cfg);
    const pcc::TimeGrid grid(cfg.grid.T, cfg.grid.n_steps);
    pcc::emit_report(out_dir, outcome, grid);
    const std::string status = outcome.report.value("status", std::string("?"));
    log(outcome.exit_code == pcc::ExitCode::ok ? Level::info : Level::warn,
        "status " + status + ", outputs in " + out_dir);
    return code(outcome.exit_code);
}

int cmd_check_uc(const std::string& config_path, double tol) {
    const pcc::RunConfig cfg = pcc::load_run_config(config_path);
    const pcc::BuiltRun run = pcc::build_run(cfg);
    const pcc::UCReport r = pcc::run_uc_check(run, tol > 0.0 ? tol : cfg.checks.tol_uc);
    std::cout << pcc::detail::uc_json(r, run.problem).dump(2) << "\n";
    return r.holds ? 0 : code(pcc::ExitCode::certification_failed);
}

int cmd_obs_constant(const std::string& config_path, const std::string& kind_name) {
    const pcc::RunConfig cfg = pcc::load_run_config(config_path);
    const pcc::BuiltRun run = pcc::build_run(cfg);
    const pcc::ObservabilityKind kind = pcc::observability_kind_from_string(kind_name);
    if (kind == pcc::ObservabilityKind::tilde_T && !cfg.checks.T_tilde) {
        throw pcc::ConfigError("kind 'tilde_T' needs 'checks.T_tilde'");
    }
    const pcc::ObservabilityReport r = pcc::observability_constant(run.system, run.problem.ops, run.grid, run.G,
                                                                   run.W, kind, cfg.checks.T_tilde);
    const bool finite = r.constant_C < pcc::kInfinitySignal;
    std::cout << pcc::Json{{"kind", kind_name}, {"constant_C", r.constant_C}, {"sigma_min", r.sigma_min},
                           {"finite", finite}}
                     .dump(2)
              << "\n";
    return finite ? 0 : code(pcc::ExitCode::certification_failed);
}

int cmd_models_list() {
    for (const auto& m : pcc::list_models()) {
        std::cout << m.family << "\t" << m.parameters << "\t" << m.summary << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained controls for linear systems by dual minimization"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    auto* solve = app.add_subcommand("solve", "run certifications and the solve; write report.json and CSVs");
    solve->add_option("--config", config_path, "JSON run configuration")->required();
    solve->add_option("--out", out_dir, "output directory")->required();

    double tol = 0.0;
    auto* check = app.add_subcommand("check-uc", "unique-continuation check of the configured problem");
    check->add_option("--config", config_path, "JSON run configuration")->required();
    check->add_option("--tol", tol, "override checks.tol_uc");

    std::string kind;
    auto* obs = app.add_subcommand("obs-constant", "observability constant of the configured problem");
    obs->add_option("--config", config_path, "JSON run configuration")->required();
    obs->add_option("--kind", kind, "final_state|initial_state|general_final|general_initial|tilde_T")->required();

    auto* models = app.add_subcommand("models", "model library");
    auto* list = models->add_subcommand("list", "list model families");
    models->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (solve->parsed()) return cmd_solve(config_path, out_dir);
        if (check->parsed()) return cmd_check_uc(config_path, tol);
        if (obs->parsed()) return cmd_obs_constant(config_path, kind);
        if (list->parsed()) return cmd_models_list();
    } catch (const pcc::ConfigError& e) {
        log(Level::error, std::string("config error: ") + e.what());
        return code(pcc::ExitCode::config_error);
    } catch (const pcc::Error& e) {
        log(Level::error, e.what());
        return code(pcc::ExitCode::config_error);
    }
    return 1;
}
