#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pcc/config.hpp"
#include "pcc/dual.hpp"
#include "pcc/minimizer.hpp"
#include "pcc/observability.hpp"

namespace pcc {

// Exit codes of a configuration-driven run.
enum class ExitCode : int {
    ok = 0,
    config_error = 1,
    certification_failed = 2,
    diverged_infeasible = 3,
    max_iters = 4,
};

struct RunOutcome {
    ExitCode exit_code = ExitCode::ok;
    Json report;
    std::optional<ControlSolution> solution;
};

namespace detail {

inline Json vector_json(const Vector& v) {
    return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

// Witness rescaled so that |z_T| = 1 whenever z_T != 0, which makes the
// infeasibility radius comparable across instances.
inline UcWitness normalized_witness(const Vector& stacked, const ProblemData& p) {
    UcWitness w = UcWitness::split(stacked, p.n(), p.G.dim(), p.W.dim());
    const double nz = w.z_T.norm();
    if (nz > 0.0) {
        w.z_T /= nz;
        w.g_coef /= nz;
        w.w_coef /= nz;
    }
    return w;
}

inline Json uc_json(const UCReport& r, const ProblemData& p) {
    Json j{{"holds", r.holds},
           {"sigma_min", r.sigma_min},
           {"sigma_max", r.sigma_max},
           {"tol_uc", r.tol_uc},
           {"level", "discrete"}};
    if (r.witness) {
        j["witness"] = vector_json(*r.witness);
        j["radius"] = certify_infeasibility(p, normalized_witness(*r.witness, p));
    }
    return j;
}

inline Json residuals_json(const Residuals& r) {
    return Json{{"final_state_error", r.final_state_error},
                {"proj_u_error", r.proj_u_error},
                {"proj_y_error", r.proj_y_error},
                {"proj_E_error", r.proj_E_error},
                {"duality_check", r.duality_check}};
}

inline std::string format_number(double x) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << x;
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

}  // namespace detail

inline UCReport run_uc_check(const BuiltRun& run, double tol_uc) {
    return uc_check(assemble_uc_map(run.system, run.problem.ops, run.grid, run.G, run.W), tol_uc);
}

// Certifications requested in the checks section. Returns false when any of
// them fails; details are recorded in `checks`.
inline bool run_checks(const RunConfig& c, const BuiltRun& run, Json& checks) {
    bool ok = true;
    checks = Json::object();
    if (c.checks.uc) {
        const UCReport r = run_uc_check(run, c.checks.tol_uc);
        checks["uc"] = detail::uc_json(r, run.problem);
        ok = ok && r.holds;
    }
    if (!c.checks.observability.empty()) {
        Json obs = Json::object();
        for (const auto& name : c.checks.observability) {
            const ObservabilityKind kind = observability_kind_from_string(name);
            if (kind == ObservabilityKind::tilde_T && !c.checks.T_tilde) {
                throw ConfigError("checks.observability 'tilde_T' needs 'checks.T_tilde'");
            }
            const ObservabilityReport r =
                observability_constant(run.system, run.problem.ops, run.grid, run.G, run.W, kind, c.checks.T_tilde);
            obs[name] = Json{{"constant_C", r.constant_C},
                             {"sigma_min", r.sigma_min},
                             {"finite", r.constant_C < kInfinitySignal}};
            ok = ok && r.constant_C < kInfinitySignal;
        }
        checks["observability"] = obs;
    }
    if (c.checks.T_tilde) {
        const TwoTimeReport r = two_time_check(run.system, run.grid, run.G, run.W, *c.checks.T_tilde, c.checks.tol_uc);
        checks["two_time"] = Json{{"T_tilde", r.t_tilde},
                                  {"restriction_ok", r.restriction_ok},
                                  {"uc_tilde", detail::uc_json(r.uc_tilde, run.problem)},
                                  {"obs_tilde_constant", r.obs_tilde.constant_C},
                                  {"conclusion", r.conclusion}};
        ok = ok && r.conclusion;
    }
    if (c.checks.kernel_N) {
        const Matrix k = kernel_N(run.system, run.problem.ops, run.grid.n_steps());
        Json basis = Json::array();
        for (Eigen::Index i = 0; i < k.cols(); ++i) basis.push_back(detail::vector_json(k.col(i)));
        checks["kernel_N"] = Json{{"dimension", k.cols()}, {"basis", basis}};
    }
    return ok;
}

// Certifications, then the solve. Config errors propagate as ConfigError.
inline RunOutcome run_config(const RunConfig& c) {
    const BuiltRun run = build_run(c);
    RunOutcome out;
    out.report["config"] = to_json(c);
    Json checks;
    const bool certified = run_checks(c, run, checks);
    out.report["checks"] = checks;
    if (!certified) {
        out.report["status"] = "certification_failed";
        out.exit_code = ExitCode::certification_failed;
        return out;
    }

    const SolveResult solved = minimize(run.problem, run.solver);
    const SolveDiagnostics& d = solved.diagnostics;
    out.report["solve"] = Json{{"method", d.method},
                               {"verdict", std::string(to_string(d.verdict))},
                               {"iterations", d.iterations},
                               {"final_residual", d.final_residual},
                               {"objective_initial", d.objective_history.front()},
                               {"objective_final", d.objective_history.back()}};
    if (d.verdict == SolveVerdict::diverged_infeasible) {
        // The minimizer only sees the blow-up; the unique-continuation map
        // supplies the certificate.
        const UCReport r = run_uc_check(run, c.checks.tol_uc);
        Json inf = detail::uc_json(r, run.problem);
        if (!r.witness) {
            inf["radius"] = nullptr;
        }
        out.report["infeasibility"] = inf;
        out.report["status"] = "diverged_infeasible";
        out.exit_code = ExitCode::diverged_infeasible;
        return out;
    }
    out.solution = recover_primal(run.problem, solved.solution);
    out.report["residuals"] = detail::residuals_json(out.solution->residuals);
    if (d.verdict == SolveVerdict::max_iters) {
        out.report["status"] = "max_iters";
        out.exit_code = ExitCode::max_iters;
    } else {
        out.report["status"] = "converged";
        out.exit_code = ExitCode::ok;
    }
    return out;
}

// t, y_1..y_n at the nodes.
inline std::string trajectory_csv(const TimeGrid& grid, const Trajectory& y) {
    std::string s = "t";
    for (Eigen::Index i = 0; i < y.node_values.rows(); ++i) s += ",y_" + std::to_string(i + 1);
    s += "\n";
    for (int k = 0; k <= grid.n_steps(); ++k) {
        s += detail::format_number(grid.node(k));
        for (Eigen::Index i = 0; i < y.node_values.rows(); ++i) s += "," + detail::format_number(y.node_values(i, k));
        s += "\n";
    }
    return s;
}

// t_mid, u_1..u_m per interval.
inline std::string control_csv(const TimeGrid& grid, const GridSignal& u) {
    std::string s = "t_mid";
    for (int i = 0; i < u.dim(); ++i) s += ",u_" + std::to_string(i + 1);
    s += "\n";
    for (int k = 0; k < grid.n_steps(); ++k) {
        s += detail::format_number(grid.midpoint(k));
        for (int i = 0; i < u.dim(); ++i) s += "," + detail::format_number(u.values(i, k));
        s += "\n";
    }
    return s;
}

// report.json always; the CSVs only when a primal solution exists.
inline void emit_report(const std::filesystem::path& dir, const RunOutcome& outcome, const TimeGrid& grid) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir.string() + "'");
    }
    detail::write_text(dir / "report.json", outcome.report.dump(2) + "\n");
    if (outcome.solution) {
        detail::write_text(dir / "trajectory.csv", trajectory_csv(grid, outcome.solution->y));
        detail::write_text(dir / "control.csv", control_csv(grid, outcome.solution->u));
    }
}

}  // namespace pcc
