#pragma once

#include <array>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcc/dual.hpp"
#include "pcc/errors.hpp"
#include "pcc/minimizer.hpp"
#include "pcc/models.hpp"
#include "pcc/observability.hpp"
#include "pcc/subspace.hpp"

namespace pcc {

using Json = nlohmann::json;
using Rows = std::vector<std::vector<double>>;

struct ModelSpec {
    std::string family = "ode";
    int n_modes = 0;
    std::array<double, 2> omega{0.0, 1.0};
    int n_quad = 0;
    Rows A;
    Rows B;
    std::string name;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct GridSpec {
    double T = 1.0;
    int n_steps = 2;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Either a literal state vector or a named modal profile.
struct StateSpec {
    std::vector<double> literal;
    int mode = 0;  // > 0 selects mode_profile(mode, amplitude)
    double amplitude = 1.0;

    [[nodiscard]] bool is_mode() const { return mode > 0; }
    friend bool operator==(const StateSpec&, const StateSpec&) = default;
};

// Generator of a signal subspace: e^{rate t} * vector on `support`, or a
// literal per-interval signal (one row per interval).
struct GeneratorSpec {
    double rate = 0.0;
    std::vector<double> vector;
    std::optional<std::array<double, 2>> support;
    Rows signal;

    [[nodiscard]] bool is_literal() const { return !signal.empty(); }
    friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct ProblemSpec {
    std::string kind = "exact";
    double epsilon = 0.0;
    StateSpec y0;
    std::optional<StateSpec> y1;
    std::vector<GeneratorSpec> G;
    std::vector<GeneratorSpec> W;
    Rows E;
    std::vector<double> g_star;  // coefficients on the raw G generators
    std::vector<double> w_star;  // coefficients on the raw W generators

    friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

struct SolverSpec {
    int max_iters = 5000;
    double grad_tol = 1e-9;
    std::optional<double> divergence_bound;

    friend bool operator==(const SolverSpec&, const SolverSpec&) = default;
};

struct ChecksSpec {
    bool uc = true;
    double tol_uc = kDefaultUcTolerance;
    std::vector<std::string> observability;
    std::optional<double> T_tilde;
    bool kernel_N = false;

    friend bool operator==(const ChecksSpec&, const ChecksSpec&) = default;
};

struct RunConfig {
    ModelSpec model;
    GridSpec grid;
    ProblemSpec problem;
    SolverSpec solver;
    ChecksSpec checks;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

// Strict object access: every key must be consumed, unknown keys are fatal.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError("'" + path_ + "' must be an object");
        }
    }

    [[nodiscard]] bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }
    [[nodiscard]] const Json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            throw ConfigError("missing key '" + child(key) + "'");
        }
        return j_.at(key);
    }
    [[nodiscard]] std::string child(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    template <class T>
    T get(const std::string& key) {
        return convert<T>(at(key), child(key));
    }
    template <class T>
    void get_to(const std::string& key, T& out) {
        if (has(key)) {
            out = convert<T>(j_.at(key), child(key));
        }
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.contains(item.key())) {
                throw ConfigError("unknown key '" + child(item.key()) + "'");
            }
        }
    }

    template <class T>
    static T convert(const Json& v, const std::string& path) {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, int>) {
                if (!v.is_number_integer()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError("");
            }
            return v.get<T>();
        } catch (const std::exception&) {
            throw ConfigError("key '" + path + "' has the wrong type");
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline StateSpec parse_state(const Json& j, const std::string& path) {
    StateSpec s;
    if (j.is_array()) {
        s.literal = ObjectReader::convert<std::vector<double>>(j, path);
        return s;
    }
    ObjectReader r(j, path);
    s.mode = r.get<int>("mode");
    r.get_to("amplitude", s.amplitude);
    r.finish();
    if (s.mode < 1) {
        throw ConfigError("key '" + path + ".mode' must be >= 1");
    }
    return s;
}

inline std::vector<GeneratorSpec> parse_generators(const Json& j, const std::string& path) {
    if (!j.is_array()) {
        throw ConfigError("'" + path + "' must be an array");
    }
    std::vector<GeneratorSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        ObjectReader r(j[i], p);
        GeneratorSpec g;
        if (r.has("signal")) {
            g.signal = r.get<Rows>("signal");
        } else {
            g.vector = r.get<std::vector<double>>("vector");
            r.get_to("rate", g.rate);
            if (r.has("support")) {
                g.support = r.get<std::array<double, 2>>("support");
            }
        }
        r.finish();
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace detail

inline RunConfig parse_run_config(const Json& root) {
    RunConfig c;
    detail::ObjectReader top(root, "");
    {
        detail::ObjectReader r(top.at("model"), "model");
        c.model.family = r.get<std::string>("family");
        if (c.model.family == "heat1d" || c.model.family == "wave1d") {
            c.model.n_modes = r.get<int>("n_modes");
            r.get_to("omega", c.model.omega);
            c.model.n_quad = 4 * c.model.n_modes;
            r.get_to("n_quad", c.model.n_quad);
        } else if (c.model.family == "ode") {
            c.model.A = r.get<Rows>("A");
            c.model.B = r.get<Rows>("B");
            r.get_to("name", c.model.name);
        } else {
            throw ConfigError("key 'model.family' must be one of heat1d, wave1d, ode");
        }
        r.finish();
    }
    {
        detail::ObjectReader r(top.at("grid"), "grid");
        c.grid.T = r.get<double>("T");
        c.grid.n_steps = r.get<int>("n_steps");
        r.finish();
    }
    {
        detail::ObjectReader r(top.at("problem"), "problem");
        c.problem.kind = r.get<std::string>("kind");
        (void)problem_kind_from_string(c.problem.kind);
        r.get_to("epsilon", c.problem.epsilon);
        c.problem.y0 = detail::parse_state(r.at("y0"), "problem.y0");
        if (r.has("y1")) {
            c.problem.y1 = detail::parse_state(r.at("y1"), "problem.y1");
        }
        if (r.has("G")) c.problem.G = detail::parse_generators(r.at("G"), "problem.G");
        if (r.has("W")) c.problem.W = detail::parse_generators(r.at("W"), "problem.W");
        r.get_to("E", c.problem.E);
        r.get_to("g_star", c.problem.g_star);
        r.get_to("w_star", c.problem.w_star);
        r.finish();
    }
    if (top.has("solver")) {
        detail::ObjectReader r(top.at("solver"), "solver");
        r.get_to("max_iters", c.solver.max_iters);
        r.get_to("grad_tol", c.solver.grad_tol);
        if (r.has("divergence_bound")) {
            c.solver.divergence_bound = r.get<double>("divergence_bound");
        }
        r.finish();
    }
    if (top.has("checks")) {
        detail::ObjectReader r(top.at("checks"), "checks");
        r.get_to("uc", c.checks.uc);
        r.get_to("tol_uc", c.checks.tol_uc);
        r.get_to("observability", c.checks.observability);
        for (const auto& k : c.checks.observability) {
            (void)observability_kind_from_string(k);
        }
        if (r.has("T_tilde")) {
            c.checks.T_tilde = r.get<double>("T_tilde");
        }
        r.get_to("kernel_N", c.checks.kernel_N);
        r.finish();
    }
    top.finish();
    return c;
}

inline RunConfig parse_run_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_run_config(j);
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config_text(ss.str());
}

namespace detail {

inline Json state_to_json(const StateSpec& s) {
    if (s.is_mode()) {
        return Json{{"mode", s.mode}, {"amplitude", s.amplitude}};
    }
    return Json(s.literal);
}

inline Json generators_to_json(const std::vector<GeneratorSpec>& gens) {
    Json out = Json::array();
    for (const auto& g : gens) {
        Json e = Json::object();
        if (g.is_literal()) {
            e["signal"] = g.signal;
        } else {
            e["rate"] = g.rate;
            e["vector"] = g.vector;
            if (g.support) e["support"] = *g.support;
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace detail

// Canonical echo; parse_run_config(to_json(c)) == c.
inline Json to_json(const RunConfig& c) {
    Json model = Json::object();
    model["family"] = c.model.family;
    if (c.model.family == "ode") {
        model["A"] = c.model.A;
        model["B"] = c.model.B;
        model["name"] = c.model.name;
    } else {
        model["n_modes"] = c.model.n_modes;
        model["omega"] = c.model.omega;
        model["n_quad"] = c.model.n_quad;
    }
    Json problem = Json::object();
    problem["kind"] = c.problem.kind;
    problem["epsilon"] = c.problem.epsilon;
    problem["y0"] = detail::state_to_json(c.problem.y0);
    if (c.problem.y1) problem["y1"] = detail::state_to_json(*c.problem.y1);
    problem["G"] = detail::generators_to_json(c.problem.G);
    problem["W"] = detail::generators_to_json(c.problem.W);
    problem["E"] = c.problem.E;
    problem["g_star"] = c.problem.g_star;
    problem["w_star"] = c.problem.w_star;
    Json solver = Json::object();
    solver["max_iters"] = c.solver.max_iters;
    solver["grad_tol"] = c.solver.grad_tol;
    if (c.solver.divergence_bound) solver["divergence_bound"] = *c.solver.divergence_bound;
    Json checks = Json::object();
    checks["uc"] = c.checks.uc;
    checks["tol_uc"] = c.checks.tol_uc;
    checks["observability"] = c.checks.observability;
    if (c.checks.T_tilde) checks["T_tilde"] = *c.checks.T_tilde;
    checks["kernel_N"] = c.checks.kernel_N;
    return Json{{"model", model},
                {"grid", {{"T", c.grid.T}, {"n_steps", c.grid.n_steps}}},
                {"problem", problem},
                {"solver", solver},
                {"checks", checks}};
}

// Objects assembled from a RunConfig.
struct BuiltRun {
    std::optional<Model> model;  // set for the PDE families
    LinearSystem system;
    TimeGrid grid{1.0, 2};
    Subspace G{Ambient::state(0)};
    Subspace W{Ambient::state(0)};
    Subspace E{Ambient::state(0)};
    ProblemData problem;
    SolverOptions solver;
};

namespace detail {

inline Matrix rows_to_matrix(const Rows& rows, const std::string& what) {
    if (rows.empty()) {
        throw ConfigError("'" + what + "' must be a non-empty list of rows");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) {
            throw ConfigError("'" + what + "' has ragged rows");
        }
        for (std::size_t k = 0; k < rows[i].size(); ++k) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
    }
    return m;
}

inline Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vector build_state(const StateSpec& s, const std::optional<Model>& model, int n, const std::string& what) {
    if (s.is_mode()) {
        if (!model) {
            throw ConfigError("'" + what + "': modal profiles need a heat1d or wave1d model");
        }
        try {
            return mode_profile(*model, s.mode, s.amplitude);
        } catch (const InputError& e) {
            throw ConfigError("'" + what + "': " + e.what());
        }
    }
    if (static_cast<int>(s.literal.size()) != n) {
        throw ConfigError("'" + what + "' must have " + std::to_string(n) + " entries");
    }
    return to_vector(s.literal);
}

inline std::vector<GridSignal> build_generators(const std::vector<GeneratorSpec>& gens, int dim,
                                                const TimeGrid& grid, const std::string& what) {
    std::vector<GridSignal> out;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        const auto& g = gens[i];
        const std::string p = what + "[" + std::to_string(i) + "]";
        if (g.is_literal()) {
            if (static_cast<int>(g.signal.size()) != grid.n_steps()) {
                throw ConfigError("'" + p + ".signal' must have one row per interval");
            }
            GridSignal s = GridSignal::zero(dim, grid.n_steps());
            for (int k = 0; k < grid.n_steps(); ++k) {
                if (static_cast<int>(g.signal[k].size()) != dim) {
                    throw ConfigError("'" + p + ".signal' rows must have " + std::to_string(dim) + " entries");
                }
                s.values.col(k) = to_vector(g.signal[k]);
            }
            out.push_back(std::move(s));
        } else {
            if (static_cast<int>(g.vector.size()) != dim) {
                throw ConfigError("'" + p + ".vector' must have " + std::to_string(dim) + " entries");
            }
            const auto support = g.support.value_or(std::array<double, 2>{0.0, grid.horizon()});
            if (!(support[0] < support[1])) {
                throw ConfigError("'" + p + ".support' must satisfy a < b");
            }
            out.push_back(exponential_profile(grid, g.rate, to_vector(g.vector), support[0], support[1]));
        }
    }
    return out;
}

inline GridSignal combine(const std::vector<GridSignal>& gens, const std::vector<double>& coef, int dim,
                          int steps, const std::string& what) {
    GridSignal out = GridSignal::zero(dim, steps);
    if (coef.empty()) {
        return out;
    }
    if (coef.size() != gens.size()) {
        throw ConfigError("'" + what + "' must have one coefficient per generator");
    }
    for (std::size_t i = 0; i < gens.size(); ++i) {
        out.values += coef[i] * gens[i].values;
    }
    return out;
}

}  // namespace detail

// Builds the model, subspaces and problem. Every inconsistency surfaces as
// ConfigError so the CLI can map it to one exit code.
inline BuiltRun build_run(const RunConfig& c) {
    try {
        std::optional<Model> model;
        LinearSystem system;
        if (c.model.family == "heat1d") {
            model = make_heat1d(c.model.n_modes, c.model.omega[0], c.model.omega[1], c.model.n_quad);
        } else if (c.model.family == "wave1d") {
            model = make_wave1d(c.model.n_modes, c.model.omega[0], c.model.omega[1], c.model.n_quad);
        }
        if (model) {
            system = model->system;
        } else {
            system = make_ode(detail::rows_to_matrix(c.model.A, "model.A"), detail::rows_to_matrix(c.model.B, "model.B"),
                              c.model.name.empty() ? "ode" : c.model.name);
        }
        const TimeGrid grid(c.grid.T, c.grid.n_steps);
        const int n = system.n();
        const int m = system.m();
        const int steps = grid.n_steps();

        const auto g_raw = detail::build_generators(c.problem.G, m, grid, "problem.G");
        const auto w_raw = detail::build_generators(c.problem.W, n, grid, "problem.W");
        std::vector<Vector> e_raw;
        for (std::size_t i = 0; i < c.problem.E.size(); ++i) {
            if (static_cast<int>(c.problem.E[i].size()) != n) {
                throw ConfigError("'problem.E[" + std::to_string(i) + "]' must have " + std::to_string(n) + " entries");
            }
            e_raw.push_back(detail::to_vector(c.problem.E[i]));
        }

        ProblemInputs in;
        in.kind = problem_kind_from_string(c.problem.kind);
        in.system = system;
        in.grid = grid;
        in.G = orthonormalize(g_raw, Ambient::control_signal(m, grid));
        in.W = orthonormalize(w_raw, Ambient::state_signal(n, grid));
        in.E = orthonormalize(e_raw, Ambient::state(n));
        in.y0 = detail::build_state(c.problem.y0, model, n, "problem.y0");
        if (c.problem.y1) {
            in.y1 = detail::build_state(*c.problem.y1, model, n, "problem.y1");
        }
        in.epsilon = c.problem.epsilon;
        in.g_star = detail::combine(g_raw, c.problem.g_star, m, steps, "problem.g_star");
        in.w_star = detail::combine(w_raw, c.problem.w_star, n, steps, "problem.w_star");

        SolverOptions opts;
        opts.max_iters = c.solver.max_iters;
        opts.grad_tol = c.solver.grad_tol;
        opts.divergence_bound = c.solver.divergence_bound;
        opts.validate();

        BuiltRun run{model, system, grid, *in.G, *in.W, *in.E, make_problem(std::move(in)), opts};
        return run;
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace pcc
