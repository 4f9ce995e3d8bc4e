#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcc/errors.hpp"
#include "pcc/linalg.hpp"
#include "pcc/subspace.hpp"
#include "pcc/system.hpp"

namespace pcc {

// Point (z_T, g, w, f) of H x G x W x L^2(0,T;H). g and w are held as
// coordinates in the orthonormal bases of G and W.
struct DualVariable {
    Vector z_T;
    Vector g_coef;
    Vector w_coef;
    Matrix f;  // n x n_steps, column k is f on I_k

    static DualVariable zero(int n, int p_g, int p_w, int steps) {
        return {Vector::Zero(n), Vector::Zero(p_g), Vector::Zero(p_w), Matrix::Zero(n, steps)};
    }

    [[nodiscard]] GridSignal f_signal() const { return GridSignal(f); }

    DualVariable& operator+=(const DualVariable& o) {
        z_T += o.z_T;
        g_coef += o.g_coef;
        w_coef += o.w_coef;
        f += o.f;
        return *this;
    }
    DualVariable& operator-=(const DualVariable& o) {
        z_T -= o.z_T;
        g_coef -= o.g_coef;
        w_coef -= o.w_coef;
        f -= o.f;
        return *this;
    }
    DualVariable& operator*=(double a) {
        z_T *= a;
        g_coef *= a;
        w_coef *= a;
        f *= a;
        return *this;
    }
    friend DualVariable operator+(DualVariable a, const DualVariable& b) { return a += b; }
    friend DualVariable operator-(DualVariable a, const DualVariable& b) { return a -= b; }
    friend DualVariable operator*(double s, DualVariable a) { return a *= s; }
};

// Hilbert inner product of H x R^pG x R^pW x L^2(0,T;H).
inline double inner(const DualVariable& a, const DualVariable& b, double dt) {
    return a.z_T.dot(b.z_T) + a.g_coef.dot(b.g_coef) + a.w_coef.dot(b.w_coef) +
           dt * a.f.cwiseProduct(b.f).sum();
}

inline double norm(const DualVariable& a, double dt) { return std::sqrt(inner(a, a, dt)); }

inline bool all_finite(const DualVariable& v) {
    return all_finite(v.z_T) && all_finite(v.g_coef) && all_finite(v.w_coef) && all_finite(v.f);
}

enum class ProblemKind { approx, approx_relaxed, exact, null };

inline std::string_view to_string(ProblemKind k) {
    switch (k) {
        case ProblemKind::approx: return "approx";
        case ProblemKind::approx_relaxed: return "approx_relaxed";
        case ProblemKind::exact: return "exact";
        case ProblemKind::null: return "null";
    }
    return "?";
}

inline ProblemKind problem_kind_from_string(std::string_view s) {
    if (s == "approx") return ProblemKind::approx;
    if (s == "approx_relaxed") return ProblemKind::approx_relaxed;
    if (s == "exact") return ProblemKind::exact;
    if (s == "null") return ProblemKind::null;
    throw ConfigError("unknown problem kind '" + std::string(s) + "'");
}

inline bool is_approx(ProblemKind k) { return k == ProblemKind::approx || k == ProblemKind::approx_relaxed; }

// Raw ingredients of a control problem; make_problem() validates and
// normalizes them into ProblemData.
struct ProblemInputs {
    ProblemKind kind = ProblemKind::exact;
    LinearSystem system;
    TimeGrid grid{1.0, 2};
    std::optional<Subspace> G;  // control-signal subspace, {0} when absent
    std::optional<Subspace> W;  // state-signal subspace, {0} when absent
    std::optional<Subspace> E;  // state subspace, {0} when absent
    Vector y0;
    std::optional<Vector> y1;
    double epsilon = 0.0;
    std::optional<GridSignal> g_star;
    std::optional<GridSignal> w_star;
};

struct ProblemData {
    ProblemKind kind;
    LinearSystem system;
    TimeGrid grid;
    StepOperator ops;
    Subspace G;
    Subspace W;
    Subspace E;
    Vector y0;
    std::optional<Vector> y1;
    double epsilon;
    GridSignal g_star;
    GridSignal w_star;

    [[nodiscard]] int n() const { return system.n(); }
    [[nodiscard]] int m() const { return system.m(); }
    [[nodiscard]] int steps() const { return grid.n_steps(); }
    [[nodiscard]] double dt() const { return grid.dt(); }

    [[nodiscard]] DualVariable zero_dual() const { return DualVariable::zero(n(), G.dim(), W.dim(), steps()); }

    // Magnitude of the data, used to scale divergence bounds.
    [[nodiscard]] double data_scale() const {
        double s = std::max(1.0, y0.norm());
        if (y1) s = std::max(s, y1->norm());
        s = std::max(s, signal_norm(g_star, dt()));
        s = std::max(s, signal_norm(w_star, dt()));
        return s;
    }
};

inline ProblemData make_problem(ProblemInputs in) {
    in.system.validate();
    const int n = in.system.n();
    const int m = in.system.m();
    const Ambient g_amb = Ambient::control_signal(m, in.grid);
    const Ambient w_amb = Ambient::state_signal(n, in.grid);
    const Ambient e_amb = Ambient::state(n);

    Subspace G = in.G ? *in.G : Subspace(g_amb);
    Subspace W = in.W ? *in.W : Subspace(w_amb);
    Subspace E = in.E ? *in.E : Subspace(e_amb);
    detail::require_shape(G.ambient() == g_amb, "make_problem: G is not a control-signal subspace on this grid");
    detail::require_shape(W.ambient() == w_amb, "make_problem: W is not a state-signal subspace on this grid");
    detail::require_shape(E.ambient() == e_amb, "make_problem: E is not a state subspace");
    detail::require_shape(in.y0.size() == n, "make_problem: y0 has wrong dimension");

    if (in.kind == ProblemKind::null) {
        if (in.y1) {
            throw ConfigError("make_problem: y1 must be absent for null-control problems");
        }
    } else {
        if (!in.y1) {
            throw ConfigError("make_problem: y1 is required for approx/exact problems");
        }
        detail::require_shape(in.y1->size() == n, "make_problem: y1 has wrong dimension");
    }
    if (is_approx(in.kind)) {
        if (!(in.epsilon > 0.0) || !std::isfinite(in.epsilon)) {
            throw ConfigError("make_problem: epsilon must be finite and > 0 for approx kinds");
        }
    } else if (in.epsilon < 0.0) {
        throw ConfigError("make_problem: epsilon must be >= 0");
    }

    GridSignal g_star = in.g_star ? *in.g_star : GridSignal::zero(m, in.grid.n_steps());
    GridSignal w_star = in.w_star ? *in.w_star : GridSignal::zero(n, in.grid.n_steps());
    detail::check_signal(g_star, m, in.grid.n_steps(), "make_problem(g_star)");
    detail::check_signal(w_star, n, in.grid.n_steps(), "make_problem(w_star)");
    const double dt = in.grid.dt();
    const auto outside = [&](const Subspace& s, const GridSignal& x) {
        const GridSignal px = s.project(x);
        return signal_norm(GridSignal(x.values - px.values), dt) > 1e-10 * std::max(1.0, signal_norm(x, dt));
    };
    if (outside(G, g_star)) {
        throw ConfigError("make_problem: g_star does not lie in G");
    }
    if (outside(W, w_star)) {
        throw ConfigError("make_problem: w_star does not lie in W");
    }

    StepOperator ops = build_propagator(in.system, in.grid);
    return ProblemData{in.kind,          std::move(in.system), in.grid,         std::move(ops),
                       std::move(G),     std::move(W),         std::move(E),    std::move(in.y0),
                       std::move(in.y1), in.epsilon,           std::move(g_star), std::move(w_star)};
}

namespace detail {

inline void check_dual(const ProblemData& p, const DualVariable& v) {
    require_shape(v.z_T.size() == p.n(), "dual variable: z_T has wrong dimension");
    require_shape(v.g_coef.size() == p.G.dim(), "dual variable: g_coef has wrong dimension");
    require_shape(v.w_coef.size() == p.W.dim(), "dual variable: w_coef has wrong dimension");
    require_shape(v.f.rows() == p.n() && v.f.cols() == p.steps(), "dual variable: f has wrong shape");
}

inline double complement_norm(const Subspace& e, const Vector& z) { return (z - e.project(z)).norm(); }

}  // namespace detail

// Smooth part of the dual functional:
//   1/2 |B^T z + g|^2 + 1/2 |f + w|^2 + <y0, z(0)> [- <y1, z_T>]
//   + int <B^T z, g*> + int <f, w*>
inline double eval_J_smooth(const ProblemData& p, const DualVariable& v) {
    detail::check_dual(p, v);
    const double dt = p.dt();
    const Trajectory z = adjoint_solve(p.system, p.ops, v.z_T, v.f_signal());
    const Matrix bz = p.system.B.transpose() * z.interval_averages;
    const Matrix g = p.G.lift_signal(v.g_coef).values;
    const Matrix w = p.W.lift_signal(v.w_coef).values;

    double j = 0.5 * dt * (bz + g).squaredNorm();
    j += 0.5 * dt * (v.f + w).squaredNorm();
    j += p.y0.dot(z.initial());
    if (p.kind != ProblemKind::null) {
        j -= p.y1->dot(v.z_T);
    }
    j += dt * bz.cwiseProduct(p.g_star.values).sum();
    j += dt * v.f.cwiseProduct(p.w_star.values).sum();
    if (!std::isfinite(j)) {
        throw OverflowError("eval_J: non-finite value");
    }
    return j;
}

// Nonsmooth part: eps |(I - P_E) z_T| for approx kinds, plus eps |w| for
// the relaxed kind (|w|_{L^2} equals |w_coef| in orthonormal coordinates).
inline double eval_J_nonsmooth(const ProblemData& p, const DualVariable& v) {
    if (!is_approx(p.kind)) {
        return 0.0;
    }
    double h = p.epsilon * detail::complement_norm(p.E, v.z_T);
    if (p.kind == ProblemKind::approx_relaxed) {
        h += p.epsilon * v.w_coef.norm();
    }
    return h;
}

inline double eval_J(const ProblemData& p, const DualVariable& v) {
    const double j = eval_J_smooth(p, v) + eval_J_nonsmooth(p, v);
    if (!std::isfinite(j)) {
        throw OverflowError("eval_J: non-finite value");
    }
    return j;
}

// Block-norm terms left to the proximal step.
struct ProxDescriptor {
    double z_complement_weight = 0.0;  // eps on |(I - P_E) z_T|, 0 when absent
    double w_weight = 0.0;             // eps on |w_coef|, 0 when absent

    [[nodiscard]] bool smooth() const { return z_complement_weight == 0.0 && w_weight == 0.0; }
};

inline ProxDescriptor prox_descriptor(const ProblemData& p) {
    ProxDescriptor d;
    if (is_approx(p.kind)) {
        d.z_complement_weight = p.epsilon;
    }
    if (p.kind == ProblemKind::approx_relaxed) {
        d.w_weight = p.epsilon;
    }
    return d;
}

struct SmoothGradient {
    DualVariable gradient;  // Riesz representative in the inner product above
    ProxDescriptor prox;
};

namespace detail {

// Gradient of the smooth part. With `homogeneous` the data (y0, y1, g*, w*)
// are treated as zero, which yields the action of the quadratic form.
// The transpose chain of adjoint_solve is a forward solve driven by the
// candidate control B^T z + g + g*.
inline DualVariable smooth_gradient(const ProblemData& p, const DualVariable& v, bool homogeneous) {
    check_dual(p, v);
    const Trajectory z = adjoint_solve(p.system, p.ops, v.z_T, v.f_signal());
    const Matrix bz = p.system.B.transpose() * z.interval_averages;
    const Matrix bz_g = bz + p.G.lift_signal(v.g_coef).values;
    const Matrix f_w = v.f + p.W.lift_signal(v.w_coef).values;

    GridSignal drive(bz_g);
    Vector start = Vector::Zero(p.n());
    if (!homogeneous) {
        drive.values += p.g_star.values;
        start = p.y0;
    }
    const Trajectory y = forward_solve(p.system, p.ops, start, drive);

    DualVariable grad;
    grad.z_T = y.final();
    if (!homogeneous && p.kind != ProblemKind::null) {
        grad.z_T -= *p.y1;
    }
    grad.f = f_w - y.interval_averages;
    if (!homogeneous) {
        grad.f += p.w_star.values;
    }
    grad.g_coef = p.G.coords(GridSignal(bz_g));
    grad.w_coef = p.W.coords(GridSignal(f_w));
    return grad;
}

}  // namespace detail

inline SmoothGradient grad_smooth(const ProblemData& p, const DualVariable& v) {
    return {detail::smooth_gradient(p, v, false), prox_descriptor(p)};
}

// Q v, where 1/2 <Q v, v> is the quadratic part of the functional.
inline DualVariable apply_quadratic(const ProblemData& p, const DualVariable& v) {
    return detail::smooth_gradient(p, v, true);
}

struct Residuals {
    double final_state_error = 0.0;
    double proj_u_error = 0.0;
    double proj_y_error = 0.0;
    double proj_E_error = 0.0;
    double duality_check = 0.0;
};

struct ControlSolution {
    GridSignal u;
    Trajectory y;
    Residuals residuals;
};

// u = B^T Z + G + g*, y = forward solve from y0; the residual record reports
// how well the constraints and the y = F + W + w* dictionary hold.
inline ControlSolution recover_primal(const ProblemData& p, const DualVariable& v) {
    detail::check_dual(p, v);
    const double dt = p.dt();
    const Trajectory z = adjoint_solve(p.system, p.ops, v.z_T, v.f_signal());

    ControlSolution sol;
    sol.u = GridSignal(p.system.B.transpose() * z.interval_averages + p.G.lift_signal(v.g_coef).values +
                       p.g_star.values);
    sol.y = forward_solve(p.system, p.ops, p.y0, sol.u);

    const Vector y_T = sol.y.final();
    Residuals& r = sol.residuals;
    r.final_state_error = p.kind == ProblemKind::null ? y_T.norm() : (y_T - *p.y1).norm();
    r.proj_u_error = signal_norm(GridSignal(p.G.project(sol.u).values - p.g_star.values), dt);
    const GridSignal y_avg = sol.y.averages();
    r.proj_y_error = signal_norm(GridSignal(p.W.project(y_avg).values - p.w_star.values), dt);
    if (is_approx(p.kind)) {
        r.proj_E_error = p.E.project(Vector(y_T - *p.y1)).norm();
    }
    const Matrix dictionary = v.f + p.W.lift_signal(v.w_coef).values + p.w_star.values;
    r.duality_check = signal_norm(GridSignal(y_avg.values - dictionary), dt);
    return sol;
}

}  // namespace pcc
