#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcc/dual.hpp"
#include "pcc/errors.hpp"
#include "pcc/linalg.hpp"
#include "pcc/observability.hpp"

namespace pcc {

// Algorithm for the kinds with norm terms. `reduced` eliminates the purely
// quadratic blocks (g, f) exactly and solves the remaining small composite
// problem in (z_T, w) through its multiplier equations; `proximal_gradient`
// iterates on the full variable.
enum class ApproxMethod { reduced, proximal_gradient };

inline std::string_view to_string(ApproxMethod m) {
    return m == ApproxMethod::reduced ? "reduced" : "proximal_gradient";
}

inline ApproxMethod approx_method_from_string(std::string_view s) {
    if (s == "reduced") return ApproxMethod::reduced;
    if (s == "proximal_gradient") return ApproxMethod::proximal_gradient;
    throw ConfigError("unknown approx method '" + std::string(s) + "'");
}

// Algorithm for the purely quadratic kinds (exact, null).
enum class QuadraticMethod { conjugate_gradient, reduced };

inline std::string_view to_string(QuadraticMethod m) {
    return m == QuadraticMethod::reduced ? "reduced" : "conjugate_gradient";
}

inline QuadraticMethod quadratic_method_from_string(std::string_view s) {
    if (s == "reduced") return QuadraticMethod::reduced;
    if (s == "conjugate_gradient") return QuadraticMethod::conjugate_gradient;
    throw ConfigError("unknown quadratic method '" + std::string(s) + "'");
}

// grad_tol is relative: iterations stop once the fixed-point residual is
// below grad_tol * max(1, |grad J_smooth(0)|).
struct SolverOptions {
    int max_iters = 5000;
    double grad_tol = 1e-9;
    std::optional<double> divergence_bound;   // defaults to 1e6 * data scale
    int refresh_every = 50;                   // CG: replace the recursive residual by the true one
    ApproxMethod approx_method = ApproxMethod::reduced;
    QuadraticMethod quadratic_method = QuadraticMethod::conjugate_gradient;

    void validate() const {
        if (max_iters < 1) {
            throw ConfigError("solver.max_iters must be >= 1");
        }
        if (!(grad_tol > 0.0) || !std::isfinite(grad_tol)) {
            throw ConfigError("solver.grad_tol must be finite and > 0");
        }
        if (divergence_bound && !(*divergence_bound > 0.0)) {
            throw ConfigError("solver.divergence_bound must be > 0");
        }
        if (refresh_every < 1) {
            throw ConfigError("solver.refresh_every must be >= 1");
        }
    }
};

enum class SolveVerdict { converged, max_iters, diverged_infeasible };

inline std::string_view to_string(SolveVerdict v) {
    switch (v) {
        case SolveVerdict::converged: return "converged";
        case SolveVerdict::max_iters: return "max_iters";
        case SolveVerdict::diverged_infeasible: return "diverged_infeasible";
    }
    return "?";
}

struct SolveDiagnostics {
    int iterations = 0;
    double final_residual = 0.0;
    std::vector<double> objective_history;  // entry 0 is the starting point
    SolveVerdict verdict = SolveVerdict::max_iters;
    std::string method;
};

struct SolveResult {
    DualVariable solution;
    SolveDiagnostics diagnostics;
};

namespace detail {

inline double divergence_limit(const ProblemData& p, const SolverOptions& opts) {
    return opts.divergence_bound ? *opts.divergence_bound : 1e6 * p.data_scale();
}

// Removes the component of z_T in span(kernel) (orthonormal columns).
inline void project_out(DualVariable& v, const Matrix& kernel) {
    if (kernel.cols() > 0) {
        v.z_T -= kernel * (kernel.transpose() * v.z_T);
    }
}

// Conjugate gradient in the Hilbert metric of the dual space on the
// quadratic-plus-linear functional. Zero or negative curvature along a
// search direction with a nonzero residual means the functional is
// unbounded below, which is reported as infeasibility.
inline SolveResult minimize_cg(const ProblemData& p, const SolverOptions& opts) {
    const double dt = p.dt();
    const double limit = divergence_limit(p, opts);
    Matrix kernel(p.n(), 0);
    if (p.kind == ProblemKind::null) {
        kernel = kernel_N(p.system, p.ops, p.steps());
    }

    SolveResult out;
    out.diagnostics.method = "conjugate_gradient";
    DualVariable& x = out.solution;
    x = p.zero_dual();
    double objective = eval_J(p, x);
    out.diagnostics.objective_history.push_back(objective);

    DualVariable r = grad_smooth(p, x).gradient;
    r *= -1.0;
    project_out(r, kernel);
    double rr = inner(r, r, dt);
    const double stop = opts.grad_tol * std::max(1.0, std::sqrt(rr));
    DualVariable d = r;
    double max_curvature = 0.0;

    int it = 0;
    for (;; ++it) {
        const double res = std::sqrt(rr);
        out.diagnostics.final_residual = res;
        if (res <= stop) {
            // Confirm against the true gradient before declaring success.
            DualVariable check = grad_smooth(p, x).gradient;
            project_out(check, kernel);
            const double true_res = norm(check, dt);
            out.diagnostics.final_residual = true_res;
            if (true_res <= stop || it >= opts.max_iters) {
                out.diagnostics.verdict = true_res <= stop ? SolveVerdict::converged : SolveVerdict::max_iters;
                break;
            }
            r = -1.0 * check;
            rr = inner(r, r, dt);
            d = r;
        }
        if (it >= opts.max_iters) {
            out.diagnostics.verdict = SolveVerdict::max_iters;
            break;
        }
        DualVariable qd = apply_quadratic(p, d);
        project_out(qd, kernel);
        const double curvature = inner(d, qd, dt);
        const double dd = inner(d, d, dt);
        max_curvature = std::max(max_curvature, curvature / dd);
        if (!(curvature > 1e-14 * max_curvature * dd) || !std::isfinite(curvature)) {
            out.diagnostics.verdict = SolveVerdict::diverged_infeasible;
            break;
        }
        const double alpha = rr / curvature;
        x += alpha * d;
        // J(x + a d) = J(x) - a <r, d> + a^2/2 <Q d, d>
        objective += -alpha * inner(r, d, dt) + 0.5 * alpha * alpha * curvature;
        out.diagnostics.objective_history.push_back(objective);
        if (!all_finite(x) || norm(x, dt) > limit) {
            out.diagnostics.verdict = SolveVerdict::diverged_infeasible;
            ++it;
            break;
        }
        if ((it + 1) % opts.refresh_every == 0) {
            // Residual replacement: the recursion drifts from the true
            // gradient, the search direction is kept.
            r = grad_smooth(p, x).gradient;
            r *= -1.0;
            project_out(r, kernel);
        } else {
            r -= alpha * qd;
        }
        const double rr_next = inner(r, r, dt);
        d = r + (rr_next / rr) * d;
        rr = rr_next;
    }
    out.diagnostics.iterations = it;
    return out;
}

// Block soft-shrinkage x -> max(0, 1 - tau / |x|) x.
inline void shrink(Eigen::Ref<Vector> x, double tau) {
    const double nx = x.norm();
    if (nx <= tau) {
        x.setZero();
    } else {
        x *= 1.0 - tau / nx;
    }
}

inline DualVariable prox(const ProblemData& p, const ProxDescriptor& desc, DualVariable v, double step) {
    if (desc.z_complement_weight > 0.0) {
        const Vector inside = p.E.project(v.z_T);
        Vector outside = v.z_T - inside;
        shrink(outside, desc.z_complement_weight * step);
        v.z_T = inside + outside;
    }
    if (desc.w_weight > 0.0) {
        shrink(v.w_coef, desc.w_weight * step);
    }
    return v;
}

// Proximal gradient with Barzilai-Borwein trial steps and backtracking on
// <d, grad(x+) - grad(x)> <= |d|^2 / t, which makes every accepted step a
// descent step for the full objective. The smooth part is quadratic, so
// F_s(x+) = F_s(x) + <grad(x) + grad(x+), d> / 2 exactly.
inline SolveResult minimize_prox(const ProblemData& p, const SolverOptions& opts) {
    const double dt = p.dt();
    const double limit = divergence_limit(p, opts);
    const ProxDescriptor desc = prox_descriptor(p);

    SolveResult out;
    out.diagnostics.method = "proximal_gradient_bb";
    DualVariable& x = out.solution;
    x = p.zero_dual();
    double smooth = eval_J_smooth(p, x);
    double nonsmooth = eval_J_nonsmooth(p, x);
    out.diagnostics.objective_history.push_back(smooth + nonsmooth);
    DualVariable g = grad_smooth(p, x).gradient;
    const double stop = opts.grad_tol * std::max(1.0, norm(g, dt));
    double t = 1.0;

    int it = 0;
    out.diagnostics.verdict = SolveVerdict::max_iters;
    for (; it < opts.max_iters; ++it) {
        DualVariable x_next;
        DualVariable g_next;
        DualVariable d;
        double dgd = 0.0;
        double dd = 0.0;
        for (int backtrack = 0;; ++backtrack) {
            x_next = prox(p, desc, x - t * g, t);
            d = x_next - x;
            dd = inner(d, d, dt);
            if (dd == 0.0) {
                break;
            }
            g_next = grad_smooth(p, x_next).gradient;
            dgd = inner(d, g_next - g, dt);
            if (dgd <= dd / t || backtrack >= 60) {
                break;
            }
            t *= 0.5;
        }
        const double residual = std::sqrt(dd) / t;
        out.diagnostics.final_residual = residual;
        if (dd == 0.0) {
            out.diagnostics.verdict = SolveVerdict::converged;
            break;
        }
        const DualVariable dg = g_next - g;
        const double dgdg = inner(dg, dg, dt);
        smooth += 0.5 * inner(g + g_next, d, dt);
        nonsmooth = eval_J_nonsmooth(p, x_next);
        x = std::move(x_next);
        g = std::move(g_next);
        out.diagnostics.objective_history.push_back(smooth + nonsmooth);
        if (!all_finite(x) || norm(x, dt) > limit) {
            out.diagnostics.verdict = SolveVerdict::diverged_infeasible;
            ++it;
            break;
        }
        if (residual <= stop) {
            out.diagnostics.verdict = SolveVerdict::converged;
            ++it;
            break;
        }
        // Alternate the two BB step lengths; grow when curvature along d vanishes.
        if (dgd > 0.0 && dgdg > 0.0) {
            t = (it % 2 == 0) ? dd / dgd : dgd / dgdg;
        } else {
            t *= 2.0;
        }
    }
    out.diagnostics.iterations = it;
    return out;
}


struct InnerSolve {
    DualVariable v;
    int iterations = 0;
};

// Minimizes the smooth part over (g_coef, f) with z_T and w_coef frozen.
// This block of the quadratic form is uniformly positive (the |f + w|^2
// term), so plain CG converges quickly.
inline InnerSolve minimize_quadratic_blocks(const ProblemData& p, DualVariable v, bool homogeneous, int max_iters) {
    const double dt = p.dt();
    const auto keep_inner = [](DualVariable& d) {
        d.z_T.setZero();
        d.w_coef.setZero();
    };
    DualVariable r = homogeneous ? apply_quadratic(p, v) : grad_smooth(p, v).gradient;
    r *= -1.0;
    keep_inner(r);
    double rr = inner(r, r, dt);
    const double stop = 1e-14 * std::max(1.0, std::sqrt(rr));
    DualVariable d = r;
    InnerSolve out;
    while (std::sqrt(rr) > stop && out.iterations < max_iters) {
        DualVariable qd = apply_quadratic(p, d);
        keep_inner(qd);
        const double curvature = inner(d, qd, dt);
        if (!(curvature > 0.0)) {
            break;
        }
        const double alpha = rr / curvature;
        v += alpha * d;
        r -= alpha * qd;
        const double rr_next = inner(r, r, dt);
        d = r + (rr_next / rr) * d;
        rr = rr_next;
        ++out.iterations;
    }
    out.v = std::move(v);
    return out;
}

// Term weight * |U^T x| with orthonormal U; blocks are mutually orthogonal.
struct NormBlock {
    Matrix U;
    double weight = 0.0;
};

// argmin 1/2 x^T H x - c^T x + sum_i lambda_i / 2 |U_i^T x|^2, where an
// infinite lambda_i imposes U_i^T x = 0. Empty result when the system is
// not positive definite.
inline std::optional<Vector> penalized_solution(const Matrix& H, const Vector& c, const std::vector<NormBlock>& blocks,
                                                const std::vector<double>& lambda, const Matrix& pinned) {
    const Eigen::Index d = H.rows();
    Matrix k = H;
    Matrix fixed = pinned;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Matrix& u = blocks[i].U;
        if (std::isinf(lambda[i])) {
            fixed.conservativeResize(d, fixed.cols() + u.cols());
            fixed.rightCols(u.cols()) = u;
        } else if (lambda[i] > 0.0) {
            k += lambda[i] * u * u.transpose();
        }
    }
    Matrix z = Matrix::Identity(d, d);
    if (fixed.cols() > 0) {
        const Matrix q = Eigen::HouseholderQR<Matrix>(fixed).householderQ() * Matrix::Identity(d, d);
        z = q.rightCols(d - fixed.cols());
    }
    if (z.cols() == 0) {
        return Vector::Zero(d);
    }
    const Matrix kz = z.transpose() * k * z;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (kz + kz.transpose()));
    const Vector& ev = eig.eigenvalues();
    if (!(ev(0) > 1e-14 * std::max(1.0, ev(ev.size() - 1)))) {
        return std::nullopt;
    }
    const Matrix& vecs = eig.eigenvectors();
    const Vector y = vecs * ((vecs.transpose() * (z.transpose() * c)).cwiseQuotient(ev));
    return Vector(z * y);
}

// Norm of the multiplier of block i: lambda_i |U_i^T x|, or |U_i^T (c - H x)|
// when the block is pinned to zero.
inline double block_multiplier(const Matrix& H, const Vector& c, const NormBlock& b, double lambda, const Vector& x) {
    if (std::isinf(lambda)) {
        return (b.U.transpose() * (c - H * x)).norm();
    }
    return lambda * (b.U.transpose() * x).norm();
}

// Optimality of the composite problem: for each block either U^T x = 0 with
// multiplier norm <= weight, or multiplier norm == weight. The multiplier
// norm grows monotonically with lambda, so each level is a bisection in
// log(lambda) nested over the later blocks.
inline std::optional<Vector> solve_blocks(const Matrix& H, const Vector& c, const std::vector<NormBlock>& blocks,
                                          const Matrix& pinned, std::vector<double>& lambda, std::size_t level) {
    if (level == blocks.size()) {
        return penalized_solution(H, c, blocks, lambda, pinned);
    }
    const NormBlock& b = blocks[level];
    const auto eval = [&](double lam) -> std::optional<std::pair<Vector, double>> {
        lambda[level] = lam;
        auto x = solve_blocks(H, c, blocks, pinned, lambda, level + 1);
        if (!x) return std::nullopt;
        return std::make_pair(*x, block_multiplier(H, c, b, lam, *x));
    };
    const double inf = std::numeric_limits<double>::infinity();
    const auto at_inf = eval(inf);
    if (at_inf && at_inf->second <= b.weight) {
        lambda[level] = inf;
        return at_inf->first;
    }
    double lo = -40.0;  // log10(lambda)
    double hi = 0.0;
    std::optional<std::pair<Vector, double>> at_hi;
    for (;; hi += 2.0) {
        at_hi = eval(std::pow(10.0, hi));
        if (!at_hi || at_hi->second >= b.weight || hi >= 40.0) break;
    }
    if (!at_hi) {
        return std::nullopt;
    }
    std::optional<std::pair<Vector, double>> best = at_hi;
    while (hi - lo > 1e-15 * std::max(1.0, std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        auto at_mid = eval(std::pow(10.0, mid));
        if (!at_mid) return std::nullopt;
        if (at_mid->second < b.weight) {
            lo = mid;
        } else {
            hi = mid;
            best = std::move(at_mid);
        }
    }
    lambda[level] = std::pow(10.0, hi);
    return best->first;
}

// Fixed-point residual |x - prox(x - grad(x))| of the proximal map with unit step.
inline double fixed_point_residual(const ProblemData& p, const DualVariable& v) {
    const DualVariable g = grad_smooth(p, v).gradient;
    const DualVariable moved = prox(p, prox_descriptor(p), v - g, 1.0);
    return norm(moved - v, p.dt());
}

// The smooth part restricted to the (z_T, w_coef) blocks after eliminating
// (g_coef, f) is 1/2 x^T H x - c^T x + const. Column i of H is the frozen-
// block gradient at the inner minimizer for x = e_i.
inline SolveResult minimize_reduced(const ProblemData& p, const SolverOptions& opts) {
    const double dt = p.dt();
    const int n = p.n();
    const int p_w = p.W.dim();
    const int dim = n + p_w;
    const double limit = divergence_limit(p, opts);

    SolveResult out;
    const DualVariable zero = p.zero_dual();
    out.diagnostics.objective_history.push_back(eval_J(p, zero));
    const double stop = opts.grad_tol * std::max(1.0, norm(grad_smooth(p, zero).gradient, dt));
    out.diagnostics.method = "reduced_dense";

    const auto outer_part = [&](const DualVariable& g) {
        Vector o(dim);
        o << g.z_T, g.w_coef;
        return o;
    };
    const int inner_cap = std::max(opts.max_iters, 1);
    InnerSolve base = minimize_quadratic_blocks(p, zero, false, inner_cap);
    int work = base.iterations;
    const Vector c = -outer_part(grad_smooth(p, base.v).gradient);
    Matrix H(dim, dim);
    std::vector<DualVariable> columns;
    columns.reserve(dim);
    for (int i = 0; i < dim; ++i) {
        DualVariable e = zero;
        if (i < n) {
            e.z_T(i) = 1.0;
        } else {
            e.w_coef(i - n) = 1.0;
        }
        InnerSolve col = minimize_quadratic_blocks(p, e, true, inner_cap);
        work += col.iterations;
        H.col(i) = outer_part(apply_quadratic(p, col.v));
        columns.push_back(std::move(col.v));
    }
    H = 0.5 * (H + H.transpose());

    std::vector<NormBlock> blocks;
    const ProxDescriptor desc = prox_descriptor(p);
    if (desc.z_complement_weight > 0.0) {
        const Matrix pe = p.E.basis() * p.E.basis().transpose();
        const Matrix complement = numerical_kernel(pe, kRankTolerance, 1.0);
        if (complement.cols() > 0) {
            Matrix u = Matrix::Zero(dim, complement.cols());
            u.topRows(n) = complement;
            blocks.push_back({u, desc.z_complement_weight});
        }
    }
    if (desc.w_weight > 0.0 && p_w > 0) {
        Matrix u = Matrix::Zero(dim, p_w);
        u.bottomRows(p_w) = Matrix::Identity(p_w, p_w);
        blocks.push_back({u, desc.w_weight});
    }
    // Null kind: directions of kernel_N leave the functional unchanged and
    // are pinned to zero (the quotient by N).
    Matrix pinned(dim, 0);
    if (p.kind == ProblemKind::null) {
        const Matrix kernel = kernel_N(p.system, p.ops, p.steps());
        pinned = Matrix::Zero(dim, kernel.cols());
        pinned.topRows(n) = kernel;
    }
    std::vector<double> lambda(blocks.size(), 0.0);
    const std::optional<Vector> x = solve_blocks(H, c, blocks, pinned, lambda, 0);
    out.diagnostics.iterations = work;
    if (!x || !x->allFinite()) {
        out.solution = zero;
        out.diagnostics.verdict = SolveVerdict::diverged_infeasible;
        out.diagnostics.final_residual = kInfinitySignal;
        return out;
    }
    DualVariable v = base.v;
    for (int i = 0; i < dim; ++i) {
        v += (*x)(i) * columns[static_cast<std::size_t>(i)];
    }
    out.solution = std::move(v);
    if (!all_finite(out.solution) || norm(out.solution, dt) > limit) {
        out.diagnostics.verdict = SolveVerdict::diverged_infeasible;
        out.diagnostics.final_residual = kInfinitySignal;
        return out;
    }
    out.diagnostics.objective_history.push_back(eval_J(p, out.solution));
    out.diagnostics.final_residual = fixed_point_residual(p, out.solution);
    out.diagnostics.verdict =
        out.diagnostics.final_residual <= stop ? SolveVerdict::converged : SolveVerdict::max_iters;
    return out;
}

}  // namespace detail

inline SolveResult minimize(const ProblemData& p, const SolverOptions& opts = {}) {
    opts.validate();
    if (is_approx(p.kind)) {
        return opts.approx_method == ApproxMethod::reduced ? detail::minimize_reduced(p, opts)
                                                           : detail::minimize_prox(p, opts);
    }
    return opts.quadratic_method == QuadraticMethod::reduced ? detail::minimize_reduced(p, opts)
                                                             : detail::minimize_cg(p, opts);
}

// Lower bound (|z_T|^2 + |g|^2 + |w|^2) / |z_T| on how far constrained
// trajectories from y0 = 0 stay from -z_T, for a kernel element of the
// unique-continuation map. kInfinitySignal when z_T = 0 but (g, w) != 0.
inline double certify_infeasibility(const ProblemData& p, const UcWitness& witness) {
    detail::require_shape(witness.z_T.size() == p.n() && witness.g_coef.size() == p.G.dim() &&
                              witness.w_coef.size() == p.W.dim(),
                          "certify_infeasibility: witness does not match the problem");
    const double zz = witness.z_T.squaredNorm();
    const double rest = witness.g_coef.squaredNorm() + witness.w_coef.squaredNorm();
    if (zz == 0.0 && rest == 0.0) {
        throw InvalidWitnessError("certify_infeasibility: zero witness");
    }
    if (zz == 0.0) {
        return kInfinitySignal;
    }
    return (zz + rest) / std::sqrt(zz);
}

}  // namespace pcc
