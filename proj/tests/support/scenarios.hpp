#pragma once

// Problem builders shared by the unit tests and the acceptance binary.

#include <vector>

#include "support/oracles.hpp"

namespace scenario {

using namespace pcc;

inline LinearSystem scalar_system(double a = 0.0, double b = 1.0) {
    return make_ode(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), "scalar");
}

// y' = u on (0,1), y0 = 1, y(1) = 0, no constraints.
inline ProblemData scalar_null(int steps) {
    ProblemInputs in;
    in.kind = ProblemKind::null;
    in.system = scalar_system();
    in.grid = TimeGrid(1.0, steps);
    in.y0 = Vector::Constant(1, 1.0);
    return make_problem(in);
}

// y' = u, y(0) = 0, y(1) = 1 with the mean of u forced to zero.
inline ProblemData constants_infeasible(int steps = 16) {
    ProblemInputs in;
    in.kind = ProblemKind::exact;
    in.system = scalar_system();
    in.grid = TimeGrid(1.0, steps);
    in.G = orthonormalize(std::vector<GridSignal>{GridSignal(Matrix::Ones(1, steps))},
                          Ambient::control_signal(1, in.grid));
    in.y0 = Vector::Zero(1);
    in.y1 = Vector::Constant(1, 1.0);
    return make_problem(in);
}

struct Constrained {
    ProblemData problem;
    Subspace G;
    Subspace W;
};

// Two exponential profiles per subspace with random directions; g* and w*
// random combinations of them.
inline Constrained with_random_constraints(ProblemInputs in, oracle::Gen& gen, int p_g, int p_w,
                                           double g_support_begin = 0.0, double g_support_end = -1.0) {
    const int n = in.system.n();
    const int m = in.system.m();
    const TimeGrid grid = in.grid;
    if (g_support_end < 0.0) g_support_end = grid.horizon();
    std::vector<GridSignal> g_raw;
    std::vector<GridSignal> w_raw;
    for (int i = 0; i < p_g; ++i) {
        g_raw.push_back(exponential_profile(grid, gen.uniform(-1.0, 1.0), gen.vector(m), g_support_begin, g_support_end));
    }
    for (int i = 0; i < p_w; ++i) {
        w_raw.push_back(exponential_profile(grid, gen.uniform(-1.0, 1.0), gen.vector(n)));
    }
    const Subspace G = orthonormalize(g_raw, Ambient::control_signal(m, grid));
    const Subspace W = orthonormalize(w_raw, Ambient::state_signal(n, grid));
    in.G = G;
    in.W = W;
    in.g_star = G.lift_signal(gen.vector(G.dim()));
    in.w_star = W.lift_signal(gen.vector(W.dim()));
    return {make_problem(in), G, W};
}

inline ProblemInputs heat_inputs(ProblemKind kind, oracle::Gen& gen, int steps = 100) {
    const Model model = make_heat1d(8, 0.3, 0.7, 32);
    ProblemInputs in;
    in.kind = kind;
    in.system = model.system;
    in.grid = TimeGrid(1.0, steps);
    in.y0 = gen.vector(8) / std::sqrt(8.0);
    if (kind != ProblemKind::null) in.y1 = gen.vector(8) / std::sqrt(8.0);
    return in;
}

// Random small ODE problem; callers check unique continuation.
inline Constrained random_small(ProblemKind kind, oracle::Gen& gen) {
    const int n = gen.integer(1, 4);
    const int m = gen.integer(1, 2);
    const int steps = gen.integer(8, 40);
    ProblemInputs in;
    in.kind = kind;
    in.system = make_ode(gen.stable_ish(n, 1.0), gen.matrix(n, m), "random");
    in.grid = TimeGrid(gen.uniform(0.5, 2.0), steps);
    in.y0 = gen.vector(n);
    if (kind != ProblemKind::null) in.y1 = gen.vector(n);
    if (is_approx(kind)) in.epsilon = gen.uniform(0.05, 0.3);
    return with_random_constraints(in, gen, gen.integer(0, 2), gen.integer(0, 2));
}

// Same family as random_small, but every datum is read off one random
// reference control, so the constraint set is nonempty with a control of
// moderate norm. For null kinds y0 is chosen so the reference reaches zero.
inline Constrained random_feasible(ProblemKind kind, oracle::Gen& gen) {
    const int n = gen.integer(1, 4);
    const int m = gen.integer(1, 2);
    const int steps = gen.integer(8, 40);
    const LinearSystem sys = make_ode(gen.stable_ish(n, 1.0), gen.matrix(n, m), "random");
    const TimeGrid grid(gen.uniform(0.5, 2.0), steps);
    const StepOperator ops = build_propagator(sys, grid);
    const GridSignal u_ref = gen.signal(m, steps);

    Vector y0 = gen.vector(n);
    if (kind == ProblemKind::null) {
        const Vector reached = forward_solve(sys, ops, Vector::Zero(n), u_ref).final();
        Matrix flow = Matrix::Identity(n, n);
        for (int k = 0; k < steps; ++k) flow = ops.E * flow;
        y0 = -flow.partialPivLu().solve(reached);
    }
    const Trajectory y_ref = forward_solve(sys, ops, y0, u_ref);

    std::vector<GridSignal> g_raw;
    std::vector<GridSignal> w_raw;
    const int p_g = gen.integer(0, 2);
    const int p_w = gen.integer(0, 2);
    for (int i = 0; i < p_g; ++i) g_raw.push_back(exponential_profile(grid, gen.uniform(-1.0, 1.0), gen.vector(m)));
    for (int i = 0; i < p_w; ++i) w_raw.push_back(exponential_profile(grid, gen.uniform(-1.0, 1.0), gen.vector(n)));

    ProblemInputs in;
    in.kind = kind;
    in.system = sys;
    in.grid = grid;
    in.y0 = y0;
    if (kind != ProblemKind::null) in.y1 = y_ref.final();
    const Subspace G = orthonormalize(g_raw, Ambient::control_signal(m, grid));
    const Subspace W = orthonormalize(w_raw, Ambient::state_signal(n, grid));
    in.G = G;
    in.W = W;
    in.g_star = G.project(u_ref);
    in.w_star = W.project(y_ref.averages());
    return {make_problem(in), G, W};
}

inline oracle::KktProblem kkt_of(const ProblemData& p) {
    oracle::KktProblem k;
    k.A = p.system.A;
    k.B = p.system.B;
    k.T = p.grid.horizon();
    k.steps = p.steps();
    k.y0 = p.y0;
    k.y1 = p.y1;
    k.G_basis = p.G.basis();
    k.g_coords = p.G.coords(p.g_star);
    k.W_basis = p.W.basis();
    k.w_coords = p.W.coords(p.w_star);
    return k;
}

}  // namespace scenario
