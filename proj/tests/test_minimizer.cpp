#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support/scenarios.hpp"

using namespace pcc;

namespace {

double rel_diff(const GridSignal& u, const Vector& ref) { return (u.flat() - ref).norm() / std::max(1e-300, ref.norm()); }

}  // namespace

TEST(Minimize, ScalarNullMatchesHyperbolicCosine) {
    const ProblemData p = scenario::scalar_null(128);
    const SolveResult r = minimize(p);
    ASSERT_EQ(r.diagnostics.verdict, SolveVerdict::converged);
    const ControlSolution sol = recover_primal(p, r.solution);
    for (int k = 0; k < 128; ++k) {
        const double t = p.grid.midpoint(k);
        EXPECT_NEAR(sol.u.values(0, k), -std::cosh(1.0 - t) / std::sinh(1.0), 1e-3);
    }
    EXPECT_LE(sol.residuals.final_state_error, 1e-8);
}

// Exact control of y' = u with the sin(2 pi t) moment of u pinned to zero.
TEST(Minimize, SineMomentConstraintHoldsAndMatchesKkt) {
    const int steps = 64;
    const TimeGrid grid(1.0, steps);
    Matrix sine(1, steps);
    for (int k = 0; k < steps; ++k) {
        const double a = grid.node(k);
        const double b = grid.node(k + 1);
        sine(0, k) = (std::cos(2.0 * std::numbers::pi * a) - std::cos(2.0 * std::numbers::pi * b)) /
                     (2.0 * std::numbers::pi * grid.dt());
    }
    ProblemInputs in;
    in.kind = ProblemKind::exact;
    in.system = scenario::scalar_system();
    in.grid = grid;
    in.G = orthonormalize(std::vector<GridSignal>{GridSignal(sine)}, Ambient::control_signal(1, grid));
    in.y0 = Vector::Zero(1);
    in.y1 = Vector::Constant(1, 1.0);
    const ProblemData p = make_problem(in);
    const SolveResult r = minimize(p);
    ASSERT_EQ(r.diagnostics.verdict, SolveVerdict::converged);
    const ControlSolution sol = recover_primal(p, r.solution);
    EXPECT_LE(sol.residuals.proj_u_error, 1e-8);
    EXPECT_LE(sol.residuals.final_state_error, 1e-8);
    EXPECT_LE(rel_diff(sol.u, oracle::kkt_control(scenario::kkt_of(p))), 1e-8);
}

// Certified problems with well separated sigma_min converge and agree with
// the dense primal solve. The separation keeps sigma_min^2, the smallest
// curvature of the dual quadratic, far above roundoff.
TEST(Minimize, WellCertifiedRandomProblemsConvergeAndMatchKkt) {
    oracle::Gen gen(41);
    int checked = 0;
    for (int trial = 0; trial < 80 && checked < 30; ++trial) {
        const ProblemKind kind = trial % 2 == 0 ? ProblemKind::exact : ProblemKind::null;
        const auto c = scenario::random_feasible(kind, gen);
        const ProblemData& p = c.problem;
        const UCReport uc = uc_check(assemble_uc_map(p.system, p.ops, p.grid, c.G, c.W), 1e-5);
        if (!uc.holds) continue;
        ++checked;
        const SolveResult r = minimize(p);
        ASSERT_EQ(r.diagnostics.verdict, SolveVerdict::converged) << "trial " << trial;
        const ControlSolution sol = recover_primal(p, r.solution);
        EXPECT_LE(rel_diff(sol.u, oracle::kkt_control(scenario::kkt_of(p))), 1e-6) << "trial " << trial;
        EXPECT_LE(sol.residuals.proj_u_error, 1e-7);
        EXPECT_LE(sol.residuals.proj_y_error, 1e-7);
        EXPECT_LE(sol.residuals.duality_check, 1e-7);
    }
    EXPECT_GE(checked, 20);
}

TEST(Minimize, ReducedQuadraticMethodAgreesWithCg) {
    oracle::Gen gen(42);
    int checked = 0;
    for (int trial = 0; trial < 40 && checked < 10; ++trial) {
        const auto c = scenario::random_feasible(trial % 2 == 0 ? ProblemKind::exact : ProblemKind::null, gen);
        const ProblemData& p = c.problem;
        if (!uc_check(assemble_uc_map(p.system, p.ops, p.grid, c.G, c.W), 1e-4).holds) continue;
        ++checked;
        SolverOptions opts;
        opts.quadratic_method = QuadraticMethod::reduced;
        const SolveResult a = minimize(p);
        const SolveResult b = minimize(p, opts);
        ASSERT_EQ(b.diagnostics.verdict, SolveVerdict::converged);
        const GridSignal ua = recover_primal(p, a.solution).u;
        const GridSignal ub = recover_primal(p, b.solution).u;
        EXPECT_LE(rel_diff(ub, ua.flat()), 1e-6) << "trial " << trial;
    }
}

// Approximate kinds: both methods meet the epsilon ball and agree on the
// optimal value; the proximal gradient history never increases.
TEST(Minimize, ApproxMethodsAgree) {
    oracle::Gen gen(43);
    for (int trial = 0; trial < 12; ++trial) {
        const ProblemKind kind = trial % 2 == 0 ? ProblemKind::approx : ProblemKind::approx_relaxed;
        const ProblemData p = scenario::random_feasible(ProblemKind::exact, gen).problem;
        ProblemInputs in{kind, p.system, p.grid, p.G, p.W, std::nullopt, p.y0, p.y1, 0.2, p.g_star, p.w_star};
        const ProblemData q = make_problem(in);

        const SolveResult reduced = minimize(q);
        SolverOptions prox_opts;
        prox_opts.approx_method = ApproxMethod::proximal_gradient;
        prox_opts.max_iters = 20000;
        prox_opts.grad_tol = 1e-8;
        const SolveResult prox = minimize(q, prox_opts);
        ASSERT_EQ(reduced.diagnostics.verdict, SolveVerdict::converged) << "trial " << trial;

        const ControlSolution sol = recover_primal(q, reduced.solution);
        EXPECT_LE(sol.residuals.final_state_error, q.epsilon + 1e-8);
        if (kind == ProblemKind::approx_relaxed) {
            EXPECT_LE(sol.residuals.proj_y_error, q.epsilon + 1e-8);
        } else {
            EXPECT_LE(sol.residuals.proj_y_error, 1e-7);
        }
        const double jr = eval_J(q, reduced.solution);
        const double jp = eval_J(q, prox.solution);
        EXPECT_LE(jr, jp + 1e-8 * std::max(1.0, std::abs(jp))) << "trial " << trial;
        if (prox.diagnostics.verdict == SolveVerdict::converged) {
            EXPECT_NEAR(jr, jp, 1e-6 * std::max(1.0, std::abs(jp))) << "trial " << trial;
        }
        const auto& h = prox.diagnostics.objective_history;
        for (std::size_t i = 1; i < h.size(); ++i) {
            EXPECT_LE(h[i], h[i - 1] + 1e-12 * std::max(1.0, std::abs(h[i - 1]))) << "trial " << trial << " step " << i;
        }
    }
}

TEST(Minimize, ZeroDataGivesZeroControl) {
    ProblemInputs in;
    in.kind = ProblemKind::exact;
    in.system = make_ode(Matrix::Identity(2, 2), Matrix::Identity(2, 2), "zero");
    in.grid = TimeGrid(1.0, 8);
    in.y0 = Vector::Zero(2);
    in.y1 = Vector::Zero(2);
    const ProblemData p = make_problem(in);
    const SolveResult r = minimize(p);
    EXPECT_EQ(r.diagnostics.verdict, SolveVerdict::converged);
    EXPECT_EQ(norm(r.solution, p.dt()), 0.0);
    EXPECT_EQ(recover_primal(p, r.solution).u.values.norm(), 0.0);
}

TEST(Minimize, DeterministicAcrossRuns) {
    oracle::Gen gen(44);
    const ProblemData p = scenario::random_feasible(ProblemKind::exact, gen).problem;
    const SolveResult a = minimize(p);
    const SolveResult b = minimize(p);
    EXPECT_EQ(a.solution.z_T, b.solution.z_T);
    EXPECT_EQ(a.solution.f, b.solution.f);
    EXPECT_EQ(a.diagnostics.objective_history, b.diagnostics.objective_history);
}

TEST(Minimize, InvalidOptionsThrow) {
    const ProblemData p = scenario::scalar_null(8);
    SolverOptions o;
    o.max_iters = 0;
    EXPECT_THROW(minimize(p, o), ConfigError);
    o = {};
    o.grad_tol = -1.0;
    EXPECT_THROW(minimize(p, o), ConfigError);
    o = {};
    o.divergence_bound = 0.0;
    EXPECT_THROW(minimize(p, o), ConfigError);
    EXPECT_THROW(approx_method_from_string("newton"), ConfigError);
    EXPECT_EQ(quadratic_method_from_string("reduced"), QuadraticMethod::reduced);
}

TEST(Minimize, IterationCapIsReported) {
    oracle::Gen gen(45);
    ProblemInputs in = scenario::heat_inputs(ProblemKind::exact, gen, 40);
    const ProblemData p = make_problem(in);
    SolverOptions o;
    o.max_iters = 2;
    const SolveResult r = minimize(p, o);
    EXPECT_EQ(r.diagnostics.verdict, SolveVerdict::max_iters);
    EXPECT_EQ(r.diagnostics.iterations, 2);
    EXPECT_GT(r.diagnostics.final_residual, 0.0);
}

TEST(Infeasibility, ConstantsInGDiverges) {
    const ProblemData p = scenario::constants_infeasible();
    const SolveResult r = minimize(p);
    EXPECT_EQ(r.diagnostics.verdict, SolveVerdict::diverged_infeasible);
}

// Witness (z_T, g) = (1, -1 in coordinates) of the constants instance: the
// radius is (1 + 1) / 1.
TEST(Infeasibility, CertificateRadius) {
    const ProblemData p = scenario::constants_infeasible();
    const UCReport uc = uc_check(assemble_uc_map(p.system, p.ops, p.grid, p.G, p.W));
    ASSERT_FALSE(uc.holds);
    ASSERT_TRUE(uc.witness.has_value());
    UcWitness w = UcWitness::split(*uc.witness, p.n(), p.G.dim(), p.W.dim());
    const double s = 1.0 / w.z_T.norm();
    w.z_T *= s;
    w.g_coef *= s;
    EXPECT_NEAR(certify_infeasibility(p, w), 2.0, 1e-10);

    UcWitness only_g{Vector::Zero(1), Vector::Constant(1, 1.0), Vector::Zero(0)};
    EXPECT_EQ(certify_infeasibility(p, only_g), kInfinitySignal);
    UcWitness zero{Vector::Zero(1), Vector::Zero(1), Vector::Zero(0)};
    EXPECT_THROW(certify_infeasibility(p, zero), InvalidWitnessError);
    UcWitness bad{Vector::Zero(2), Vector::Zero(1), Vector::Zero(0)};
    EXPECT_THROW(certify_infeasibility(p, bad), ShapeError);
}

// Pinned blocks: the composite solver returns zero for a block whose
// multiplier at zero stays inside the weight.
TEST(CompositeSolve, SmallLinearTermPinsBlock) {
    Matrix h = Matrix::Identity(2, 2);
    Vector c(2);
    c << 0.05, 0.0;
    std::vector<detail::NormBlock> blocks{{Matrix::Identity(2, 2), 0.1}};
    const Matrix none(2, 0);
    std::vector<double> lambda(1, 0.0);
    const auto x = detail::solve_blocks(h, c, blocks, none, lambda, 0);
    ASSERT_TRUE(x.has_value());
    EXPECT_LE(x->norm(), 1e-12);

    c << 3.0, 4.0;  // |c| = 5, shrink to 5 - 0.1 along c
    const auto y = detail::solve_blocks(h, c, blocks, none, lambda, 0);
    ASSERT_TRUE(y.has_value());
    EXPECT_NEAR(y->norm(), 4.9, 1e-9);
}
