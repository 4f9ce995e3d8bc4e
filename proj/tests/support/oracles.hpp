#pragma once

// Independent references for the test suites. Nothing here calls the
// library's propagator or dual machinery.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "pcc/pcc.hpp"

namespace oracle {

using pcc::Matrix;
using pcc::Vector;

// Hand-rolled generators over a fixed-seed engine.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

    Vector vector(int n) {
        Vector v(n);
        for (int i = 0; i < n; ++i) v(i) = normal();
        return v;
    }
    Matrix matrix(int r, int c) {
        Matrix m(r, c);
        for (int j = 0; j < c; ++j)
            for (int i = 0; i < r; ++i) m(i, j) = normal();
        return m;
    }
    // Random A with spectrum in a moderate band so that exp(A T) stays tame.
    Matrix stable_ish(int n, double spread = 1.0) {
        const Matrix m = matrix(n, n);
        return spread * m / std::sqrt(static_cast<double>(n));
    }
    pcc::GridSignal signal(int dim, int steps) { return pcc::GridSignal(matrix(dim, steps)); }

private:
    std::mt19937_64 rng_;
};

// E, Phi, Phi2 from Eigen's own matrix exponential of the augmented matrix.
struct ReferenceStep {
    Matrix E;
    Matrix Phi;
    Matrix Phi2;
};

inline ReferenceStep reference_step(const Matrix& a, double dt) {
    const Eigen::Index n = a.rows();
    Matrix aug = Matrix::Zero(3 * n, 3 * n);
    aug.block(0, 0, n, n) = a * dt;
    aug.block(0, n, n, n) = Matrix::Identity(n, n) * dt;
    aug.block(n, 2 * n, n, n) = Matrix::Identity(n, n) * dt;
    const Matrix ex = aug.exp();
    return {ex.block(0, 0, n, n), ex.block(0, n, n, n), ex.block(0, 2 * n, n, n)};
}

// Dense affine maps of the discretized primal: flattened control u
// (interval-major) to interval averages of y and to y(T).
struct PrimalMaps {
    Matrix avg_u;    // (n N) x (m N)
    Vector avg_0;    // averages for u = 0
    Matrix final_u;  // n x (m N)
    Vector final_0;
};

inline PrimalMaps primal_maps(const Matrix& a, const Matrix& b, double dt, int steps, const Vector& y0) {
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(b.cols());
    const ReferenceStep s = reference_step(a, dt);
    const Matrix psi = s.Phi2 / dt;
    PrimalMaps out{Matrix::Zero(n * steps, m * steps), Vector::Zero(n * steps), Matrix::Zero(n, m * steps),
                   Vector::Zero(n)};
    // state_u: y_k as a function of u, kept as an n x (mN) block.
    Matrix state_u = Matrix::Zero(n, m * steps);
    Vector state_0 = y0;
    for (int k = 0; k < steps; ++k) {
        out.avg_u.block(n * k, 0, n, m * steps) = (s.Phi / dt) * state_u;
        out.avg_u.block(n * k, m * k, n, m) += psi * b;
        out.avg_0.segment(n * k, n) = (s.Phi / dt) * state_0;
        state_u = s.E * state_u;
        state_u.block(0, m * k, n, m) += s.Phi * b;
        state_0 = s.E * state_0;
    }
    out.final_u = state_u;
    out.final_0 = state_0;
    return out;
}

struct KktProblem {
    Matrix A;
    Matrix B;
    double T = 1.0;
    int steps = 2;
    Vector y0;
    std::optional<Vector> y1;  // absent: null control
    Matrix G_basis;            // (m N) x pG, dt-orthonormal
    Vector g_coords;           // coordinates of g* in G
    Matrix W_basis;            // (n N) x pW, dt-orthonormal
    Vector w_coords;           // coordinates of w* in W
};

// min 1/2 dt sum |u_k|^2 + 1/2 dt sum |avg y_k|^2 subject to
// y(T) = y1 (or 0), G-coordinates of u fixed, W-coordinates of avg y fixed.
// Returns the optimal flattened control.
inline Vector kkt_control(const KktProblem& p) {
    const int n = static_cast<int>(p.A.rows());
    const int m = static_cast<int>(p.B.cols());
    const double dt = p.T / p.steps;
    const PrimalMaps maps = primal_maps(p.A, p.B, dt, p.steps, p.y0);
    const Eigen::Index nu = static_cast<Eigen::Index>(m) * p.steps;

    const Matrix hess = dt * (Matrix::Identity(nu, nu) + maps.avg_u.transpose() * maps.avg_u);
    const Vector lin = dt * maps.avg_u.transpose() * maps.avg_0;

    const Eigen::Index pg = p.G_basis.cols();
    const Eigen::Index pw = p.W_basis.cols();
    const Eigen::Index nc = n + pg + pw;
    Matrix c(nc, nu);
    Vector rhs(nc);
    c.topRows(n) = maps.final_u;
    rhs.head(n) = (p.y1 ? *p.y1 : Vector::Zero(n)) - maps.final_0;
    if (pg > 0) {
        c.middleRows(n, pg) = dt * p.G_basis.transpose();
        rhs.segment(n, pg) = p.g_coords;
    }
    if (pw > 0) {
        c.bottomRows(pw) = dt * p.W_basis.transpose() * maps.avg_u;
        rhs.tail(pw) = p.w_coords - dt * p.W_basis.transpose() * maps.avg_0;
    }

    Matrix kkt = Matrix::Zero(nu + nc, nu + nc);
    kkt.topLeftCorner(nu, nu) = hess;
    kkt.topRightCorner(nu, nc) = c.transpose();
    kkt.bottomLeftCorner(nc, nu) = c;
    Vector r(nu + nc);
    r.head(nu) = -lin;
    r.tail(nc) = rhs;
    const Vector sol = kkt.completeOrthogonalDecomposition().solve(r);
    return sol.head(nu);
}

// Central finite difference of a scalar function along a direction.
template <class F, class X>
double central_difference(F&& f, const X& x, const X& d, double h) {
    return (f(x + h * d) - f(x - h * d)) / (2.0 * h);
}

}  // namespace oracle
