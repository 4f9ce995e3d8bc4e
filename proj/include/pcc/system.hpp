#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pcc/errors.hpp"
#include "pcc/linalg.hpp"

namespace pcc {

// Uniform partition of (0, T) into n_steps intervals I_k = (t_k, t_{k+1}).
class TimeGrid {
public:
    TimeGrid(double horizon, int n_steps) : horizon_(horizon), n_steps_(n_steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw GridError("TimeGrid: horizon must be finite and > 0");
        }
        if (n_steps < 2) {
            throw GridError("TimeGrid: n_steps must be >= 2");
        }
        dt_ = horizon / n_steps;
    }

    [[nodiscard]] double horizon() const { return horizon_; }
    [[nodiscard]] int n_steps() const { return n_steps_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] double node(int k) const { return k == n_steps_ ? horizon_ : k * dt_; }
    [[nodiscard]] double midpoint(int k) const { return (k + 0.5) * dt_; }

    // Index k with t_k == t, or nullopt when t is not a grid node.
    [[nodiscard]] std::optional<int> node_index(double t, double rel_tol = 1e-9) const {
        const double x = t / dt_;
        const double k = std::round(x);
        if (std::abs(x - k) > rel_tol * std::max(1.0, std::abs(x)) || k < 0 || k > n_steps_) {
            return std::nullopt;
        }
        return static_cast<int>(k);
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double horizon_;
    int n_steps_;
    double dt_;
};

// Reporting-only descriptors attached by the model constructors.
struct SystemMetadata {
    std::string family;
    std::vector<double> eigenvalues;
    std::vector<double> spatial_nodes;
};

// Finite-dimensional y' = A y + B u. The stored coordinates are assumed
// orthonormal, so every adjoint in the library is a transpose.
struct LinearSystem {
    Matrix A;
    Matrix B;
    std::string name;
    std::optional<SystemMetadata> metadata;

    [[nodiscard]] int n() const { return static_cast<int>(A.rows()); }
    [[nodiscard]] int m() const { return static_cast<int>(B.cols()); }

    void validate() const {
        if (A.rows() < 1 || A.rows() != A.cols()) {
            throw ShapeError("LinearSystem: A must be square with n >= 1");
        }
        if (B.rows() != A.rows()) {
            throw ShapeError("LinearSystem: B must have n rows");
        }
        if (!all_finite(A) || !all_finite(B)) {
            throw InvalidSystemError("LinearSystem: non-finite matrix entry");
        }
    }
};

// Exact one-step maps for piecewise-constant forcing on an interval of
// length dt:
//   E    = exp(A dt)
//   Phi  = int_0^dt exp(A s) ds
//   Phi2 = int_0^dt int_0^s exp(A r) dr ds
//   Psi  = Phi2 / dt        (interval-average response to constant forcing)
struct StepOperator {
    double dt = 0.0;
    Matrix E;
    Matrix Phi;
    Matrix Phi2;
    Matrix Psi;

    [[nodiscard]] int n() const { return static_cast<int>(E.rows()); }
};

// Piecewise-constant signal: column k is the value on I_k.
struct GridSignal {
    Matrix values;

    GridSignal() = default;
    explicit GridSignal(Matrix v) : values(std::move(v)) {}

    static GridSignal zero(int dim, int steps) { return GridSignal(Matrix::Zero(dim, steps)); }

    [[nodiscard]] int dim() const { return static_cast<int>(values.rows()); }
    [[nodiscard]] int steps() const { return static_cast<int>(values.cols()); }

    // Interval-major flattening (column-major storage).
    [[nodiscard]] Vector flat() const {
        return Eigen::Map<const Vector>(values.data(), values.size());
    }
    static GridSignal from_flat(const Vector& x, int dim, int steps) {
        detail::require_shape(x.size() == static_cast<Eigen::Index>(dim) * steps,
                              "GridSignal::from_flat: size mismatch");
        return GridSignal(Eigen::Map<const Matrix>(x.data(), dim, steps));
    }
};

// L^2(0,T) inner product of two piecewise-constant signals.
inline double signal_dot(const GridSignal& a, const GridSignal& b, double dt) {
    detail::require_shape(a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols(),
                          "signal_dot: shape mismatch");
    return dt * a.values.cwiseProduct(b.values).sum();
}

inline double signal_norm(const GridSignal& a, double dt) {
    return std::sqrt(dt) * a.values.norm();
}

struct Trajectory {
    Matrix node_values;        // n x (n_steps + 1)
    Matrix interval_averages;  // n x n_steps

    [[nodiscard]] Vector at_node(int k) const { return node_values.col(k); }
    [[nodiscard]] Vector initial() const { return node_values.col(0); }
    [[nodiscard]] Vector final() const { return node_values.col(node_values.cols() - 1); }
    [[nodiscard]] GridSignal averages() const { return GridSignal(interval_averages); }
};

// E, Phi, Phi2 are read off the top block row of
//   exp(dt * [[A, I, 0], [0, 0, I], [0, 0, 0]]).
inline StepOperator build_propagator(const LinearSystem& system, const TimeGrid& grid) {
    system.validate();
    const Eigen::Index n = system.A.rows();
    const double dt = grid.dt();

    Matrix aug = Matrix::Zero(3 * n, 3 * n);
    aug.block(0, 0, n, n) = system.A * dt;
    aug.block(0, n, n, n) = Matrix::Identity(n, n) * dt;
    aug.block(n, 2 * n, n, n) = Matrix::Identity(n, n) * dt;
    const Matrix ex = expm(aug);

    StepOperator ops;
    ops.dt = dt;
    ops.E = ex.block(0, 0, n, n);
    ops.Phi = ex.block(0, n, n, n);
    ops.Phi2 = ex.block(0, 2 * n, n, n);
    ops.Psi = ops.Phi2 / dt;
    if (!all_finite(ops.E) || !all_finite(ops.Phi) || !all_finite(ops.Phi2)) {
        throw InvalidSystemError("build_propagator: propagator overflowed");
    }
    return ops;
}

namespace detail {

inline void check_signal(const GridSignal& s, int dim, int steps, const char* what) {
    if (s.dim() != dim || s.steps() != steps) {
        throw ShapeError(std::string(what) + ": expected " + std::to_string(dim) + "x" +
                         std::to_string(steps) + " signal, got " + std::to_string(s.dim()) + "x" +
                         std::to_string(s.steps()));
    }
}

// Propagates v' = M v + s_k exactly, where step holds the maps for M.
inline Trajectory propagate(const Matrix& e, const Matrix& phi, const Matrix& psi, double dt,
                            const Vector& start, const Matrix& forcing) {
    const Eigen::Index n = e.rows();
    const Eigen::Index steps = forcing.cols();
    Trajectory out;
    out.node_values.resize(n, steps + 1);
    out.node_values.col(0) = start;
    const Matrix phi_forcing = phi * forcing;
    for (Eigen::Index k = 0; k < steps; ++k) {
        out.node_values.col(k + 1).noalias() = e * out.node_values.col(k);
        out.node_values.col(k + 1) += phi_forcing.col(k);
    }
    out.interval_averages.noalias() = (phi / dt) * out.node_values.leftCols(steps);
    out.interval_averages.noalias() += psi * forcing;
    return out;
}

}  // namespace detail

// y' = A y + B u + s on (0,T), y(0) = y0.
inline Trajectory forward_solve(const LinearSystem& system, const StepOperator& ops, const Vector& y0,
                                const GridSignal& u,
                                const std::optional<GridSignal>& extra_source = std::nullopt) {
    const int n = system.n();
    const int steps = u.steps();
    detail::require_shape(ops.n() == n, "forward_solve: propagator dimension mismatch");
    detail::require_shape(y0.size() == n, "forward_solve: y0 has wrong dimension");
    detail::check_signal(u, system.m(), steps, "forward_solve(u)");
    Matrix forcing = system.B * u.values;
    if (forcing.cols() != steps) {
        forcing = Matrix::Zero(n, steps);
    }
    if (extra_source) {
        detail::check_signal(*extra_source, n, steps, "forward_solve(source)");
        forcing += extra_source->values;
    }
    return detail::propagate(ops.E, ops.Phi, ops.Psi, ops.dt, y0, forcing);
}

// z' + A^T z = f on (0,T), z(T) = z_T, integrated backward. Node k of the
// result is z(t_k); averages are exact for piecewise-constant f.
inline Trajectory adjoint_solve(const LinearSystem& system, const StepOperator& ops, const Vector& z_T,
                                const GridSignal& f) {
    const int n = system.n();
    const int steps = f.steps();
    detail::require_shape(ops.n() == n, "adjoint_solve: propagator dimension mismatch");
    detail::require_shape(z_T.size() == n, "adjoint_solve: z_T has wrong dimension");
    detail::check_signal(f, n, steps, "adjoint_solve(f)");

    // In reversed time s = T - t the equation reads zeta' = A^T zeta - f.
    const Matrix reversed_forcing = -f.values.rowwise().reverse();
    Trajectory rev = detail::propagate(ops.E.transpose(), ops.Phi.transpose(), ops.Psi.transpose(),
                                       ops.dt, z_T, reversed_forcing);
    Trajectory out;
    out.node_values = rev.node_values.rowwise().reverse();
    out.interval_averages = rev.interval_averages.rowwise().reverse();
    return out;
}

// B^T applied to the interval averages of z.
inline GridSignal observe(const LinearSystem& system, const Trajectory& z) {
    return GridSignal(system.B.transpose() * z.interval_averages);
}

struct DualityTerms {
    double final_pairing = 0.0;    // <y(T), z_T>
    double initial_pairing = 0.0;  // <y0, z(0)>
    double state_source = 0.0;     // int <y, f>
    double control_output = 0.0;   // int <u, B^T z>

    [[nodiscard]] double residual() const {
        return final_pairing - initial_pairing - state_source - control_output;
    }
    [[nodiscard]] double scale() const {
        return std::abs(final_pairing) + std::abs(initial_pairing) + std::abs(state_source) +
               std::abs(control_output);
    }
};

inline DualityTerms duality_terms(const LinearSystem& system, const StepOperator& ops, const Vector& y0,
                                  const GridSignal& u, const Vector& z_T, const GridSignal& f) {
    const Trajectory y = forward_solve(system, ops, y0, u);
    const Trajectory z = adjoint_solve(system, ops, z_T, f);
    DualityTerms t;
    t.final_pairing = y.final().dot(z_T);
    t.initial_pairing = y0.dot(z.initial());
    t.state_source = signal_dot(y.averages(), f, ops.dt);
    t.control_output = signal_dot(u, observe(system, z), ops.dt);
    return t;
}

// <y(T), z_T> - <y0, z(0)> - int <y, f> - int <u, B^T z>; vanishes up to
// roundoff because both solves are exact on every interval.
inline double duality_residual(const LinearSystem& system, const StepOperator& ops, const Vector& y0,
                               const GridSignal& u, const Vector& z_T, const GridSignal& f) {
    return duality_terms(system, ops, y0, u, z_T, f).residual();
}

}  // namespace pcc
