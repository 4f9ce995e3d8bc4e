#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pcc/errors.hpp"
#include "pcc/linalg.hpp"
#include "pcc/system.hpp"

namespace pcc {

enum class AmbientKind { control_signal, state_signal, state };

// Where subspace elements live. Signals are flattened interval-major and
// carry the dt-weighted L^2 inner product; states use the Euclidean one.
struct Ambient {
    AmbientKind kind = AmbientKind::state;
    int dim = 0;
    int steps = 1;
    double dt = 1.0;

    static Ambient control_signal(int m, const TimeGrid& grid) {
        return {AmbientKind::control_signal, m, grid.n_steps(), grid.dt()};
    }
    static Ambient state_signal(int n, const TimeGrid& grid) {
        return {AmbientKind::state_signal, n, grid.n_steps(), grid.dt()};
    }
    static Ambient state(int n) { return {AmbientKind::state, n, 1, 1.0}; }

    [[nodiscard]] bool is_signal() const { return kind != AmbientKind::state; }
    [[nodiscard]] Eigen::Index size() const { return static_cast<Eigen::Index>(dim) * steps; }
    [[nodiscard]] double weight() const { return is_signal() ? dt : 1.0; }

    friend bool operator==(const Ambient&, const Ambient&) = default;
};

class Subspace {
public:
    // The zero subspace of the given ambient.
    explicit Subspace(Ambient ambient) : ambient_(ambient), basis_(ambient.size(), 0) {}

    // Assumes `basis` columns are already orthonormal for the ambient inner
    // product; use orthonormalize() for raw generators.
    Subspace(Ambient ambient, Matrix basis) : ambient_(ambient), basis_(std::move(basis)) {
        detail::require_shape(basis_.rows() == ambient_.size(), "Subspace: basis rows mismatch ambient");
    }

    [[nodiscard]] const Ambient& ambient() const { return ambient_; }
    [[nodiscard]] int dim() const { return static_cast<int>(basis_.cols()); }
    [[nodiscard]] const Matrix& basis() const { return basis_; }
    [[nodiscard]] Vector basis_vector(int i) const { return basis_.col(i); }

    [[nodiscard]] Vector coords(const Vector& x) const {
        check(x, "Subspace::coords");
        return ambient_.weight() * (basis_.transpose() * x);
    }
    [[nodiscard]] Vector lift(const Vector& c) const {
        detail::require_shape(c.size() == basis_.cols(), "Subspace::lift: coefficient size mismatch");
        if (basis_.cols() == 0) {
            return Vector::Zero(ambient_.size());
        }
        return basis_ * c;
    }
    [[nodiscard]] Vector project(const Vector& x) const { return lift(coords(x)); }

    // Signal-typed conveniences.
    [[nodiscard]] Vector coords(const GridSignal& s) const {
        check_signal(s, "Subspace::coords");
        return coords(s.flat());
    }
    [[nodiscard]] GridSignal lift_signal(const Vector& c) const {
        return GridSignal::from_flat(lift(c), ambient_.dim, ambient_.steps);
    }
    [[nodiscard]] GridSignal project(const GridSignal& s) const {
        check_signal(s, "Subspace::project");
        return lift_signal(coords(s.flat()));
    }

    [[nodiscard]] double inner(const Vector& a, const Vector& b) const { return ambient_.weight() * a.dot(b); }
    [[nodiscard]] double norm(const Vector& a) const { return std::sqrt(inner(a, a)); }

    // Gram matrix of the stored basis in the ambient inner product.
    [[nodiscard]] Matrix gram() const { return ambient_.weight() * (basis_.transpose() * basis_); }

private:
    void check(const Vector& x, const char* what) const {
        detail::require_shape(x.size() == ambient_.size(), std::string(what) + ": ambient size mismatch");
    }
    void check_signal(const GridSignal& s, const char* what) const {
        detail::require_shape(ambient_.is_signal() && s.dim() == ambient_.dim && s.steps() == ambient_.steps,
                              std::string(what) + ": signal shape mismatch");
    }

    Ambient ambient_;
    Matrix basis_;
};

inline constexpr double kRankTolerance = 1e-10;

// Modified Gram-Schmidt with one re-orthogonalization pass. Generators whose
// deflated norm falls below kRankTolerance * (largest input norm) are dropped.
inline Subspace orthonormalize(const std::vector<Vector>& raw, const Ambient& ambient) {
    const double w = ambient.weight();
    const double sw = std::sqrt(w);
    double max_norm = 0.0;
    for (const auto& x : raw) {
        detail::require_shape(x.size() == ambient.size(), "orthonormalize: element does not match ambient");
        max_norm = std::max(max_norm, sw * x.norm());
    }
    std::vector<Vector> kept;
    for (const auto& x : raw) {
        Vector v = sw * x;  // Euclidean coordinates
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : kept) {
                v -= q.dot(v) * q;
            }
        }
        const double nv = v.norm();
        if (nv <= kRankTolerance * max_norm || nv == 0.0) {
            continue;
        }
        kept.push_back(v / nv);
    }
    Matrix basis(ambient.size(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        basis.col(static_cast<Eigen::Index>(i)) = kept[i] / sw;
    }
    return Subspace(ambient, std::move(basis));
}

inline Subspace orthonormalize(const std::vector<GridSignal>& raw, const Ambient& ambient) {
    std::vector<Vector> flat;
    flat.reserve(raw.size());
    for (const auto& s : raw) {
        detail::require_shape(ambient.is_signal() && s.dim() == ambient.dim && s.steps() == ambient.steps,
                              "orthonormalize: signal does not match ambient");
        flat.push_back(s.flat());
    }
    return orthonormalize(flat, ambient);
}

// e^{rate t} * direction restricted to [support_begin, support_end], stored
// as exact interval averages.
inline GridSignal exponential_profile(const TimeGrid& grid, double rate, const Vector& direction,
                                      double support_begin, double support_end) {
    const int steps = grid.n_steps();
    GridSignal out = GridSignal::zero(static_cast<int>(direction.size()), steps);
    const double dt = grid.dt();
    for (int k = 0; k < steps; ++k) {
        const double a = std::max(grid.node(k), support_begin);
        const double b = std::min(grid.node(k + 1), support_end);
        if (b <= a) {
            continue;
        }
        double integral = 0.0;
        if (std::abs(rate) * (b - a) < 1e-8) {
            integral = std::exp(rate * 0.5 * (a + b)) * (b - a);
        } else {
            integral = std::exp(rate * a) * std::expm1(rate * (b - a)) / rate;
        }
        out.values.col(k) = direction * (integral / dt);
    }
    return out;
}

inline GridSignal exponential_profile(const TimeGrid& grid, double rate, const Vector& direction) {
    return exponential_profile(grid, rate, direction, 0.0, grid.horizon());
}

}  // namespace pcc
