#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pcc/errors.hpp"
#include "pcc/linalg.hpp"
#include "pcc/system.hpp"

namespace pcc {

enum class ModelFamily { heat1d, wave1d, ode };

inline std::string to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::heat1d: return "heat1d";
        case ModelFamily::wave1d: return "wave1d";
        case ModelFamily::ode: return "ode";
    }
    return "?";
}

// Gauss-Legendre rule on [a, b] (Newton iteration on P_n).
struct QuadratureRule {
    Vector nodes;
    Vector weights;
};

inline QuadratureRule gauss_legendre(int count, double a, double b) {
    if (count < 1) {
        throw InputError("gauss_legendre: count must be >= 1");
    }
    QuadratureRule rule{Vector(count), Vector(count)};
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < (count + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= count; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (count == 1) {
                p0 = 1.0;
                p1 = x;
            }
            dp = count * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes(i) = mid - half * x;
        rule.nodes(count - 1 - i) = mid + half * x;
        rule.weights(i) = half * w;
        rule.weights(count - 1 - i) = half * w;
    }
    return rule;
}

// Unit-interval Dirichlet model data shared by the PDE families.
struct ModelDescriptor {
    ModelFamily family = ModelFamily::ode;
    int n_modes = 0;
    double omega_begin = 0.0;
    double omega_end = 1.0;
    int n_quad = 0;
    std::vector<double> eigenvalues;  // (j pi)^2, j = 1..n_modes
    QuadratureRule control_quadrature;  // Gauss-Legendre on omega; U lives on these nodes
    Vector spatial_nodes;               // uniform grid on [0, 1]
    Vector spatial_weights;             // trapezoid weights
    std::vector<bool> omega_mask;       // spatial node lies in [omega_begin, omega_end]

    // phi_j(x) = sqrt(2) sin(j pi x), j >= 1.
    [[nodiscard]] static double eigenfunction(int j, double x) {
        return std::numbers::sqrt2 * std::sin(j * std::numbers::pi * x);
    }
};

struct Model {
    LinearSystem system;
    ModelDescriptor descriptor;
};

namespace detail {

inline ModelDescriptor unit_interval_descriptor(ModelFamily family, int n_modes, double a, double b, int n_quad) {
    if (n_modes < 1) {
        throw InputError("model: n_modes must be >= 1");
    }
    if (!(0.0 <= a && a < b && b <= 1.0)) {
        throw InputError("model: omega must satisfy 0 <= a < b <= 1");
    }
    if (n_quad < 4 * n_modes) {
        throw InputError("model: n_quad must be >= 4 * n_modes");
    }
    ModelDescriptor d;
    d.family = family;
    d.n_modes = n_modes;
    d.omega_begin = a;
    d.omega_end = b;
    d.n_quad = n_quad;
    for (int j = 1; j <= n_modes; ++j) {
        const double r = j * std::numbers::pi;
        d.eigenvalues.push_back(r * r);
    }
    d.control_quadrature = gauss_legendre(n_quad, a, b);
    d.spatial_nodes = Vector::LinSpaced(n_quad + 1, 0.0, 1.0);
    d.spatial_weights = Vector::Constant(n_quad + 1, 1.0 / n_quad);
    d.spatial_weights(0) *= 0.5;
    d.spatial_weights(n_quad) *= 0.5;
    d.omega_mask.resize(n_quad + 1);
    for (int i = 0; i <= n_quad; ++i) {
        const double x = d.spatial_nodes(i);
        d.omega_mask[i] = x >= a - 1e-14 && x <= b + 1e-14;
    }
    return d;
}

// Row j: sqrt(w_q) phi_{j+1}(x_q) over the control quadrature nodes.
inline Matrix weighted_modes(const ModelDescriptor& d) {
    const auto& q = d.control_quadrature;
    Matrix out(d.n_modes, q.nodes.size());
    for (int j = 0; j < d.n_modes; ++j) {
        for (Eigen::Index k = 0; k < q.nodes.size(); ++k) {
            out(j, k) = std::sqrt(q.weights(k)) * ModelDescriptor::eigenfunction(j + 1, q.nodes(k));
        }
    }
    return out;
}

inline SystemMetadata metadata_of(const ModelDescriptor& d) {
    SystemMetadata md;
    md.family = to_string(d.family);
    md.eigenvalues = d.eigenvalues;
    md.spatial_nodes.assign(d.control_quadrature.nodes.data(),
                            d.control_quadrature.nodes.data() + d.control_quadrature.nodes.size());
    return md;
}

}  // namespace detail

// y_t - y_xx = chi_omega u on (0,1) with Dirichlet conditions, in the
// L^2-orthonormal eigenbasis. Controls are nodal values on omega's
// quadrature nodes scaled by sqrt(weight), so B^T is the exact adjoint.
inline Model make_heat1d(int n_modes, double omega_begin, double omega_end, int n_quad) {
    Model model;
    model.descriptor = detail::unit_interval_descriptor(ModelFamily::heat1d, n_modes, omega_begin, omega_end, n_quad);
    const auto& d = model.descriptor;
    model.system.A = Matrix::Zero(n_modes, n_modes);
    for (int j = 0; j < n_modes; ++j) {
        model.system.A(j, j) = -d.eigenvalues[j];
    }
    model.system.B = detail::weighted_modes(d);
    model.system.name = "heat1d";
    model.system.metadata = detail::metadata_of(d);
    return model;
}

// y_tt - y_xx = chi_omega u as a first-order system. Mode j occupies the
// coordinates (sqrt(lambda_j) a_j, a_j'), so the H^1_0 x L^2 energy is the
// Euclidean norm and A is skew-symmetric.
inline Model make_wave1d(int n_modes, double omega_begin, double omega_end, int n_quad) {
    Model model;
    model.descriptor = detail::unit_interval_descriptor(ModelFamily::wave1d, n_modes, omega_begin, omega_end, n_quad);
    const auto& d = model.descriptor;
    const int n = 2 * n_modes;
    model.system.A = Matrix::Zero(n, n);
    const Matrix modes = detail::weighted_modes(d);
    model.system.B = Matrix::Zero(n, modes.cols());
    for (int j = 0; j < n_modes; ++j) {
        const double freq = std::sqrt(d.eigenvalues[j]);
        model.system.A(2 * j, 2 * j + 1) = freq;
        model.system.A(2 * j + 1, 2 * j) = -freq;
        model.system.B.row(2 * j + 1) = modes.row(j);
    }
    model.system.name = "wave1d";
    model.system.metadata = detail::metadata_of(d);
    return model;
}

inline LinearSystem make_ode(Matrix a, Matrix b, std::string name) {
    LinearSystem sys{std::move(a), std::move(b), std::move(name), std::nullopt};
    sys.validate();
    return sys;
}

// Pi_omega as a matrix on one state value; applied pointwise in time.
struct RestrictionOperator {
    Matrix matrix;

    [[nodiscard]] int input_dim() const { return static_cast<int>(matrix.cols()); }
};

// Restriction of a modal state to omega, measured in L^2(omega) through the
// control quadrature. Equals B^T for heat1d; for wave1d it reads the
// position profile of each mode.
inline RestrictionOperator modal_restriction(const ModelDescriptor& d) {
    const Matrix modes = detail::weighted_modes(d);
    if (d.family == ModelFamily::wave1d) {
        Matrix r = Matrix::Zero(modes.cols(), 2 * d.n_modes);
        for (int j = 0; j < d.n_modes; ++j) {
            r.col(2 * j) = modes.row(j).transpose() / std::sqrt(d.eigenvalues[j]);
        }
        return {r};
    }
    return {modes.transpose()};
}

// Restriction of a function sampled on the uniform spatial grid: keeps the
// nodes flagged by omega_mask, scaled by sqrt(trapezoid weight).
inline RestrictionOperator nodal_restriction(const ModelDescriptor& d) {
    int kept = 0;
    for (bool b : d.omega_mask) kept += b ? 1 : 0;
    Matrix r = Matrix::Zero(kept, d.spatial_nodes.size());
    int row = 0;
    for (Eigen::Index i = 0; i < d.spatial_nodes.size(); ++i) {
        if (d.omega_mask[static_cast<std::size_t>(i)]) {
            r(row++, i) = std::sqrt(d.spatial_weights(i));
        }
    }
    return {r};
}

// Modal coordinates of the state whose profile is phi_j (heat) or whose
// displacement is phi_j at rest (wave, energy-normalized).
inline Vector mode_profile(const Model& model, int j, double amplitude = 1.0) {
    const auto& d = model.descriptor;
    if (j < 1 || j > d.n_modes) {
        throw InputError("mode_profile: mode index out of range");
    }
    Vector v = Vector::Zero(model.system.n());
    if (d.family == ModelFamily::wave1d) {
        v(2 * (j - 1)) = amplitude * std::sqrt(d.eigenvalues[j - 1]);
    } else {
        v(j - 1) = amplitude;
    }
    return v;
}

struct ModelInfo {
    std::string family;
    std::string parameters;
    std::string summary;
};

inline std::vector<ModelInfo> list_models() {
    return {
        {"heat1d", "n_modes, omega=[a,b], n_quad",
         "heat equation on (0,1), Dirichlet, distributed control on omega, modal coordinates"},
        {"wave1d", "n_modes, omega=[a,b], n_quad",
         "wave equation on (0,1), Dirichlet, velocity control on omega, energy-normalized modes"},
        {"ode", "A (n x n), B (n x m), name", "explicit finite-dimensional system"},
    };
}

}  // namespace pcc
