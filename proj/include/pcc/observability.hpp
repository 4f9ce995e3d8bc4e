#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcc/errors.hpp"
#include "pcc/linalg.hpp"
#include "pcc/models.hpp"
#include "pcc/subspace.hpp"
#include "pcc/system.hpp"

namespace pcc {

inline constexpr double kDefaultUcTolerance = 1e-8;
inline constexpr long kDefaultDenseCap = 20000;

// Element of H x G x W in orthonormal coordinates.
struct UcWitness {
    Vector z_T;
    Vector g_coef;
    Vector w_coef;

    [[nodiscard]] Vector stacked() const {
        Vector v(z_T.size() + g_coef.size() + w_coef.size());
        v << z_T, g_coef, w_coef;
        return v;
    }
    static UcWitness split(const Vector& v, int n, int p_g, int p_w) {
        detail::require_shape(v.size() == n + p_g + p_w, "UcWitness::split: size mismatch");
        return {v.head(n), v.segment(n, p_g), v.tail(p_w)};
    }
};

struct UCReport {
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double tol_uc = kDefaultUcTolerance;
    bool holds = false;
    std::optional<Vector> witness;  // unit-norm, present iff !holds
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
};

namespace detail {

// Adjoint trajectories for z_T = e_i, stacked as observation columns
// sqrt(dt) B^T z (interval averages).
inline Matrix homogeneous_observation(const LinearSystem& sys, const StepOperator& ops, int steps) {
    const int n = sys.n();
    const int m = sys.m();
    const double sdt = std::sqrt(ops.dt);
    Matrix out(static_cast<Eigen::Index>(m) * steps, n);
    const GridSignal zero = GridSignal::zero(n, steps);
    for (int i = 0; i < n; ++i) {
        const Trajectory z = adjoint_solve(sys, ops, Vector::Unit(n, i), zero);
        const GridSignal obs = observe(sys, z);
        out.col(i) = sdt * obs.flat();
    }
    return out;
}

}  // namespace detail

// Matrix of (z_T, g_coef, w_coef) -> sqrt(dt) (B^T z - g) with z the adjoint
// solution driven by w = lift(W, w_coef). Its kernel is exactly the set of
// discrete unique-continuation counterexamples.
inline Matrix assemble_uc_map(const LinearSystem& sys, const StepOperator& ops, const TimeGrid& grid,
                              const Subspace& G, const Subspace& W) {
    const int n = sys.n();
    const int steps = grid.n_steps();
    detail::require_shape(G.ambient() == Ambient::control_signal(sys.m(), grid),
                          "assemble_uc_map: G ambient mismatch");
    detail::require_shape(W.ambient() == Ambient::state_signal(n, grid), "assemble_uc_map: W ambient mismatch");
    const double sdt = std::sqrt(grid.dt());
    Matrix map(static_cast<Eigen::Index>(sys.m()) * steps, n + G.dim() + W.dim());
    map.leftCols(n) = detail::homogeneous_observation(sys, ops, steps);
    for (int i = 0; i < G.dim(); ++i) {
        map.col(n + i) = -sdt * G.basis().col(i);
    }
    for (int i = 0; i < W.dim(); ++i) {
        const Trajectory z = adjoint_solve(sys, ops, Vector::Zero(n), W.lift_signal(Vector::Unit(W.dim(), i)));
        map.col(n + G.dim() + i) = sdt * observe(sys, z).flat();
    }
    return map;
}

inline Matrix assemble_uc_map(const LinearSystem& sys, const TimeGrid& grid, const Subspace& G, const Subspace& W) {
    return assemble_uc_map(sys, build_propagator(sys, grid), grid, G, W);
}

inline UCReport uc_check(const Matrix& map, double tol_uc = kDefaultUcTolerance) {
    UCReport r;
    r.tol_uc = tol_uc;
    r.rows = map.rows();
    r.cols = map.cols();
    if (map.cols() == 0) {
        r.holds = true;
        r.sigma_min = kInfinitySignal;
        return r;
    }
    const SvdSummary svd = svd_full(map);
    r.sigma_max = svd.singular_values(0);
    r.sigma_min = svd.singular_values(map.cols() - 1);
    r.holds = r.sigma_min > tol_uc;
    if (!r.holds) {
        Vector w = svd.right_vectors.col(map.cols() - 1);
        w.normalize();
        canonical_sign(w);
        r.witness = w;
    }
    return r;
}

enum class ObservabilityKind { final_state, initial_state, general_final, general_initial, tilde_T };

inline std::string_view to_string(ObservabilityKind k) {
    switch (k) {
        case ObservabilityKind::final_state: return "final_state";
        case ObservabilityKind::initial_state: return "initial_state";
        case ObservabilityKind::general_final: return "general_final";
        case ObservabilityKind::general_initial: return "general_initial";
        case ObservabilityKind::tilde_T: return "tilde_T";
    }
    return "?";
}

inline ObservabilityKind observability_kind_from_string(std::string_view s) {
    if (s == "final_state") return ObservabilityKind::final_state;
    if (s == "initial_state") return ObservabilityKind::initial_state;
    if (s == "general_final") return ObservabilityKind::general_final;
    if (s == "general_initial") return ObservabilityKind::general_initial;
    if (s == "tilde_T") return ObservabilityKind::tilde_T;
    throw ConfigError("unknown observability kind '" + std::string(s) + "'");
}

struct ObservabilityReport {
    ObservabilityKind kind = ObservabilityKind::final_state;
    double constant_C = kInfinitySignal;
    double sigma_min = 0.0;  // smallest generalized singular value = 1 / C
};

// Best constant C in |measured x| <= C |observed x|, i.e. the inverse of the
// smallest generalized singular value of the pair (observed, measured).
// Returns kInfinitySignal when some x is invisible to `observed` but not to
// `measured`.
inline double generalized_constant(const Matrix& observed, const Matrix& measured, double rel_tol = 1e-10) {
    detail::require_shape(observed.cols() == measured.cols(), "generalized_constant: column mismatch");
    const Eigen::Index cols = observed.cols();
    if (cols == 0) {
        return 0.0;
    }
    const SvdSummary svd = svd_full(observed);
    const double smax = svd.singular_values(0);
    const double measured_scale = std::max(1.0, measured.norm());
    Eigen::Index rank = 0;
    while (rank < cols && svd.singular_values(rank) > rel_tol * smax && smax > 0.0) {
        ++rank;
    }
    if (rank < cols) {
        const Matrix invisible = measured * svd.right_vectors.rightCols(cols - rank);
        if (invisible.norm() > 1e-8 * measured_scale) {
            return kInfinitySignal;
        }
    }
    if (rank == 0) {
        return 0.0;
    }
    Matrix scaled = measured * svd.right_vectors.leftCols(rank);
    for (Eigen::Index i = 0; i < rank; ++i) {
        scaled.col(i) /= svd.singular_values(i);
    }
    Eigen::BDCSVD<Matrix> s2(scaled);
    return s2.singularValues().size() > 0 ? s2.singularValues()(0) : 0.0;
}

namespace detail {

inline ObservabilityReport make_obs_report(ObservabilityKind kind, double c) {
    ObservabilityReport r;
    r.kind = kind;
    r.constant_C = c;
    r.sigma_min = (c >= kInfinitySignal) ? 0.0 : (c > 0.0 ? 1.0 / c : kInfinitySignal);
    return r;
}

}  // namespace detail

// Constants of the observability inequalities at the discrete level.
//   final_state     |z_T|   <= C |B^T z|                      (f = 0)
//   initial_state   |z(0)|  <= C |B^T z|                      (f = 0)
//   tilde_T         |z(T~)| <= C |B^T z|_{L^2(0,T)}            (f = 0)
//   general_final   |(z_T, g, w, f)|  <= C |(B^T z + g, f + w)|
//   general_initial |(z(0), g, w, f)| <= C |(B^T z + g, f + w)|
// The general kinds densely enumerate f and are capped by n * n_steps.
inline ObservabilityReport observability_constant(const LinearSystem& sys, const StepOperator& ops,
                                                  const TimeGrid& grid, const Subspace& G, const Subspace& W,
                                                  ObservabilityKind kind, std::optional<double> t_tilde = std::nullopt,
                                                  long dense_cap = kDefaultDenseCap) {
    const int n = sys.n();
    const int m = sys.m();
    const int steps = grid.n_steps();
    const double sdt = std::sqrt(grid.dt());
    const GridSignal zero_f = GridSignal::zero(n, steps);

    if (kind == ObservabilityKind::final_state || kind == ObservabilityKind::initial_state ||
        kind == ObservabilityKind::tilde_T) {
        const Matrix observed = detail::homogeneous_observation(sys, ops, steps);
        Matrix measured(n, n);
        if (kind == ObservabilityKind::final_state) {
            measured = Matrix::Identity(n, n);
        } else {
            int node = 0;
            if (kind == ObservabilityKind::tilde_T) {
                if (!t_tilde) {
                    throw InputError("observability_constant: tilde_T requires T_tilde");
                }
                const auto idx = grid.node_index(*t_tilde);
                if (!idx || *idx == 0) {
                    throw GridError("observability_constant: T_tilde must be a grid node in (0, T]");
                }
                node = *idx;
            }
            for (int i = 0; i < n; ++i) {
                measured.col(i) = adjoint_solve(sys, ops, Vector::Unit(n, i), zero_f).at_node(node);
            }
        }
        return detail::make_obs_report(kind, generalized_constant(observed, measured));
    }

    if (static_cast<long>(n) * steps > dense_cap) {
        throw TooLargeError("observability_constant: n * n_steps = " + std::to_string(static_cast<long>(n) * steps) +
                            " exceeds the dense cap " + std::to_string(dense_cap));
    }
    const int p_g = G.dim();
    const int p_w = W.dim();
    const Eigen::Index nf = static_cast<Eigen::Index>(n) * steps;
    const Eigen::Index cols = n + p_g + p_w + nf;
    const Eigen::Index obs_rows = static_cast<Eigen::Index>(m) * steps + nf;
    Matrix observed = Matrix::Zero(obs_rows, cols);
    Matrix measured = Matrix::Zero(n + p_g + p_w + nf, cols);
    const Eigen::Index u_rows = static_cast<Eigen::Index>(m) * steps;

    // Domain coordinates: (z_T, g_coef, w_coef, sqrt(dt) f), all orthonormal.
    const auto fill_z = [&](Eigen::Index col, const Trajectory& z) {
        observed.col(col).head(u_rows) += sdt * observe(sys, z).flat();
        if (kind == ObservabilityKind::general_initial) {
            measured.col(col).head(n) = z.initial();
        }
    };
    for (int i = 0; i < n; ++i) {
        fill_z(i, adjoint_solve(sys, ops, Vector::Unit(n, i), zero_f));
        if (kind == ObservabilityKind::general_final) {
            measured(i, i) = 1.0;
        }
    }
    for (int i = 0; i < p_g; ++i) {
        const Eigen::Index col = n + i;
        observed.col(col).head(u_rows) += sdt * G.basis().col(i);
        measured(col, col) = 1.0;
    }
    for (int i = 0; i < p_w; ++i) {
        const Eigen::Index col = n + p_g + i;
        observed.col(col).tail(nf) += sdt * W.basis().col(i);
        measured(col, col) = 1.0;
    }
    for (Eigen::Index i = 0; i < nf; ++i) {
        const Eigen::Index col = n + p_g + p_w + i;
        GridSignal f = GridSignal::zero(n, steps);
        f.values(i % n, i / n) = 1.0 / sdt;
        fill_z(col, adjoint_solve(sys, ops, Vector::Zero(n), f));
        observed(u_rows + i, col) += 1.0;
        measured(col, col) = 1.0;
    }
    return detail::make_obs_report(kind, generalized_constant(observed, measured));
}

inline ObservabilityReport observability_constant(const LinearSystem& sys, const TimeGrid& grid, const Subspace& G,
                                                  const Subspace& W, ObservabilityKind kind,
                                                  std::optional<double> t_tilde = std::nullopt,
                                                  long dense_cap = kDefaultDenseCap) {
    return observability_constant(sys, build_propagator(sys, grid), grid, G, W, kind, t_tilde, dense_cap);
}

// Orthonormal basis (columns) of N = { z_T : B^T z = 0 on (0,T), z(0) = 0 }
// for homogeneous adjoint solutions. Taking the propagator explicitly lets
// callers study degenerate discrete semigroups.
inline Matrix kernel_N(const LinearSystem& sys, const StepOperator& ops, int steps) {
    const int n = sys.n();
    const Eigen::Index obs_rows = static_cast<Eigen::Index>(sys.m()) * steps;
    Matrix map(obs_rows + n, n);
    map.topRows(obs_rows) = detail::homogeneous_observation(sys, ops, steps);
    const GridSignal zero = GridSignal::zero(n, steps);
    for (int i = 0; i < n; ++i) {
        map.block(obs_rows, i, n, 1) = adjoint_solve(sys, ops, Vector::Unit(n, i), zero).initial();
    }
    // An identically zero map has an n-dimensional kernel.
    if (map.norm() == 0.0) {
        return Matrix::Identity(n, n);
    }
    return numerical_kernel(map, kRankTolerance);
}

inline Matrix kernel_N(const LinearSystem& sys, const TimeGrid& grid) {
    return kernel_N(sys, build_propagator(sys, grid), grid.n_steps());
}

struct TwoTimeReport {
    double t_tilde = 0.0;
    bool restriction_ok = false;
    UCReport uc_tilde;
    ObservabilityReport obs_tilde;
    bool conclusion = false;
};

namespace detail {

// Full column rank of the restriction of each subspace element to the
// first `k` intervals.
inline bool injective_on_prefix(const Subspace& s, int k) {
    if (s.dim() == 0) {
        return true;
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(s.ambient().dim) * k;
    const Matrix restricted = s.basis().topRows(rows);
    const SvdSummary svd = svd_full(restricted);
    const double smax = svd.singular_values(0);
    return smax > 0.0 && svd.singular_values(s.dim() - 1) > kRankTolerance * smax;
}

}  // namespace detail

// Intermediate-time route to the general initial-state observability: the
// restriction condition on G and W, unique continuation on (0, T~) and
// |z(T~)| <= C |B^T z|_{L^2(0,T)}.
inline TwoTimeReport two_time_check(const LinearSystem& sys, const TimeGrid& grid, const Subspace& G,
                                    const Subspace& W, double t_tilde, double tol_uc = kDefaultUcTolerance) {
    const auto idx = grid.node_index(t_tilde);
    if (!(t_tilde > 0.0) || t_tilde > grid.horizon() * (1.0 + 1e-12) || !idx || *idx == 0) {
        throw GridError("two_time_check: T_tilde must be a grid node in (0, T]");
    }
    const int k = *idx;
    const StepOperator ops = build_propagator(sys, grid);

    TwoTimeReport r;
    r.t_tilde = t_tilde;
    r.restriction_ok = detail::injective_on_prefix(G, k) && detail::injective_on_prefix(W, k);

    // UC on (0, T~): z(T~) free, residual B^T z - g only on the first k
    // intervals; g and w keep their whole-interval coordinates.
    const Matrix full = assemble_uc_map(sys, ops, grid, G, W);
    const int n = sys.n();
    const Eigen::Index rows = static_cast<Eigen::Index>(sys.m()) * k;
    Matrix prefix(rows, full.cols());
    const double sdt = std::sqrt(grid.dt());
    for (int i = 0; i < n; ++i) {
        // z(T~) = e_i, solved directly on the first k intervals.
        Trajectory z = adjoint_solve(sys, ops, Vector::Unit(n, i), GridSignal::zero(n, k));
        prefix.col(i) = sdt * observe(sys, z).flat();
    }
    prefix.middleCols(n, G.dim() + W.dim()).setZero();
    for (int i = 0; i < G.dim(); ++i) {
        prefix.col(n + i) = full.col(n + i).head(rows);
    }
    for (int i = 0; i < W.dim(); ++i) {
        GridSignal w = W.lift_signal(Vector::Unit(W.dim(), i));
        GridSignal w_prefix(w.values.leftCols(k));
        Trajectory z = adjoint_solve(sys, ops, Vector::Zero(n), w_prefix);
        prefix.col(n + G.dim() + i) = sdt * observe(sys, z).flat();
    }
    r.uc_tilde = uc_check(prefix, tol_uc);
    r.obs_tilde = observability_constant(sys, ops, grid, G, W, ObservabilityKind::tilde_T, t_tilde);
    r.conclusion = r.restriction_ok && r.uc_tilde.holds && r.obs_tilde.constant_C < kInfinitySignal;
    return r;
}

// Ker(Pi_omega restricted to W) = {0}, tested as full column rank of the
// stacked restricted basis (sigma_min > 1e-10 sigma_max).
inline bool restriction_kernel_check(const Subspace& W, const RestrictionOperator& restriction) {
    if (W.ambient().kind != AmbientKind::state_signal || W.ambient().dim != restriction.input_dim()) {
        throw ShapeError("restriction_kernel_check: mask does not match the ambient of W");
    }
    if (W.dim() == 0) {
        return true;
    }
    const int steps = W.ambient().steps;
    const int d = W.ambient().dim;
    const Eigen::Index r_rows = restriction.matrix.rows();
    Matrix stacked(r_rows * steps, W.dim());
    for (int i = 0; i < W.dim(); ++i) {
        const Matrix values = Eigen::Map<const Matrix>(W.basis().col(i).data(), d, steps);
        const Matrix restricted = restriction.matrix * values;
        stacked.col(i) = Eigen::Map<const Vector>(restricted.data(), restricted.size());
    }
    const SvdSummary svd = svd_full(stacked);
    const double smax = svd.singular_values(0);
    return smax > 0.0 && svd.singular_values(W.dim() - 1) > kRankTolerance * smax;
}

// Combined condition: (w, g) -> K w + L g injective on W x G, with K the
// pointwise restriction and L a linear map on flattened control signals
// whose output matches the flattened restricted state signal.
inline bool restriction_kernel_check(const Subspace& W, const Subspace& G, const RestrictionOperator& restriction,
                                     const Matrix& control_operator) {
    if (W.ambient().kind != AmbientKind::state_signal || W.ambient().dim != restriction.input_dim()) {
        throw ShapeError("restriction_kernel_check: mask does not match the ambient of W");
    }
    const int steps = W.ambient().steps;
    const Eigen::Index out_rows = restriction.matrix.rows() * steps;
    if (control_operator.rows() != out_rows || control_operator.cols() != G.ambient().size()) {
        throw ShapeError("restriction_kernel_check: control operator shape mismatch");
    }
    const int total = W.dim() + G.dim();
    if (total == 0) {
        return true;
    }
    Matrix stacked(out_rows, total);
    const int d = W.ambient().dim;
    for (int i = 0; i < W.dim(); ++i) {
        const Matrix values = Eigen::Map<const Matrix>(W.basis().col(i).data(), d, steps);
        const Matrix restricted = restriction.matrix * values;
        stacked.col(i) = Eigen::Map<const Vector>(restricted.data(), restricted.size());
    }
    for (int i = 0; i < G.dim(); ++i) {
        stacked.col(W.dim() + i) = control_operator * G.basis().col(i);
    }
    const SvdSummary svd = svd_full(stacked);
    const double smax = svd.singular_values(0);
    return smax > 0.0 && svd.singular_values(total - 1) > kRankTolerance * smax;
}

enum class SpectralUcClass { UC_holds_nonresonant, UC_holds_no_solution, UC_holds_inf_positive, UC_fails };

inline std::string_view to_string(SpectralUcClass c) {
    switch (c) {
        case SpectralUcClass::UC_holds_nonresonant: return "UC_holds_nonresonant";
        case SpectralUcClass::UC_holds_no_solution: return "UC_holds_no_solution";
        case SpectralUcClass::UC_holds_inf_positive: return "UC_holds_inf_positive";
        case SpectralUcClass::UC_fails: return "UC_fails";
    }
    return "?";
}

struct SpectralUcResult {
    SpectralUcClass classification = SpectralUcClass::UC_fails;
    std::vector<int> resonant_modes;  // 1-based indices j with mu = lambda_j
    double measure = 0.0;             // the quantity compared against tol
    Vector solution;                  // Z_mu (non-resonant) or Z*_mu + best Phi_j
};

// Classifies (mu + Laplacian) Z = w on the modal heat model: unique solution
// seen on omega, Fredholm obstruction, or positive distance of the solution
// set from functions vanishing on omega.
inline SpectralUcResult spectral_uc_classify(double mu, const Vector& w_mu, const ModelDescriptor& model,
                                             const RestrictionOperator& omega, double tol = 1e-8) {
    const int n = model.n_modes;
    if (w_mu.size() != n || omega.input_dim() != n) {
        throw ShapeError("spectral_uc_classify: w_mu / restriction must have n_modes entries");
    }
    SpectralUcResult out;
    out.solution = Vector::Zero(n);
    std::vector<int> resonant;
    for (int j = 0; j < n; ++j) {
        const double lam = model.eigenvalues[j];
        if (std::abs(mu - lam) <= 1e-9 * std::max(1.0, lam)) {
            resonant.push_back(j);
        }
    }
    out.resonant_modes.reserve(resonant.size());
    for (int j : resonant) out.resonant_modes.push_back(j + 1);

    // Particular solution orthogonal to the resonant eigenspace.
    Vector particular = Vector::Zero(n);
    double resonant_part = 0.0;
    for (int j = 0; j < n; ++j) {
        const bool is_res = std::find(resonant.begin(), resonant.end(), j) != resonant.end();
        if (is_res) {
            resonant_part += w_mu(j) * w_mu(j);
        } else {
            particular(j) = w_mu(j) / (mu - model.eigenvalues[j]);
        }
    }
    resonant_part = std::sqrt(resonant_part);

    if (resonant.empty()) {
        out.solution = particular;
        out.measure = (omega.matrix * particular).norm();
        out.classification =
            out.measure > tol ? SpectralUcClass::UC_holds_nonresonant : SpectralUcClass::UC_fails;
        return out;
    }
    if (resonant_part > tol) {
        out.measure = resonant_part;
        out.classification = SpectralUcClass::UC_holds_no_solution;
        return out;
    }
    // min over Phi in H_j of |Z* + Phi|_{L^2(omega)}: least squares in the
    // resonant coordinates.
    Matrix basis(omega.matrix.rows(), static_cast<Eigen::Index>(resonant.size()));
    for (std::size_t i = 0; i < resonant.size(); ++i) {
        basis.col(static_cast<Eigen::Index>(i)) = omega.matrix.col(resonant[i]);
    }
    const Vector rhs = -(omega.matrix * particular);
    const Vector coef = basis.colPivHouseholderQr().solve(rhs);
    Vector best = particular;
    for (std::size_t i = 0; i < resonant.size(); ++i) {
        best(resonant[i]) = coef(static_cast<Eigen::Index>(i));
    }
    out.solution = best;
    out.measure = (omega.matrix * best).norm();
    out.classification = out.measure > tol ? SpectralUcClass::UC_holds_inf_positive : SpectralUcClass::UC_fails;
    return out;
}

// One exponent of a modal family: nu together with a subspace of H (for
// W_k) or of U (for G_j), both with the Euclidean ambient.
struct FrequencySpace {
    double frequency = 0.0;
    Subspace space{Ambient::state(0)};
};

enum class FrequencyRole { trajectory, control, combined };

struct FrequencyVerdict {
    double frequency = 0.0;
    FrequencyRole role = FrequencyRole::trajectory;
    bool passes = false;
    double sigma_min = 0.0;
    std::optional<Vector> witness;
};

struct ModalUcReport {
    bool passes = true;
    std::vector<FrequencyVerdict> details;
};

// Frequency-by-frequency unique continuation for spaces spanned by
// e^{mu_k t} W_k and e^{rho_j t} G_j. Each condition is a kernel test of a
// stacked matrix:
//   mu:   [(I - P_Wk)(mu I + A^T); B^T]
//   rho:  [(rho I + A^T); (I - P_Gj) B^T]
//   both: [(I - P_Wk)(nu I + A^T); (I - P_Gj) B^T]
inline ModalUcReport modal_uc_check(const LinearSystem& sys, const std::vector<FrequencySpace>& mus,
                                    const std::vector<FrequencySpace>& rhos) {
    sys.validate();
    const int n = sys.n();
    const int m = sys.m();
    const auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); };
    const auto check_distinct = [&](const std::vector<FrequencySpace>& v, const char* what) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            for (std::size_t j = i + 1; j < v.size(); ++j) {
                if (same(v[i].frequency, v[j].frequency)) {
                    throw InputError(std::string("modal_uc_check: duplicate frequency in ") + what);
                }
            }
        }
    };
    check_distinct(mus, "mus");
    check_distinct(rhos, "rhos");
    for (const auto& mu : mus) {
        detail::require_shape(mu.space.ambient() == Ambient::state(n), "modal_uc_check: W_k must be a subspace of H");
    }
    for (const auto& rho : rhos) {
        detail::require_shape(rho.space.ambient() == Ambient::state(m), "modal_uc_check: G_j must be a subspace of U");
    }

    const Matrix id_n = Matrix::Identity(n, n);
    const auto complement = [](const Subspace& s, int dim) {
        return Matrix(Matrix::Identity(dim, dim) - s.basis() * s.basis().transpose());
    };

    ModalUcReport report;
    const auto verdict = [&](double nu, FrequencyRole role, const Matrix& top, const Matrix& bottom) {
        Matrix stacked(top.rows() + bottom.rows(), n);
        stacked << top, bottom;
        FrequencyVerdict v;
        v.frequency = nu;
        v.role = role;
        const SvdSummary svd = svd_full(stacked);
        v.sigma_min = svd.singular_values(n - 1);
        const double smax = svd.singular_values(0);
        v.passes = v.sigma_min > kRankTolerance * std::max(1.0, smax);
        if (!v.passes) {
            Vector w = svd.right_vectors.col(n - 1);
            canonical_sign(w);
            v.witness = w;
        }
        report.passes = report.passes && v.passes;
        report.details.push_back(std::move(v));
    };

    for (const auto& mu : mus) {
        const Matrix shifted = mu.frequency * id_n + sys.A.transpose();
        const FrequencySpace* partner = nullptr;
        for (const auto& rho : rhos) {
            if (same(rho.frequency, mu.frequency)) partner = &rho;
        }
        const Matrix top = complement(mu.space, n) * shifted;
        if (partner) {
            verdict(mu.frequency, FrequencyRole::combined, top, complement(partner->space, m) * sys.B.transpose());
        } else {
            verdict(mu.frequency, FrequencyRole::trajectory, top, sys.B.transpose());
        }
    }
    for (const auto& rho : rhos) {
        bool shared = false;
        for (const auto& mu : mus) {
            if (same(rho.frequency, mu.frequency)) shared = true;
        }
        if (shared) continue;
        verdict(rho.frequency, FrequencyRole::control, rho.frequency * id_n + sys.A.transpose(),
                complement(rho.space, m) * sys.B.transpose());
    }
    return report;
}

}  // namespace pcc
