#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "pcc/errors.hpp"

namespace pcc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Stand-in for +infinity in reports (constants, radii). Kept finite so that
// every report value survives JSON serialization.
inline constexpr double kInfinitySignal = std::numeric_limits<double>::max();

inline bool all_finite(const Matrix& m) {
    return m.size() == 0 || m.allFinite();
}

// Matrix exponential by scaling and squaring around a fixed degree-13 Pade
// approximant (Higham 2005 coefficients, backward error below unit roundoff).
inline Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw ShapeError("expm: matrix must be square");
    }
    const Eigen::Index n = a.rows();
    if (n == 0) {
        return Matrix(0, 0);
    }
    if (!a.allFinite()) {
        throw InvalidSystemError("expm: non-finite entry");
    }

    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    }
    const Matrix x = a * std::ldexp(1.0, -squarings);

    const Matrix id = Matrix::Identity(n, n);
    const Matrix x2 = x * x;
    const Matrix x4 = x2 * x2;
    const Matrix x6 = x4 * x2;

    const Matrix inner_u = x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2);
    const Matrix u = x * (inner_u + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id);
    const Matrix inner_v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2);
    const Matrix v = inner_v + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;

    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) {
        r = r * r;
    }
    return r;
}

struct SvdSummary {
    Vector singular_values;  // descending, padded with zeros up to cols
    Matrix right_vectors;    // cols x cols, column i pairs with singular_values(i)
};

// Full right-singular basis of an arbitrary (possibly wide or empty) matrix.
// Singular values are padded with zeros when rows < cols so that the last
// column of right_vectors always spans the direction of smallest gain.
inline SvdSummary svd_full(const Matrix& m) {
    const Eigen::Index cols = m.cols();
    SvdSummary out;
    out.singular_values = Vector::Zero(cols);
    if (cols == 0) {
        out.right_vectors = Matrix(0, 0);
        return out;
    }
    if (m.rows() == 0) {
        out.right_vectors = Matrix::Identity(cols, cols);
        return out;
    }
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    out.singular_values.head(s.size()) = s;
    out.right_vectors = svd.matrixV();
    return out;
}

// Orthonormal basis of the numerical kernel: right singular vectors whose
// singular value is at most rel_tol * max(sigma_max, floor).
inline Matrix numerical_kernel(const Matrix& m, double rel_tol, double floor = 0.0) {
    const SvdSummary svd = svd_full(m);
    const Eigen::Index cols = m.cols();
    if (cols == 0) {
        return Matrix(0, 0);
    }
    const double smax = std::max(svd.singular_values.maxCoeff(), floor);
    const double cut = rel_tol * smax;
    Eigen::Index first = cols;
    for (Eigen::Index i = 0; i < cols; ++i) {
        if (svd.singular_values(i) <= cut) {
            first = i;
            break;
        }
    }
    return svd.right_vectors.rightCols(cols - first);
}

// Flip sign so the entry of largest magnitude is positive (deterministic
// representative of a one-dimensional direction).
inline void canonical_sign(Vector& v) {
    if (v.size() == 0) {
        return;
    }
    Eigen::Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    // Prefer the first entry that is within roundoff of the maximum so that
    // symmetric vectors like (1,1)/sqrt(2) resolve identically every time.
    const double top = std::abs(v(idx));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) >= top * (1.0 - 1e-12)) {
            idx = i;
            break;
        }
    }
    if (v(idx) < 0.0) {
        v = -v;
    }
}

}  // namespace pcc
