#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support/oracles.hpp"

using namespace pcc;

namespace {

// Closed form of int_a^b 2 sin(j pi x) sin(k pi x) dx.
double mode_overlap(int j, int k, double a, double b) {
    const double pi = std::numbers::pi;
    const auto part = [&](int q, double x) { return q == 0 ? x : std::sin(q * pi * x) / (q * pi); };
    return (part(j - k, b) - part(j - k, a)) - (part(j + k, b) - part(j + k, a));
}

}  // namespace

TEST(GaussLegendre, ExactOnPolynomialsUpToTwiceCountMinusOne) {
    for (int count : {1, 2, 5, 12}) {
        const QuadratureRule q = gauss_legendre(count, 0.3, 1.7);
        EXPECT_NEAR(q.weights.sum(), 1.4, 1e-14);
        const int deg = 2 * count - 1;
        double approx = 0.0;
        for (Eigen::Index i = 0; i < q.nodes.size(); ++i) approx += q.weights(i) * std::pow(q.nodes(i), deg);
        const double exact = (std::pow(1.7, deg + 1) - std::pow(0.3, deg + 1)) / (deg + 1);
        EXPECT_NEAR(approx, exact, 1e-13 * std::max(1.0, exact)) << "count " << count;
    }
    EXPECT_THROW(gauss_legendre(0, 0.0, 1.0), InputError);
}

TEST(Heat1d, GeneratorAndControlGram) {
    const Model m = make_heat1d(6, 0.3, 0.7, 32);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(m.system.A(j, j), -pi2 * (j + 1) * (j + 1), 1e-12);
    EXPECT_EQ((m.system.A - Matrix(m.system.A.diagonal().asDiagonal())).norm(), 0.0);
    const Matrix gram = m.system.B * m.system.B.transpose();
    for (int j = 0; j < 6; ++j) {
        for (int k = 0; k < 6; ++k) {
            EXPECT_NEAR(gram(j, k), mode_overlap(j + 1, k + 1, 0.3, 0.7), 1e-12) << j << "," << k;
        }
    }
    EXPECT_EQ(m.system.metadata->family, "heat1d");
    EXPECT_EQ(modal_restriction(m.descriptor).matrix, m.system.B.transpose());
}

// Energy coordinates: the free flow is orthogonal, velocity is actuated.
TEST(Wave1d, SkewGeneratorAndVelocityControl) {
    const Model m = make_wave1d(4, 0.2, 0.6, 24);
    EXPECT_EQ((m.system.A + m.system.A.transpose()).norm(), 0.0);
    const Matrix flow = expm(m.system.A * 0.37);
    EXPECT_LE((flow.transpose() * flow - Matrix::Identity(8, 8)).norm(), 1e-12);
    for (int j = 0; j < 4; ++j) EXPECT_EQ(m.system.B.row(2 * j).norm(), 0.0);
    const Matrix gram = m.system.B * m.system.B.transpose();
    EXPECT_NEAR(gram(1, 1), mode_overlap(1, 1, 0.2, 0.6), 1e-12);
}

TEST(Models, RejectInvalidParameters) {
    EXPECT_THROW(make_heat1d(0, 0.3, 0.7, 32), InputError);
    EXPECT_THROW(make_heat1d(4, 0.7, 0.3, 32), InputError);
    EXPECT_THROW(make_heat1d(4, -0.1, 0.3, 32), InputError);
    EXPECT_THROW(make_wave1d(4, 0.3, 0.7, 15), InputError);
    EXPECT_THROW(make_ode(Matrix::Ones(2, 3), Matrix::Ones(2, 1), "bad"), ShapeError);
}

TEST(Models, ModeProfiles) {
    const Model heat = make_heat1d(3, 0.3, 0.7, 12);
    EXPECT_EQ(mode_profile(heat, 2, 0.5), Vector::Unit(3, 1) * 0.5);
    const Model wave = make_wave1d(3, 0.3, 0.7, 12);
    const Vector w = mode_profile(wave, 2);
    EXPECT_NEAR(w(2), 2.0 * std::numbers::pi, 1e-14);
    EXPECT_EQ(w.norm(), std::abs(w(2)));
    EXPECT_THROW(mode_profile(heat, 0), InputError);
    EXPECT_THROW(mode_profile(heat, 4), InputError);
}

TEST(Models, NodalRestrictionKeepsOmegaNodes) {
    const Model heat = make_heat1d(2, 0.25, 0.5, 8);
    const RestrictionOperator r = nodal_restriction(heat.descriptor);
    // Nodes 0, 1/8, ..., 1; those in [1/4, 1/2] are 2, 3, 4.
    EXPECT_EQ(r.matrix.rows(), 3);
    EXPECT_EQ(r.input_dim(), 9);
    EXPECT_NEAR(r.matrix(0, 2), std::sqrt(1.0 / 8.0), 1e-15);
}

TEST(Models, ListedFamilies) {
    const auto list = list_models();
    ASSERT_EQ(list.size(), 3u);
    EXPECT_EQ(list[0].family, "heat1d");
    EXPECT_EQ(list[1].family, "wave1d");
    EXPECT_EQ(list[2].family, "ode");
}
