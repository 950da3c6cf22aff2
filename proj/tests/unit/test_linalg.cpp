#include <gtest/gtest.h>

#include "gbpse/format.hpp"
#include "gbpse/linalg.hpp"
#include "oracles.hpp"

using namespace gbpse;

namespace {

Matrix spd3() {
    Matrix m(3, 3);
    m << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
    return m;
}

}  // namespace

TEST(Linalg, SpdToleranceIsRelative) {
    EXPECT_TRUE(linalg::is_spd(spd3()));
    EXPECT_TRUE(linalg::is_spd(1e-30 * spd3()));
    Matrix near = Matrix::Identity(2, 2);
    near(1, 1) = 1e-11;
    EXPECT_FALSE(linalg::is_spd(near));
    near(1, 1) = 1e-9;
    EXPECT_TRUE(linalg::is_spd(near));
    EXPECT_TRUE(linalg::is_spd(Matrix(0, 0)));
}

TEST(Linalg, SqrtAndInverseSqrtAreSymmetricRoots) {
    const Matrix m = spd3();
    const Matrix s = linalg::sqrt_psd(m);
    EXPECT_LT((s - s.transpose()).norm(), 1e-14);
    EXPECT_LT((s * s - m).norm(), 1e-12);
    const Matrix w = linalg::inv_sqrt_spd(m);
    EXPECT_LT((w * m * w - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(Linalg, SolveRejectsSingular) {
    Matrix sing = Matrix::Zero(2, 2);
    sing(0, 0) = 1;
    EXPECT_THROW(linalg::solve_spd(sing, Vector(Vector::Ones(2))), SingularMatrixError);
    EXPECT_THROW(linalg::factor_spd(sing), SingularMatrixError);
    EXPECT_FALSE(linalg::try_factor_spd(sing).has_value());
    const Vector x = linalg::solve_spd(spd3(), Vector(Vector::Ones(3)));
    EXPECT_LT((spd3() * x - Vector::Ones(3)).norm(), 1e-13);
}

TEST(Linalg, GeneralizedEigenvalueMatchesEigenSolver) {
    Matrix n(3, 3);
    n << 1, 0.3, -0.2, 0.3, -2, 0.1, -0.2, 0.1, 0.5;
    EXPECT_NEAR(linalg::max_generalized_eigenvalue(n, spd3()), oracle::max_gen_eig(n, spd3()), 1e-12);
}

TEST(Linalg, LoewnerOrderUsesSlack) {
    const Matrix a = Matrix::Identity(2, 2);
    EXPECT_TRUE(linalg::loewner_leq(a, 2 * a, 0.0));
    EXPECT_FALSE(linalg::loewner_leq(2 * a, a, 1e-8));
    EXPECT_TRUE(linalg::loewner_leq(a * (1 + 1e-10), a, 1e-8));
}

TEST(Linalg, SpectralQuantities) {
    Matrix rot(2, 2);
    rot << 0, -2, 2, 0;
    EXPECT_NEAR(linalg::spectral_radius(rot), 2.0, 1e-14);
    EXPECT_NEAR(linalg::spectral_norm(rot), 2.0, 1e-14);
    Matrix nil(2, 2);
    nil << 0, 5, 0, 0;
    EXPECT_NEAR(linalg::spectral_radius(nil), 0.0, 1e-14);
    EXPECT_NEAR(linalg::spectral_norm(nil), 5.0, 1e-14);
    EXPECT_EQ(linalg::spectral_radius(Matrix(0, 0)), 0.0);
}

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333333333");
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    EXPECT_EQ(std::stod(format_number(2.0 / 7.0)), 2.0 / 7.0);
}
