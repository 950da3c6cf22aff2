#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gbpse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A linear solve or inverse hit a matrix that fails the invertibility test.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

namespace linalg {

/// Relative definiteness threshold: a symmetric M is SPD iff
/// lambda_min(M) > kSpdRelTol * lambda_max(M).
inline constexpr double kSpdRelTol = 1e-10;

/// Reciprocal condition estimate below which a solve is declared singular.
inline constexpr double kRcondTol = 1e-12;

Matrix symmetrize(const Matrix& m);

/// Eigenvalues of the symmetric part of m, ascending. Empty for 0x0.
Vector sym_eigenvalues(const Matrix& m);

double min_eigenvalue(const Matrix& m);
double max_eigenvalue(const Matrix& m);

/// Scale-invariant SPD test. A 0x0 matrix is vacuously SPD.
bool is_spd(const Matrix& m);

/// Unique symmetric PSD square root (negative round-off eigenvalues clamp to 0).
Matrix sqrt_psd(const Matrix& m);

/// Symmetric inverse square root of an SPD matrix.
Matrix inv_sqrt_spd(const Matrix& m);

/// Cholesky factor of a symmetric matrix that passes the reciprocal
/// condition test; nullopt otherwise.
std::optional<Eigen::LLT<Matrix>> try_factor_spd(const Matrix& m);

/// As try_factor_spd, throwing SingularMatrixError on failure.
Eigen::LLT<Matrix> factor_spd(const Matrix& m);

/// Inverse of an SPD matrix via Cholesky; throws SingularMatrixError on failure.
Matrix inverse_spd(const Matrix& m);

/// Cholesky-based solve m * x = rhs with a reciprocal-condition check.
Matrix solve_spd(const Matrix& m, const Matrix& rhs);
Vector solve_spd(const Matrix& m, const Vector& rhs);

/// Largest singular value (0 for empty).
double spectral_norm(const Matrix& m);

/// Largest eigenvalue magnitude of a general square matrix (0 for empty).
double spectral_radius(const Matrix& m);

/// Checks lower <= upper in the Loewner order: lambda_min(upper - lower) >=
/// -slack * max(1, ||upper||, ||lower||).
bool loewner_leq(const Matrix& lower, const Matrix& upper, double slack);

/// Largest generalized eigenvalue lambda of (numerator, denominator), i.e.
/// lambda_max(D^{-1/2} N D^{-1/2}) with D SPD.
double max_generalized_eigenvalue(const Matrix& numerator, const Matrix& denominator);

/// Frobenius-relative difference ||a - b||_F / (1 + ||b||_F).
double relative_change(const Matrix& a, const Matrix& b);

}  // namespace linalg
}  // namespace gbpse
