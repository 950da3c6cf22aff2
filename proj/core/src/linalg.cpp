#include "gbpse/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace gbpse::linalg {

Matrix symmetrize(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

Vector sym_eigenvalues(const Matrix& m) {
    if (m.size() == 0) return Vector();
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double min_eigenvalue(const Matrix& m) {
    const Vector ev = sym_eigenvalues(m);
    return ev.size() == 0 ? 0.0 : ev.minCoeff();
}

double max_eigenvalue(const Matrix& m) {
    const Vector ev = sym_eigenvalues(m);
    return ev.size() == 0 ? 0.0 : ev.maxCoeff();
}

bool is_spd(const Matrix& m) {
    if (m.rows() != m.cols()) return false;
    if (m.size() == 0) return true;
    if (!m.allFinite()) return false;
    const Vector ev = sym_eigenvalues(m);
    const double hi = ev.maxCoeff();
    return hi > 0.0 && ev.minCoeff() > kSpdRelTol * hi;
}

namespace {

Matrix spectral_function(const Matrix& m, double (*f)(double)) {
    if (m.size() == 0) return Matrix(0, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    Vector d = es.eigenvalues();
    for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = f(d(k));
    const Matrix& v = es.eigenvectors();
    return symmetrize(v * d.asDiagonal() * v.transpose());
}

}  // namespace

Matrix sqrt_psd(const Matrix& m) {
    return spectral_function(m, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

Matrix inv_sqrt_spd(const Matrix& m) {
    if (!is_spd(m)) throw SingularMatrixError("inverse square root of a matrix that is not SPD");
    return spectral_function(m, [](double x) { return 1.0 / std::sqrt(x); });
}

std::optional<Eigen::LLT<Matrix>> try_factor_spd(const Matrix& m) {
    if (m.rows() != m.cols() || !m.allFinite()) return std::nullopt;
    Eigen::LLT<Matrix> llt(symmetrize(m));
    if (m.size() == 0) return llt;
    if (llt.info() != Eigen::Success || !(llt.rcond() >= kRcondTol)) return std::nullopt;
    return llt;
}

Eigen::LLT<Matrix> factor_spd(const Matrix& m) {
    auto llt = try_factor_spd(m);
    if (!llt) throw SingularMatrixError("matrix is singular to working precision");
    return std::move(*llt);
}

Matrix inverse_spd(const Matrix& m) {
    if (m.size() == 0) return Matrix(0, 0);
    return symmetrize(factor_spd(m).solve(Matrix::Identity(m.rows(), m.cols())));
}

Matrix solve_spd(const Matrix& m, const Matrix& rhs) {
    if (m.size() == 0) return Matrix(0, rhs.cols());
    return factor_spd(m).solve(rhs);
}

Vector solve_spd(const Matrix& m, const Vector& rhs) {
    if (m.size() == 0) return Vector(0);
    return factor_spd(m).solve(rhs);
}

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

double spectral_radius(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool loewner_leq(const Matrix& lower, const Matrix& upper, double slack) {
    if (lower.size() == 0) return true;
    const double scale = std::max({1.0, spectral_norm(lower), spectral_norm(upper)});
    return min_eigenvalue(upper - lower) >= -slack * scale;
}

double max_generalized_eigenvalue(const Matrix& numerator, const Matrix& denominator) {
    if (numerator.size() == 0) return 0.0;
    const Matrix w = inv_sqrt_spd(denominator);
    return max_eigenvalue(w * numerator * w);
}

double relative_change(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / (1.0 + b.norm());
}

}  // namespace gbpse::linalg
