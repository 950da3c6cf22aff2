#pragma once

#include <cstddef>
#include <vector>

#include "gbpse/graph.hpp"

namespace gbpse {

/// Global information form J x = b with one state block per node.
struct GlobalSystem {
    Matrix J;
    Vector b;
    std::vector<int> offsets;  ///< block k spans [offsets[k], offsets[k+1])

    std::size_t blocks() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
    int block_dim(std::size_t k) const { return offsets.at(k + 1) - offsets.at(k); }
};

/// The global information matrix is not positive definite.
class UnobservableError : public Error {
public:
    using Error::Error;
};

GlobalSystem assemble_global_system(const MeasurementGraph& g);

/// Same assembly over the layers of a line graph (one block per layer).
GlobalSystem assemble_global_system(const LineGraph& line);

struct NodeMarginal {
    Vector x;
    Matrix Sigma;
    Matrix Q;  ///< Sigma^{-1}
};

struct MlSolution {
    Vector x;                         ///< stacked over node index order
    std::vector<NodeMarginal> nodes;  ///< graph node index order
};

struct OracleOptions {
    /// Above this node count the full covariance is never formed; diagonal
    /// blocks come from column solves instead.
    std::size_t full_covariance_cap = 200;
};

/// Centralized weighted least squares. Throws UnobservableError when J is
/// not SPD.
MlSolution solve_ml(const MeasurementGraph& g, const OracleOptions& options = {});

/// Block tridiagonal system A x = B of a line graph.
struct TriDiagonalSystem {
    std::vector<Matrix> diag;   ///< A_tt
    std::vector<Matrix> upper;  ///< A_{t,t+1}; size() - 1 entries
    std::vector<Vector> rhs;    ///< B_t

    std::size_t size() const noexcept { return diag.size(); }
    Matrix assemble_matrix() const;
    Vector assemble_rhs() const;
};

TriDiagonalSystem assemble_tridiagonal(const LineGraph& line);

/// Block forward elimination pivots: Ã_11 = A_11,
/// Ã_tt = A_tt - A_{t-1,t}^T Ã_{t-1,t-1}^{-1} A_{t-1,t}.
std::vector<Matrix> schur_complements(const TriDiagonalSystem& sys);

/// Block Thomas solve of the whole system.
std::vector<Vector> solve_tridiagonal(const TriDiagonalSystem& sys);

/// First block of the solution after dropping the last row and column
/// block.
Vector solve_truncated(const TriDiagonalSystem& sys);
Vector solve_truncated(const LineGraph& line);

/// Truncated minus full first-block solution, from the full last block x_n:
/// -(-Ã_11^{-1} A_12) ... (-Ã_{n-1,n-1}^{-1} A_{n-1,n}) x_n.
Vector error_product_formula(const TriDiagonalSystem& sys, const Vector& x_n);

}  // namespace gbpse
