#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gbpse/convergence.hpp"
#include "gbpse/engine.hpp"
#include "gbpse/oracle.hpp"

namespace gbpse {

/// Ordering checks use this eigenvalue slack, scaled by max(1, ||.||).
inline constexpr double kBoundSlack = 1e-8;

/// alpha and rho evaluated on the reduced graph of a node (or on the graph
/// itself when it is acyclic).
struct ReducedConstants {
    double alpha = 0.0;
    double rho = 0.0;
    bool from_reduced_graph = false;
};

/// The reduced graph is a tree, so its fixed point exists even where the
/// split copies break the dominance condition. Throws AssumptionError only
/// when some Omega of the reduced graph is not positive definite.
ReducedConstants reduced_constants(const MeasurementGraph& g, NodeId i);

/// Everything the per-node checks consume. trace[k-1] holds the beliefs of
/// iteration k and must reach iteration d_i + 1 for every node checked.
struct AccuracyInputs {
    const MeasurementGraph* graph = nullptr;
    const MlSolution* ml = nullptr;
    const std::vector<BeliefState>* trace = nullptr;
    const FixedPointMessages* fixed_point = nullptr;  ///< optional; enables the limit checks
    const BeliefState* limit = nullptr;               ///< optional converged beliefs
    Constants constants;                              ///< of the full graph
    double beta = 0.0;
};

struct QAccuracy {
    NodeId node = 0;
    std::optional<int> depth;
    bool applicable = false;  ///< finite depth of at least one
    ReducedConstants reduced;
    double bound_at_d = 0.0;  ///< alpha~ rho~^(d-1)
    double gap_at_d_min = 0.0;  ///< extreme generalized eigenvalues of (Q_i(d) - Q^ML, Q^ML)
    double gap_at_d_max = 0.0;
    bool sandwich_holds = true;

    bool limit_checked = false;
    double inf_lower = 0.0;  ///< alpha rho^(d-1) / (1 + alpha rho^(d-1))
    double gap_inf_min = 0.0;
    double gap_inf_max = 0.0;
    double gap_inf_norm = 0.0;  ///< ||Q_i(inf) - Q^ML||
    bool limit_holds = true;
    std::string note;
};

QAccuracy q_accuracy(const AccuracyInputs& in, NodeId i);

/// Sum over boundary pairs (t at depth d_i, j at d_i + 1) of
/// x_j^T C_jt^T R_tj^{-1} C_jt x_j with x_j the ML estimate.
double kappa(const MeasurementGraph& g, NodeId i, const MlSolution& ml);

struct XAccuracy {
    NodeId node = 0;
    std::optional<int> depth;
    bool applicable = false;
    double kappa = 0.0;
    double eta = 0.0;
    double bound = 0.0;     ///< kappa eta^d
    double weighted = 0.0;  ///< dx^T Q_i(1) dx at iteration d + 1
    bool holds = true;

    bool limit_available = false;
    double limit_error_sq = 0.0;  ///< ||x_i(inf) - x^ML||^2
    double limit_bound = 0.0;     ///< 1.1 kappa eta^d ||Q_i(1)^{-1}||
    bool limit_preconditions = false;  ///< rho^(d-1) and beta^(d-1) below 1e-3
    bool limit_holds = true;
};

XAccuracy x_accuracy(const AccuracyInputs& in, NodeId i);

struct LayeredValidation {
    NodeId node = 0;
    bool applicable = false;
    Vector engine_minus_oracle;
    Vector truncated_minus_full;
    Vector product_formula;
    double max_disagreement = 0.0;
    bool agrees = true;
};

inline constexpr double kLayeredTol = 1e-9;

LayeredValidation layered_validation(const AccuracyInputs& in, NodeId i);

struct AccuracyRow {
    QAccuracy q;
    XAccuracy x;
    LayeredValidation layered;
};

struct AccuracyReport {
    std::vector<AccuracyRow> rows;
    bool all_bounds_hold() const;
};

AccuracyReport analyze_accuracy(const AccuracyInputs& in);

void write_accuracy_csv(std::ostream& os, const AccuracyReport& r);
void write_accuracy_summary(std::ostream& os, const AccuracyReport& r);

}  // namespace gbpse
