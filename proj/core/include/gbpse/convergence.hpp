#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gbpse/graph.hpp"

namespace gbpse {

/// Limits of the measurement-independent Q/R recursions, indexed by slot.
/// For slot s = (i -> (i,j)): Q_out[s] = Q_{i->i,j}, R_fwd[s] = R_{i,j->j}
/// and Q_fwd[s] = Q_{i,j->j}, the information factor (i,j) passes to j.
struct FixedPointMessages {
    std::vector<Matrix> Q_out;
    std::vector<Matrix> Q_fwd;
    std::vector<Matrix> R_fwd;
    std::vector<Matrix> Q_node;  ///< Q_i(inf) per node index
    double residual = 0.0;
    int iterations = 0;
    bool assumption_holds = true;
};

class FixedPointError : public Error {
public:
    FixedPointError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

struct FixedPointOptions {
    double tol = 1e-12;
    /// 0 selects max(500, 10 * (diameter + 1)).
    int max_iters = 0;
    /// When false, graphs violating Assumption 1 are iterated anyway and the
    /// result is flagged instead of refused.
    bool require_assumption = true;
};

/// Iterates the information recursions until the relative change of every
/// factor-to-variable Q drops below tol.
FixedPointMessages fixed_point(const MeasurementGraph& g, const FixedPointOptions& options = {});

struct Constants {
    double eta = 0.0;
    double rho = 0.0;
    double alpha = 0.0;
};

Constants constants(const MeasurementGraph& g, const FixedPointMessages& fp);

/// Square matrix over the canonical slot order with one state block per slot.
struct SlotMatrix {
    Matrix M;
    std::vector<std::size_t> slots;  ///< graph slot index of each block
    std::vector<int> offsets;        ///< block k spans [offsets[k], offsets[k+1])

    std::size_t blocks() const noexcept { return slots.size(); }
    Matrix block(std::size_t row, std::size_t col) const;
};

SlotMatrix assemble_A_infinity(const MeasurementGraph& g, const FixedPointMessages& fp);

/// Restriction to slots whose endpoints both survive leaf pruning. Empty
/// when the pruned graph is a single node.
SlotMatrix prune_A(const MeasurementGraph& g, const SlotMatrix& A);

enum class Stability { stable, marginal, unstable };
std::string to_string(Stability s);

struct StabilityVerdict {
    double spectral_radius = 0.0;
    Stability verdict = Stability::stable;
    bool stable() const noexcept { return verdict == Stability::stable; }
};

/// Radius of the given (pruned) matrix; stable below 1 - 1e-10, marginal
/// within 1e-10 of 1.
StabilityVerdict stability_verdict(const SlotMatrix& A_bar);

enum class Condition { pass, fail, not_applicable };
std::string to_string(Condition c);

struct DistributedCondition {
    std::map<NodeId, double> sigma;  ///< nodes with at least three pruned neighbors
    double rho_bar = 0.0;
    Condition result = Condition::not_applicable;
    bool single_cycle = false;
};

DistributedCondition distributed_condition(const MeasurementGraph& g, const SlotMatrix& A_bar, double rho);

/// B = Q^{1/2} A Q^{-1/2} with Q block diagonal in Q_out; beta its radius.
struct BInfinity {
    SlotMatrix B;
    double beta = 0.0;
};

BInfinity assemble_B_infinity(const FixedPointMessages& fp, const SlotMatrix& A);

struct StabilityReport {
    Constants constants;
    bool assumption_holds = false;
    FixedPointMessages fixed_point;
    SlotMatrix A_inf;
    SlotMatrix A_bar;
    StabilityVerdict necessary_sufficient;
    DistributedCondition distributed_sufficient;
    double beta = 0.0;
};

/// Full pipeline. Assumption 1 violations are tolerated when the fixed point
/// still exists numerically; the report records them.
StabilityReport analyze_stability(const MeasurementGraph& g, const FixedPointOptions& options = {});

void write_stability_text(std::ostream& os, const MeasurementGraph& g, const StabilityReport& r);
void write_stability_csv(std::ostream& os, const MeasurementGraph& g, const StabilityReport& r);

}  // namespace gbpse
