#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gbpse/graph.hpp"

namespace gbpse {

/// Gaussian message in information form.
struct DirectedMessage {
    Vector alpha;
    Matrix Q;
};

/// Effective joint measurement seen by the receiving endpoint:
/// z_{i,j->j} and R_{i,j->j}.
struct FactorOutput {
    Vector z;
    Matrix R;
};

/// All messages of one synchronous iteration, indexed by graph slot.
///
/// For slot s = (i -> (i,j)):
///   var_to_factor[s] holds (alpha, Q)_{i -> i,j}(k)  (empty vector at k = 0)
///   derived[s]       holds (z, R)_{i,j -> j}(k)       (empty vector at k = 0)
///   factor_to_var[s] holds (alpha, Q)_{i,j -> i}(k), the message node i
///                    receives from factor (i,j).
struct MessageSet {
    int iteration = 0;
    std::vector<DirectedMessage> var_to_factor;
    std::vector<DirectedMessage> factor_to_var;
    std::vector<FactorOutput> derived;
};

struct NodeBelief {
    Vector alpha;
    Matrix Q;
    std::optional<Vector> x_hat;  ///< absent when Q is singular
    std::optional<Matrix> Sigma;
};

struct BeliefState {
    int iteration = 0;
    std::vector<NodeBelief> nodes;  ///< graph node index order
};

/// Q_{i -> i,j}(k) failed the invertibility test.
class SingularOutgoingError : public SingularMatrixError {
public:
    SingularOutgoingError(NodeId from, NodeId to, int iteration);
    NodeId from() const noexcept { return from_; }
    NodeId to() const noexcept { return to_; }
    int iteration() const noexcept { return iteration_; }

private:
    NodeId from_;
    NodeId to_;
    int iteration_;
};

/// k = 0 factor-to-variable messages C_ij^T R_ij^{-1} (z_ij, C_ij).
MessageSet init_messages(const MeasurementGraph& g);

/// Beliefs at iteration msgs.iteration + 1 from the factor-to-variable
/// messages of msgs.
BeliefState beliefs_from_messages(const MeasurementGraph& g, const MessageSet& msgs, unsigned threads = 1);

struct StepResult {
    MessageSet messages;
    BeliefState beliefs;
};

/// One synchronous iteration: from the messages at k-1 computes beliefs and
/// all messages at k.
StepResult step(const MeasurementGraph& g, const MessageSet& prev, unsigned threads = 1);

enum class Termination { converged, iteration_cap, diverged };

std::string to_string(Termination t);

struct RunOptions {
    int max_iters = 100;
    /// Convergence is not declared before this iteration.
    int min_iters = 1;
    double tol = 1e-10;
    unsigned threads = 1;
    double divergence_threshold = 1e12;
    bool keep_messages = false;
};

struct RunResult {
    std::vector<BeliefState> trace;  ///< trace[k-1] is the belief state at iteration k
    Termination reason = Termination::iteration_cap;
    MessageSet final_messages;
    std::vector<MessageSet> message_trace;  ///< filled when keep_messages; [k-1] is iteration k
};

/// Iterates step() until the beliefs implied by the newest messages differ
/// from the current ones by less than tol (relative, in x_hat and Q), the
/// estimate norm exceeds the divergence threshold, or max_iters is reached.
RunResult run(const MeasurementGraph& g, const RunOptions& options);

/// CSV with header k,node,x_norm,trace_Q and optionally x_0..x_{n-1}.
void write_trace_csv(std::ostream& os, const MeasurementGraph& g, const std::vector<BeliefState>& trace,
                     bool with_states);

}  // namespace gbpse
