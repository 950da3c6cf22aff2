#include "gbpse/engine.hpp"

#include <cmath>
#include <ostream>

#include "gbpse/format.hpp"
#include "gbpse/parallel.hpp"

namespace gbpse {

SingularOutgoingError::SingularOutgoingError(NodeId from, NodeId to, int iteration)
    : SingularMatrixError("singular outgoing information " + std::to_string(from) + "->" + std::to_string(to) +
                          " at iteration " + std::to_string(iteration)),
      from_(from),
      to_(to),
      iteration_(iteration) {}

MessageSet init_messages(const MeasurementGraph& g) {
    MessageSet out;
    out.iteration = 0;
    const auto& slots = g.slots();
    out.factor_to_var.resize(slots.size());
    out.var_to_factor.resize(slots.size());
    out.derived.resize(slots.size());
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const auto e = g.oriented(slots[s].from, slots[s].to);
        const auto llt = linalg::factor_spd(e.R);
        out.factor_to_var[s].alpha = e.C_from.transpose() * llt.solve(e.z);
        out.factor_to_var[s].Q = linalg::symmetrize(e.C_from.transpose() * llt.solve(e.C_from));
    }
    return out;
}

BeliefState beliefs_from_messages(const MeasurementGraph& g, const MessageSet& msgs, unsigned threads) {
    BeliefState out;
    out.iteration = msgs.iteration + 1;
    out.nodes.resize(g.size());
    parallel_for(g.size(), threads, [&](std::size_t i) {
        NodeBelief& b = out.nodes[i];
        b.Q = g.self_information(i);
        b.alpha = g.self_information_vector(i);
        for (std::size_t j : g.neighbors(i)) {
            const auto& m = msgs.factor_to_var[g.slot_index(i, j)];
            b.Q += m.Q;
            b.alpha += m.alpha;
        }
        b.Q = linalg::symmetrize(b.Q);
        if (auto llt = linalg::try_factor_spd(b.Q)) {
            b.x_hat = llt->solve(b.alpha);
            b.Sigma = linalg::symmetrize(llt->solve(Matrix::Identity(b.Q.rows(), b.Q.cols())));
        }
    });
    return out;
}

namespace {

MessageSet propagate(const MeasurementGraph& g, const MessageSet& prev, const BeliefState& beliefs,
                     unsigned threads) {
    const auto& slots = g.slots();
    MessageSet out;
    out.iteration = beliefs.iteration;
    out.var_to_factor.resize(slots.size());
    out.factor_to_var.resize(slots.size());
    out.derived.resize(slots.size());
    // Slot s = (i -> (i,j)) writes var_to_factor[s], derived[s] and the
    // factor-to-variable message in the reverse slot (j -> (j,i)).
    parallel_for(slots.size(), threads, [&](std::size_t s) {
        const std::size_t i = slots[s].from;
        const std::size_t j = slots[s].to;
        const auto& belief = beliefs.nodes[i];
        const auto& incoming = prev.factor_to_var[s];

        DirectedMessage& v2f = out.var_to_factor[s];
        v2f.Q = linalg::symmetrize(belief.Q - incoming.Q);
        v2f.alpha = belief.alpha - incoming.alpha;
        const auto q_llt = linalg::try_factor_spd(v2f.Q);
        if (!q_llt) throw SingularOutgoingError(g.id(i), g.id(j), out.iteration);

        const auto e = g.oriented(i, j);
        FactorOutput& d = out.derived[s];
        d.R = linalg::symmetrize(e.R + e.C_from * q_llt->solve(e.C_from.transpose()));
        d.z = e.z - e.C_from * q_llt->solve(v2f.alpha);

        const auto r_llt = linalg::factor_spd(d.R);
        DirectedMessage& f2v = out.factor_to_var[g.slot_index(j, i)];
        f2v.Q = linalg::symmetrize(e.C_to.transpose() * r_llt.solve(e.C_to));
        f2v.alpha = e.C_to.transpose() * r_llt.solve(d.z);
    });
    return out;
}

double max_estimate_norm(const BeliefState& b) {
    double worst = 0.0;
    for (const auto& n : b.nodes) {
        if (!n.x_hat) continue;
        const double v = n.x_hat->norm();
        if (!std::isfinite(v)) return v;
        worst = std::max(worst, v);
    }
    return worst;
}

bool beliefs_settled(const BeliefState& next, const BeliefState& cur, double tol) {
    for (std::size_t i = 0; i < cur.nodes.size(); ++i) {
        const auto& a = next.nodes[i];
        const auto& b = cur.nodes[i];
        if (a.x_hat.has_value() != b.x_hat.has_value()) return false;
        if (a.x_hat && !((*a.x_hat - *b.x_hat).norm() / (1.0 + a.x_hat->norm()) < tol)) return false;
        if (!(linalg::relative_change(a.Q, b.Q) < tol)) return false;
    }
    return true;
}

}  // namespace

StepResult step(const MeasurementGraph& g, const MessageSet& prev, unsigned threads) {
    StepResult out;
    out.beliefs = beliefs_from_messages(g, prev, threads);
    out.messages = propagate(g, prev, out.beliefs, threads);
    return out;
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::iteration_cap: return "iteration cap";
        case Termination::diverged: return "diverged";
    }
    return "unknown";
}

RunResult run(const MeasurementGraph& g, const RunOptions& options) {
    if (options.max_iters < 1) throw Error("max_iters must be at least 1");
    if (!(options.tol > 0.0)) throw Error("tol must be positive");
    RunResult result;
    MessageSet msgs = init_messages(g);
    for (int k = 1; k <= options.max_iters; ++k) {
        StepResult st = step(g, msgs, options.threads);
        msgs = std::move(st.messages);
        result.trace.push_back(std::move(st.beliefs));
        if (options.keep_messages) result.message_trace.push_back(msgs);

        const double norm = max_estimate_norm(result.trace.back());
        if (!std::isfinite(norm) || norm > options.divergence_threshold) {
            result.reason = Termination::diverged;
            break;
        }
        // The newest messages already determine the beliefs of k + 1; when
        // those match the current beliefs the iteration has settled.
        if (k < options.min_iters) continue;
        const BeliefState ahead = beliefs_from_messages(g, msgs, options.threads);
        if (beliefs_settled(ahead, result.trace.back(), options.tol)) {
            result.reason = Termination::converged;
            break;
        }
    }
    result.final_messages = std::move(msgs);
    return result;
}

void write_trace_csv(std::ostream& os, const MeasurementGraph& g, const std::vector<BeliefState>& trace,
                     bool with_states) {
    int width = 0;
    for (std::size_t i = 0; i < g.size(); ++i) width = std::max(width, g.dim(i));
    os << "k,node,x_norm,trace_Q";
    if (with_states) {
        for (int c = 0; c < width; ++c) os << ",x_" << c;
    }
    os << '\n';
    for (const auto& b : trace) {
        for (std::size_t i = 0; i < b.nodes.size(); ++i) {
            const auto& n = b.nodes[i];
            os << b.iteration << ',' << g.id(i) << ',' << (n.x_hat ? format_number(n.x_hat->norm()) : "nan") << ','
               << format_number(n.Q.trace());
            if (with_states) {
                for (int c = 0; c < width; ++c) {
                    os << ',';
                    if (n.x_hat && c < n.x_hat->size()) os << format_number((*n.x_hat)(c));
                }
            }
            os << '\n';
        }
    }
}

}  // namespace gbpse
