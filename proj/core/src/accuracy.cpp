#include "gbpse/accuracy.hpp"

#include <cmath>
#include <ostream>

#include "gbpse/format.hpp"

namespace gbpse {

namespace {

const NodeBelief& belief_at(const AccuracyInputs& in, int k, std::size_t idx) {
    if (k < 1 || static_cast<std::size_t>(k) > in.trace->size()) {
        throw Error("trace does not reach iteration " + std::to_string(k));
    }
    return (*in.trace)[static_cast<std::size_t>(k) - 1].nodes.at(idx);
}

// Smallest and largest lambda with (m - base) v = lambda base v.
std::pair<double, double> relative_gap(const Matrix& m, const Matrix& base) {
    const Matrix diff = linalg::symmetrize(m - base);
    return {-linalg::max_generalized_eigenvalue(-diff, base), linalg::max_generalized_eigenvalue(diff, base)};
}

}  // namespace

ReducedConstants reduced_constants(const MeasurementGraph& g, NodeId i) {
    ReducedConstants out;
    if (!cycle_free_depth(g, i)) {
        const auto fp = fixed_point(g);
        const auto c = constants(g, fp);
        out.alpha = c.alpha;
        out.rho = c.rho;
        return out;
    }
    // The reduced graph is a tree, so its fixed point exists whether or not
    // the split copies satisfy the dominance condition.
    const ReducedGraph reduced = build_reduced_graph(g, i);
    FixedPointOptions opts;
    opts.require_assumption = false;
    const auto fp = fixed_point(reduced.graph, opts);
    const auto c = constants(reduced.graph, fp);
    out.alpha = c.alpha;
    out.rho = c.rho;
    out.from_reduced_graph = true;
    return out;
}

QAccuracy q_accuracy(const AccuracyInputs& in, NodeId i) {
    const auto& g = *in.graph;
    const std::size_t idx = g.index(i);
    QAccuracy out;
    out.node = i;
    out.depth = cycle_free_depth(g, i);
    if (!out.depth) {
        out.note = "acyclic: exact after diameter iterations";
        return out;
    }
    const int d = *out.depth;
    if (d < 1) {
        out.note = "cycle-free depth 0";
        return out;
    }
    try {
        out.reduced = reduced_constants(g, i);
    } catch (const AssumptionError& e) {
        out.note = std::string("reduced graph: ") + e.what();
        return out;
    }
    out.applicable = true;
    const Matrix& q_ml = in.ml->nodes[idx].Q;
    const Matrix& q_d = belief_at(in, d, idx).Q;
    out.bound_at_d = out.reduced.alpha * std::pow(out.reduced.rho, d - 1);
    std::tie(out.gap_at_d_min, out.gap_at_d_max) = relative_gap(q_d, q_ml);
    out.sandwich_holds = linalg::loewner_leq(q_ml, q_d, kBoundSlack) &&
                         linalg::loewner_leq(q_d - q_ml, out.bound_at_d * q_ml, kBoundSlack);

    if (in.fixed_point) {
        out.limit_checked = true;
        const Matrix& q_inf = in.fixed_point->Q_node[idx];
        const double a = in.constants.alpha * std::pow(in.constants.rho, d - 1);
        out.inf_lower = a / (1.0 + a);
        std::tie(out.gap_inf_min, out.gap_inf_max) = relative_gap(q_inf, q_ml);
        out.gap_inf_norm = linalg::spectral_norm(q_inf - q_ml);
        out.limit_holds = linalg::loewner_leq(-out.inf_lower * q_ml, q_inf - q_ml, kBoundSlack) &&
                          linalg::loewner_leq(q_inf - q_ml, out.bound_at_d * q_ml, kBoundSlack);
    }
    return out;
}

double kappa(const MeasurementGraph& g, NodeId i, const MlSolution& ml) {
    const auto depth = cycle_free_depth(g, i);
    if (!depth) return 0.0;
    const auto dist = g.distances_from(g.index(i));
    double sum = 0.0;
    for (std::size_t t = 0; t < g.size(); ++t) {
        if (dist[t] != *depth) continue;
        for (std::size_t j : g.neighbors(t)) {
            if (dist[j] != *depth + 1) continue;
            const auto e = g.oriented(j, t);
            const Vector cx = e.C_from * ml.nodes[j].x;
            sum += cx.dot(linalg::solve_spd(e.R, cx));
        }
    }
    return sum;
}

XAccuracy x_accuracy(const AccuracyInputs& in, NodeId i) {
    const auto& g = *in.graph;
    const std::size_t idx = g.index(i);
    XAccuracy out;
    out.node = i;
    out.depth = cycle_free_depth(g, i);
    if (!out.depth) return out;
    const int d = *out.depth;
    out.applicable = true;
    out.kappa = kappa(g, i, *in.ml);
    out.eta = in.constants.eta;
    out.bound = out.kappa * std::pow(out.eta, d);

    const Matrix& q1 = belief_at(in, 1, idx).Q;
    const auto& b = belief_at(in, d + 1, idx);
    if (!b.x_hat) throw Error("belief of node " + std::to_string(i) + " is singular");
    const Vector dx = *b.x_hat - in.ml->nodes[idx].x;
    out.weighted = dx.dot(q1 * dx);
    out.holds = out.weighted <= out.bound * (1.0 + 1e-9) + 1e-14;

    if (in.limit && in.limit->nodes.at(idx).x_hat) {
        out.limit_available = true;
        const Vector dinf = *in.limit->nodes[idx].x_hat - in.ml->nodes[idx].x;
        out.limit_error_sq = dinf.squaredNorm();
        out.limit_bound = 1.1 * out.bound / linalg::min_eigenvalue(q1);
        constexpr double small = 1e-3;
        out.limit_preconditions = d >= 1 && std::pow(in.constants.rho, d - 1) < small &&
                                  std::pow(in.beta, d - 1) < small;
        if (out.limit_preconditions) out.limit_holds = out.limit_error_sq <= out.limit_bound;
    }
    return out;
}

LayeredValidation layered_validation(const AccuracyInputs& in, NodeId i) {
    const auto& g = *in.graph;
    const std::size_t idx = g.index(i);
    LayeredValidation out;
    out.node = i;
    const auto depth = cycle_free_depth(g, i);
    if (!depth) return out;
    out.applicable = true;

    const auto& b = belief_at(in, *depth + 1, idx);
    if (!b.x_hat) throw Error("belief of node " + std::to_string(i) + " is singular");
    out.engine_minus_oracle = *b.x_hat - in.ml->nodes[idx].x;

    const auto sys = assemble_tridiagonal(build_line_graph(g, i));
    const auto full = solve_tridiagonal(sys);
    out.truncated_minus_full = solve_truncated(sys) - full.front();
    out.product_formula = error_product_formula(sys, full.back());

    const double scale = 1.0 + in.ml->nodes[idx].x.norm();
    out.max_disagreement = std::max({(out.engine_minus_oracle - out.truncated_minus_full).norm(),
                                     (out.engine_minus_oracle - out.product_formula).norm(),
                                     (out.truncated_minus_full - out.product_formula).norm()}) /
                           scale;
    out.agrees = out.max_disagreement <= kLayeredTol;
    return out;
}

bool AccuracyReport::all_bounds_hold() const {
    for (const auto& r : rows) {
        if (r.q.applicable && !(r.q.sandwich_holds && r.q.limit_holds)) return false;
        if (r.x.applicable && !(r.x.holds && r.x.limit_holds)) return false;
        if (r.layered.applicable && !r.layered.agrees) return false;
    }
    return true;
}

AccuracyReport analyze_accuracy(const AccuracyInputs& in) {
    AccuracyReport report;
    for (NodeId id : in.graph->ids()) {
        AccuracyRow row;
        row.q = q_accuracy(in, id);
        row.x = x_accuracy(in, id);
        row.layered = layered_validation(in, id);
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

std::string depth_text(const std::optional<int>& d) {
    return d ? std::to_string(*d) : std::string("inf");
}

const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace

void write_accuracy_csv(std::ostream& os, const AccuracyReport& r) {
    os << "node,d_i,alpha_tilde,rho_tilde,q_bound_at_d,q_gap_at_d,q_sandwich_holds,q_inf_lower,q_gap_inf_min,"
          "q_gap_inf_max,q_limit_holds,kappa,eta,x_bound,x_weighted_error,x_bound_holds,x_inf_error_sq,"
          "x_inf_bound,x_inf_checked,x_inf_holds,layered_disagreement,layered_agrees\n";
    for (const auto& row : r.rows) {
        const auto& q = row.q;
        const auto& x = row.x;
        os << q.node << ',' << depth_text(q.depth) << ',';
        if (q.applicable) {
            os << format_number(q.reduced.alpha) << ',' << format_number(q.reduced.rho) << ','
               << format_number(q.bound_at_d) << ',' << format_number(q.gap_at_d_max) << ','
               << flag(q.sandwich_holds) << ',';
            if (q.limit_checked) {
                os << format_number(q.inf_lower) << ',' << format_number(q.gap_inf_min) << ','
                   << format_number(q.gap_inf_max) << ',' << flag(q.limit_holds) << ',';
            } else {
                os << "unavailable,unavailable,unavailable,unavailable,";
            }
        } else {
            os << "unavailable,unavailable,unavailable,unavailable,unavailable,unavailable,unavailable,"
                  "unavailable,unavailable,";
        }
        if (x.applicable) {
            os << format_number(x.kappa) << ',' << format_number(x.eta) << ',' << format_number(x.bound) << ','
               << format_number(x.weighted) << ',' << flag(x.holds) << ',';
            if (x.limit_available) {
                os << format_number(x.limit_error_sq) << ',' << format_number(x.limit_bound) << ','
                   << flag(x.limit_preconditions) << ',' << flag(x.limit_holds) << ',';
            } else {
                os << "unavailable,unavailable,false,unavailable,";
            }
        } else {
            os << "0,unavailable,0,0,true,unavailable,unavailable,false,unavailable,";
        }
        if (row.layered.applicable) {
            os << format_number(row.layered.max_disagreement) << ',' << flag(row.layered.agrees) << '\n';
        } else {
            os << "unavailable,unavailable\n";
        }
    }
}

void write_accuracy_summary(std::ostream& os, const AccuracyReport& r) {
    os << "accuracy: " << (r.all_bounds_hold() ? "all bounds hold" : "BOUND VIOLATION") << "\n";
    for (const auto& row : r.rows) {
        os << "node " << row.q.node << ": d=" << depth_text(row.q.depth);
        if (row.q.applicable) {
            os << " q_gap=" << format_number(row.q.gap_at_d_max) << " <= " << format_number(row.q.bound_at_d);
        } else if (!row.q.note.empty()) {
            os << " (" << row.q.note << ")";
        }
        if (row.x.applicable) {
            os << " x_err=" << format_number(row.x.weighted) << " <= " << format_number(row.x.bound);
        }
        if (row.layered.applicable) os << " layered=" << (row.layered.agrees ? "agree" : "DISAGREE");
        os << "\n";
    }
}

}  // namespace gbpse
