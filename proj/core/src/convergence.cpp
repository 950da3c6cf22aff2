#include "gbpse/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "gbpse/engine.hpp"
#include "gbpse/format.hpp"

namespace gbpse {

namespace {

std::vector<Matrix> node_information(const MeasurementGraph& g, const std::vector<Matrix>& f2v) {
    std::vector<Matrix> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        Matrix q = g.self_information(i);
        for (std::size_t j : g.neighbors(i)) q += f2v[g.slot_index(i, j)];
        out[i] = linalg::symmetrize(q);
    }
    return out;
}

// One pass of the Q/R recursions. Fills Q_out and R_fwd per slot and returns
// the next factor-to-variable information, indexed by receiving slot.
std::vector<Matrix> advance(const MeasurementGraph& g, const std::vector<Matrix>& f2v, int k,
                            std::vector<Matrix>& Q_node, std::vector<Matrix>& Q_out, std::vector<Matrix>& R_fwd) {
    const auto& slots = g.slots();
    Q_node = node_information(g, f2v);
    Q_out.assign(slots.size(), Matrix());
    R_fwd.assign(slots.size(), Matrix());
    std::vector<Matrix> next(slots.size());
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const auto i = slots[s].from;
        const auto j = slots[s].to;
        Q_out[s] = linalg::symmetrize(Q_node[i] - f2v[s]);
        const auto llt = linalg::try_factor_spd(Q_out[s]);
        if (!llt) throw SingularOutgoingError(g.id(i), g.id(j), k);
        const auto e = g.oriented(i, j);
        R_fwd[s] = linalg::symmetrize(e.R + e.C_from * llt->solve(e.C_from.transpose()));
        next[g.slot_index(j, i)] = linalg::symmetrize(e.C_to.transpose() * linalg::solve_spd(R_fwd[s], e.C_to));
    }
    return next;
}

SlotMatrix empty_slot_matrix() {
    SlotMatrix m;
    m.M = Matrix(0, 0);
    m.offsets = {0};
    return m;
}

SlotMatrix slot_layout(const MeasurementGraph& g, std::vector<std::size_t> slots) {
    SlotMatrix m;
    m.slots = std::move(slots);
    m.offsets = {0};
    for (std::size_t s : m.slots) m.offsets.push_back(m.offsets.back() + g.dim(g.slots()[s].from));
    m.M = Matrix::Zero(m.offsets.back(), m.offsets.back());
    return m;
}

}  // namespace

FixedPointMessages fixed_point(const MeasurementGraph& g, const FixedPointOptions& options) {
    const AssumptionCheck check = check_assumption1(g);
    if (!check.holds && options.require_assumption) {
        throw AssumptionError("assumption violated: eta = " + format_number(check.eta) + " at slot " +
                              std::to_string(check.worst_from) + "->" + std::to_string(check.worst_to));
    }
    const int cap = options.max_iters > 0 ? options.max_iters : std::max(500, 10 * (g.diameter() + 1));
    const auto& slots = g.slots();

    std::vector<Matrix> f2v(slots.size());
    for (std::size_t s = 0; s < slots.size(); ++s) f2v[s] = g.edge_information(slots[s].from, slots[s].to);

    FixedPointMessages fp;
    fp.assumption_holds = check.holds;
    double residual = slots.empty() ? 0.0 : INFINITY;
    int k = 0;
    while (residual >= options.tol && k < cap) {
        ++k;
        auto next = advance(g, f2v, k, fp.Q_node, fp.Q_out, fp.R_fwd);
        residual = 0.0;
        for (std::size_t s = 0; s < slots.size(); ++s) {
            residual = std::max(residual, linalg::relative_change(next[s], f2v[s]));
        }
        f2v = std::move(next);
    }
    if (residual >= options.tol) {
        throw FixedPointError("fixed point not reached after " + std::to_string(k) +
                                  " iterations (residual " + format_number(residual) + ")",
                              residual);
    }
    // Recompute every quantity from the settled messages so they are mutually
    // consistent.
    advance(g, f2v, k + 1, fp.Q_node, fp.Q_out, fp.R_fwd);
    fp.Q_fwd.resize(slots.size());
    for (std::size_t s = 0; s < slots.size(); ++s) fp.Q_fwd[s] = f2v[g.slot_index(slots[s].to, slots[s].from)];
    fp.residual = residual;
    fp.iterations = k;
    return fp;
}

Constants constants(const MeasurementGraph& g, const FixedPointMessages& fp) {
    Constants c;
    c.eta = check_assumption1(g).eta;
    const auto& slots = g.slots();
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const auto i = slots[s].from;
        const auto j = slots[s].to;
        const auto e = g.oriented(i, j);
        const Matrix r = linalg::inv_sqrt_spd(fp.R_fwd[s]);
        const Matrix inner = r * e.C_from * linalg::solve_spd(fp.Q_out[s], Matrix(e.C_from.transpose())) * r;
        c.rho = std::max(c.rho, linalg::spectral_norm(inner));

        const Matrix w = linalg::inv_sqrt_spd(fp.Q_out[s]);
        const Matrix omega = compute_omega(g, g.id(i), g.id(j));
        const Matrix gap = w * omega * w - Matrix::Identity(w.rows(), w.cols());
        c.alpha = std::max(c.alpha, linalg::spectral_norm(gap));
    }
    return c;
}

Matrix SlotMatrix::block(std::size_t row, std::size_t col) const {
    return M.block(offsets.at(row), offsets.at(col), offsets.at(row + 1) - offsets[row],
                   offsets.at(col + 1) - offsets[col]);
}

SlotMatrix assemble_A_infinity(const MeasurementGraph& g, const FixedPointMessages& fp) {
    const auto& slots = g.slots();
    std::vector<std::size_t> all(slots.size());
    for (std::size_t s = 0; s < slots.size(); ++s) all[s] = s;
    SlotMatrix A = slot_layout(g, all);

    std::vector<Matrix> w(slots.size());
    for (std::size_t s = 0; s < slots.size(); ++s) w[s] = linalg::inv_sqrt_spd(fp.Q_out[s]);

    for (std::size_t r = 0; r < slots.size(); ++r) {
        const auto i = slots[r].from;
        const auto j = slots[r].to;
        for (std::size_t nb : g.neighbors(i)) {
            if (nb == j) continue;
            const auto c = g.slot_index(nb, i);
            const auto e = g.oriented(i, nb);
            const Matrix blk = -w[r] * e.C_from.transpose() * linalg::solve_spd(fp.R_fwd[c], e.C_to) * w[c];
            A.M.block(A.offsets[r], A.offsets[c], blk.rows(), blk.cols()) = blk;
        }
    }
    return A;
}

SlotMatrix prune_A(const MeasurementGraph& g, const SlotMatrix& A) {
    const auto kept = prune_leaves(g);
    if (kept.size() <= 1) return empty_slot_matrix();
    std::set<std::size_t> keep;
    for (NodeId id : kept) keep.insert(g.index(id));

    std::vector<std::size_t> positions;
    std::vector<std::size_t> slots;
    for (std::size_t k = 0; k < A.slots.size(); ++k) {
        const auto& sl = g.slots()[A.slots[k]];
        if (keep.count(sl.from) && keep.count(sl.to)) {
            positions.push_back(k);
            slots.push_back(A.slots[k]);
        }
    }
    SlotMatrix out = slot_layout(g, slots);
    for (std::size_t r = 0; r < positions.size(); ++r) {
        for (std::size_t c = 0; c < positions.size(); ++c) {
            const Matrix blk = A.block(positions[r], positions[c]);
            out.M.block(out.offsets[r], out.offsets[c], blk.rows(), blk.cols()) = blk;
        }
    }
    return out;
}

std::string to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::marginal: return "marginal";
        case Stability::unstable: return "unstable";
    }
    return "unknown";
}

StabilityVerdict stability_verdict(const SlotMatrix& A_bar) {
    constexpr double margin = 1e-10;
    StabilityVerdict v;
    v.spectral_radius = linalg::spectral_radius(A_bar.M);
    if (v.spectral_radius < 1.0 - margin) {
        v.verdict = Stability::stable;
    } else if (v.spectral_radius <= 1.0 + margin) {
        v.verdict = Stability::marginal;
    } else {
        v.verdict = Stability::unstable;
    }
    return v;
}

std::string to_string(Condition c) {
    switch (c) {
        case Condition::pass: return "pass";
        case Condition::fail: return "fail";
        case Condition::not_applicable: return "not-applicable";
    }
    return "unknown";
}

DistributedCondition distributed_condition(const MeasurementGraph& g, const SlotMatrix& A_bar, double rho) {
    DistributedCondition out;
    out.rho_bar = rho;
    if (A_bar.blocks() == 0) return out;

    std::map<std::size_t, std::vector<std::size_t>> rows_of;  // node -> positions of its outgoing slots
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> position;
    for (std::size_t k = 0; k < A_bar.blocks(); ++k) {
        const auto& sl = g.slots()[A_bar.slots[k]];
        rows_of[sl.from].push_back(k);
        position[{sl.from, sl.to}] = k;
    }
    out.single_cycle = true;
    for (const auto& [i, rows] : rows_of) {
        if (rows.size() != 2) out.single_cycle = false;
        if (rows.size() < 3) continue;
        std::vector<std::size_t> cols;
        for (std::size_t r : rows) cols.push_back(position.at({g.slots()[A_bar.slots[r]].to, i}));
        std::vector<int> roff{0};
        std::vector<int> coff{0};
        for (std::size_t r : rows) roff.push_back(roff.back() + A_bar.offsets[r + 1] - A_bar.offsets[r]);
        for (std::size_t c : cols) coff.push_back(coff.back() + A_bar.offsets[c + 1] - A_bar.offsets[c]);
        Matrix local = Matrix::Zero(roff.back(), coff.back());
        for (std::size_t a = 0; a < rows.size(); ++a) {
            for (std::size_t b = 0; b < cols.size(); ++b) {
                local.block(roff[a], coff[b], roff[a + 1] - roff[a], coff[b + 1] - coff[b]) = A_bar.block(rows[a], cols[b]);
            }
        }
        const double sigma = linalg::spectral_norm(local);
        out.sigma[g.id(i)] = sigma;
        out.rho_bar = std::max(out.rho_bar, sigma * sigma);
    }
    out.result = out.rho_bar < 1.0 ? Condition::pass : Condition::fail;
    return out;
}

BInfinity assemble_B_infinity(const FixedPointMessages& fp, const SlotMatrix& A) {
    BInfinity out;
    out.B = A;
    for (std::size_t r = 0; r < A.blocks(); ++r) {
        const Matrix left = linalg::sqrt_psd(fp.Q_out[A.slots[r]]);
        for (std::size_t c = 0; c < A.blocks(); ++c) {
            const Matrix blk = A.block(r, c);
            if (blk.isZero(0.0)) continue;
            const Matrix right = linalg::inv_sqrt_spd(fp.Q_out[A.slots[c]]);
            out.B.M.block(A.offsets[r], A.offsets[c], blk.rows(), blk.cols()) = left * blk * right;
        }
    }
    out.beta = linalg::spectral_radius(out.B.M);
    return out;
}

StabilityReport analyze_stability(const MeasurementGraph& g, const FixedPointOptions& options) {
    StabilityReport r;
    FixedPointOptions relaxed = options;
    relaxed.require_assumption = false;
    r.fixed_point = fixed_point(g, relaxed);
    r.assumption_holds = r.fixed_point.assumption_holds;
    r.constants = constants(g, r.fixed_point);
    r.A_inf = assemble_A_infinity(g, r.fixed_point);
    r.A_bar = prune_A(g, r.A_inf);
    r.necessary_sufficient = stability_verdict(r.A_bar);
    r.distributed_sufficient = distributed_condition(g, r.A_bar, r.constants.rho);
    if (!r.assumption_holds) r.distributed_sufficient.result = Condition::not_applicable;
    r.beta = assemble_B_infinity(r.fixed_point, r.A_inf).beta;
    return r;
}

void write_stability_text(std::ostream& os, const MeasurementGraph& g, const StabilityReport& r) {
    os << "nodes: " << g.size() << "\n"
       << "edges: " << g.edge_count() << "\n"
       << "acyclic: " << (g.is_acyclic() ? "yes" : "no") << "\n"
       << "assumption1: " << (r.assumption_holds ? "holds" : "violated") << "\n"
       << "eta: " << format_number(r.constants.eta) << "\n"
       << "rho: " << format_number(r.constants.rho) << "\n"
       << "alpha: " << format_number(r.constants.alpha) << "\n"
       << "fixed_point_iterations: " << r.fixed_point.iterations << "\n"
       << "fixed_point_residual: " << format_number(r.fixed_point.residual) << "\n"
       << "A_inf_size: " << r.A_inf.M.rows() << "\n"
       << "A_bar_size: " << r.A_bar.M.rows() << "\n"
       << "spectral_radius: " << format_number(r.necessary_sufficient.spectral_radius) << "\n"
       << "beta: " << format_number(r.beta) << "\n"
       << "necessary_sufficient: " << to_string(r.necessary_sufficient.verdict) << "\n"
       << "distributed_sufficient: " << to_string(r.distributed_sufficient.result) << "\n"
       << "rho_bar: " << format_number(r.distributed_sufficient.rho_bar) << "\n"
       << "single_cycle: " << (r.distributed_sufficient.single_cycle ? "yes" : "no") << "\n";
    for (const auto& [id, sigma] : r.distributed_sufficient.sigma) {
        os << "sigma[" << id << "]: " << format_number(sigma) << "\n";
    }
}

void write_stability_csv(std::ostream& os, const MeasurementGraph&, const StabilityReport& r) {
    os << "eta,rho,alpha,assumption1,spectral_radius,beta,necessary_sufficient,distributed_sufficient,rho_bar\n"
       << format_number(r.constants.eta) << ',' << format_number(r.constants.rho) << ','
       << format_number(r.constants.alpha) << ',' << (r.assumption_holds ? "holds" : "violated") << ','
       << format_number(r.necessary_sufficient.spectral_radius) << ',' << format_number(r.beta) << ','
       << to_string(r.necessary_sufficient.verdict) << ',' << to_string(r.distributed_sufficient.result) << ','
       << format_number(r.distributed_sufficient.rho_bar) << '\n';
}

}  // namespace gbpse
