#include "gbpse/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>

namespace gbpse {

namespace {

std::string node_subject(NodeId id) {
    return "node " + std::to_string(id);
}

std::string edge_subject(NodeId i, NodeId j) {
    return "edge (" + std::to_string(i) + "," + std::to_string(j) + ")";
}

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

bool symmetric(const Matrix& m) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale;
}

void check_covariance(const Matrix& r, const std::string& subject, std::vector<Violation>& out) {
    if (r.rows() != r.cols()) {
        out.push_back({subject, "dimension mismatch", "covariance is " + shape(r) + ", not square"});
        return;
    }
    if (!symmetric(r)) {
        out.push_back({subject, "covariance not symmetric", "R differs from its transpose"});
        return;
    }
    if (!linalg::is_spd(r)) {
        std::ostringstream os;
        os << "smallest eigenvalue " << linalg::min_eigenvalue(r);
        out.push_back({subject, "covariance not SPD", os.str()});
    }
}

}  // namespace

bool ValidationResult::has_rule(const std::string& rule) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.rule == rule; });
}

std::string ValidationResult::to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        os << v.subject << ": " << v.rule;
        if (!v.detail.empty()) os << " (" << v.detail << ")";
        os << "\n";
    }
    return os.str();
}

ValidationError::ValidationError(ValidationResult result)
    : Error("invalid measurement graph:\n" + result.to_string()), result_(std::move(result)) {}

ValidationResult validate(const GraphSpec& spec) {
    ValidationResult res;
    auto& out = res.violations;

    if (spec.nodes.empty()) {
        out.push_back({"graph", "empty graph", "no nodes"});
        return res;
    }

    std::map<NodeId, int> dims;
    for (const auto& n : spec.nodes) {
        const auto subject = node_subject(n.id);
        if (!dims.emplace(n.id, n.dim).second) {
            out.push_back({subject, "duplicate node", "id declared twice"});
            continue;
        }
        if (n.dim <= 0) {
            out.push_back({subject, "dimension mismatch", "state dimension must be positive"});
            continue;
        }
        if (!n.self) continue;
        const auto& s = *n.self;
        if (s.C.cols() != n.dim) {
            out.push_back({subject, "dimension mismatch",
                           "C is " + shape(s.C) + " but dim is " + std::to_string(n.dim)});
        }
        if (s.R.rows() != s.C.rows() || s.z.size() != s.C.rows()) {
            out.push_back({subject, "dimension mismatch",
                           "C " + shape(s.C) + ", R " + shape(s.R) + ", z " +
                               std::to_string(s.z.size()) + " disagree in rows"});
        }
        check_covariance(s.R, subject, out);
    }

    std::set<std::pair<NodeId, NodeId>> seen;
    bool dangling = false;
    for (const auto& e : spec.edges) {
        const auto subject = edge_subject(e.i, e.j);
        if (e.i == e.j) {
            out.push_back({subject, "self loop", "edge endpoints coincide"});
            continue;
        }
        const auto di = dims.find(e.i);
        const auto dj = dims.find(e.j);
        if (di == dims.end() || dj == dims.end()) {
            out.push_back({subject, "unknown node", "edge references an undeclared node"});
            dangling = true;
            continue;
        }
        if (!seen.emplace(std::min(e.i, e.j), std::max(e.i, e.j)).second) {
            out.push_back({subject, "duplicate edge", "more than one edge for the pair"});
            continue;
        }
        if (e.C_ij.cols() != di->second || e.C_ji.cols() != dj->second) {
            out.push_back({subject, "dimension mismatch",
                           "C_ij " + shape(e.C_ij) + " / C_ji " + shape(e.C_ji) +
                               " do not match endpoint dimensions"});
        }
        const auto m = e.C_ij.rows();
        if (e.C_ji.rows() != m || e.R_ij.rows() != m || e.z_ij.size() != m) {
            out.push_back({subject, "dimension mismatch", "row counts of C_ij, C_ji, R_ij, z_ij disagree"});
        }
        check_covariance(e.R_ij, subject, out);
    }

    if (!dangling) {
        std::map<NodeId, std::vector<NodeId>> adj;
        for (const auto& e : spec.edges) {
            if (e.i == e.j) continue;
            adj[e.i].push_back(e.j);
            adj[e.j].push_back(e.i);
        }
        std::set<NodeId> reached{dims.begin()->first};
        std::deque<NodeId> queue{dims.begin()->first};
        while (!queue.empty()) {
            const NodeId u = queue.front();
            queue.pop_front();
            for (NodeId v : adj[u]) {
                if (reached.insert(v).second) queue.push_back(v);
            }
        }
        if (reached.size() != dims.size()) {
            out.push_back({"graph", "graph disconnected",
                           std::to_string(dims.size() - reached.size()) + " node(s) unreachable from node " +
                               std::to_string(dims.begin()->first)});
        }
    }
    return res;
}

MeasurementGraph::MeasurementGraph(GraphSpec spec) {
    auto result = validate(spec);
    if (!result.ok()) throw ValidationError(std::move(result));

    nodes_ = std::move(spec.nodes);
    std::sort(nodes_.begin(), nodes_.end(), [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        index_.emplace(nodes_[k].id, k);
        total_dim_ += nodes_[k].dim;
        if (nodes_[k].self) nodes_[k].self->R = linalg::symmetrize(nodes_[k].self->R);
    }

    edges_ = std::move(spec.edges);
    for (auto& e : edges_) {
        if (e.i > e.j) {
            std::swap(e.i, e.j);
            std::swap(e.C_ij, e.C_ji);
        }
        e.R_ij = linalg::symmetrize(e.R_ij);
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const EdgeSpec& a, const EdgeSpec& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });

    adjacency_.resize(nodes_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const auto a = index(edges_[e].i);
        const auto b = index(edges_[e].j);
        adjacency_[a].push_back(b);
        adjacency_[b].push_back(a);
        edge_lookup_.emplace(std::make_pair(a, b), e);
        edge_lookup_.emplace(std::make_pair(b, a), e);
    }
    for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());

    for (std::size_t from = 0; from < nodes_.size(); ++from) {
        for (std::size_t to : adjacency_[from]) {
            slot_lookup_.emplace(std::make_pair(from, to), slots_.size());
            slots_.push_back({from, to, edge_lookup_.at({from, to})});
        }
    }
}

std::size_t MeasurementGraph::index(NodeId id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw Error("unknown node id " + std::to_string(id));
    return it->second;
}

std::vector<NodeId> MeasurementGraph::ids() const {
    std::vector<NodeId> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_) out.push_back(n.id);
    return out;
}

std::optional<std::size_t> MeasurementGraph::edge_between(std::size_t a, std::size_t b) const {
    const auto it = edge_lookup_.find({a, b});
    if (it == edge_lookup_.end()) return std::nullopt;
    return it->second;
}

OrientedEdge MeasurementGraph::oriented(std::size_t from, std::size_t to) const {
    const auto& e = edges_.at(edge_lookup_.at({from, to}));
    if (e.i == nodes_[from].id) return {e.C_ij, e.C_ji, e.R_ij, e.z_ij};
    return {e.C_ji, e.C_ij, e.R_ij, e.z_ij};
}

std::size_t MeasurementGraph::slot_index(std::size_t from, std::size_t to) const {
    const auto it = slot_lookup_.find({from, to});
    if (it == slot_lookup_.end()) {
        throw Error("no slot " + std::to_string(id(from)) + "->" + std::to_string(id(to)));
    }
    return it->second;
}

Matrix MeasurementGraph::self_information(std::size_t idx) const {
    const auto& n = nodes_.at(idx);
    if (!n.self) return Matrix::Zero(n.dim, n.dim);
    const auto& s = *n.self;
    return linalg::symmetrize(s.C.transpose() * linalg::solve_spd(s.R, s.C));
}

Vector MeasurementGraph::self_information_vector(std::size_t idx) const {
    const auto& n = nodes_.at(idx);
    if (!n.self) return Vector::Zero(n.dim);
    const auto& s = *n.self;
    return s.C.transpose() * linalg::solve_spd(s.R, s.z);
}

Matrix MeasurementGraph::edge_information(std::size_t from, std::size_t to) const {
    const auto e = oriented(from, to);
    return linalg::symmetrize(e.C_from.transpose() * linalg::solve_spd(e.R, e.C_from));
}

std::vector<int> MeasurementGraph::distances_from(std::size_t idx) const {
    std::vector<int> dist(nodes_.size(), -1);
    std::deque<std::size_t> queue{idx};
    dist.at(idx) = 0;
    while (!queue.empty()) {
        const auto u = queue.front();
        queue.pop_front();
        for (auto v : adjacency_[u]) {
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    return dist;
}

int MeasurementGraph::eccentricity(std::size_t idx) const {
    const auto d = distances_from(idx);
    return *std::max_element(d.begin(), d.end());
}

int MeasurementGraph::diameter() const {
    int best = 0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) best = std::max(best, eccentricity(k));
    return best;
}

GraphSpec MeasurementGraph::spec() const {
    return GraphSpec{nodes_, edges_};
}

Matrix compute_omega(const MeasurementGraph& g, NodeId i, NodeId j) {
    const auto a = g.index(i);
    const auto b = g.index(j);
    if (!g.edge_between(a, b)) {
        throw Error("node " + std::to_string(j) + " is not a neighbor of node " + std::to_string(i));
    }
    Matrix omega = g.self_information(a);
    for (auto w : g.neighbors(a)) {
        if (w != b) omega += g.edge_information(a, w);
    }
    omega = linalg::symmetrize(omega);
    if (!linalg::is_spd(omega)) {
        throw AssumptionError("Omega not positive definite for slot " + std::to_string(i) + "->" +
                              std::to_string(j));
    }
    return omega;
}

AssumptionCheck check_assumption1(const MeasurementGraph& g) {
    AssumptionCheck out;
    bool first = true;
    for (const auto& s : g.slots()) {
        const Matrix omega = compute_omega(g, g.id(s.from), g.id(s.to));
        const double eta = std::max(0.0, linalg::max_generalized_eigenvalue(g.edge_information(s.from, s.to), omega));
        if (first || eta > out.eta) {
            out.eta = eta;
            out.worst_from = g.id(s.from);
            out.worst_to = g.id(s.to);
            first = false;
        }
    }
    out.holds = out.eta < 1.0;
    return out;
}

std::vector<NodeId> prune_leaves(const MeasurementGraph& g) {
    const auto n = g.size();
    std::vector<std::size_t> degree(n);
    std::vector<bool> removed(n, false);
    std::deque<std::size_t> leaves;
    for (std::size_t k = 0; k < n; ++k) {
        degree[k] = g.degree(k);
        if (degree[k] == 1) leaves.push_back(k);
    }
    std::size_t remaining = n;
    while (!leaves.empty() && remaining > 1) {
        const auto u = leaves.front();
        leaves.pop_front();
        if (removed[u] || degree[u] != 1) continue;
        removed[u] = true;
        --remaining;
        for (auto v : g.neighbors(u)) {
            if (removed[v]) continue;
            if (--degree[v] == 1) leaves.push_back(v);
        }
    }
    std::vector<NodeId> out;
    for (std::size_t k = 0; k < n; ++k) {
        if (!removed[k]) out.push_back(g.id(k));
    }
    return out;
}

namespace {

GraphSpec induced_spec(const MeasurementGraph& g, const std::vector<bool>& keep) {
    GraphSpec spec;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (keep[k]) spec.nodes.push_back(g.node(k));
    }
    for (const auto& e : g.edges()) {
        if (keep[g.index(e.i)] && keep[g.index(e.j)]) spec.edges.push_back(e);
    }
    return spec;
}

// Node and edge counts of the ball of radius d around the center.
std::pair<std::size_t, std::size_t> ball_size(const MeasurementGraph& g, const std::vector<int>& dist, int d) {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    for (std::size_t k = 0; k < g.size(); ++k) nodes += dist[k] <= d ? 1 : 0;
    for (const auto& e : g.edges()) {
        if (dist[g.index(e.i)] <= d && dist[g.index(e.j)] <= d) ++edges;
    }
    return {nodes, edges};
}

}  // namespace

MeasurementGraph subgraph_within(const MeasurementGraph& g, NodeId i, int d) {
    if (d < 0) throw Error("hop count must be non-negative");
    const auto dist = g.distances_from(g.index(i));
    std::vector<bool> keep(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) keep[k] = dist[k] <= d;
    return MeasurementGraph(induced_spec(g, keep));
}

std::optional<int> cycle_free_depth(const MeasurementGraph& g, NodeId i) {
    if (g.is_acyclic()) return std::nullopt;
    const auto dist = g.distances_from(g.index(i));
    const int ecc = *std::max_element(dist.begin(), dist.end());
    for (int d = 1; d <= ecc; ++d) {
        const auto [nodes, edges] = ball_size(g, dist, d);
        if (edges >= nodes) return d - 1;
    }
    // Unreachable for a connected cyclic graph: the full ball contains the cycle.
    return ecc;
}

ReducedGraph build_reduced_graph(const MeasurementGraph& g, NodeId i) {
    const auto depth = cycle_free_depth(g, i);
    if (!depth) {
        throw Error("reduced graph undefined: node " + std::to_string(i) +
                    " has infinite cycle-free depth (graph is acyclic)");
    }
    const int d = *depth;
    const auto dist = g.distances_from(g.index(i));

    GraphSpec spec;
    std::map<NodeId, ReducedGraph::Copy> copies;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (dist[k] <= d) spec.nodes.push_back(g.node(k));
    }
    for (const auto& e : g.edges()) {
        if (dist[g.index(e.i)] <= d && dist[g.index(e.j)] <= d) spec.edges.push_back(e);
    }

    NodeId next_id = g.id(g.size() - 1) + 1;
    for (std::size_t s = 0; s < g.size(); ++s) {
        if (dist[s] != d + 1) continue;
        std::vector<std::size_t> leaves;
        for (auto u : g.neighbors(s)) {
            if (dist[u] == d) leaves.push_back(u);
        }
        const int p = static_cast<int>(leaves.size());
        const auto& child = g.node(s);
        for (auto u : leaves) {
            NodeSpec copy = child;
            if (p > 1) {
                copy.id = next_id++;
                if (copy.self) copy.self->R = static_cast<double>(p) * copy.self->R;
            }
            const auto e = g.oriented(s, u);
            spec.nodes.push_back(copy);
            spec.edges.push_back({copy.id, g.id(u), e.C_from, e.C_to, e.R, e.z});
            copies.emplace(copy.id, ReducedGraph::Copy{child.id, p});
        }
    }
    return ReducedGraph{MeasurementGraph(std::move(spec)), i, d, std::move(copies)};
}

LineGraph build_line_graph(const MeasurementGraph& g, NodeId i) {
    const auto center = g.index(i);
    const auto depth = cycle_free_depth(g, i);
    const int d = depth ? *depth : g.eccentricity(center);
    const auto dist = g.distances_from(center);
    const std::size_t n_layers = static_cast<std::size_t>(d) + 2;

    auto layer_of = [&](std::size_t k) { return std::min<std::size_t>(static_cast<std::size_t>(dist[k]), n_layers - 1); };

    LineGraph line;
    line.center = i;
    line.depth = d;
    line.layers.resize(n_layers);
    std::vector<int> offset_in_layer(g.size(), 0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        auto& layer = line.layers[layer_of(k)];
        layer.members.push_back(g.id(k));
        layer.offsets.push_back(layer.dim);
        offset_in_layer[k] = layer.dim;
        layer.dim += g.dim(k);
    }

    // Row blocks are collected first, then stacked.
    struct Rows {
        std::vector<Matrix> lo;
        std::vector<Matrix> hi;
        std::vector<Matrix> r;
        std::vector<Vector> z;
        Eigen::Index count = 0;
    };
    std::vector<Rows> self_rows(n_layers);
    std::vector<Rows> link_rows(n_layers - 1);

    auto place = [&](const Matrix& c, std::size_t k, int layer_dim) {
        Matrix out = Matrix::Zero(c.rows(), layer_dim);
        out.middleCols(offset_in_layer[k], g.dim(k)) = c;
        return out;
    };

    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto& node = g.node(k);
        if (!node.self) continue;
        const auto t = layer_of(k);
        auto& rows = self_rows[t];
        rows.lo.push_back(place(node.self->C, k, line.layers[t].dim));
        rows.r.push_back(node.self->R);
        rows.z.push_back(node.self->z);
        rows.count += node.self->C.rows();
    }
    for (const auto& e : g.edges()) {
        auto a = g.index(e.i);
        auto b = g.index(e.j);
        Matrix ca = e.C_ij;
        Matrix cb = e.C_ji;
        if (layer_of(a) > layer_of(b)) {
            std::swap(a, b);
            std::swap(ca, cb);
        }
        const auto ta = layer_of(a);
        const auto tb = layer_of(b);
        if (ta == tb) {
            auto& rows = self_rows[ta];
            rows.lo.push_back(place(ca, a, line.layers[ta].dim) + place(cb, b, line.layers[ta].dim));
            rows.r.push_back(e.R_ij);
            rows.z.push_back(e.z_ij);
            rows.count += e.R_ij.rows();
        } else {
            auto& rows = link_rows[ta];
            rows.lo.push_back(place(ca, a, line.layers[ta].dim));
            rows.hi.push_back(place(cb, b, line.layers[tb].dim));
            rows.r.push_back(e.R_ij);
            rows.z.push_back(e.z_ij);
            rows.count += e.R_ij.rows();
        }
    }

    auto stack = [](const std::vector<Matrix>& blocks, Eigen::Index rows, int cols) {
        Matrix out = Matrix::Zero(rows, cols);
        Eigen::Index r = 0;
        for (const auto& b : blocks) {
            out.middleRows(r, b.rows()) = b;
            r += b.rows();
        }
        return out;
    };
    auto block_diag = [](const std::vector<Matrix>& blocks, Eigen::Index rows) {
        Matrix out = Matrix::Zero(rows, rows);
        Eigen::Index r = 0;
        for (const auto& b : blocks) {
            out.block(r, r, b.rows(), b.cols()) = b;
            r += b.rows();
        }
        return out;
    };
    auto concat = [](const std::vector<Vector>& parts, Eigen::Index rows) {
        Vector out(rows);
        Eigen::Index r = 0;
        for (const auto& p : parts) {
            out.segment(r, p.size()) = p;
            r += p.size();
        }
        return out;
    };

    for (std::size_t t = 0; t < n_layers; ++t) {
        auto& layer = line.layers[t];
        const auto& rows = self_rows[t];
        layer.C = stack(rows.lo, rows.count, layer.dim);
        layer.R = block_diag(rows.r, rows.count);
        layer.z = concat(rows.z, rows.count);
    }
    line.links.resize(n_layers - 1);
    for (std::size_t t = 0; t + 1 < n_layers; ++t) {
        auto& link = line.links[t];
        const auto& rows = link_rows[t];
        link.C_lo = stack(rows.lo, rows.count, line.layers[t].dim);
        link.C_hi = stack(rows.hi, rows.count, line.layers[t + 1].dim);
        link.R = block_diag(rows.r, rows.count);
        link.z = concat(rows.z, rows.count);
    }
    return line;
}

}  // namespace gbpse
