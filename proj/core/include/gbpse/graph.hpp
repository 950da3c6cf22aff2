#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gbpse/linalg.hpp"

namespace gbpse {

using NodeId = int;

/// z_i = C_i x_i + v_i with v_i ~ N(0, R_i).
struct SelfMeasurement {
    Matrix C;
    Matrix R;
    Vector z;
};

struct NodeSpec {
    NodeId id = 0;
    int dim = 1;
    std::optional<SelfMeasurement> self;
};

/// z_ij = C_ij x_i + C_ji x_j + v_ij with v_ij ~ N(0, R_ij). Unordered: the
/// same measurement is seen from either endpoint.
struct EdgeSpec {
    NodeId i = 0;
    NodeId j = 0;
    Matrix C_ij;
    Matrix C_ji;
    Matrix R_ij;
    Vector z_ij;
};

/// Raw, unchecked graph description as read from a file or built in code.
struct GraphSpec {
    std::vector<NodeSpec> nodes;
    std::vector<EdgeSpec> edges;
};

struct Violation {
    std::string subject;  ///< "node 3", "edge (1,2)" or "graph"
    std::string rule;     ///< short rule name, e.g. "covariance not SPD"
    std::string detail;
};

struct ValidationResult {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool has_rule(const std::string& rule) const;
    std::string to_string() const;
};

/// Checks dimensions, covariance definiteness, edge references, duplicates
/// and connectivity.
ValidationResult validate(const GraphSpec& spec);

class ValidationError : public Error {
public:
    explicit ValidationError(ValidationResult result);
    const ValidationResult& result() const noexcept { return result_; }

private:
    ValidationResult result_;
};

/// One direction of an edge as seen from `from`.
struct OrientedEdge {
    const Matrix& C_from;  ///< multiplies x_from
    const Matrix& C_to;    ///< multiplies x_to
    const Matrix& R;
    const Vector& z;
};

/// Directed slot (from -> (from, to)); the unit of message bookkeeping.
struct Slot {
    std::size_t from = 0;  ///< node index
    std::size_t to = 0;    ///< node index
    std::size_t edge = 0;  ///< edge index
};

/// Validated canonical graph. Immutable after construction. Nodes are held
/// in ascending id order and all iteration orders derive from it.
class MeasurementGraph {
public:
    /// Throws ValidationError when validate(spec) reports violations.
    explicit MeasurementGraph(GraphSpec spec);

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    const NodeSpec& node(std::size_t idx) const { return nodes_.at(idx); }
    NodeId id(std::size_t idx) const { return nodes_.at(idx).id; }
    int dim(std::size_t idx) const { return nodes_.at(idx).dim; }
    std::size_t index(NodeId id) const;
    bool contains(NodeId id) const { return index_.count(id) != 0; }
    std::vector<NodeId> ids() const;

    /// Edges normalized so that i < j.
    const EdgeSpec& edge(std::size_t e) const { return edges_.at(e); }
    const std::vector<EdgeSpec>& edges() const noexcept { return edges_; }
    std::optional<std::size_t> edge_between(std::size_t a, std::size_t b) const;
    OrientedEdge oriented(std::size_t from, std::size_t to) const;

    /// Neighbor indices of node idx, ascending.
    const std::vector<std::size_t>& neighbors(std::size_t idx) const { return adjacency_.at(idx); }
    std::size_t degree(std::size_t idx) const { return adjacency_.at(idx).size(); }

    /// All directed slots sorted by (from id, to id).
    const std::vector<Slot>& slots() const noexcept { return slots_; }
    std::size_t slot_index(std::size_t from, std::size_t to) const;

    /// C_i^T R_i^{-1} C_i, or zero when node has no self measurement.
    Matrix self_information(std::size_t idx) const;
    /// C_i^T R_i^{-1} z_i, or zero.
    Vector self_information_vector(std::size_t idx) const;
    /// C_from^T R^{-1} C_from for the edge (from, to).
    Matrix edge_information(std::size_t from, std::size_t to) const;

    /// Sum of node dimensions.
    int total_dim() const noexcept { return total_dim_; }

    /// Hop distances from node idx (BFS).
    std::vector<int> distances_from(std::size_t idx) const;
    int eccentricity(std::size_t idx) const;
    int diameter() const;
    bool is_acyclic() const noexcept { return edges_.size() + 1 == nodes_.size(); }

    GraphSpec spec() const;

private:
    std::vector<NodeSpec> nodes_;
    std::vector<EdgeSpec> edges_;
    std::map<NodeId, std::size_t> index_;
    std::vector<std::vector<std::size_t>> adjacency_;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_lookup_;
    std::vector<Slot> slots_;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> slot_lookup_;
    int total_dim_ = 0;
};

/// Omega_{i,j} = C_i^T R_i^{-1} C_i + sum_{w in N_i \ j} C_{i,w}^T R_{i,w}^{-1} C_{i,w}.
/// Throws AssumptionError when the result is not positive definite.
Matrix compute_omega(const MeasurementGraph& g, NodeId i, NodeId j);

class AssumptionError : public Error {
public:
    using Error::Error;
};

struct AssumptionCheck {
    bool holds = false;
    double eta = 0.0;       ///< smallest eta with eta*Omega_ij >= C_ij^T R_ij^{-1} C_ij
    NodeId worst_from = 0;  ///< slot attaining eta
    NodeId worst_to = 0;
};

/// Evaluates the per-slot dominance condition. Throws AssumptionError if
/// some Omega_{i,j} is not positive definite.
AssumptionCheck check_assumption1(const MeasurementGraph& g);

/// Repeatedly strips degree-1 nodes. Returns the surviving ids (ascending);
/// a singleton for trees.
std::vector<NodeId> prune_leaves(const MeasurementGraph& g);

/// Induced subgraph on nodes within d hops of i.
MeasurementGraph subgraph_within(const MeasurementGraph& g, NodeId i, int d);

/// Largest d with subgraph_within(i, d) acyclic; nullopt means infinite
/// (the whole graph is acyclic).
std::optional<int> cycle_free_depth(const MeasurementGraph& g, NodeId i);

/// Acyclic surrogate of g around a center node with split boundary children.
struct ReducedGraph {
    struct Copy {
        NodeId original = 0;
        int multiplicity = 1;
    };

    MeasurementGraph graph;
    NodeId center = 0;
    int depth = 0;
    /// Every child node in the reduced graph -> original node and multiplicity.
    std::map<NodeId, Copy> copies;
};

/// Throws Error when the cycle-free depth of i is infinite.
ReducedGraph build_reduced_graph(const MeasurementGraph& g, NodeId i);

/// Layered regrouping of g by hop distance from a center.
struct LineGraph {
    struct Layer {
        std::vector<NodeId> members;  ///< ascending ids
        std::vector<int> offsets;     ///< state offset of each member
        int dim = 0;
        Matrix C;  ///< stacked self measurements (rows x dim)
        Matrix R;
        Vector z;
    };
    /// Joint measurement between layer t and t+1.
    struct Link {
        Matrix C_lo;  ///< multiplies layer t state
        Matrix C_hi;  ///< multiplies layer t+1 state
        Matrix R;
        Vector z;
    };

    NodeId center = 0;
    /// Cycle-free depth used for the layering (eccentricity for trees).
    int depth = 0;
    std::vector<Layer> layers;  ///< n = depth + 2 layers
    std::vector<Link> links;    ///< n - 1 links

    std::size_t size() const noexcept { return layers.size(); }
};

LineGraph build_line_graph(const MeasurementGraph& g, NodeId i);

}  // namespace gbpse
