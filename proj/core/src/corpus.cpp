#include "gbpse/corpus.hpp"

#include <array>

namespace gbpse::corpus {

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

NodeSpec scalar_node(NodeId id, double variance) {
    return NodeSpec{id, 1, SelfMeasurement{scalar(1.0), scalar(variance), Vector::Zero(1)}};
}

EdgeSpec scalar_edge(NodeId i, NodeId j, double variance) {
    return EdgeSpec{i, j, scalar(1.0), scalar(1.0), scalar(variance), Vector::Zero(1)};
}

GraphSpec scalar_graph(int n, const std::vector<std::pair<int, int>>& edges, ScalarParams p) {
    GraphSpec g;
    for (int k = 1; k <= n; ++k) g.nodes.push_back(scalar_node(k, p.self_variance));
    for (const auto& [a, b] : edges) g.edges.push_back(scalar_edge(a, b, p.edge_variance));
    return g;
}

GeneratorParams unit_truth() {
    GeneratorParams gen;
    gen.x_true_scale = 1.0;
    return gen;
}

}  // namespace

GraphSpec ring(int n, ScalarParams p) {
    if (n < 3) throw Error("ring needs at least 3 nodes");
    std::vector<std::pair<int, int>> e;
    for (int k = 1; k < n; ++k) e.emplace_back(k, k + 1);
    e.emplace_back(1, n);
    return scalar_graph(n, e, p);
}

GraphSpec path(int n, ScalarParams p) {
    if (n < 1) throw Error("path needs at least 1 node");
    std::vector<std::pair<int, int>> e;
    for (int k = 1; k < n; ++k) e.emplace_back(k, k + 1);
    return scalar_graph(n, e, p);
}

GraphSpec star(int leaves, ScalarParams p) {
    std::vector<std::pair<int, int>> e;
    for (int k = 2; k <= leaves + 1; ++k) e.emplace_back(1, k);
    return scalar_graph(leaves + 1, e, p);
}

GraphSpec complete(int n, ScalarParams p) {
    std::vector<std::pair<int, int>> e;
    for (int a = 1; a <= n; ++a) {
        for (int b = a + 1; b <= n; ++b) e.emplace_back(a, b);
    }
    return scalar_graph(n, e, p);
}

GraphSpec ring_with_pendants(int n, int chain, double pendant_variance, ScalarParams p) {
    GraphSpec g = ring(n, p);
    int prev = 1;
    for (int k = 1; k <= chain; ++k) {
        const int id = n + k;
        g.nodes.push_back(scalar_node(id, pendant_variance));
        g.edges.push_back(scalar_edge(prev, id, p.edge_variance));
        prev = id;
    }
    return g;
}

GraphSpec dense7(ScalarParams p) {
    std::vector<std::pair<int, int>> e;
    for (int a = 1; a <= 5; ++a) {
        for (int b = a + 1; b <= 5; ++b) e.emplace_back(a, b);
    }
    for (int b : {1, 2, 3, 4}) e.emplace_back(b, 6);
    for (int b : {2, 3, 4, 5}) e.emplace_back(b, 7);
    e.emplace_back(6, 7);
    return scalar_graph(7, e, p);
}

GraphSpec random_tree(int n, std::uint64_t seed, ScalarParams p) {
    CounterRng rng(seed);
    std::vector<std::pair<int, int>> e;
    for (int k = 2; k <= n; ++k) {
        const auto parent = 1 + static_cast<int>(rng.next_bits() % static_cast<std::uint64_t>(k - 1));
        e.emplace_back(parent, k);
    }
    return scalar_graph(n, e, p);
}

GraphSpec vector_ring(int n, double self_variance) {
    if (n < 3) throw Error("ring needs at least 3 nodes");
    Matrix a(2, 2);
    a << 1.0, 0.4, 0.0, 1.0;
    Matrix b(2, 2);
    b << 1.0, 0.0, -0.3, 1.0;
    Matrix r(2, 2);
    r << 1.0, 0.3, 0.3, 1.0;
    GraphSpec g;
    for (int k = 1; k <= n; ++k) {
        g.nodes.push_back(NodeSpec{k, 2, SelfMeasurement{Matrix::Identity(2, 2), self_variance * Matrix::Identity(2, 2),
                                                         Vector::Zero(2)}});
    }
    for (int k = 1; k <= n; ++k) {
        g.edges.push_back(EdgeSpec{k, k % n + 1, a, b, r, Vector::Zero(2)});
    }
    return g;
}

GraphSpec k4_vector_unstable() {
    // Row-vector coefficients (C_ij then C_ji) per edge in lexicographic order.
    static constexpr std::array<std::array<double, 6>, 6> coeff{{
        {0.6, -2.0, -1.5, 1.5, -0.9, 1.6},
        {0.6, 1.6, -1.5, 3.1, 1.7, -0.1},
        {-0.3, 3.0, 0.2, -2.2, 1.4, 2.7},
        {1.2, 1.8, -1.1, 1.9, 0.6, -1.3},
        {0.5, -1.5, 1.8, 2.0, -1.4, -2.4},
        {-2.9, -1.3, 0.7, 1.7, -1.4, -2.2},
    }};
    GraphSpec g;
    for (int k = 1; k <= 4; ++k) {
        g.nodes.push_back(NodeSpec{k, 3, SelfMeasurement{Matrix::Identity(3, 3), 20.0 * Matrix::Identity(3, 3),
                                                         Vector::Zero(3)}});
    }
    std::size_t row = 0;
    for (int a = 1; a <= 4; ++a) {
        for (int b = a + 1; b <= 4; ++b, ++row) {
            Matrix ci(1, 3);
            Matrix cj(1, 3);
            ci << coeff[row][0], coeff[row][1], coeff[row][2];
            cj << coeff[row][3], coeff[row][4], coeff[row][5];
            g.edges.push_back(EdgeSpec{a, b, ci, cj, scalar(1.0), Vector::Zero(1)});
        }
    }
    return g;
}

std::vector<Entry> standard() {
    std::vector<Entry> out;
    out.push_back({"ring-8", "single cycle of 8 scalar nodes, R_i=5, R_ij=1", ring(8), unit_truth()});
    out.push_back({"ring-pendants", "ring of 6 with a 3-node pendant chain (pendant R_i=0.1)",
                   ring_with_pendants(6, 3), unit_truth()});
    out.push_back({"k5", "complete graph on 5 scalar nodes, R_i=5, R_ij=1", complete(5), unit_truth()});
    out.push_back({"dense-7", "K5 plus two nodes of degree 5, scalar, R_i=5, R_ij=1", dense7(), unit_truth()});
    out.push_back({"tree-15", "random recursive tree on 15 scalar nodes (seed 7)", random_tree(15, 7), unit_truth()});
    out.push_back({"vector-ring-8", "ring of 8 nodes with 2-dimensional states, R_i=0.5 I", vector_ring(8), unit_truth()});
    out.push_back({"k4-vector-unstable", "K4 with 3-dimensional states and rank-one joint measurements; unstable",
                   k4_vector_unstable(), unit_truth()});
    return out;
}

}  // namespace gbpse::corpus
