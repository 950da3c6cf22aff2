#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gbpse/graph.hpp"
#include "gbpse/scenario.hpp"

namespace gbpse::corpus {

/// Scalar measurement model z_i = x_i + v_i, z_ij = x_i + x_j + v_ij.
struct ScalarParams {
    double self_variance = 5.0;
    double edge_variance = 1.0;
};

/// Nodes 1..n, edges (k, k+1) and (n, 1).
GraphSpec ring(int n, ScalarParams p = {});
/// Nodes 1..n, edges (k, k+1).
GraphSpec path(int n, ScalarParams p = {});
/// Center 1 joined to leaves 2..leaves+1.
GraphSpec star(int leaves, ScalarParams p = {});
GraphSpec complete(int n, ScalarParams p = {});

/// Ring 1..n plus a chain of `chain` nodes hanging off node 1. Chain nodes
/// carry the more precise self variance `pendant_variance`.
GraphSpec ring_with_pendants(int n, int chain, double pendant_variance = 0.1, ScalarParams p = {});

/// Seven nodes: K5 on 1..5 plus nodes 6 and 7 each joined to four of them
/// and to each other.
GraphSpec dense7(ScalarParams p = {});

/// Random recursive tree: node k > 1 attaches to a parent drawn uniformly
/// from 1..k-1 using CounterRng(seed).
GraphSpec random_tree(int n, std::uint64_t seed, ScalarParams p = {});

/// Ring with 2-dimensional states, identity self measurements and coupled
/// 2x2 edge measurements with correlated noise.
GraphSpec vector_ring(int n, double self_variance = 0.5);

/// Complete graph on four nodes with 3-dimensional states and rank-one edge
/// measurements whose asymptotic message dynamics are unstable.
GraphSpec k4_vector_unstable();

struct Entry {
    std::string name;
    std::string description;
    GraphSpec graph;
    GeneratorParams generator;
};

/// The shipped corpus, also written to data/corpus by the CLI.
std::vector<Entry> standard();

}  // namespace gbpse::corpus
