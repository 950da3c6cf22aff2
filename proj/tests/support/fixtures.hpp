#pragma once

#include <cstdint>

#include "gbpse/corpus.hpp"
#include "gbpse/graph.hpp"
#include "gbpse/scenario.hpp"

namespace fixtures {

using gbpse::GraphSpec;
using gbpse::Matrix;
using gbpse::Vector;

inline Matrix m1(double v) { return Matrix::Constant(1, 1, v); }
inline Vector v1(double v) { return Vector::Constant(1, v); }

/// Realized measurements around unit-variance random truth.
inline GraphSpec noisy(const GraphSpec& g, std::uint64_t seed) {
    gbpse::GeneratorParams gen;
    gen.x_true_scale = 1.0;
    return gbpse::generate_scenario(g, gen, seed).graph;
}

inline gbpse::NodeSpec scalar_node(gbpse::NodeId id, double r, double z = 0.0) {
    return gbpse::NodeSpec{id, 1, gbpse::SelfMeasurement{m1(1.0), m1(r), v1(z)}};
}

inline gbpse::EdgeSpec scalar_edge(gbpse::NodeId i, gbpse::NodeId j, double r, double z = 0.0) {
    return gbpse::EdgeSpec{i, j, m1(1.0), m1(1.0), m1(r), v1(z)};
}

}  // namespace fixtures
