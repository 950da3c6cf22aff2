#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "gbpse/graph.hpp"

namespace gbpse {

/// Counter-based generator: draw k of stream `seed` is
/// splitmix64_mix(seed + (k + 1) * 0x9E3779B97F4A7C15), i.e. the k-th output
/// of SplitMix64 seeded with `seed`. Any draw can be recomputed in isolation.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    static std::uint64_t mix(std::uint64_t z);

    std::uint64_t bits_at(std::uint64_t counter) const;
    std::uint64_t next_bits() { return bits_at(counter_++); }
    /// ((bits >> 11) + 0.5) * 2^-53, strictly inside (0, 1).
    double next_uniform();
    /// Inverse-CDF transform of next_uniform().
    double next_normal();
    /// Vector of independent standard normals.
    Vector next_normals(Eigen::Index n);

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

/// Standard normal quantile, Wichura's algorithm AS 241 (PPND16).
double inverse_normal_cdf(double p);

/// How ground truth and noise are produced for a graph.
struct GeneratorParams {
    std::optional<double> x_true_scale;  ///< x_true ~ N(0, scale^2 I) per node
    std::map<NodeId, Vector> x_true;     ///< explicit values override drawing
    bool noise = true;
};

/// Throws Error("missing generator parameters") when a node has neither an
/// explicit x_true nor a scale to draw from.
void check_generator(const GraphSpec& graph, const GeneratorParams& params);

struct Scenario {
    GraphSpec graph;  ///< with realized measurements
    std::uint64_t seed = 0;
    std::map<NodeId, Vector> x_true;
};

/// Draw order: x_true per node (ascending id, only nodes without an explicit
/// value), then self-measurement noise per node (ascending id), then edge
/// noise over edges sorted by (min id, max id). Noise is L u with L the lower
/// Cholesky factor of the covariance.
Scenario generate_scenario(const GraphSpec& graph, const GeneratorParams& params, std::uint64_t seed);

}  // namespace gbpse
