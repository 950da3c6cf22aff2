#pragma once

#include <optional>
#include <string>

#include "gbpse/accuracy.hpp"
#include "gbpse/convergence.hpp"
#include "gbpse/engine.hpp"
#include "gbpse/oracle.hpp"

namespace gbpse {

struct PipelineOptions {
    double tol = 1e-12;
    int max_iters = 1000;
    unsigned threads = 1;
};

/// Engine run, oracle, stability and accuracy analyses of one graph. Each
/// analysis is attempted independently; failures leave the optional empty
/// and record the reason.
struct Pipeline {
    std::optional<MeasurementGraph> graph;
    RunResult run;
    std::optional<MlSolution> ml;
    std::string ml_error;
    std::optional<StabilityReport> stability;
    std::string stability_error;
    std::optional<AccuracyReport> accuracy;
    std::string accuracy_error;
};

/// Largest finite cycle-free depth over all nodes, or nullopt for trees.
std::optional<int> max_cycle_free_depth(const MeasurementGraph& g);

/// The engine runs at least to the largest finite cycle-free depth plus one
/// so the accuracy checks find the iterations they need.
Pipeline run_pipeline(const GraphSpec& spec, const PipelineOptions& options);

}  // namespace gbpse
