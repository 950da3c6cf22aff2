#include "gbpse/pipeline.hpp"

#include <algorithm>

namespace gbpse {

std::optional<int> max_cycle_free_depth(const MeasurementGraph& g) {
    std::optional<int> out;
    for (NodeId id : g.ids()) {
        const auto d = cycle_free_depth(g, id);
        if (d) out = std::max(out.value_or(0), *d);
    }
    return out;
}

Pipeline run_pipeline(const GraphSpec& spec, const PipelineOptions& options) {
    Pipeline p;
    p.graph.emplace(spec);
    const MeasurementGraph& g = *p.graph;

    RunOptions ro;
    ro.tol = options.tol;
    ro.max_iters = options.max_iters;
    ro.threads = options.threads;
    ro.min_iters = std::min(options.max_iters, max_cycle_free_depth(g).value_or(0) + 1);
    p.run = run(g, ro);

    try {
        p.ml = solve_ml(g);
    } catch (const Error& e) {
        p.ml_error = e.what();
    }
    try {
        p.stability = analyze_stability(g);
    } catch (const Error& e) {
        p.stability_error = e.what();
    }

    if (!p.ml) {
        p.accuracy_error = "oracle unavailable: " + p.ml_error;
    } else if (!p.stability) {
        p.accuracy_error = "stability analysis unavailable: " + p.stability_error;
    } else if (!p.stability->assumption_holds && !g.is_acyclic()) {
        p.accuracy_error = "assumption 1 violated";
    } else {
        try {
            AccuracyInputs in;
            in.graph = &g;
            in.ml = &*p.ml;
            in.trace = &p.run.trace;
            in.fixed_point = &p.stability->fixed_point;
            if (p.run.reason == Termination::converged) in.limit = &p.run.trace.back();
            in.constants = p.stability->constants;
            in.beta = p.stability->beta;
            p.accuracy = analyze_accuracy(in);
        } catch (const Error& e) {
            p.accuracy_error = e.what();
        }
    }
    return p;
}

}  // namespace gbpse
