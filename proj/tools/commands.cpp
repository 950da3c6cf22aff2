#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gbpse/corpus.hpp"
#include "gbpse/format.hpp"
#include "gbpse/graph_io.hpp"
#include "gbpse/pipeline.hpp"
#include "json.hpp"

namespace gbpse::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct LoadedInput {
    GraphSpec graph;
    std::string hash;  ///< FNV-1a of the input file bytes
};

LoadedInput load(const Input& input) {
    if (input.graph.empty() == input.scenario.empty()) {
        throw Error("exactly one of --graph and --scenario is required");
    }
    LoadedInput out;
    if (!input.scenario.empty()) {
        const std::string text = read_text_file(input.scenario);
        out.graph = parse_scenario_json(text).graph;
        out.hash = fnv1a_hex(text);
    } else {
        const std::string text = read_text_file(input.graph);
        out.graph = parse_graph_json(text).graph;
        out.hash = fnv1a_hex(text);
    }
    return out;
}

fs::path prepare_dir(const std::string& dir) {
    if (dir.empty()) throw Error("--out is required");
    fs::create_directories(dir);
    return fs::path(dir);
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
    std::ostringstream os;
    writer(os);
    write_text_file(path, os.str());
}

std::string or_unavailable(bool ok, double v) { return ok ? format_number(v) : std::string("unavailable"); }

// Per-iteration series for one node with the theoretical overlays.
void write_series(std::ostream& os, const Pipeline& p, std::size_t idx) {
    const MeasurementGraph& g = *p.graph;
    const auto& st = p.stability;
    const bool q_overlay = st && st->assumption_holds;
    Matrix w;
    if (st) w = linalg::inv_sqrt_spd(st->fixed_point.Q_node[idx]);
    const bool x_overlay = st && p.ml && st->distributed_sufficient.result == Condition::pass;

    double x_error_1 = 0.0;
    if (p.ml && !p.run.trace.empty() && p.run.trace.front().nodes[idx].x_hat) {
        x_error_1 = (*p.run.trace.front().nodes[idx].x_hat - p.ml->nodes[idx].x).norm();
    }
    os << "k,node,x_norm,trace_Q,q_gap,q_envelope,x_error,x_rate_ref\n";
    for (const auto& b : p.run.trace) {
        const auto& n = b.nodes[idx];
        const int k = b.iteration;
        os << k << ',' << g.id(idx) << ',' << (n.x_hat ? format_number(n.x_hat->norm()) : "nan") << ','
           << format_number(n.Q.trace()) << ',';
        if (st) {
            const Matrix gap = w * n.Q * w - Matrix::Identity(w.rows(), w.cols());
            os << format_number(linalg::spectral_norm(gap));
        } else {
            os << "unavailable";
        }
        os << ','
           << or_unavailable(q_overlay, q_overlay ? st->constants.alpha * std::pow(st->constants.rho, k - 1) : 0.0)
           << ',';
        if (p.ml && n.x_hat) {
            os << format_number((*n.x_hat - p.ml->nodes[idx].x).norm());
        } else {
            os << "unavailable";
        }
        os << ','
           << or_unavailable(x_overlay,
                             x_overlay ? x_error_1 * std::pow(st->distributed_sufficient.rho_bar, k - 1) : 0.0)
           << '\n';
    }
}

std::size_t pick_node(const MeasurementGraph& g, const std::optional<int>& node) {
    if (!node) return 0;
    if (!g.contains(*node)) throw Error("--node " + std::to_string(*node) + " is not in the graph");
    return g.index(*node);
}

PipelineOptions pipeline_options(const RunSettings& s) {
    if (s.max_iters < 1) throw Error("--max-iters must be at least 1");
    if (!(s.tol > 0.0)) throw Error("--tol must be positive");
    PipelineOptions o;
    o.max_iters = s.max_iters;
    o.tol = s.tol;
    o.threads = s.threads;
    return o;
}

}  // namespace

int cmd_validate(const std::string& graph_path) {
    const GraphDocument doc = read_graph_file(graph_path);
    const ValidationResult vr = validate(doc.graph);
    if (!vr.ok()) {
        std::cout << "invalid\n" << vr.to_string();
        return kInvalid;
    }
    const MeasurementGraph g(doc.graph);
    std::cout << "nodes: " << g.size() << "\nedges: " << g.edge_count() << "\nacyclic: "
              << (g.is_acyclic() ? "yes" : "no") << "\ndiameter: " << g.diameter() << "\n";
    try {
        const AssumptionCheck chk = check_assumption1(g);
        std::cout << "eta: " << format_number(chk.eta) << "\n";
        if (!chk.holds) {
            std::cout << "assumption 1: violated at slot " << chk.worst_from << "->" << chk.worst_to << "\n";
            return kInvalid;
        }
        std::cout << "assumption 1: holds\n";
    } catch (const AssumptionError& e) {
        std::cout << "assumption 1: " << e.what() << "\n";
        return kInvalid;
    }
    std::cout << "valid\n";
    return kOk;
}

int cmd_generate(const std::string& graph_path, std::uint64_t seed, const std::string& out_path, bool noise_free) {
    const GraphDocument doc = read_graph_file(graph_path);
    if (!doc.generator) throw Error("missing generator parameters: the graph file has no \"generator\" block");
    GeneratorParams gen = *doc.generator;
    if (noise_free) gen.noise = false;
    const std::string text = to_json(generate_scenario(doc.graph, gen, seed));
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_text_file(out_path, text);
    }
    return kOk;
}

int cmd_run(const Input& input, const RunSettings& settings, const std::string& out_dir) {
    const PipelineOptions opts = pipeline_options(settings);
    const LoadedInput in = load(input);
    const fs::path dir = prepare_dir(out_dir);
    const Pipeline p = run_pipeline(in.graph, opts);
    const MeasurementGraph& g = *p.graph;
    const std::size_t idx = pick_node(g, settings.node);

    write_file(dir / "trace.csv", [&](std::ostream& os) { write_trace_csv(os, g, p.run.trace, true); });
    write_file(dir / "series.csv", [&](std::ostream& os) { write_series(os, p, idx); });

    Json meta = Json::object();
    meta["input_hash"] = in.hash;
    meta["node"] = g.id(idx);
    meta["termination"] = to_string(p.run.reason);
    meta["iterations"] = p.run.trace.size();
    meta["max_iters"] = opts.max_iters;
    meta["tol"] = opts.tol;
    write_text_file(dir / "run.json", meta.dump(2) + "\n");

    std::cout << "termination: " << to_string(p.run.reason) << " after " << p.run.trace.size() << " iterations\n";
    if (!p.run.trace.empty()) {
        const auto& n = p.run.trace.back().nodes[idx];
        std::cout << "x_norm[" << g.id(idx) << "]: " << (n.x_hat ? format_number(n.x_hat->norm()) : "nan") << "\n";
    }
    return kOk;
}

int cmd_analyze(const Input& input, const RunSettings& settings, const std::string& out_dir) {
    const PipelineOptions opts = pipeline_options(settings);
    const LoadedInput in = load(input);
    const fs::path dir = prepare_dir(out_dir);
    const Pipeline p = run_pipeline(in.graph, opts);
    const MeasurementGraph& g = *p.graph;

    if (p.stability) {
        write_file(dir / "stability.txt", [&](std::ostream& os) { write_stability_text(os, g, *p.stability); });
        write_file(dir / "stability.csv", [&](std::ostream& os) { write_stability_csv(os, g, *p.stability); });
    } else {
        write_text_file(dir / "stability.txt", "unavailable: " + p.stability_error + "\n");
        write_text_file(dir / "stability.csv", "status\nunavailable\n");
    }
    if (p.accuracy) {
        write_file(dir / "accuracy.csv", [&](std::ostream& os) { write_accuracy_csv(os, *p.accuracy); });
        write_file(dir / "accuracy.txt", [&](std::ostream& os) {
            if (g.is_acyclic()) os << "acyclic: exact in diameter iterations\n";
            write_accuracy_summary(os, *p.accuracy);
        });
    } else {
        write_text_file(dir / "accuracy.csv", "status\nunavailable\n");
        write_text_file(dir / "accuracy.txt", "unavailable: " + p.accuracy_error + "\n");
    }

    if (p.stability) {
        const auto& s = *p.stability;
        std::cout << "spectral radius: " << format_number(s.necessary_sufficient.spectral_radius) << " ("
                  << to_string(s.necessary_sufficient.verdict) << ")\n"
                  << "distributed condition: " << to_string(s.distributed_sufficient.result) << "\n";
    } else {
        std::cout << "stability: unavailable (" << p.stability_error << ")\n";
    }
    if (p.accuracy) {
        std::cout << "accuracy: " << (p.accuracy->all_bounds_hold() ? "all bounds hold" : "bound violation") << "\n";
    } else {
        std::cout << "accuracy: unavailable (" << p.accuracy_error << ")\n";
    }
    return kOk;
}

namespace {

struct TraceTail {
    int iteration = 0;
    std::map<NodeId, Vector> x;
};

// Last iteration block of a trace.csv written by cmd_run.
TraceTail read_trace_tail(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line.rfind("k,node,x_norm,trace_Q", 0) != 0) {
        throw ParseError(path.string() + ": not a trace file");
    }
    TraceTail tail;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() < 4) throw ParseError(path.string() + ": line " + std::to_string(line_no) + " is malformed");
        try {
            const int k = std::stoi(cells[0]);
            const NodeId id = std::stoi(cells[1]);
            if (k != tail.iteration) {
                tail.iteration = k;
                tail.x.clear();
            }
            std::vector<double> xs;
            for (std::size_t c = 4; c < cells.size() && !cells[c].empty(); ++c) xs.push_back(std::stod(cells[c]));
            tail.x[id] = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
        } catch (const std::logic_error&) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + " is malformed");
        }
    }
    return tail;
}

}  // namespace

int cmd_report(const Input& input, const std::string& run_dir, const std::string& out_dir) {
    const LoadedInput in = load(input);
    const fs::path run(run_dir);
    const Json meta = Json::parse(read_text_file(run / "run.json"));
    if (!meta.contains("input_hash") || meta["input_hash"].get<std::string>() != in.hash) {
        std::cerr << "artifact hash mismatch: " << (run / "run.json").string()
                  << " was produced from a different input\n";
        return kInvalid;
    }
    const TraceTail tail = read_trace_tail(run / "trace.csv");
    const fs::path dir = prepare_dir(out_dir);

    PipelineOptions opts;
    opts.max_iters = meta.value("max_iters", 1000);
    opts.tol = meta.value("tol", 1e-12);
    const Pipeline p = run_pipeline(in.graph, opts);
    const MeasurementGraph& g = *p.graph;

    std::ostringstream csv;
    std::ostringstream summary;
    csv << "node,k_final,x_hat_norm,x_ml_norm,final_error,d_i,q_bound_at_d,q_gap_at_d,q_bound_holds,x_bound,"
           "x_weighted_error,x_bound_holds,layered_agrees\n";
    summary << "termination: " << meta.value("termination", std::string("unknown")) << "\n";
    if (tail.iteration == 0) {
        csv << "no iterations,,,,,,,,,,,,\n";
        summary << "no iterations\n";
    } else {
        bool all_hold = true;
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            const NodeId id = g.id(idx);
            const auto it = tail.x.find(id);
            const bool have_x = it != tail.x.end() && it->second.size() == g.dim(idx);
            csv << id << ',' << tail.iteration << ',' << (have_x ? format_number(it->second.norm()) : "nan") << ',';
            if (p.ml) {
                csv << format_number(p.ml->nodes[idx].x.norm()) << ','
                    << (have_x ? format_number((it->second - p.ml->nodes[idx].x).norm()) : "nan") << ',';
            } else {
                csv << "unavailable,unavailable,";
            }
            if (p.accuracy) {
                const auto& row = p.accuracy->rows[idx];
                csv << (row.q.depth ? std::to_string(*row.q.depth) : "inf") << ',';
                if (row.q.applicable) {
                    csv << format_number(row.q.bound_at_d) << ',' << format_number(row.q.gap_at_d_max) << ','
                        << (row.q.sandwich_holds && row.q.limit_holds ? "true" : "false") << ',';
                    all_hold = all_hold && row.q.sandwich_holds && row.q.limit_holds;
                } else {
                    csv << "0,0,true,";
                }
                csv << format_number(row.x.bound) << ',' << format_number(row.x.weighted) << ','
                    << (row.x.holds && row.x.limit_holds ? "true" : "false") << ','
                    << (row.layered.applicable ? (row.layered.agrees ? "true" : "false") : "unavailable") << '\n';
                all_hold = all_hold && row.x.holds && row.x.limit_holds && row.layered.agrees;
            } else {
                csv << "unavailable,unavailable,unavailable,unavailable,unavailable,unavailable,unavailable,"
                       "unavailable\n";
            }
        }
        summary << "iterations: " << tail.iteration << "\n";
        if (p.accuracy) {
            summary << "bounds: " << (all_hold ? "all satisfied" : "violation") << "\n";
        } else {
            summary << "bounds: unavailable (" << p.accuracy_error << ")\n";
        }
    }
    write_text_file(dir / "report.csv", csv.str());
    write_text_file(dir / "summary.txt", summary.str());
    std::cout << summary.str();
    return kOk;
}

int cmd_corpus(const std::string& out_dir) {
    const fs::path dir = prepare_dir(out_dir);
    for (const auto& entry : corpus::standard()) {
        GraphDocument doc;
        doc.description = entry.description;
        doc.graph = entry.graph;
        doc.generator = entry.generator;
        write_text_file(dir / (entry.name + ".json"), to_json(doc));
        std::cout << (dir / (entry.name + ".json")).string() << "\n";
    }
    return kOk;
}

}  // namespace gbpse::cli
