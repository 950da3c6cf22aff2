#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "gbpse/graph.hpp"
#include "gbpse/graph_io.hpp"

using namespace gbpse::cli;

namespace {

void add_input(CLI::App* cmd, Input& in) {
    auto* g = cmd->add_option("--graph", in.graph, "measurement graph JSON");
    auto* s = cmd->add_option("--scenario", in.scenario, "scenario JSON from 'generate'");
    g->excludes(s);
}

void add_run_settings(CLI::App* cmd, RunSettings& rs) {
    cmd->add_option("--max-iters", rs.max_iters, "iteration cap")->capture_default_str();
    cmd->add_option("--tol", rs.tol, "relative settle tolerance")->capture_default_str();
    cmd->add_option("--threads", rs.threads, "worker threads")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian belief propagation for state estimation"};
    app.require_subcommand(1);

    std::string graph_path;
    std::string out;
    std::string run_dir;
    std::uint64_t seed = 0;
    bool noise_free = false;
    Input input;
    RunSettings rs;
    int node = 0;

    auto* validate = app.add_subcommand("validate", "check a graph file and Assumption 1");
    validate->add_option("--graph", graph_path, "measurement graph JSON")->required();

    auto* generate = app.add_subcommand("generate", "draw a scenario from a graph's generator block");
    generate->add_option("--graph", graph_path, "measurement graph JSON")->required();
    generate->add_option("--seed", seed, "random seed")->required();
    generate->add_option("--out", out, "output file (stdout if omitted)");
    generate->add_flag("--noise-free", noise_free, "set measurements to their noiseless values");

    auto* run = app.add_subcommand("run", "iterate belief propagation and write traces");
    add_input(run, input);
    add_run_settings(run, rs);
    auto* node_opt = run->add_option("--node", node, "node for series.csv (default: first)");
    run->add_option("--out", out, "output directory")->required();

    auto* analyze = app.add_subcommand("analyze", "stability and accuracy analysis");
    add_input(analyze, input);
    add_run_settings(analyze, rs);
    analyze->add_option("--out", out, "output directory")->required();

    auto* report = app.add_subcommand("report", "summarize a finished run against its input");
    add_input(report, input);
    report->add_option("--run", run_dir, "directory written by 'run'")->required();
    report->add_option("--out", out, "output directory")->required();

    auto* corpus = app.add_subcommand("corpus", "write the built-in graph corpus");
    corpus->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kRuntime;
    }
    if (*node_opt) rs.node = node;

    try {
        if (*validate) return cmd_validate(graph_path);
        if (*generate) return cmd_generate(graph_path, seed, out, noise_free);
        if (*run) return cmd_run(input, rs, out);
        if (*analyze) return cmd_analyze(input, rs, out);
        if (*report) return cmd_report(input, run_dir, out);
        if (*corpus) return cmd_corpus(out);
    } catch (const gbpse::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const gbpse::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kRuntime;
}
