#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace gbpse::cli {

/// Exit codes shared by all subcommands.
inline constexpr int kOk = 0;
inline constexpr int kInvalid = 1;
inline constexpr int kRuntime = 2;

/// Where a command reads its measurement graph from: a graph file or a
/// scenario file (which embeds the graph with realized measurements).
struct Input {
    std::string graph;
    std::string scenario;
};

struct RunSettings {
    int max_iters = 1000;
    double tol = 1e-12;
    unsigned threads = 1;
    std::optional<int> node;
};

int cmd_validate(const std::string& graph_path);
int cmd_generate(const std::string& graph_path, std::uint64_t seed, const std::string& out_path, bool noise_free);
int cmd_run(const Input& input, const RunSettings& settings, const std::string& out_dir);
int cmd_analyze(const Input& input, const RunSettings& settings, const std::string& out_dir);
int cmd_report(const Input& input, const std::string& run_dir, const std::string& out_dir);
int cmd_corpus(const std::string& out_dir);

}  // namespace gbpse::cli
