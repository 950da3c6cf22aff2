#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "gbpse/graph.hpp"
#include "gbpse/scenario.hpp"

namespace gbpse {

/// Malformed document. The message names the offending location.
class ParseError : public Error {
public:
    using Error::Error;
};

struct GraphDocument {
    std::string description;
    GraphSpec graph;
    std::optional<GeneratorParams> generator;
};

GraphDocument parse_graph_json(const std::string& text);
GraphDocument read_graph_file(const std::filesystem::path& path);

/// Canonical serialization: fixed key order, shortest round-trip numbers.
std::string to_json(const GraphDocument& doc);

std::string to_json(const Scenario& scenario);
Scenario parse_scenario_json(const std::string& text);
Scenario read_scenario_file(const std::filesystem::path& path);

/// 64-bit FNV-1a of a byte string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gbpse
