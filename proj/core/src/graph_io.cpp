#include "gbpse/graph_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <map>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gbpse {

using Json = nlohmann::ordered_json;

namespace {

// Start line of every value in a (syntactically valid) document, keyed by
// the same paths the semantic checks report: nodes[2].R, generator.x_true.3.
class LineIndex {
public:
    explicit LineIndex(const std::string& text) : text_(text) {
        skip();
        value("");
    }

    /// Line of the longest known prefix of path, or 0.
    std::size_t find(std::string path) const {
        while (true) {
            const auto it = lines_.find(path);
            if (it != lines_.end()) return it->second;
            const auto cut = path.find_last_of(".[");
            if (cut == std::string::npos || cut == 0) return 0;
            path.resize(cut);
        }
    }

private:
    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            if (text_[pos_] == '\n') ++line_;
            ++pos_;
        }
    }

    std::string string() {
        std::string out;
        ++pos_;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\') ++pos_;
            if (pos_ < text_.size()) out += text_[pos_++];
        }
        ++pos_;
        return out;
    }

    void value(const std::string& path) {
        if (!path.empty()) lines_.emplace(path, line_);
        if (pos_ >= text_.size()) return;
        const char c = text_[pos_];
        if (c == '{') {
            ++pos_;
            skip();
            while (pos_ < text_.size() && text_[pos_] != '}') {
                const std::string key = string();
                skip();
                ++pos_;  // ':'
                skip();
                value(path.empty() ? key : path + "." + key);
                skip();
                if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
                skip();
            }
            ++pos_;
        } else if (c == '[') {
            ++pos_;
            skip();
            for (std::size_t k = 0; pos_ < text_.size() && text_[pos_] != ']'; ++k) {
                value(path + "[" + std::to_string(k) + "]");
                skip();
                if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
                skip();
            }
            ++pos_;
        } else if (c == '"') {
            string();
        } else {
            while (pos_ < text_.size() && !std::strchr(",]} \t\r\n", text_[pos_])) ++pos_;
        }
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::map<std::string, std::size_t> lines_;
};

/// Runs a semantic parse and prefixes failures with the line of the
/// offending value.
template <class F>
auto with_line_context(const std::string& text, F&& parse) {
    try {
        return parse();
    } catch (const ParseError& e) {
        std::string msg = e.what();
        const auto colon = msg.find(": ");
        std::string path = colon == std::string::npos ? msg : msg.substr(0, colon);
        if (path.rfind("scenario.", 0) == 0) path = path.substr(9);
        const std::size_t line = LineIndex(text).find(path);
        if (line == 0) throw;
        throw ParseError("line " + std::to_string(line) + ": " + msg);
    }
}

/// Two-space indentation with numeric arrays (vectors and matrices) kept on
/// one line.
void write_pretty(std::ostream& os, const Json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) + 2, ' ');
    if (j.is_object() && !j.empty()) {
        os << "{\n";
        std::size_t k = 0;
        for (const auto& [key, value] : j.items()) {
            os << pad << Json(key).dump() << ": ";
            write_pretty(os, value, indent + 2);
            os << (++k < j.size() ? ",\n" : "\n");
        }
        os << std::string(static_cast<std::size_t>(indent), ' ') << '}';
        return;
    }
    const bool flat = j.is_array() && std::none_of(j.begin(), j.end(), [](const Json& e) {
                          return e.is_object() || (e.is_array() && std::any_of(e.begin(), e.end(), [](const Json& x) {
                                                       return x.is_structured();
                                                   }));
                      });
    if (!j.is_array() || j.empty() || flat) {
        os << j.dump();
        return;
    }
    os << "[\n";
    for (std::size_t k = 0; k < j.size(); ++k) {
        os << pad;
        write_pretty(os, j[k], indent + 2);
        os << (k + 1 < j.size() ? ",\n" : "\n");
    }
    os << std::string(static_cast<std::size_t>(indent), ' ') << ']';
}

std::string pretty(const Json& j) {
    std::ostringstream os;
    write_pretty(os, j, 0);
    os << '\n';
    return os.str();
}

Json parse_text(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // Drop the library's exception-id prefix; its message already names
        // the line and column.
        const std::string msg = e.what();
        const auto at = msg.find("parse error");
        throw ParseError(at == std::string::npos ? msg : msg.substr(at));
    }
}

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) throw ParseError(where + ": unknown key \"" + key + "\"");
    }
}

double parse_number(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError(where + ": expected a number");
    return j.get<double>();
}

long long parse_integer(const Json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ParseError(where + ": expected an integer");
    return j.get<long long>();
}

Vector parse_vector(const Json& j, const std::string& where) {
    if (j.is_number()) return Vector::Constant(1, j.get<double>());
    if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = parse_number(j[k], where + "[" + std::to_string(k) + "]");
    return v;
}

Matrix parse_matrix(const Json& j, const std::string& where) {
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a non-empty array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string at = where + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].empty()) throw ParseError(at + ": expected a non-empty row array");
        if (r == 0) cols = j[r].size();
        if (j[r].size() != cols) {
            throw ParseError(at + ": row has " + std::to_string(j[r].size()) + " entries, expected " + std::to_string(cols));
        }
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_number(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

NodeId parse_id(const Json& j, const std::string& where) {
    const long long v = parse_integer(j, where);
    if (v < std::numeric_limits<NodeId>::min() || v > std::numeric_limits<NodeId>::max()) {
        throw ParseError(where + ": id out of range");
    }
    return static_cast<NodeId>(v);
}

NodeId parse_id_key(const std::string& key, const std::string& where) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
        return static_cast<NodeId>(v);
    } catch (const std::exception&) {
        throw ParseError(where + ": key \"" + key + "\" is not a node id");
    }
}

NodeSpec parse_node(const Json& j, const std::string& where) {
    check_keys(j, {"id", "dim", "C", "R", "z"}, where);
    if (!j.contains("id")) throw ParseError(where + ": missing \"id\"");
    NodeSpec n;
    n.id = parse_id(j["id"], where + ".id");
    const bool has_c = j.contains("C");
    const bool has_r = j.contains("R");
    if (has_c != has_r) throw ParseError(where + ": self measurement needs both \"C\" and \"R\"");
    if (!has_c && j.contains("z")) throw ParseError(where + ": \"z\" given without \"C\" and \"R\"");
    if (has_c) {
        SelfMeasurement s;
        s.C = parse_matrix(j["C"], where + ".C");
        s.R = parse_matrix(j["R"], where + ".R");
        s.z = j.contains("z") ? parse_vector(j["z"], where + ".z") : Vector::Zero(s.C.rows());
        n.self = std::move(s);
    }
    if (j.contains("dim")) {
        const long long d = parse_integer(j["dim"], where + ".dim");
        if (d < 1) throw ParseError(where + ".dim: must be positive");
        n.dim = static_cast<int>(d);
    } else if (n.self) {
        n.dim = static_cast<int>(n.self->C.cols());
    } else {
        throw ParseError(where + ": missing \"dim\"");
    }
    return n;
}

EdgeSpec parse_edge(const Json& j, const std::string& where) {
    check_keys(j, {"i", "j", "C_ij", "C_ji", "R_ij", "z_ij"}, where);
    for (const char* key : {"i", "j", "C_ij", "C_ji", "R_ij"}) {
        if (!j.contains(key)) throw ParseError(where + ": missing \"" + key + "\"");
    }
    EdgeSpec e;
    e.i = parse_id(j["i"], where + ".i");
    e.j = parse_id(j["j"], where + ".j");
    e.C_ij = parse_matrix(j["C_ij"], where + ".C_ij");
    e.C_ji = parse_matrix(j["C_ji"], where + ".C_ji");
    e.R_ij = parse_matrix(j["R_ij"], where + ".R_ij");
    e.z_ij = j.contains("z_ij") ? parse_vector(j["z_ij"], where + ".z_ij") : Vector::Zero(e.R_ij.rows());
    return e;
}

GraphSpec parse_graph_body(const Json& j, const std::string& where) {
    GraphSpec spec;
    if (!j.contains("nodes") || !j["nodes"].is_array()) throw ParseError(where + ": \"nodes\" must be an array");
    for (std::size_t k = 0; k < j["nodes"].size(); ++k) {
        spec.nodes.push_back(parse_node(j["nodes"][k], where + "nodes[" + std::to_string(k) + "]"));
    }
    if (j.contains("edges")) {
        if (!j["edges"].is_array()) throw ParseError(where + ": \"edges\" must be an array");
        for (std::size_t k = 0; k < j["edges"].size(); ++k) {
            spec.edges.push_back(parse_edge(j["edges"][k], where + "edges[" + std::to_string(k) + "]"));
        }
    }
    return spec;
}

std::map<NodeId, Vector> parse_vector_map(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected an object keyed by node id");
    std::map<NodeId, Vector> out;
    for (const auto& [key, value] : j.items()) {
        out[parse_id_key(key, where)] = parse_vector(value, where + "." + key);
    }
    return out;
}

GeneratorParams parse_generator(const Json& j) {
    const std::string where = "generator";
    check_keys(j, {"x_true_scale", "x_true", "noise"}, where);
    GeneratorParams p;
    if (j.contains("x_true_scale")) p.x_true_scale = parse_number(j["x_true_scale"], where + ".x_true_scale");
    if (j.contains("x_true")) p.x_true = parse_vector_map(j["x_true"], where + ".x_true");
    if (j.contains("noise")) {
        if (!j["noise"].is_boolean()) throw ParseError(where + ".noise: expected true or false");
        p.noise = j["noise"].get<bool>();
    }
    return p;
}

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vector_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
    return out;
}

Json vector_map_json(const std::map<NodeId, Vector>& m) {
    Json out = Json::object();
    for (const auto& [id, v] : m) out[std::to_string(id)] = vector_json(v);
    return out;
}

void put_graph(Json& out, const GraphSpec& g) {
    Json nodes = Json::array();
    for (const auto& n : g.nodes) {
        Json node = Json::object();
        node["id"] = n.id;
        node["dim"] = n.dim;
        if (n.self) {
            node["C"] = matrix_json(n.self->C);
            node["R"] = matrix_json(n.self->R);
            node["z"] = vector_json(n.self->z);
        }
        nodes.push_back(std::move(node));
    }
    Json edges = Json::array();
    for (const auto& e : g.edges) {
        Json edge = Json::object();
        edge["i"] = e.i;
        edge["j"] = e.j;
        edge["C_ij"] = matrix_json(e.C_ij);
        edge["C_ji"] = matrix_json(e.C_ji);
        edge["R_ij"] = matrix_json(e.R_ij);
        edge["z_ij"] = vector_json(e.z_ij);
        edges.push_back(std::move(edge));
    }
    out["nodes"] = std::move(nodes);
    out["edges"] = std::move(edges);
}

}  // namespace

GraphDocument parse_graph_json(const std::string& text) {
    const Json j = parse_text(text);
    return with_line_context(text, [&] {
    check_keys(j, {"description", "nodes", "edges", "generator"}, "graph document");
    GraphDocument doc;
    if (j.contains("description")) {
        if (!j["description"].is_string()) throw ParseError("description: expected a string");
        doc.description = j["description"].get<std::string>();
    }
    doc.graph = parse_graph_body(j, "");
    if (j.contains("generator")) doc.generator = parse_generator(j["generator"]);
    return doc;
    });
}

GraphDocument read_graph_file(const std::filesystem::path& path) {
    try {
        return parse_graph_json(read_text_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string to_json(const GraphDocument& doc) {
    Json out = Json::object();
    if (!doc.description.empty()) out["description"] = doc.description;
    put_graph(out, doc.graph);
    if (doc.generator) {
        Json gen = Json::object();
        if (doc.generator->x_true_scale) gen["x_true_scale"] = *doc.generator->x_true_scale;
        if (!doc.generator->x_true.empty()) gen["x_true"] = vector_map_json(doc.generator->x_true);
        gen["noise"] = doc.generator->noise;
        out["generator"] = std::move(gen);
    }
    return pretty(out);
}

std::string to_json(const Scenario& scenario) {
    Json out = Json::object();
    out["format"] = "gbpse-scenario";
    out["seed"] = scenario.seed;
    out["x_true"] = vector_map_json(scenario.x_true);
    put_graph(out, scenario.graph);
    return pretty(out);
}

Scenario parse_scenario_json(const std::string& text) {
    const Json j = parse_text(text);
    return with_line_context(text, [&] {
    check_keys(j, {"format", "seed", "x_true", "nodes", "edges"}, "scenario");
    if (!j.contains("format") || j["format"] != "gbpse-scenario") {
        throw ParseError("scenario: missing or wrong \"format\" (expected \"gbpse-scenario\")");
    }
    Scenario sc;
    if (!j.contains("seed") || !j["seed"].is_number_unsigned()) {
        throw ParseError("scenario.seed: expected a nonnegative integer");
    }
    sc.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("x_true")) sc.x_true = parse_vector_map(j["x_true"], "scenario.x_true");
    sc.graph = parse_graph_body(j, "");
    return sc;
    });
}

Scenario read_scenario_file(const std::filesystem::path& path) {
    try {
        return parse_scenario_json(read_text_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace gbpse
