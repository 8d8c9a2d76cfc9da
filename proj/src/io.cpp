#include "remmap/io.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace remmap::io {

namespace fs = std::filesystem;

ParseError::ParseError(const fs::path& path, std::size_t line, const std::string& what)
    : std::runtime_error(path.string() + (line ? ":" + std::to_string(line) : std::string()) + ": " +
                         what),
      line_(line) {}

std::string format_double(double value) {
    if (value == 0.0) return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' || line[i] == ','))
            ++i;
        const std::size_t start = i;
        while (i < line.size() && !(line[i] == ' ' || line[i] == '\t' || line[i] == '\r' || line[i] == ','))
            ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

double parse_double(std::string_view token, const fs::path& path, std::size_t line) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw ParseError(path, line, "invalid number '" + std::string(token) + "'");
    }
    return value;
}

long parse_index(std::string_view token, const fs::path& path, std::size_t line) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw ParseError(path, line, "invalid integer '" + std::string(token) + "'");
    }
    return value;
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return in;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(path, 0, "cannot open file for writing");
    return out;
}

bool is_triplet_header(std::string_view line) {
    const auto tokens = split_ws(line);
    return tokens.size() == 3 && tokens[0] == "p" && tokens[1] == "q" && tokens[2] == "value";
}

}  // namespace

Matrix read_matrix(const fs::path& path) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    // Skip blank lines before the header.
    std::vector<std::string_view> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        header = split_ws(line);
    }
    if (header.size() != 2) throw ParseError(path, line_no, "expected header 'rows cols'");
    const long rows = parse_index(header[0], path, line_no);
    const long cols = parse_index(header[1], path, line_no);
    if (rows < 0 || cols < 0) throw ParseError(path, line_no, "negative dimensions");
    Matrix m(rows, cols);
    long r = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (r >= rows) throw ParseError(path, line_no, "more rows than declared (" + std::to_string(rows) + ")");
        if (long(tokens.size()) != cols) {
            throw ParseError(path, line_no,
                             "expected " + std::to_string(cols) + " values, found " +
                                 std::to_string(tokens.size()));
        }
        for (long c = 0; c < cols; ++c) m(r, c) = parse_double(tokens[std::size_t(c)], path, line_no);
        ++r;
    }
    if (r != rows) {
        throw ParseError(path, line_no,
                         "expected " + std::to_string(rows) + " rows, found " + std::to_string(r));
    }
    return m;
}

void write_matrix(const fs::path& path, const Matrix& m) {
    auto out = open_output(path);
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

Mask read_mask(const fs::path& path) {
    const Matrix m = read_matrix(path);
    Mask out(m.rows(), m.cols());
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            const double v = m(i, j);
            if (v != std::round(v) || std::abs(v) > 127) {
                throw ParseError(path, std::size_t(i) + 2,
                                 "expected an integer 0/1 entry in column " + std::to_string(j + 1));
            }
            out(i, j) = std::int8_t(v);
        }
    }
    return out;
}

void write_mask(const fs::path& path, const Mask& m) { write_matrix(path, m.cast<double>()); }

void write_triplets(const fs::path& path, const Matrix& m) {
    auto out = open_output(path);
    out << "p q value\n";
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << format_double(m(i, j)) << '\n';
}

void write_support(const fs::path& path, const Mask& support) {
    write_triplets(path, support.cast<double>());
}

Mask read_support(const fs::path& path, Index rows, Index cols) {
    std::string first;
    {
        auto in = open_input(path);
        while (std::getline(in, first) && split_ws(first).empty()) {
        }
    }
    if (!is_triplet_header(first)) {
        Mask m = read_mask(path);
        if (m.rows() != rows || m.cols() != cols) {
            throw ParseError(path, 1,
                             "estimate is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                 " but truth is " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        return (m.array() != 0).cast<std::int8_t>().matrix();
    }
    auto in = open_input(path);
    Mask m = Mask::Zero(rows, cols);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        if (tokens.size() != 3) throw ParseError(path, line_no, "expected 'p q value'");
        const long p = parse_index(tokens[0], path, line_no);
        const long q = parse_index(tokens[1], path, line_no);
        const double v = parse_double(tokens[2], path, line_no);
        if (p < 1 || p > rows || q < 1 || q > cols) {
            throw ParseError(path, line_no,
                             "entry (" + std::to_string(p) + "," + std::to_string(q) + ") outside " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
        }
        if (v != 0.0) m(p - 1, q - 1) = 1;
    }
    return m;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
}

namespace {

class ScenarioReader {
public:
    explicit ScenarioReader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& field, const std::string& why) const {
        const std::size_t line = node.Mark().is_null() ? 0 : std::size_t(node.Mark().line + 1);
        throw ParseError(source_, line, field + ": " + why);
    }

    void check_keys(const YAML::Node& node, const std::string& prefix,
                    std::initializer_list<const char*> allowed) const {
        if (!node.IsMap()) fail(node, prefix.empty() ? "scenario" : prefix, "expected a mapping");
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (!ok.count(key)) fail(kv.first, prefix + key, "unknown field");
        }
    }

    template <class T>
    void get(const YAML::Node& node, const char* key, T& out, const std::string& prefix) const {
        const YAML::Node child = node[key];
        if (!child) return;
        try {
            out = child.as<T>();
        } catch (const YAML::Exception&) {
            fail(child, prefix + key, "wrong type");
        }
    }

    DegreeRange range(const YAML::Node& node, const std::string& field) const {
        if (!node.IsSequence() || node.size() != 2) fail(node, field, "expected [min, max]");
        DegreeRange r;
        try {
            r.min = node[0].as<int>();
            r.max = node[1].as<int>();
        } catch (const YAML::Exception&) {
            fail(node, field, "expected two integers");
        }
        return r;
    }

    void get_range(const YAML::Node& node, const char* key, DegreeRange& out, const std::string& prefix) const {
        if (node[key]) out = range(node[key], prefix + key);
    }

    void get_class(const YAML::Node& node, const char* key, PredictorClass& out) const {
        const YAML::Node child = node[key];
        if (!child) return;
        const std::string prefix = std::string("topology.") + key + ".";
        check_keys(child, prefix, {"count", "degree"});
        get(child, "count", out.count, prefix);
        get_range(child, "degree", out.degree, prefix);
    }

    std::string type_of(const YAML::Node& node, const std::string& field) const {
        if (!node["type"]) fail(node, field + ".type", "missing");
        return node["type"].as<std::string>();
    }

private:
    std::string source_;
};

}  // namespace

SimScenario parse_scenario(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ParseError(source, std::size_t(e.mark.line + 1), e.msg);
    }
    ScenarioReader rd(source);
    SimScenario s;
    if (!root || root.IsNull()) return s;
    rd.check_keys(root, "", {"n", "p", "q", "snr", "rho_eps", "seed", "covariance", "topology"});
    long n = s.n, p = s.p, q = s.q;
    rd.get(root, "n", n, "");
    rd.get(root, "p", p, "");
    q = p;
    rd.get(root, "q", q, "");
    s.n = n;
    s.p = p;
    s.q = q;
    rd.get(root, "snr", s.snr, "");
    rd.get(root, "rho_eps", s.rho_eps, "");
    rd.get(root, "seed", s.seed, "");

    if (const YAML::Node cov = root["covariance"]) {
        const std::string type = rd.type_of(cov, "covariance");
        if (type == "ar") {
            rd.check_keys(cov, "covariance.", {"type", "rho"});
            ArCovariance ar;
            rd.get(cov, "rho", ar.rho, "covariance.");
            s.covariance = ar;
        } else if (type == "block") {
            rd.check_keys(cov, "covariance.", {"type", "rho_wb", "rho_bb", "block_sizes"});
            BlockCovariance block;
            rd.get(cov, "rho_wb", block.rho_wb, "covariance.");
            rd.get(cov, "rho_bb", block.rho_bb, "covariance.");
            rd.get(cov, "block_sizes", block.block_sizes, "covariance.");
            s.covariance = block;
        } else {
            rd.fail(cov["type"], "covariance.type", "expected 'ar' or 'block', got '" + type + "'");
        }
    }

    if (const YAML::Node topo = root["topology"]) {
        const std::string type = rd.type_of(topo, "topology");
        if (type == "hub") {
            rd.check_keys(topo, "topology.", {"type", "n_hubs", "degree", "target_trans_edges"});
            HubTopology t;
            rd.get(topo, "n_hubs", t.n_hubs, "topology.");
            rd.get_range(topo, "degree", t.degree, "topology.");
            rd.get(topo, "target_trans_edges", t.target_trans_edges, "topology.");
            s.topology = t;
        } else if (type == "uniform") {
            rd.check_keys(topo, "topology.", {"type", "n_trans_predictors", "degree", "target_trans_edges"});
            UniformTopology t;
            rd.get(topo, "n_trans_predictors", t.n_trans_predictors, "topology.");
            rd.get_range(topo, "degree", t.degree, "topology.");
            rd.get(topo, "target_trans_edges", t.target_trans_edges, "topology.");
            s.topology = t;
        } else if (type == "mixed") {
            rd.check_keys(topo, "topology.",
                          {"type", "large_hubs", "small_hubs", "singletons", "target_trans_edges"});
            MixedTopology t;
            rd.get_class(topo, "large_hubs", t.large_hubs);
            rd.get_class(topo, "small_hubs", t.small_hubs);
            rd.get_class(topo, "singletons", t.singletons);
            rd.get(topo, "target_trans_edges", t.target_trans_edges, "topology.");
            s.topology = t;
        } else {
            rd.fail(topo["type"], "topology.type",
                    "expected 'hub', 'uniform' or 'mixed', got '" + type + "'");
        }
    }
    return s;
}

SimScenario load_scenario(const fs::path& path) {
    auto in = open_input(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    SimScenario s = parse_scenario(buffer.str(), path.string());
    try {
        validate_scenario(s);
    } catch (const ValidationError& e) {
        throw ParseError(path, 0, e.what());
    }
    return s;
}

std::string scenario_to_yaml(const SimScenario& s) {
    std::ostringstream os;
    auto range = [](const DegreeRange& r) {
        return "[" + std::to_string(r.min) + ", " + std::to_string(r.max) + "]";
    };
    os << "n: " << s.n << "\n";
    os << "p: " << s.p << "\n";
    os << "q: " << s.q << "\n";
    os << "snr: " << format_double(s.snr) << "\n";
    os << "rho_eps: " << format_double(s.rho_eps) << "\n";
    os << "seed: " << s.seed << "\n";
    os << "covariance:\n";
    if (const auto* ar = std::get_if<ArCovariance>(&s.covariance)) {
        os << "  type: ar\n  rho: " << format_double(ar->rho) << "\n";
    } else {
        const auto& b = std::get<BlockCovariance>(s.covariance);
        const auto sizes = b.block_sizes.empty() ? scale_block_sizes(kDefaultBlockProfile, s.p) : b.block_sizes;
        os << "  type: block\n  rho_wb: " << format_double(b.rho_wb) << "\n  rho_bb: "
           << format_double(b.rho_bb) << "\n  block_sizes: [";
        for (std::size_t i = 0; i < sizes.size(); ++i) os << (i ? ", " : "") << sizes[i];
        os << "]\n";
    }
    os << "topology:\n";
    std::visit(
        [&](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, HubTopology>) {
                os << "  type: hub\n  n_hubs: " << t.n_hubs << "\n  degree: " << range(t.degree) << "\n";
            } else if constexpr (std::is_same_v<T, UniformTopology>) {
                os << "  type: uniform\n  n_trans_predictors: " << t.n_trans_predictors
                   << "\n  degree: " << range(t.degree) << "\n";
            } else {
                os << "  type: mixed\n";
                for (auto [cls, name] : {std::pair{&t.large_hubs, "large_hubs"},
                                         std::pair{&t.small_hubs, "small_hubs"},
                                         std::pair{&t.singletons, "singletons"}}) {
                    os << "  " << name << ":\n    count: " << cls->count << "\n    degree: "
                       << range(cls->degree) << "\n";
                }
            }
            os << "  target_trans_edges: " << t.target_trans_edges << "\n";
        },
        s.topology);
    return os.str();
}

}  // namespace remmap::io
