#include "kolmo/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kolmo/error.hpp"

namespace kolmo {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool is_known_operator_key(const std::string& key) {
    if (key == "blocks" || key == "B" || key == "mu" || key == "M" || key == "c") return true;
    if (key.rfind("drift", 0) == 0) {
        for (std::size_t i = 5; i < key.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(key[i]))) return false;
        return key.size() > 5;
    }
    if (key.size() == 3 && key[0] == 'a' &&
        std::isdigit(static_cast<unsigned char>(key[1])) &&
        std::isdigit(static_cast<unsigned char>(key[2])))
        return true;
    return false;
}

} // namespace

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::string scrubbed = text;
    for (auto& ch : scrubbed)
        if (ch == ',') ch = ' ';
    std::istringstream is(scrubbed);
    std::string tok;
    while (is >> tok) {
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw Error(what + ": malformed number '" + tok + "'");
        }
    }
    return out;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

RunConfig RunConfig::parse_text(std::string_view text) {
    RunConfig cfg;
    cfg.raw_text = std::string(text);
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(text)));
        cfg.hash = buf;
    }

    std::string section;
    std::istringstream lines{cfg.raw_text};
    std::string raw;
    int lineno = 0;
    bool have_blocks = false, have_B = false;
    std::string b_text;

    while (std::getline(lines, raw)) {
        ++lineno;
        // strip comments (full-line ';' and anything from '#')
        std::string line = raw;
        if (const auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        line = trim(line);
        if (line.empty() || line[0] == ';') continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error("config line " + std::to_string(lineno) + ": malformed section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section != "operator" && section != "task" && section != "output")
                throw Error("config line " + std::to_string(lineno) + ": unknown section [" +
                            section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty())
            throw Error("config line " + std::to_string(lineno) + ": empty key");

        if (section == "operator") {
            if (!is_known_operator_key(key))
                throw Error("config line " + std::to_string(lineno) + ": unknown [operator] key '" +
                            key + "'");
            if (key == "blocks") {
                for (double v : parse_double_list(value, "blocks")) {
                    if (v != static_cast<long>(v) || v < 1)
                        throw Error("blocks: entries must be positive integers");
                    cfg.blocks.push_back(static_cast<int>(v));
                }
                have_blocks = true;
            } else if (key == "B") {
                b_text = value;
                have_B = true;
            } else if (key == "mu") {
                cfg.mu = parse_double_list(value, "mu").at(0);
            } else if (key == "M") {
                cfg.M = parse_double_list(value, "M").at(0);
            } else {
                cfg.coeff[key] = value;
            }
        } else if (section == "task") {
            if (key == "name")
                cfg.task_name = value;
            else if (cfg.task.count(key))
                throw Error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
            else
                cfg.task[key] = value;
        } else if (section == "output") {
            if (key == "dir") {
                cfg.out_dir = value;
            } else if (key == "formats") {
                cfg.formats.clear();
                std::istringstream fs(value);
                std::string f;
                while (fs >> f) {
                    std::string clean;
                    for (char ch : f)
                        if (ch != ',') clean += ch;
                    if (clean.empty()) continue;
                    if (clean != "csv" && clean != "json" && clean != "svg")
                        throw Error("output formats: unknown format '" + clean + "'");
                    cfg.formats.push_back(clean);
                }
            } else if (key == "seed") {
                cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
            } else if (key == "threads") {
                cfg.threads = static_cast<int>(std::stol(value));
            } else {
                throw Error("config line " + std::to_string(lineno) + ": unknown [output] key '" +
                            key + "'");
            }
        } else {
            throw Error("config line " + std::to_string(lineno) + ": key outside any section");
        }
    }

    if (!have_blocks)
        throw Error("config: [operator] blocks is required");
    if (!have_B)
        throw Error("config: [operator] B is required");

    int d = 0;
    for (int m : cfg.blocks) d += m;
    const auto entries = parse_double_list(b_text, "B");
    if (static_cast<int>(entries.size()) != d * d)
        throw Error("config: B must have d*d = " + std::to_string(d * d) + " entries, got " +
                    std::to_string(entries.size()));
    cfg.B.resize(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) cfg.B(i, j) = entries[i * d + j];

    return cfg;
}

OperatorSpec RunConfig::make_operator() const {
    OperatorSpec spec;
    spec.blocks = BlockStructure::make(blocks);
    spec.B = validate_blocks(B, blocks);
    spec.mu = mu;
    const int d = spec.blocks.d;
    const int m0 = spec.blocks.m[0];
    if (m0 > 9)
        throw Error("config: coefficient keys support m0 <= 9");

    CoefficientField f = CoefficientField::identity(m0, M);
    for (const auto& [key, value] : coeff) {
        const Expr e = Expr::parse(value, d);
        if (key == "c") {
            f.c = field_from_expr(e);
        } else if (key.rfind("drift", 0) == 0) {
            const int i = std::stoi(key.substr(5));
            if (i < 1 || i > m0)
                throw Error("config: " + key + " out of range (m0 = " + std::to_string(m0) + ")");
            f.drift[i - 1] = field_from_expr(e);
        } else { // a<i><j>
            const int i = key[1] - '0';
            const int j = key[2] - '0';
            if (i < 1 || j < i || j > m0)
                throw Error("config: " + key + " must satisfy 1 <= i <= j <= m0");
            f.a[f.pack_index(i - 1, j - 1)] = field_from_expr(e);
        }
    }
    spec.coeffs = std::move(f);

    if (spec.mu < 1.0)
        throw Error("config: mu must be >= 1");
    return spec;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    const auto it = task.find(key);
    if (it == task.end()) return fallback;
    return parse_double_list(it->second, key).at(0);
}

double RunConfig::require_double(const std::string& key) const {
    const auto it = task.find(key);
    if (it == task.end())
        throw Error("task: missing required key '" + key + "'");
    return parse_double_list(it->second, key).at(0);
}

long RunConfig::get_long(const std::string& key, long fallback) const {
    const auto it = task.find(key);
    if (it == task.end()) return fallback;
    const double v = parse_double_list(it->second, key).at(0);
    if (v != static_cast<long>(v))
        throw Error("task: key '" + key + "' must be an integer");
    return static_cast<long>(v);
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = task.find(key);
    return it == task.end() ? fallback : it->second;
}

Vector RunConfig::get_vector(const std::string& key, int expected_dim) const {
    const auto it = task.find(key);
    if (it == task.end())
        throw Error("task: missing required key '" + key + "'");
    const auto values = parse_double_list(it->second, key);
    if (static_cast<int>(values.size()) != expected_dim)
        throw Error("task: key '" + key + "' must have " + std::to_string(expected_dim) +
                    " entries");
    Vector v(expected_dim);
    for (int i = 0; i < expected_dim; ++i) v[i] = values[i];
    return v;
}

std::vector<double> RunConfig::get_list(const std::string& key) const {
    const auto it = task.find(key);
    if (it == task.end())
        throw Error("task: missing required key '" + key + "'");
    return parse_double_list(it->second, key);
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (double v : get_list(key)) {
        if (v != static_cast<long>(v))
            throw Error("task: key '" + key + "' must be a list of integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

} // namespace kolmo
