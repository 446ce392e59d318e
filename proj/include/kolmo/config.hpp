#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kolmo/operator_spec.hpp"

namespace kolmo {

// Flat INI-style run configuration with three sections:
//
//   [operator]  blocks, B (row-major), a<i><j>, drift<i>, c, mu, M
//   [task]      name plus task-specific typed keys
//   [output]    dir, formats (csv json svg), seed, threads
//
// Full-line and trailing '#' comments are stripped; unknown keys are
// rejected ([task] keys are validated against the selected task's whitelist
// at dispatch).
struct RunConfig {
    std::vector<int> blocks;
    Matrix B;
    std::map<std::string, std::string> coeff; // a11.., drift1.., c as source text
    double mu = 1.0;
    double M = 10.0;

    std::string task_name;
    std::map<std::string, std::string> task;

    std::string out_dir = "out";
    std::vector<std::string> formats = {"csv", "json"};
    std::uint64_t seed = 20240901;
    int threads = 0;

    std::string hash;     // fnv1a of the raw text, hex
    std::string raw_text;

    static RunConfig parse_file(const std::string& path);
    static RunConfig parse_text(std::string_view text);

    OperatorSpec make_operator() const;

    // typed access to [task] keys
    bool has(const std::string& key) const { return task.count(key) > 0; }
    double get_double(const std::string& key, double fallback) const;
    double require_double(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    Vector get_vector(const std::string& key, int expected_dim) const;
    std::vector<double> get_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
};

std::vector<double> parse_double_list(const std::string& text, const std::string& what);

} // namespace kolmo
