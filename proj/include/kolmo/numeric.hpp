#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace kolmo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Matrix exponential by scaling-and-squaring with a Pade approximant
// (relative accuracy ~1e-14 for ||A|| <= 10; validated against a truncated
// series oracle in the test suite).
Matrix matrix_exp(const Matrix& a);

// Gauss-Legendre rule on [-1,1]. Nodes/weights are computed once per order
// by Newton iteration on the Legendre recurrence and cached.
struct QuadRule {
    std::vector<double> x;
    std::vector<double> w;
};
const QuadRule& gauss_legendre(int n);

// Deterministic pairwise summation; reduction order does not depend on any
// runtime scheduling, so parallel producers + pairwise_sum give reproducible
// totals.
double pairwise_sum(const double* a, std::size_t n);
double pairwise_sum(const std::vector<double>& a);

// Worker cap shared by all parallel sections (CLI --threads).
void set_max_threads(int n);
int max_threads();

// Runs f(i) for i in [0,n). Results must be written by index; chunk
// scheduling never influences the output.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& f);

// FNV-1a, used to stamp output files with a hash of the config text.
std::uint64_t fnv1a64(std::string_view s);

// Least-squares slope of y against x.
double regression_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace kolmo
