#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "kolmo/kernel.hpp"
#include "kolmo/operator_spec.hpp"

namespace kolmo {

struct SampleMeta {
    double t = 0.0;
    Vector x;
    double T = 0.0;
    std::string scheme; // "exact" or "euler"
    int steps = 0;
};

// Terminal states of n paths. Bit-for-bit reproducible for a fixed
// (seed, meta) regardless of the worker count.
struct SampleBatch {
    Eigen::MatrixXd points; // n x d
    std::uint64_t seed = 0;
    SampleMeta meta;

    int n() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
};

// Draws X_T ~ N(e^{(T-t)B} x, C(T-t)) exactly via the Cholesky factor.
SampleBatch sample_exact(const GaussianKernel& k, double t, const Vector& x,
                         double T, int n, std::uint64_t seed);

// Euler-Maruyama for the variable-coefficient generator. Requires c = 0 and
// coefficients independent of the diffused coordinates x_1..x_{m0} (probed
// on a lattice, not assumed), so the divergence and non-divergence forms
// coincide. The diffusion factor solves sigma sigma^T = 2a.
SampleBatch euler_maruyama(const OperatorSpec& spec, double t, const Vector& x,
                           double T, int steps, int n, std::uint64_t seed);

// Product-Gaussian kernel density estimate with dilation-adapted
// per-coordinate bandwidth h^{2i+1} on block i.
class DensityEstimate {
public:
    DensityEstimate(const SampleBatch& batch, const DilationFamily& fam, double h);

    double operator()(const Vector& y) const;
    const Vector& bandwidth() const { return bandwidth_; }

private:
    std::shared_ptr<const Eigen::MatrixXd> points_;
    Vector bandwidth_;
    double log_norm_ = 0.0;
};

DensityEstimate kde_density(const SampleBatch& batch, const DilationFamily& fam, double h);

// Dilation-adapted analogue of the classical bandwidth rule: h = n^{-1/(Q+4)}.
double kde_default_bandwidth(long n, int Q);

} // namespace kolmo
