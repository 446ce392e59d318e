#include "kolmo/simulate.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>

#include "kolmo/error.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

namespace {

// Counter namespaces keep the exact sampler and the Euler scheme on
// disjoint Philox streams even under the same seed.
constexpr std::uint64_t kExactStream = 0;
constexpr std::uint64_t kEulerStreamBase = 16;
constexpr std::uint64_t kPairsPerStep = 16;

Vector normal_vector(std::uint64_t seed, std::uint64_t sample, std::uint64_t stream0, int d) {
    Vector z(d);
    for (int j = 0; j < d; j += 2) {
        const auto pair = rng::normal_pair(seed, sample, stream0 + j / 2);
        z[j] = pair[0];
        if (j + 1 < d) z[j + 1] = pair[1];
    }
    return z;
}

} // namespace

SampleBatch sample_exact(const GaussianKernel& k, double t, const Vector& x,
                         double T, int n, std::uint64_t seed) {
    if (n < 1)
        throw Error("sample_exact: need n >= 1");
    if (!(t <= T))
        throw Error("sample_exact: requires t <= T");
    const int d = k.dim();
    if (x.size() != d)
        throw Error("sample_exact: start point dimension mismatch");

    SampleBatch batch;
    batch.seed = seed;
    batch.meta = SampleMeta{t, x, T, "exact", 0};
    batch.points.resize(n, d);

    if (T == t) {
        // C(0) = 0: all samples collapse onto the start point.
        for (int i = 0; i < n; ++i) batch.points.row(i) = x.transpose();
        return batch;
    }

    const CovarianceResult cov = k.covariance(T - t);
    const Vector mean = cov.expB * x;
    const Matrix& L = cov.chol;

    parallel_for(n, [&](std::int64_t i) {
        const Vector z = normal_vector(seed, static_cast<std::uint64_t>(i), kExactStream, d);
        batch.points.row(i) = (mean + L * z).transpose();
    });
    return batch;
}

namespace {

// Probes whether f varies along the diffused coordinates anywhere on a
// coarse lattice over the standard validation box.
bool depends_on_diffused(const ScalarField& f, int d, int m0) {
    const Box box = Box::standard(d);
    const int n = 5;
    Vector x(d);
    for (int it = 0; it < n; ++it) {
        const double t = box.t0 + (box.t1 - box.t0) * it / double(n - 1);
        long nx = 1;
        for (int i = 0; i < d; ++i) nx *= n;
        for (long flat = 0; flat < nx; ++flat) {
            long rem = flat;
            for (int axis = d - 1; axis >= 0; --axis) {
                const long idx = rem % n;
                rem /= n;
                x[axis] = box.xlo[axis] + (box.xhi[axis] - box.xlo[axis]) * idx / double(n - 1);
            }
            const double base = f(t, x);
            for (int i = 0; i < m0; ++i) {
                Vector xp = x;
                xp[i] += 0.37; // stays inside the box for the lattice above
                const double shifted = f(t, xp);
                if (std::abs(shifted - base) > 1e-10 * (1.0 + std::abs(base)))
                    return true;
            }
        }
    }
    return false;
}

} // namespace

SampleBatch euler_maruyama(const OperatorSpec& spec, double t, const Vector& x,
                           double T, int steps, int n, std::uint64_t seed) {
    if (steps < 1)
        throw Error("euler_maruyama: need steps >= 1");
    if (n < 1)
        throw Error("euler_maruyama: need n >= 1");
    if (!(t <= T))
        throw Error("euler_maruyama: requires t <= T");
    const int d = spec.dim();
    const int m0 = spec.m0();
    if (x.size() != d)
        throw Error("euler_maruyama: start point dimension mismatch");

    // The density interpretation needs c = 0 and divergence-free lower-order
    // structure; both are probed, not assumed.
    if (depends_on_diffused(spec.coeffs.c, d, 1) ||
        std::abs(spec.coeffs.c(0.5, Vector::Zero(d))) > 1e-12)
        throw Error("euler_maruyama: zero-order coefficient c must vanish");
    for (const auto& entry : spec.coeffs.a)
        if (depends_on_diffused(entry, d, m0))
            throw Error("euler_maruyama: diffusion coefficient depends on a diffused coordinate");
    for (const auto& entry : spec.coeffs.drift)
        if (depends_on_diffused(entry, d, m0))
            throw Error("euler_maruyama: drift coefficient depends on a diffused coordinate");

    SampleBatch batch;
    batch.seed = seed;
    batch.meta = SampleMeta{t, x, T, "euler", steps};
    batch.points.resize(n, d);

    const double dt = (T - t) / steps;
    const double sqdt = std::sqrt(dt);
    const Matrix& B = spec.B.B;

    parallel_for(n, [&](std::int64_t i) {
        Vector state = x;
        Eigen::LLT<Matrix> llt;
        for (int kstep = 0; kstep < steps; ++kstep) {
            const double tk = t + kstep * dt;
            const Matrix a = spec.coeffs.eval_a(tk, state);
            llt.compute(2.0 * a);
            if (llt.info() != Eigen::Success)
                throw Error("euler_maruyama: 2a is not positive definite along a path");
            const Matrix L = llt.matrixL();
            const Vector drift_lo = spec.coeffs.eval_drift(tk, state);

            const Vector z = normal_vector(seed, static_cast<std::uint64_t>(i),
                                           kEulerStreamBase + kPairsPerStep * kstep, m0);
            Vector incr = B * state * dt;
            incr.head(m0) += drift_lo * dt + sqdt * (L * z);
            state += incr;
        }
        batch.points.row(i) = state.transpose();
    });
    return batch;
}

DensityEstimate::DensityEstimate(const SampleBatch& batch, const DilationFamily& fam, double h) {
    if (!(h > 0.0))
        throw Error("kde: bandwidth must be positive");
    if (batch.n() < 1)
        throw Error("kde: empty batch");
    if (batch.dim() != fam.blocks.d)
        throw Error("kde: dimension mismatch between batch and dilation family");

    points_ = std::make_shared<Eigen::MatrixXd>(batch.points);
    bandwidth_ = fam.weights(h);
    log_norm_ = 0.0;
    for (int c = 0; c < bandwidth_.size(); ++c)
        log_norm_ -= std::log(bandwidth_[c] * std::sqrt(2.0 * std::numbers::pi));
}

double DensityEstimate::operator()(const Vector& y) const {
    const auto& pts = *points_;
    const long n = pts.rows();
    const int d = static_cast<int>(pts.cols());
    std::vector<double> contrib(static_cast<std::size_t>(n));
    parallel_for(n, [&](std::int64_t i) {
        double q = 0.0;
        for (int c = 0; c < d; ++c) {
            const double u = (y[c] - pts(i, c)) / bandwidth_[c];
            q += u * u;
        }
        contrib[static_cast<std::size_t>(i)] = std::exp(log_norm_ - 0.5 * q);
    });
    return pairwise_sum(contrib) / static_cast<double>(n);
}

DensityEstimate kde_density(const SampleBatch& batch, const DilationFamily& fam, double h) {
    return DensityEstimate(batch, fam, h);
}

double kde_default_bandwidth(long n, int Q) {
    return std::pow(static_cast<double>(n), -1.0 / (Q + 4));
}

} // namespace kolmo
