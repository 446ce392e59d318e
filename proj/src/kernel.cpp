#include "kolmo/kernel.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>
#include <string>

#include "kolmo/error.hpp"

namespace kolmo {

Matrix covariance_van_loan(const Matrix& B, int m0, double t) {
    const int d = static_cast<int>(B.rows());
    const Matrix sigma = sigma_matrix(d, m0);
    const Matrix S = sigma * sigma.transpose();

    // M = [[-B, S], [0, B^T]]; e^{Mt} = [[e^{-Bt}, e^{-Bt} C(t)], [0, e^{B^T t}]],
    // so C(t) = e^{Bt} * (top-right block) with e^{Bt} = (bottom-right)^T.
    Matrix M = Matrix::Zero(2 * d, 2 * d);
    M.topLeftCorner(d, d) = -B;
    M.topRightCorner(d, d) = S;
    M.bottomRightCorner(d, d) = B.transpose();

    const Matrix E = matrix_exp(t * M);
    const Matrix expB = E.bottomRightCorner(d, d).transpose();
    Matrix C = expB * E.topRightCorner(d, d);
    C = 0.5 * (C + C.transpose()).eval();
    return C;
}

Matrix covariance_quadrature(const Matrix& B, int m0, double t, double rel_tol) {
    const int d = static_cast<int>(B.rows());
    const Matrix sigma = sigma_matrix(d, m0);
    const QuadRule& rule = gauss_legendre(20);

    auto composite = [&](int pieces) {
        Matrix acc = Matrix::Zero(d, d);
        const double w_piece = t / pieces;
        for (int p = 0; p < pieces; ++p) {
            const double a = w_piece * p;
            for (std::size_t q = 0; q < rule.x.size(); ++q) {
                const double s = a + 0.5 * w_piece * (rule.x[q] + 1.0);
                const Matrix Es = matrix_exp(s * B) * sigma;
                acc += (0.5 * w_piece * rule.w[q]) * (Es * Es.transpose());
            }
        }
        return acc;
    };

    Matrix prev = composite(2);
    for (int pieces = 4; pieces <= 128; pieces *= 2) {
        Matrix cur = composite(pieces);
        const double scale = std::max(cur.norm(), 1e-300);
        if ((cur - prev).norm() <= rel_tol * scale) {
            return 0.5 * (cur + cur.transpose());
        }
        prev = cur;
    }
    return 0.5 * (prev + prev.transpose());
}

GaussianKernel::GaussianKernel(DriftMatrix drift, int m0)
    : B_(std::move(drift)), m0_(m0), fam_(DilationFamily::make(B_.blocks)) {
    if (m0_ != B_.blocks.m[0])
        throw Error("GaussianKernel: m0 must equal the first block size");
    if (!hypoellipticity_check(B_.B, m0_))
        throw Error("GaussianKernel: drift matrix fails the rank condition; "
                    "the covariance would be degenerate");
}

CovarianceResult GaussianKernel::covariance(double t) const {
    if (!(t > 0.0))
        throw Error("covariance: elapsed time must be positive");

    const Matrix c_block = covariance_van_loan(B_.B, m0_, t);
    const Matrix c_quad = covariance_quadrature(B_.B, m0_, t);
    const double scale = std::max(c_block.norm(), 1e-300);
    const double rel = (c_block - c_quad).norm() / scale;
    if (rel > 1e-10)
        throw Error("covariance: block-exponential and quadrature methods disagree "
                    "(relative difference " + std::to_string(rel) + ")");

    CovarianceResult out;
    out.C = c_block;
    Eigen::LLT<Matrix> llt(out.C);
    if (llt.info() != Eigen::Success)
        throw Error("covariance: factorization failed (near-singular C at t = " +
                    std::to_string(t) + ")");
    out.chol = llt.matrixL();
    out.logdet = 0.0;
    for (int i = 0; i < out.chol.rows(); ++i) {
        const double di = out.chol(i, i);
        if (!(di > 0.0) || !std::isfinite(di))
            throw Error("covariance: factorization failed (non-positive pivot)");
        out.logdet += 2.0 * std::log(di);
    }
    out.expB = matrix_exp(t * B_.B);
    return out;
}

double KernelSlice::log_density(const Vector& x, const Vector& y) const {
    const Vector q = y - cov.expB * x;
    const Vector z = cov.chol.triangularView<Eigen::Lower>().solve(q);
    return log_norm - 0.5 * z.squaredNorm();
}

double KernelSlice::density(const Vector& x, const Vector& y) const {
    return std::exp(log_density(x, y));
}

double KernelSlice::peak() const {
    return std::exp(log_norm);
}

KernelSlice GaussianKernel::at(double dt) const {
    KernelSlice s;
    s.dt = dt;
    s.cov = covariance(dt);
    s.log_norm = -0.5 * dim() * std::log(2.0 * std::numbers::pi) - 0.5 * s.cov.logdet;
    return s;
}

double GaussianKernel::density(double t, const Vector& x, double T, const Vector& y) const {
    return std::exp(log_density(t, x, T, y));
}

double GaussianKernel::log_density(double t, const Vector& x, double T, const Vector& y) const {
    if (!(t < T))
        throw Error("density: requires t < T");
    return at(T - t).log_density(x, y);
}

namespace {

// Tensor-product iteration over quad_n^d Gauss-Legendre nodes on [-8,8]^d in
// whitened coordinates w, where y = mean + chol * w. The weight function
// absorbs the standard normal density.
template <typename F>
double whitened_integral(const KernelSlice& slice, const Vector& mean, int quad_n, F&& f) {
    const int d = static_cast<int>(mean.size());
    const QuadRule& rule = gauss_legendre(quad_n);
    const double half_width = 8.0;

    std::vector<double> node(quad_n), logw(quad_n);
    for (int i = 0; i < quad_n; ++i) {
        node[i] = half_width * rule.x[i];
        logw[i] = std::log(half_width * rule.w[i]) - 0.5 * node[i] * node[i] -
                  0.5 * std::log(2.0 * std::numbers::pi);
    }

    long total = 1;
    for (int i = 0; i < d; ++i) total *= quad_n;

    std::vector<double> terms(static_cast<std::size_t>(total));
    parallel_for(total, [&](std::int64_t flat) {
        Vector w(d);
        double lw = 0.0;
        long rem = flat;
        for (int axis = d - 1; axis >= 0; --axis) {
            const int idx = static_cast<int>(rem % quad_n);
            rem /= quad_n;
            w[axis] = node[idx];
            lw += logw[idx];
        }
        const Vector y = mean + slice.cov.chol.triangularView<Eigen::Lower>() * w;
        terms[static_cast<std::size_t>(flat)] = std::exp(lw) * f(y);
    });
    return pairwise_sum(terms);
}

double gauss_box_mass(int quad_n) {
    // mass of the standard 1-d normal captured by the GL rule on [-8,8]
    const QuadRule& rule = gauss_legendre(quad_n);
    double m = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        const double u = 8.0 * rule.x[i];
        m += 8.0 * rule.w[i] * std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    }
    return m;
}

} // namespace

CauchyResult solve_cauchy(const GaussianKernel& k,
                          const std::function<double(const Vector&)>& phi,
                          double t, double T,
                          const std::vector<Vector>& eval_points,
                          int quad_n) {
    if (!(t < T))
        throw Error("solve_cauchy: requires t < T");
    const KernelSlice slice = k.at(T - t);
    const int d = k.dim();

    CauchyResult out;
    out.values.resize(eval_points.size());
    const double mass1 = gauss_box_mass(quad_n);
    out.tail_mass = 1.0 - std::pow(mass1, d);

    std::vector<double> coarse(eval_points.size());
    for (std::size_t i = 0; i < eval_points.size(); ++i) {
        const Vector mean = slice.mean(eval_points[i]);
        out.values[i] = whitened_integral(slice, mean, quad_n, phi);
        coarse[i] = whitened_integral(slice, mean, quad_n / 2, phi);
    }
    out.err_estimate = 0.0;
    for (std::size_t i = 0; i < eval_points.size(); ++i)
        out.err_estimate = std::max(out.err_estimate, std::abs(out.values[i] - coarse[i]));
    return out;
}

double ck_residual(const GaussianKernel& k, double t, const Vector& x,
                   double s, double T, const Vector& y, int quad_n) {
    if (!(t < s && s < T))
        throw Error("ck_residual: requires t < s < T");
    const KernelSlice first = k.at(s - t);
    const KernelSlice second = k.at(T - s);
    const Vector mean = first.mean(x);
    const double integral = whitened_integral(first, mean, quad_n, [&](const Vector& xi) {
        return second.density(xi, y);
    });
    const double direct = k.density(t, x, T, y);
    return std::abs(integral - direct);
}

double pde_residual(const GaussianKernel& k,
                    const std::function<double(double, const Vector&)>& u,
                    double t, const Vector& x, double h) {
    if (!(h > 0.0))
        throw Error("pde_residual: step must be positive");
    const int d = k.dim();
    if (x.size() != d)
        throw Error("pde_residual: point dimension mismatch");

    // L0 u = 1/2 sum_{i < m0} u_{x_i x_i} + <Bx, Du> + u_t
    const double u0 = u(t, x);
    double acc = (u(t + h, x) - u(t - h, x)) / (2.0 * h);

    const Vector bx = k.drift().B * x;
    for (int i = 0; i < d; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double up = u(t, xp);
        const double um = u(t, xm);
        if (i < k.m0())
            acc += 0.5 * (up - 2.0 * u0 + um) / (h * h);
        acc += bx[i] * (up - um) / (2.0 * h);
    }
    return acc;
}

} // namespace kolmo
