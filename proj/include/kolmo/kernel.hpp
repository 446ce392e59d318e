#pragma once

#include <functional>
#include <vector>

#include "kolmo/group.hpp"
#include "kolmo/numeric.hpp"

namespace kolmo {

// Covariance of the linear SDE at elapsed time t together with its Cholesky
// factor and e^{tB}.
struct CovarianceResult {
    Matrix C;
    Matrix chol;     // lower triangular, chol * chol^T = C
    double logdet = 0.0;
    Matrix expB;     // e^{tB}
};

// C(t) = int_0^t (e^{sB} sigma)(e^{sB} sigma)^T ds by the augmented
// block-matrix exponential (Van Loan) and by adaptive composite
// Gauss-Legendre quadrature. covariance() runs both and fails when they
// disagree beyond 1e-10 relative.
Matrix covariance_van_loan(const Matrix& B, int m0, double t);
Matrix covariance_quadrature(const Matrix& B, int m0, double t, double rel_tol = 1e-12);

// Everything needed to evaluate the Gaussian density at one elapsed time,
// prepared once and reused across many (x, y) pairs.
struct KernelSlice {
    double dt = 0.0;
    CovarianceResult cov;
    double log_norm = 0.0; // -d/2 log(2 pi) - 1/2 logdet

    double log_density(const Vector& x, const Vector& y) const;
    double density(const Vector& x, const Vector& y) const;
    Vector mean(const Vector& x) const { return cov.expB * x; }
    double peak() const; // sup over x,y = (2 pi)^{-d/2} det C^{-1/2}
};

// The explicit Gaussian fundamental solution of the constant-coefficient
// principal part L0 = 1/2 sum_{i<=m0} d_{x_i x_i} + <Bx, D> + d_t.
class GaussianKernel {
public:
    GaussianKernel(DriftMatrix drift, int m0);

    int dim() const { return static_cast<int>(B_.B.rows()); }
    int m0() const { return m0_; }
    const DriftMatrix& drift() const { return B_; }
    const DilationFamily& fam() const { return fam_; }

    // Dual-method covariance; throws on method disagreement or
    // factorization failure. Requires t > 0.
    CovarianceResult covariance(double t) const;

    KernelSlice at(double dt) const; // dt = T - t > 0

    double density(double t, const Vector& x, double T, const Vector& y) const;
    double log_density(double t, const Vector& x, double T, const Vector& y) const;

private:
    DriftMatrix B_;
    int m0_;
    DilationFamily fam_;
};

// u(t, x) = int Gamma0(t, x; T, y) phi(y) dy by tensor Gauss-Legendre in
// whitened coordinates (quadrature box: mean +- 8 principal standard
// deviations). err_estimate compares against the embedded half-order rule.
struct CauchyResult {
    std::vector<double> values;
    double tail_mass = 0.0;   // Gaussian mass outside the quadrature box
    double err_estimate = 0.0;
};

CauchyResult solve_cauchy(const GaussianKernel& k,
                          const std::function<double(const Vector&)>& phi,
                          double t, double T,
                          const std::vector<Vector>& eval_points,
                          int quad_n = 64);

// |int Gamma0(t,x;s,xi) Gamma0(s,xi;T,y) dxi - Gamma0(t,x;T,y)|, quadrature
// over a truncated box around the first factor. Requires t < s < T.
double ck_residual(const GaussianKernel& k, double t, const Vector& x,
                   double s, double T, const Vector& y, int quad_n = 80);

// Central-difference application of L0 to a smooth u at (t, x); for
// solutions the residual vanishes at rate O(h^2).
double pde_residual(const GaussianKernel& k,
                    const std::function<double(double, const Vector&)>& u,
                    double t, const Vector& x, double h);

} // namespace kolmo
