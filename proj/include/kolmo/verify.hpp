#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kolmo/kernel.hpp"

namespace kolmo {

// One quantitative check of an estimate: fitted constants, probe
// description, worst residual and the pass flag.
struct VerificationReport {
    std::string estimate;
    std::map<std::string, double> constants;
    std::string probes;
    long n_probes = 0;
    double max_residual = 0.0;
    bool pass = false;
    double runtime_ms = 0.0;

    std::string to_text() const;
};

// Density evaluator Gamma(t, x; T, y); either the closed-form kernel or a
// grid-based estimate wrapped by interpolation.
using DensityFn = std::function<double(double, const Vector&, double, const Vector&)>;

DensityFn kernel_density_fn(const GaussianKernel& k);

// Probe lattice shared by the bound fitters: terminal time T, a sweep of
// elapsed times dt = T - t, and space probes (all (x, y) pairs are visited).
struct ProbeGrid {
    double T = 1.0;
    std::vector<double> dts;
    std::vector<Vector> xs;
    std::vector<Vector> ys;

    static std::vector<Vector> lattice(const Vector& lo, const Vector& hi, int n_per_axis);
};

// Nash bound: C_fit = max over probes of Gamma * dt^{Q/2}. Reports the
// per-dt spread so the flatness of the power law is visible.
VerificationReport nash_constant(const DensityFn& gamma, const DilationFamily& fam,
                                 const ProbeGrid& probes);

// Gaussian upper bound: smallest C (bisection, feasibility monotone in C)
// such that for every probe
//   Gamma <= C dt^{-Q/2} exp(-|D(dt^{-1/2})(x - e^{-dt B} y)|^2 / C).
VerificationReport fit_gaussian_bound(const DensityFn& gamma, const Matrix& B,
                                      const DilationFamily& fam, const ProbeGrid& probes,
                                      double c_lo = 1e-2, double c_hi = 1e6, int iters = 60);

// Least-squares slope of log sup_{x,y} Gamma against log dt; the on-diagonal
// decay exponent (expected -Q/2).
double exponent_regression(const DensityFn& gamma, const ProbeGrid& probes);
VerificationReport exponent_report(const DensityFn& gamma, const DilationFamily& fam,
                                   const ProbeGrid& probes);

// Exterior L2 tail of the kernel:
//   int_{|xi - e^{(eta-t)B} x| >= sigma} Gamma^2(t,x;eta,xi) dxi
//     <= C exp(-sigma^2/(C(eta-t))) (eta-t)^{-Q/2}.
// sigma = 0 entries check the full L2 norm against the closed form
// (4 pi)^{-d/2} det C(eta-t)^{-1/2}. Time window: t >= eta - (1 ^ sigma^2)/k_cfg.
VerificationReport tail_mass_check(const GaussianKernel& k, double t, const Vector& x,
                                   double eta, const std::vector<double>& sigmas,
                                   double k_cfg = 8.0, int quad_n = 200);

// Vanishing-data decay: for terminal data u0 supported in {|xi - y| >= sigma},
//   |u((0, e^{-eta B} y) o (tau, 0))| <= C (eta-tau)^{-Q/4}
//       exp(-sigma^2/(C(eta-tau))) ||u0||_{L2}.
VerificationReport decay_check(const GaussianKernel& k, const Vector& y, double sigma,
                               double eta, const std::vector<double>& taus,
                               const std::function<double(const Vector&)>& u0,
                               double k_cfg = 8.0, int quad_n = 160);

} // namespace kolmo
