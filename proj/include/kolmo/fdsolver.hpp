#pragma once

#include <functional>
#include <vector>

#include "kolmo/group.hpp"
#include "kolmo/operator_spec.hpp"

namespace kolmo {

// Uniform tensor grid over a box, plus the time interval marched by the
// solver (from T down to t_final). Dimension is capped at 3.
struct Grid {
    Vector xlo, xhi;
    std::vector<int> n;   // nodes per axis, >= 3
    double t_final = 0.0;
    double T = 1.0;
    double dt = 0.01;     // requested step; the solver uses span/ceil(span/dt)

    int dim() const { return static_cast<int>(n.size()); }
    double h(int axis) const { return (xhi[axis] - xlo[axis]) / (n[axis] - 1); }
    long num_nodes() const;
    long stride(int axis) const;
    double coord(int axis, int idx) const { return xlo[axis] + h(axis) * idx; }
    Vector node(long flat) const;
    double cell_volume() const;

    void validate() const;
};

// Numerical solution u(t_k, x_nodes); times run from T downward.
struct GridSolution {
    Grid grid;
    std::vector<double> times;                 // descending, times[0] = T
    std::vector<std::vector<double>> values;   // per time level, flat row-major
    double cfl = 0.0;                          // transport CFL number actually used
    int order = 1;

    const std::vector<double>& at_time(int k) const { return values.at(k); }
    double mass(int k) const;                  // Riemann node sum * cell volume
    int nearest_time_index(double t) const;
    double interpolate(double t, const Vector& x) const; // nearest time, multilinear space
};

// IMEX march for the backward Cauchy problem: implicit centered diffusion in
// the diffused axes (tridiagonal solves per line, Lie splitting), explicit
// first-order upwind for <Bx,D>, the a_i flux and the c term. Outflow (copy)
// boundaries.
GridSolution solve_backward(const OperatorSpec& spec,
                            const std::function<double(const Vector&)>& phi,
                            const Grid& grid);

// Largest stable time step for the explicit part on this grid.
double cfl_timestep(const OperatorSpec& spec, const Grid& grid);

// Marches backward from a normalized anisotropic Gaussian bump (per-axis
// standard deviation eps^{2i+1} on dilation block i) centered at y; the
// result approximates Gamma(t, .; T, y). Requires eps >= 2 max spacing.
GridSolution estimate_fundamental_solution(const OperatorSpec& spec, double T,
                                           const Vector& y, double eps, Grid grid);

// Empirical check of the local sup bound on intrinsic cylinders:
//   lhs = max over grid nodes in R_rho(z0) of u^p
//   rhs = (r-rho)^{-(Q+2)} * Riemann sum of u^p over R_r(z0)
// ratio = lhs/rhs is an empirical lower bound for the constant in the
// estimate. Node-indicator geometry, first-order accurate.
struct MoserResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    long nodes_inner = 0;
    long nodes_outer = 0;
};

MoserResult moser_check(const GridSolution& u, const GroupElement& z0,
                        double rho, double r, double p,
                        const Matrix& B, const DilationFamily& fam);

} // namespace kolmo
