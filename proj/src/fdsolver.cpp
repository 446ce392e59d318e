#include "kolmo/fdsolver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kolmo/error.hpp"

namespace kolmo {

long Grid::num_nodes() const {
    long total = 1;
    for (int ni : n) total *= ni;
    return total;
}

long Grid::stride(int axis) const {
    long s = 1;
    for (int k = axis + 1; k < dim(); ++k) s *= n[k];
    return s;
}

Vector Grid::node(long flat) const {
    Vector x(dim());
    for (int axis = dim() - 1; axis >= 0; --axis) {
        const long idx = flat % n[axis];
        flat /= n[axis];
        x[axis] = coord(axis, static_cast<int>(idx));
    }
    return x;
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (int axis = 0; axis < dim(); ++axis) v *= h(axis);
    return v;
}

void Grid::validate() const {
    const int d = dim();
    if (d < 1 || d > 3)
        throw Error("grid: dimension must be 1..3 (desk scale)");
    if (xlo.size() != d || xhi.size() != d)
        throw Error("grid: box dimension mismatch");
    for (int axis = 0; axis < d; ++axis) {
        if (n[axis] < 3)
            throw Error("grid: need at least 3 nodes per axis");
        if (!(xlo[axis] < xhi[axis]))
            throw Error("grid: empty box");
    }
    if (!(t_final < T))
        throw Error("grid: requires t_final < T");
}

double GridSolution::mass(int k) const {
    const auto& v = at_time(k);
    return pairwise_sum(v) * grid.cell_volume();
}

int GridSolution::nearest_time_index(double t) const {
    int best = 0;
    double dist = std::abs(times[0] - t);
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double dk = std::abs(times[k] - t);
        if (dk < dist) {
            dist = dk;
            best = static_cast<int>(k);
        }
    }
    return best;
}

double GridSolution::interpolate(double t, const Vector& x) const {
    const int k = nearest_time_index(t);
    const auto& v = at_time(k);
    const int d = grid.dim();

    std::vector<int> lo(d);
    std::vector<double> frac(d);
    for (int axis = 0; axis < d; ++axis) {
        const double s = (x[axis] - grid.xlo[axis]) / grid.h(axis);
        int i = static_cast<int>(std::floor(s));
        i = std::clamp(i, 0, grid.n[axis] - 2);
        lo[axis] = i;
        frac[axis] = std::clamp(s - i, 0.0, 1.0);
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        long flat = 0;
        for (int axis = 0; axis < d; ++axis) {
            const int bit = (corner >> axis) & 1;
            w *= bit ? frac[axis] : 1.0 - frac[axis];
            flat += (lo[axis] + bit) * grid.stride(axis);
        }
        acc += w * v[flat];
    }
    return acc;
}

namespace {

struct SpeedTable {
    // transport speed (Bx)_i at every node, per axis
    std::vector<std::vector<double>> w;
    std::vector<double> sup_axis; // max |(Bx)_i| over the box
};

SpeedTable build_speeds(const Matrix& B, const Grid& grid) {
    const int d = grid.dim();
    const long N = grid.num_nodes();
    SpeedTable tab;
    tab.w.assign(d, std::vector<double>(N));
    tab.sup_axis.assign(d, 0.0);
    for (long flat = 0; flat < N; ++flat) {
        const Vector x = grid.node(flat);
        const Vector bx = B * x;
        for (int axis = 0; axis < d; ++axis) {
            tab.w[axis][flat] = bx[axis];
            tab.sup_axis[axis] = std::max(tab.sup_axis[axis], std::abs(bx[axis]));
        }
    }
    return tab;
}

// sup |f| over a coarse lattice on the grid box and marched time interval
double probe_sup(const ScalarField& f, const Grid& grid) {
    const int d = grid.dim();
    const int n = 7;
    double sup = 0.0;
    Vector x(d);
    for (int it = 0; it < n; ++it) {
        const double t = grid.t_final + (grid.T - grid.t_final) * it / double(n - 1);
        long nx = 1;
        for (int i = 0; i < d; ++i) nx *= n;
        for (long flat = 0; flat < nx; ++flat) {
            long rem = flat;
            for (int axis = d - 1; axis >= 0; --axis) {
                const long idx = rem % n;
                rem /= n;
                x[axis] = grid.xlo[axis] + (grid.xhi[axis] - grid.xlo[axis]) * idx / double(n - 1);
            }
            sup = std::max(sup, std::abs(f(t, x)));
        }
    }
    return sup;
}

void thomas_solve(std::vector<double>& lower, std::vector<double>& diag,
                  std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

} // namespace

double cfl_timestep(const OperatorSpec& spec, const Grid& grid) {
    grid.validate();
    const SpeedTable speeds = build_speeds(spec.B.B, grid);
    double rate = 0.0;
    for (int axis = 0; axis < grid.dim(); ++axis) {
        double s = speeds.sup_axis[axis];
        if (axis < spec.m0()) s += probe_sup(spec.coeffs.drift[axis], grid);
        rate += s / grid.h(axis);
    }
    rate += probe_sup(spec.coeffs.c, grid);
    if (rate <= 0.0) return grid.T - grid.t_final;
    return 0.9 / rate;
}

GridSolution solve_backward(const OperatorSpec& spec,
                            const std::function<double(const Vector&)>& phi,
                            const Grid& grid) {
    grid.validate();
    if (!(grid.dt > 0.0))
        throw Error("solve_backward: time step must be positive");
    const int d = grid.dim();
    const int m0 = spec.m0();
    if (spec.dim() != d)
        throw Error("solve_backward: operator/grid dimension mismatch");

    // standing assumptions validated on the marched box
    {
        Box box;
        box.t0 = grid.t_final;
        box.t1 = grid.T;
        box.xlo = grid.xlo;
        box.xhi = grid.xhi;
        check_assumptions(spec, box, 9);
    }

    const long N = grid.num_nodes();
    const SpeedTable speeds = build_speeds(spec.B.B, grid);

    const double span = grid.T - grid.t_final;
    const int nsteps = std::max(1, static_cast<int>(std::ceil(span / grid.dt - 1e-9)));
    const double dt = span / nsteps;

    // CFL for the explicit upwind part (transport + lower-order drift + c)
    std::vector<double> sup_drift(m0, 0.0);
    for (int i = 0; i < m0; ++i) sup_drift[i] = probe_sup(spec.coeffs.drift[i], grid);
    const double sup_c = probe_sup(spec.coeffs.c, grid);
    double rate = sup_c;
    double cfl_transport = 0.0;
    for (int axis = 0; axis < d; ++axis) {
        double s = speeds.sup_axis[axis];
        if (axis < m0) s += sup_drift[axis];
        rate += s / grid.h(axis);
        cfl_transport = std::max(cfl_transport, speeds.sup_axis[axis] * dt / grid.h(axis));
    }
    if (dt * rate > 1.0 + 1e-12)
        throw Error("solve_backward: CFL violation (dt * sum |speed|/h = " +
                    std::to_string(dt * rate) + " > 1); reduce dt below " +
                    std::to_string(1.0 / rate));

    GridSolution sol;
    sol.grid = grid;
    sol.cfl = cfl_transport;
    sol.order = 1;
    sol.times.reserve(nsteps + 1);
    sol.values.reserve(nsteps + 1);

    std::vector<double> v(N);
    for (long flat = 0; flat < N; ++flat) v[flat] = phi(grid.node(flat));
    sol.times.push_back(grid.T);
    sol.values.push_back(v);

    std::vector<double> work(N), coeff(N), flux_buf(N), grad_buf(N);
    std::vector<long> strides(d);
    for (int axis = 0; axis < d; ++axis) strides[axis] = grid.stride(axis);

    const bool has_cross = m0 >= 2;

    for (int step = 0; step < nsteps; ++step) {
        const double t_old = grid.T - step * dt;
        const double t_new = t_old - dt;

        // --- explicit stage ---
        work = v;

        // transport <Bx, Dv>, first-order upwind (forward difference for
        // positive speed: information flows from larger coordinates when
        // marching backward in time)
        for (int axis = 0; axis < d; ++axis) {
            const long str = strides[axis];
            const int nax = grid.n[axis];
            const auto& wx = speeds.w[axis];
            for (long flat = 0; flat < N; ++flat) {
                const long idx = (flat / str) % nax;
                const double s = wx[flat];
                double diff = 0.0;
                if (s > 0.0 && idx + 1 < nax)
                    diff = v[flat + str] - v[flat];
                else if (s < 0.0 && idx > 0)
                    diff = v[flat] - v[flat - str];
                work[flat] += dt * s * diff / grid.h(axis);
            }
        }

        // zero-order term
        {
            bool c_nontrivial = false;
            for (long flat = 0; flat < N; ++flat) {
                coeff[flat] = spec.coeffs.c(t_old, grid.node(flat));
                if (coeff[flat] != 0.0) c_nontrivial = true;
            }
            if (c_nontrivial)
                for (long flat = 0; flat < N; ++flat) work[flat] += dt * coeff[flat] * v[flat];
        }

        // conservative lower-order drift d_i(a_i v), donor-cell upwind
        for (int i = 0; i < m0; ++i) {
            if (sup_drift[i] == 0.0) continue;
            const long str = strides[i];
            const int nax = grid.n[i];
            for (long flat = 0; flat < N; ++flat)
                coeff[flat] = spec.coeffs.drift[i](t_old, grid.node(flat));
            const double hi = grid.h(i);
            for (long flat = 0; flat < N; ++flat) {
                const long idx = (flat / str) % nax;
                // face j+1/2
                double g_plus, v_plus;
                if (idx + 1 < nax) {
                    g_plus = 0.5 * (coeff[flat] + coeff[flat + str]);
                    v_plus = g_plus > 0.0 ? v[flat + str] : v[flat];
                } else {
                    g_plus = coeff[flat];
                    v_plus = v[flat]; // outflow
                }
                double g_minus, v_minus;
                if (idx > 0) {
                    g_minus = 0.5 * (coeff[flat - str] + coeff[flat]);
                    v_minus = g_minus > 0.0 ? v[flat] : v[flat - str];
                } else {
                    g_minus = coeff[flat];
                    v_minus = v[flat];
                }
                work[flat] += dt * (g_plus * v_plus - g_minus * v_minus) / hi;
            }
        }

        // explicit cross-diffusion d_i(a_ij d_j v) + d_j(a_ij d_i v), i<j
        if (has_cross) {
            for (int i = 0; i < m0; ++i) {
                for (int j = i + 1; j < m0; ++j) {
                    for (long flat = 0; flat < N; ++flat)
                        coeff[flat] = spec.coeffs.a_entry(i, j)(t_old, grid.node(flat));
                    bool nontrivial = false;
                    for (long flat = 0; flat < N; ++flat)
                        if (coeff[flat] != 0.0) { nontrivial = true; break; }
                    if (!nontrivial) continue;

                    for (int pass = 0; pass < 2; ++pass) {
                        const int outer = pass == 0 ? i : j;
                        const int inner = pass == 0 ? j : i;
                        const long stri = strides[outer], strj = strides[inner];
                        const int ni = grid.n[outer], nj = grid.n[inner];
                        // centered gradient along `inner`, zero at edges
                        for (long flat = 0; flat < N; ++flat) {
                            const long idx = (flat / strj) % nj;
                            grad_buf[flat] = (idx > 0 && idx + 1 < nj)
                                ? coeff[flat] * (v[flat + strj] - v[flat - strj]) / (2.0 * grid.h(inner))
                                : 0.0;
                        }
                        for (long flat = 0; flat < N; ++flat) {
                            const long idx = (flat / stri) % ni;
                            flux_buf[flat] = (idx > 0 && idx + 1 < ni)
                                ? (grad_buf[flat + stri] - grad_buf[flat - stri]) / (2.0 * grid.h(outer))
                                : 0.0;
                        }
                        for (long flat = 0; flat < N; ++flat) work[flat] += dt * flux_buf[flat];
                    }
                }
            }
        }

        // --- implicit diagonal diffusion, one tridiagonal sweep per axis ---
        for (int i = 0; i < m0; ++i) {
            const long str = strides[i];
            const int nax = grid.n[i];
            const double h2 = grid.h(i) * grid.h(i);
            for (long flat = 0; flat < N; ++flat)
                coeff[flat] = spec.coeffs.a_entry(i, i)(t_new, grid.node(flat));

            std::vector<double> lower(nax), diag(nax), upper(nax), rhs(nax);
            for (long base = 0; base < N; ++base) {
                if ((base / str) % nax != 0) continue; // line starts only
                for (int jdx = 0; jdx < nax; ++jdx) {
                    const long flat = base + jdx * str;
                    const double a_plus = jdx + 1 < nax
                        ? 0.5 * (coeff[flat] + coeff[flat + str]) : 0.0;
                    const double a_minus = jdx > 0
                        ? 0.5 * (coeff[flat - str] + coeff[flat]) : 0.0;
                    lower[jdx] = -dt * a_minus / h2;
                    upper[jdx] = -dt * a_plus / h2;
                    diag[jdx] = 1.0 + dt * (a_plus + a_minus) / h2;
                    rhs[jdx] = work[flat];
                }
                thomas_solve(lower, diag, upper, rhs);
                for (int jdx = 0; jdx < nax; ++jdx) work[base + jdx * str] = rhs[jdx];
            }
        }

        v = work;
        sol.times.push_back(t_new);
        sol.values.push_back(v);
    }
    return sol;
}

GridSolution estimate_fundamental_solution(const OperatorSpec& spec, double T,
                                           const Vector& y, double eps, Grid grid) {
    grid.T = T;
    grid.validate();
    const int d = grid.dim();
    if (y.size() != d)
        throw Error("estimate_fundamental_solution: pole dimension mismatch");

    double hmax = 0.0;
    for (int axis = 0; axis < d; ++axis) hmax = std::max(hmax, grid.h(axis));
    if (!(eps >= 2.0 * hmax))
        throw Error("estimate_fundamental_solution: mollification width must satisfy "
                    "eps >= 2 max grid spacing (eps = " + std::to_string(eps) +
                    ", max h = " + std::to_string(hmax) + ")");

    const DilationFamily fam = DilationFamily::make(spec.blocks);
    const Vector sd = fam.weights(eps); // per-axis width eps^{2i+1}

    // unnormalized anisotropic bump, then discrete normalization so the grid
    // mass is exactly one
    std::vector<double> bump(grid.num_nodes());
    for (long flat = 0; flat < grid.num_nodes(); ++flat) {
        const Vector x = grid.node(flat);
        double q = 0.0;
        for (int axis = 0; axis < d; ++axis) {
            const double u = (x[axis] - y[axis]) / sd[axis];
            q += u * u;
        }
        bump[flat] = std::exp(-0.5 * q);
    }
    const double mass = pairwise_sum(bump) * grid.cell_volume();
    if (!(mass > 0.0))
        throw Error("estimate_fundamental_solution: bump has no mass on the grid "
                    "(pole outside the box?)");
    for (auto& b : bump) b /= mass;

    const Grid& g = grid;
    return solve_backward(spec, [&bump, &g](const Vector& x) {
        // exact node lookup: phi is only ever evaluated on grid nodes here
        long flat = 0;
        for (int axis = 0; axis < g.dim(); ++axis) {
            const long idx = std::lround((x[axis] - g.xlo[axis]) / g.h(axis));
            flat += idx * g.stride(axis);
        }
        return bump[flat];
    }, grid);
}

MoserResult moser_check(const GridSolution& u, const GroupElement& z0,
                        double rho, double r, double p,
                        const Matrix& B, const DilationFamily& fam) {
    if (!(0.0 < rho && rho < r))
        throw Error("moser_check: need 0 < rho < r");
    if (!(r - rho < 1.0))
        throw Error("moser_check: need r - rho < 1");

    const Grid& grid = u.grid;
    const int d = grid.dim();
    const int Q = fam.Q;
    const GroupElement z0_inv = group_inverse(z0, B);
    const Vector w_inner = fam.weights(1.0 / rho);
    const Vector w_outer = fam.weights(1.0 / r);

    // time extent of R_r(z0) must be covered by the marched interval
    const double t_lo = z0.t - r * r, t_hi = z0.t + r * r;
    const double t_min = u.times.back(), t_max = u.times.front();
    if (t_lo < t_min - 1e-9 || t_hi > t_max + 1e-9)
        throw Error("moser_check: cylinder exits the marched time interval");

    double umax = 0.0;
    for (const auto& level : u.values)
        for (double val : level) umax = std::max(umax, std::abs(val));
    const double neg_tol = 1e-9 * (umax > 0 ? umax : 1.0);

    const double dt_level = u.times.size() > 1 ? u.times[0] - u.times[1] : 0.0;
    if (!(dt_level > 0.0))
        throw Error("moser_check: solution has a single time level");
    const double cellvol = grid.cell_volume() * dt_level;

    MoserResult res;
    double integral = 0.0;
    double min_u_outer = std::numeric_limits<double>::infinity();

    for (std::size_t k = 0; k < u.times.size(); ++k) {
        const double t = u.times[k];
        const double tau = t - z0.t;
        if (std::abs(tau) >= r * r) continue;
        // spatial center shift at this level: rel.x = x + e^{tB} z0_inv.x
        const Vector shift = matrix_exp(t * B) * z0_inv.x;

        // require the cylinder slice to sit inside the grid box
        for (int axis = 0; axis < d; ++axis) {
            const double half = std::pow(r, fam.blocks.dilation_exponent(axis));
            if (-shift[axis] - half < grid.xlo[axis] - 1e-12 ||
                -shift[axis] + half > grid.xhi[axis] + 1e-12)
                throw Error("moser_check: cylinder exits the grid box");
        }

        const bool inner_t = std::abs(tau) < rho * rho;
        const auto& level = u.values[k];
        for (long flat = 0; flat < grid.num_nodes(); ++flat) {
            const Vector x = grid.node(flat);
            double q_outer = 0.0;
            for (int axis = 0; axis < d; ++axis) {
                const double rel = x[axis] + shift[axis];
                const double s = rel * w_outer[axis];
                q_outer += s * s;
            }
            if (q_outer >= 1.0) continue;
            const double val = level[flat];
            if (val < -neg_tol)
                throw Error("moser_check: solution is negative inside the cylinder");
            min_u_outer = std::min(min_u_outer, val);
            const double powed = std::pow(std::max(val, 0.0), p);
            if (p < 0.0 && !(val > 0.0))
                throw Error("moser_check: p < 0 requires u bounded away from zero "
                            "on the cylinder");
            integral += powed * cellvol;
            ++res.nodes_outer;

            if (inner_t) {
                double q_inner = 0.0;
                for (int axis = 0; axis < d; ++axis) {
                    const double rel = x[axis] + shift[axis];
                    const double s = rel * w_inner[axis];
                    q_inner += s * s;
                }
                if (q_inner < 1.0) {
                    res.lhs = std::max(res.lhs, powed);
                    ++res.nodes_inner;
                }
            }
        }
    }

    if (res.nodes_inner == 0 || res.nodes_outer == 0)
        throw Error("moser_check: cylinder contains no grid nodes; refine the grid");
    if (p < 0.0 && !(min_u_outer > 0.0))
        throw Error("moser_check: p < 0 requires u > 0 on the cylinder");

    res.rhs = std::pow(r - rho, -(Q + 2.0)) * integral;
    res.ratio = res.lhs / res.rhs;
    return res;
}

} // namespace kolmo
