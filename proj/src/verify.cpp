#include "kolmo/verify.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "kolmo/error.hpp"

namespace kolmo {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

std::string VerificationReport::to_text() const {
    std::ostringstream os;
    os << estimate << ": " << (pass ? "PASS" : "FAIL") << "\n";
    for (const auto& [k, v] : constants) os << "  " << k << " = " << format_g(v) << "\n";
    os << "  probes: " << probes << " (" << n_probes << ")\n";
    os << "  max residual: " << format_g(max_residual) << "\n";
    os << "  runtime: " << format_g(runtime_ms) << " ms\n";
    return os.str();
}

DensityFn kernel_density_fn(const GaussianKernel& k) {
    auto cache = std::make_shared<std::map<double, std::shared_ptr<const KernelSlice>>>();
    auto mtx = std::make_shared<std::mutex>();
    auto kernel = std::make_shared<GaussianKernel>(k);
    return [cache, mtx, kernel](double t, const Vector& x, double T, const Vector& y) {
        const double dt = T - t;
        std::shared_ptr<const KernelSlice> slice;
        {
            std::lock_guard<std::mutex> lock(*mtx);
            auto it = cache->find(dt);
            if (it == cache->end())
                it = cache->emplace(dt, std::make_shared<KernelSlice>(kernel->at(dt))).first;
            slice = it->second;
        }
        return slice->density(x, y);
    };
}

std::vector<Vector> ProbeGrid::lattice(const Vector& lo, const Vector& hi, int n_per_axis) {
    const int d = static_cast<int>(lo.size());
    long total = 1;
    for (int i = 0; i < d; ++i) total *= n_per_axis;
    std::vector<Vector> pts;
    pts.reserve(total);
    for (long flat = 0; flat < total; ++flat) {
        Vector x(d);
        long rem = flat;
        for (int axis = d - 1; axis >= 0; --axis) {
            const long idx = rem % n_per_axis;
            rem /= n_per_axis;
            x[axis] = lo[axis] + (hi[axis] - lo[axis]) * idx / double(n_per_axis - 1);
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

namespace {

// max over all (x, y) probe pairs of gamma at elapsed time dt
double sup_over_pairs(const DensityFn& gamma, const ProbeGrid& probes, double dt) {
    const double t = probes.T - dt;
    const long nx = static_cast<long>(probes.xs.size());
    const long ny = static_cast<long>(probes.ys.size());
    std::vector<double> per_x(nx, 0.0);
    parallel_for(nx, [&](std::int64_t i) {
        double best = 0.0;
        for (long j = 0; j < ny; ++j)
            best = std::max(best, gamma(t, probes.xs[i], probes.T, probes.ys[j]));
        per_x[i] = best;
    });
    double best = 0.0;
    for (double v : per_x) best = std::max(best, v);
    return best;
}

} // namespace

VerificationReport nash_constant(const DensityFn& gamma, const DilationFamily& fam,
                                 const ProbeGrid& probes) {
    const auto start = Clock::now();
    if (probes.dts.empty() || probes.xs.empty() || probes.ys.empty())
        throw Error("nash_constant: empty probe set");

    VerificationReport rep;
    rep.estimate = "nash_bound";
    double c_fit = 0.0;
    double c_min = std::numeric_limits<double>::infinity();
    double c_max = 0.0;
    for (double dt : probes.dts) {
        const double sup = sup_over_pairs(gamma, probes, dt);
        const double c_dt = sup * std::pow(dt, fam.Q / 2.0);
        c_fit = std::max(c_fit, c_dt);
        c_min = std::min(c_min, c_dt);
        c_max = std::max(c_max, c_dt);
    }
    rep.constants["C_fit"] = c_fit;
    rep.constants["C_per_dt_min"] = c_min;
    rep.constants["C_per_dt_max"] = c_max;
    rep.n_probes = static_cast<long>(probes.dts.size() * probes.xs.size() * probes.ys.size());
    rep.probes = std::to_string(probes.dts.size()) + " elapsed times x " +
                 std::to_string(probes.xs.size()) + "x" + std::to_string(probes.ys.size()) +
                 " space pairs";
    rep.max_residual = c_max - c_min;
    rep.pass = std::isfinite(c_fit) && c_fit > 0.0;
    rep.runtime_ms = elapsed_ms(start);
    return rep;
}

VerificationReport fit_gaussian_bound(const DensityFn& gamma, const Matrix& B,
                                      const DilationFamily& fam, const ProbeGrid& probes,
                                      double c_lo, double c_hi, int iters) {
    const auto start = Clock::now();
    if (!(c_lo > 0.0) || !(c_hi > c_lo))
        throw Error("fit_gaussian_bound: invalid bisection bracket");

    struct Probe {
        double log_gamma;
        double log_dt;
        double w2; // |D(dt^{-1/2})(x - e^{-dt B} y)|^2
    };
    std::vector<Probe> data;
    const double half_q = fam.Q / 2.0;

    for (double dt : probes.dts) {
        const double t = probes.T - dt;
        const Matrix back = matrix_exp(-dt * B);
        const Vector w = fam.weights(1.0 / std::sqrt(dt));
        const long nx = static_cast<long>(probes.xs.size());
        const long ny = static_cast<long>(probes.ys.size());
        std::vector<Probe> local(static_cast<std::size_t>(nx * ny));
        parallel_for(nx * ny, [&](std::int64_t flat) {
            const long i = flat / ny;
            const long j = flat % ny;
            const double g = gamma(t, probes.xs[i], probes.T, probes.ys[j]);
            const Vector v = w.cwiseProduct(probes.xs[i] - back * probes.ys[j]);
            local[static_cast<std::size_t>(flat)] =
                Probe{g > 0.0 ? std::log(g) : -std::numeric_limits<double>::infinity(),
                      std::log(dt), v.squaredNorm()};
        });
        data.insert(data.end(), local.begin(), local.end());
    }

    auto feasible = [&](double c) {
        const double log_c = std::log(c);
        for (const auto& p : data) {
            if (!std::isfinite(p.log_gamma)) continue; // zero density: trivially below
            if (p.log_gamma > log_c - half_q * p.log_dt - p.w2 / c) return false;
        }
        return true;
    };

    VerificationReport rep;
    rep.estimate = "gaussian_upper_bound";
    rep.n_probes = static_cast<long>(data.size());
    rep.probes = std::to_string(probes.dts.size()) + " elapsed times x " +
                 std::to_string(probes.xs.size() * probes.ys.size()) + " space pairs";

    double hi = c_hi;
    bool enlarged = false;
    if (!feasible(hi)) {
        hi *= 100.0; // one retry with a wider bracket, then report failure
        enlarged = true;
        if (!feasible(hi)) {
            rep.pass = false;
            rep.constants["C_hi_tried"] = hi;
            rep.runtime_ms = elapsed_ms(start);
            return rep;
        }
    }
    double lo = c_lo;
    if (feasible(lo)) {
        rep.constants["C_fit"] = lo;
    } else {
        for (int it = 0; it < iters; ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? hi : lo) = mid;
        }
        rep.constants["C_fit"] = hi;
    }
    if (enlarged) rep.constants["bracket_enlarged"] = 1.0;
    rep.pass = std::isfinite(rep.constants["C_fit"]);
    rep.runtime_ms = elapsed_ms(start);
    return rep;
}

double exponent_regression(const DensityFn& gamma, const ProbeGrid& probes) {
    if (probes.dts.size() < 2)
        throw Error("exponent_regression: need at least two elapsed times");
    double lo = probes.dts.front(), hi = probes.dts.front();
    for (double dt : probes.dts) {
        lo = std::min(lo, dt);
        hi = std::max(hi, dt);
    }
    if (std::log10(hi / lo) < 1.5 - 1e-12)
        throw Error("exponent_regression: sweep must span at least 1.5 decades of dt");

    std::vector<double> log_dt, log_sup;
    for (double dt : probes.dts) {
        const double sup = sup_over_pairs(gamma, probes, dt);
        if (!(sup > 0.0))
            throw Error("exponent_regression: density sup vanished on the probe grid");
        log_dt.push_back(std::log(dt));
        log_sup.push_back(std::log(sup));
    }
    return regression_slope(log_dt, log_sup);
}

VerificationReport exponent_report(const DensityFn& gamma, const DilationFamily& fam,
                                   const ProbeGrid& probes) {
    const auto start = Clock::now();
    VerificationReport rep;
    rep.estimate = "decay_exponent";
    const double slope = exponent_regression(gamma, probes);
    rep.constants["slope"] = slope;
    rep.constants["expected"] = -fam.Q / 2.0;
    rep.max_residual = std::abs(slope + fam.Q / 2.0);
    rep.n_probes = static_cast<long>(probes.dts.size() * probes.xs.size() * probes.ys.size());
    rep.probes = "log-log regression over " + std::to_string(probes.dts.size()) + " elapsed times";
    rep.pass = std::isfinite(slope);
    rep.runtime_ms = elapsed_ms(start);
    return rep;
}

namespace {

// minimal C in [c_lo, c_hi] with C * exp(-s2 / (C * tau)) * pref >= lhs;
// the left side is monotone increasing in C
double fit_tail_constant(double lhs, double s2, double tau, double pref,
                         double c_lo = 1e-2, double c_hi = 1e6, int iters = 60) {
    auto ok = [&](double c) { return c * std::exp(-s2 / (c * tau)) * pref >= lhs; };
    if (ok(c_lo)) return c_lo;
    if (!ok(c_hi)) return std::numeric_limits<double>::infinity();
    double lo = c_lo, hi = c_hi;
    for (int it = 0; it < iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

} // namespace

VerificationReport tail_mass_check(const GaussianKernel& k, double t, const Vector& x,
                                   double eta, const std::vector<double>& sigmas,
                                   double k_cfg, int quad_n) {
    const auto start = Clock::now();
    if (!(t < eta))
        throw Error("tail_mass_check: requires t < eta");
    // The exterior region is centered at the forward mean e^{(eta-t)B} x, so
    // after whitening the integral does not depend on x itself.
    (void)x;
    const double tau = eta - t;
    for (double s : sigmas) {
        if (s < 0.0)
            throw Error("tail_mass_check: sigma must be nonnegative");
        if (s > 0.0 && tau > std::min(1.0, s * s) / k_cfg + 1e-12)
            throw Error("tail_mass_check: time window violated for sigma = " + format_g(s) +
                        " (need eta - t <= (1 ^ sigma^2)/k_cfg)");
    }

    const int d = k.dim();
    const KernelSlice slice = k.at(tau);
    const double peak = slice.peak();
    const Matrix& L = slice.cov.chol;

    // Gamma^2(xi) = peak^2 exp(-|w|^2) with xi = mean + L w; the exterior
    // region is |L w| >= sigma. Same fixed rule for every sigma: the node set
    // only loses terms as sigma grows, so the computed tail is monotone.
    const QuadRule& rule = gauss_legendre(quad_n);
    const double half_width = 8.0;
    long total = 1;
    for (int i = 0; i < d; ++i) total *= quad_n;

    std::vector<double> node(quad_n), wq(quad_n);
    for (int i = 0; i < quad_n; ++i) {
        node[i] = half_width * rule.x[i];
        wq[i] = half_width * rule.w[i];
    }
    const double jac = std::exp(0.5 * slice.cov.logdet); // det L

    auto exterior_integral = [&](double sigma) {
        std::vector<double> terms(static_cast<std::size_t>(total), 0.0);
        parallel_for(total, [&](std::int64_t flat) {
            Vector w(d);
            double weight = 1.0;
            long rem = flat;
            for (int axis = d - 1; axis >= 0; --axis) {
                const int idx = static_cast<int>(rem % quad_n);
                rem /= quad_n;
                w[axis] = node[idx];
                weight *= wq[idx];
            }
            const double dist = (L.triangularView<Eigen::Lower>() * w).norm();
            if (dist < sigma) return;
            terms[static_cast<std::size_t>(flat)] =
                weight * peak * peak * jac * std::exp(-w.squaredNorm());
        });
        return pairwise_sum(terms);
    };

    VerificationReport rep;
    rep.estimate = "tail_mass";
    rep.probes = std::to_string(sigmas.size()) + " radii, quadrature " +
                 std::to_string(quad_n) + "^" + std::to_string(d);
    rep.n_probes = static_cast<long>(sigmas.size()) * total;

    const double pref = std::pow(tau, -k.fam().Q / 2.0);
    double c_fit = 0.0;
    double prev_lhs = std::numeric_limits<double>::infinity();
    bool monotone = true;
    bool finite = true;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        const double sigma = sigmas[i];
        const double lhs = exterior_integral(sigma);
        rep.constants["lhs[" + format_g(sigma) + "]"] = lhs;
        if (i > 0 && sigmas[i] > sigmas[i - 1] && !(lhs < prev_lhs)) monotone = false;
        prev_lhs = lhs;
        if (sigma == 0.0) {
            // Consistency with the closed-form L2 norm (4 pi)^{-d/2} det C^{-1/2}
            const double closed = std::pow(4.0 * std::numbers::pi, -d / 2.0) *
                                  std::exp(-0.5 * slice.cov.logdet);
            rep.constants["l2_closed_form"] = closed;
            rep.constants["l2_rel_err"] = std::abs(lhs - closed) / closed;
            rep.max_residual = std::max(rep.max_residual, rep.constants["l2_rel_err"]);
        } else {
            const double c = fit_tail_constant(lhs, sigma * sigma, tau, pref);
            if (!std::isfinite(c)) finite = false;
            c_fit = std::max(c_fit, c);
        }
    }
    rep.constants["C_fit"] = c_fit;
    rep.constants["monotone"] = monotone ? 1.0 : 0.0;
    rep.pass = finite && monotone;
    rep.runtime_ms = elapsed_ms(start);
    return rep;
}

VerificationReport decay_check(const GaussianKernel& k, const Vector& y, double sigma,
                               double eta, const std::vector<double>& taus,
                               const std::function<double(const Vector&)>& u0,
                               double k_cfg, int quad_n) {
    const auto start = Clock::now();
    const int d = k.dim();
    if (y.size() != d)
        throw Error("decay_check: dimension mismatch");
    if (!(sigma > 0.0))
        throw Error("decay_check: sigma must be positive");
    for (double tau : taus)
        if (tau < eta - std::min(1.0, sigma * sigma) / k_cfg - 1e-12 || !(tau < eta))
            throw Error("decay_check: tau outside the admissible window "
                        "[eta - (1 ^ sigma^2)/k_cfg, eta)");

    // ||u0||_{L2} over a box around the hole, plus the support check
    const double box_half = std::max(10.0, 2.0 * sigma);
    const QuadRule& rule = gauss_legendre(quad_n);
    long total = 1;
    for (int i = 0; i < d; ++i) total *= quad_n;
    std::vector<double> sq_terms(static_cast<std::size_t>(total));
    bool support_ok = true;
    std::mutex support_mtx;
    parallel_for(total, [&](std::int64_t flat) {
        Vector xi(d);
        double weight = 1.0;
        long rem = flat;
        for (int axis = d - 1; axis >= 0; --axis) {
            const int idx = static_cast<int>(rem % quad_n);
            rem /= quad_n;
            xi[axis] = y[axis] + box_half * rule.x[idx];
            weight *= box_half * rule.w[idx];
        }
        const double val = u0(xi);
        if ((xi - y).norm() < sigma && std::abs(val) > 1e-14) {
            std::lock_guard<std::mutex> lock(support_mtx);
            support_ok = false;
        }
        sq_terms[static_cast<std::size_t>(flat)] = weight * val * val;
    });
    if (!support_ok)
        throw Error("decay_check: u0 does not vanish on {|xi - y| < sigma}");
    const double u0_l2 = std::sqrt(pairwise_sum(sq_terms));

    VerificationReport rep;
    rep.estimate = "vanishing_data_decay";
    rep.constants["u0_l2"] = u0_l2;
    rep.probes = std::to_string(taus.size()) + " evaluation times";
    rep.n_probes = static_cast<long>(taus.size()) * total;

    if (u0_l2 == 0.0) {
        // zero data: u vanishes identically and the bound holds with any C
        rep.constants["C_fit"] = 0.0;
        rep.pass = true;
        rep.runtime_ms = elapsed_ms(start);
        return rep;
    }

    const Matrix e_minus_eta_B = matrix_exp(-eta * k.drift().B);
    const int Q = k.fam().Q;

    double c_fit = 0.0;
    bool finite = true;
    for (double tau : taus) {
        // evaluation point (0, e^{-eta B} y) o (tau, 0)
        GroupElement shift{0.0, e_minus_eta_B * y};
        GroupElement probe{tau, Vector::Zero(d)};
        const GroupElement z_eval = group_compose(shift, probe, k.drift().B);

        const KernelSlice slice = k.at(eta - tau);
        const Vector mean = slice.mean(z_eval.x);
        // u(tau, x_eval) = E[u0(mean + L w)], whitened tensor quadrature with
        // a wide box: the data vanishes near the mean, the mass sits in the tail
        const double wide = 12.0;
        std::vector<double> terms(static_cast<std::size_t>(total));
        parallel_for(total, [&](std::int64_t flat) {
            Vector w(d);
            double lw = 0.0;
            long rem = flat;
            for (int axis = d - 1; axis >= 0; --axis) {
                const int idx = static_cast<int>(rem % quad_n);
                rem /= quad_n;
                const double u = wide * rule.x[idx];
                w[axis] = u;
                lw += std::log(wide * rule.w[idx]) - 0.5 * u * u -
                      0.5 * std::log(2.0 * std::numbers::pi);
            }
            const Vector xi = mean + slice.cov.chol.triangularView<Eigen::Lower>() * w;
            terms[static_cast<std::size_t>(flat)] = std::exp(lw) * u0(xi);
        });
        const double u_val = std::abs(pairwise_sum(terms));
        rep.constants["u[" + format_g(tau) + "]"] = u_val;

        const double pref = std::pow(eta - tau, -Q / 4.0) * u0_l2;
        const double c = fit_tail_constant(u_val, sigma * sigma, eta - tau, pref);
        if (!std::isfinite(c)) finite = false;
        c_fit = std::max(c_fit, c);
    }
    rep.constants["C_fit"] = c_fit;
    rep.pass = finite;
    rep.runtime_ms = elapsed_ms(start);
    return rep;
}

} // namespace kolmo
