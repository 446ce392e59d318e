#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "kolmo/error.hpp"
#include "kolmo/verify.hpp"

using namespace kolmo;
using testutil::heat_kernel;
using testutil::prototype_kernel;

TEST_SUITE_BEGIN("verify");

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i)
        out.push_back(lo * std::pow(hi / lo, i / double(n - 1)));
    return out;
}

ProbeGrid prototype_probes(int n_per_axis) {
    ProbeGrid p;
    p.T = 1.0;
    p.dts = log_spaced(0.01, 1.0, 7);
    p.xs = ProbeGrid::lattice(Vector::Constant(2, -4.0), Vector::Constant(2, 4.0), n_per_axis);
    p.ys = p.xs;
    return p;
}

constexpr double kSqrt3OverPi = 0.55132889542179204;

} // namespace

TEST_CASE("kernel density fn wraps the kernel") {
    const GaussianKernel k = prototype_kernel();
    const DensityFn fn = kernel_density_fn(k);
    const Vector x = vec2(0.3, -0.2), y = vec2(-0.1, 0.4);
    CHECK(fn(0.2, x, 1.0, y) == doctest::Approx(k.density(0.2, x, 1.0, y)).epsilon(1e-14));
}

TEST_CASE("Nash constant of the prototype kernel") {
    const GaussianKernel k = prototype_kernel();
    const VerificationReport rep =
        nash_constant(kernel_density_fn(k), k.fam(), prototype_probes(5));
    CHECK(rep.pass);
    CHECK(rep.constants.at("C_fit") == doctest::Approx(kSqrt3OverPi).epsilon(1e-6));
    // flat across the sweep: the power law is exact for homogeneous drift
    CHECK(rep.constants.at("C_per_dt_max") - rep.constants.at("C_per_dt_min") < 1e-6);
}

TEST_CASE("Nash constant of the 1-d heat kernel") {
    const GaussianKernel k = heat_kernel(1);
    ProbeGrid p;
    p.T = 1.0;
    p.dts = log_spaced(0.01, 1.0, 5);
    p.xs = ProbeGrid::lattice(Vector::Constant(1, -3.0), Vector::Constant(1, 3.0), 7);
    p.ys = p.xs;
    const VerificationReport rep = nash_constant(kernel_density_fn(k), k.fam(), p);
    CHECK(rep.constants.at("C_fit") ==
          doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-9));
}

TEST_CASE("Nash constant is invariant under probe refinement") {
    const GaussianKernel k = prototype_kernel();
    const double coarse =
        nash_constant(kernel_density_fn(k), k.fam(), prototype_probes(5)).constants.at("C_fit");
    const double fine =
        nash_constant(kernel_density_fn(k), k.fam(), prototype_probes(9)).constants.at("C_fit");
    CHECK(std::abs(coarse - fine) / fine < 1e-6);
}

TEST_CASE("exponent regression recovers -Q/2") {
    const GaussianKernel proto = prototype_kernel();
    ProbeGrid p = prototype_probes(5);
    p.dts = log_spaced(0.01, 1.0, 9);
    const double slope = exponent_regression(kernel_density_fn(proto), p);
    CHECK(slope == doctest::Approx(-2.0).epsilon(0.005));

    const GaussianKernel heat = heat_kernel(1);
    ProbeGrid ph;
    ph.T = 1.0;
    ph.dts = log_spaced(0.01, 1.0, 9);
    ph.xs = ProbeGrid::lattice(Vector::Constant(1, -3.0), Vector::Constant(1, 3.0), 5);
    ph.ys = ph.xs;
    CHECK(exponent_regression(kernel_density_fn(heat), ph) ==
          doctest::Approx(-0.5).epsilon(0.02));

    // slope is stable under probe refinement
    ProbeGrid p2 = p;
    p2.xs = ProbeGrid::lattice(Vector::Constant(2, -4.0), Vector::Constant(2, 4.0), 9);
    p2.ys = p2.xs;
    const double refined = exponent_regression(kernel_density_fn(proto), p2);
    CHECK(std::abs(refined - slope) < 1e-6);

    // short sweeps are rejected
    ProbeGrid narrow = p;
    narrow.dts = {0.5, 1.0};
    CHECK_THROWS_WITH_AS(exponent_regression(kernel_density_fn(proto), narrow),
                         doctest::Contains("1.5 decades"), Error);
}

TEST_CASE("exponent regression for a non-homogeneous drift") {
    Matrix b = Matrix::Zero(2, 2);
    b(0, 0) = 0.1;
    b(1, 0) = 1.0;
    const GaussianKernel k(validate_blocks(b, {1, 1}), 1);
    ProbeGrid p;
    p.T = 0.5;
    p.dts = log_spaced(0.001, 0.1, 9);
    p.xs = {Vector::Zero(2)};
    p.ys = {Vector::Zero(2)};
    const double slope = exponent_regression(kernel_density_fn(k), p);
    CHECK(slope == doctest::Approx(-2.0).epsilon(0.025)); // within 0.05 absolute
}

TEST_CASE("Gaussian bound fit on the prototype") {
    const GaussianKernel k = prototype_kernel();
    const VerificationReport rep = fit_gaussian_bound(
        kernel_density_fn(k), k.drift().B, k.fam(), prototype_probes(7));
    CHECK(rep.pass);
    const double c = rep.constants.at("C_fit");
    CHECK(std::isfinite(c));
    CHECK(c > 0.0);

    // stable within 5% under probe refinement
    const VerificationReport fine = fit_gaussian_bound(
        kernel_density_fn(k), k.drift().B, k.fam(), prototype_probes(13));
    CHECK(std::abs(fine.constants.at("C_fit") - c) / c < 0.05);

    // the fitted C is genuinely feasible on a finer probe set, and C/2 is not
    const ProbeGrid dense = prototype_probes(11);
    const DensityFn fn = kernel_density_fn(k);
    const double half_q = k.fam().Q / 2.0;
    auto feasible = [&](double cc) {
        for (double dt : dense.dts) {
            const Matrix back = matrix_exp(-dt * k.drift().B);
            const Vector w = k.fam().weights(1.0 / std::sqrt(dt));
            for (const auto& x : dense.xs)
                for (const auto& y : dense.ys) {
                    const double g = fn(dense.T - dt, x, dense.T, y);
                    const double w2 = w.cwiseProduct(x - back * y).squaredNorm();
                    if (g > cc * std::pow(dt, -half_q) * std::exp(-w2 / cc)) return false;
                }
        }
        return true;
    };
    CHECK(feasible(1.02 * c));
    CHECK_FALSE(feasible(0.5 * c));
    CHECK(feasible(2.04 * c)); // monotone: doubling a feasible C stays feasible
}

TEST_CASE("tail mass check on the prototype") {
    const GaussianKernel k = prototype_kernel();
    const double eta = 1.0, t = eta - 0.03;
    const std::vector<double> sigmas = {0.0, 0.5, 1.0, 2.0};
    const VerificationReport rep = tail_mass_check(k, t, Vector::Zero(2), eta, sigmas);
    CHECK(rep.pass);
    CHECK(rep.constants.at("monotone") == 1.0);
    CHECK(std::isfinite(rep.constants.at("C_fit")));
    CHECK(rep.constants.at("l2_rel_err") < 1e-6);

    // sigma -> 0 limit equals the closed-form L2 norm
    const double closed = rep.constants.at("l2_closed_form");
    const double expect = std::pow(4.0 * std::numbers::pi, -1.0) *
                          std::sqrt(12.0 / std::pow(eta - t, 4.0));
    CHECK(closed == doctest::Approx(expect).epsilon(1e-12));

    // time window precondition
    CHECK_THROWS_WITH_AS(tail_mass_check(k, eta - 0.5, Vector::Zero(2), eta, {1.0}),
                         doctest::Contains("window"), Error);
}

TEST_CASE("decay check with vanishing data") {
    const GaussianKernel k = prototype_kernel();
    const VerificationReport rep =
        decay_check(k, Vector::Zero(2), 1.0, 1.0, {0.9, 0.95},
                    [](const Vector&) { return 0.0; });
    CHECK(rep.pass);
    CHECK(rep.constants.at("C_fit") == 0.0);
}

TEST_CASE("decay check with a masked Gaussian") {
    const GaussianKernel k = prototype_kernel();
    const double eta = 1.0;
    const Vector y = Vector::Zero(2);

    auto masked = [&y](double sigma) {
        return [sigma, y](const Vector& xi) {
            const double r = (xi - y).norm();
            return r >= sigma ? std::exp(-0.25 * xi.squaredNorm()) : 0.0;
        };
    };

    const std::vector<double> taus = {eta - 0.1, eta - 0.05};
    const VerificationReport r1 = decay_check(k, y, 1.0, eta, taus, masked(1.0));
    CHECK(r1.pass);
    CHECK(std::isfinite(r1.constants.at("C_fit")));
    CHECK(r1.constants.at("C_fit") > 0.0);

    // doubling sigma (with the window re-satisfied) shrinks the solution value
    const std::vector<double> taus2 = {eta - 0.1};
    const VerificationReport r2 = decay_check(k, y, 2.0, eta, taus2, masked(2.0));
    CHECK(r2.constants.at("u[0.9]") < r1.constants.at("u[0.9]"));

    // support violation is detected
    CHECK_THROWS_WITH_AS(
        decay_check(k, y, 1.0, eta, taus, [](const Vector&) { return 1.0; }),
        doctest::Contains("vanish"), Error);

    // evaluation point equals the group composition (prototype: an explicit check)
    const double tau = 0.9;
    const Matrix B = k.drift().B;
    const GroupElement z =
        group_compose(GroupElement{0.0, matrix_exp(-eta * B) * y},
                      GroupElement{tau, Vector::Zero(2)}, B);
    const Vector direct = matrix_exp((tau - eta) * B) * y;
    CHECK((z.x - direct).norm() < 1e-14);
    CHECK(z.t == doctest::Approx(tau));
}

TEST_CASE("window precondition for decay") {
    const GaussianKernel k = prototype_kernel();
    CHECK_THROWS_WITH_AS(
        decay_check(k, Vector::Zero(2), 0.5, 1.0, {0.5},
                    [](const Vector&) { return 0.0; }),
        doctest::Contains("window"), Error);
}

TEST_SUITE_END();
