#include "kolmo/scaling.hpp"

#include <cmath>

#include "kolmo/error.hpp"

namespace kolmo {

Matrix scale_drift(const Matrix& B, const BlockStructure& blocks, double lambda) {
    const DilationFamily fam = DilationFamily::make(blocks);
    const Vector w = fam.weights(lambda);
    Matrix out(B.rows(), B.cols());
    for (int i = 0; i < B.rows(); ++i)
        for (int j = 0; j < B.cols(); ++j)
            out(i, j) = lambda * lambda * B(i, j) * w[j] / w[i];
    return out;
}

namespace {

ScalarField compose_dilation(const ScalarField& f, const DilationFamily& fam,
                             double lambda, double factor) {
    const Vector w = fam.weights(lambda);
    const double t_scale = lambda * lambda;
    return [f, w, t_scale, factor](double t, const Vector& x) {
        return factor * f(t_scale * t, w.cwiseProduct(x));
    };
}

ScalarField compose_translation(const ScalarField& f, const GroupElement& zeta,
                                const Matrix& B) {
    return [f, zeta, B](double t, const Vector& x) {
        // ell_zeta(t,x) = (t + tau, x + e^{tB} xi)
        const Vector shifted = x + matrix_exp(t * B) * zeta.x;
        return f(t + zeta.t, shifted);
    };
}

} // namespace

ScaledOperator scale_operator(const OperatorSpec& spec, double lambda) {
    if (!(lambda > 0.0) || lambda > 1.0)
        throw Error("scale_operator: lambda must lie in (0, 1]");

    const DilationFamily fam = DilationFamily::make(spec.blocks);

    ScaledOperator out;
    out.lambda = lambda;
    out.op = spec;
    out.op.B.B = scale_drift(spec.B.B, spec.blocks, lambda);

    CoefficientField& cf = out.op.coeffs;
    for (auto& entry : cf.a)
        entry = compose_dilation(entry, fam, lambda, 1.0);
    for (auto& entry : cf.drift)
        entry = compose_dilation(entry, fam, lambda, lambda);
    cf.c = compose_dilation(cf.c, fam, lambda, lambda * lambda);
    return out;
}

OperatorSpec translate_operator(const OperatorSpec& spec, const GroupElement& zeta) {
    if (zeta.x.size() != spec.dim())
        throw Error("translate_operator: dimension mismatch");
    OperatorSpec out = spec;
    const Matrix B = spec.B.B;
    for (auto& entry : out.coeffs.a)
        entry = compose_translation(entry, zeta, B);
    for (auto& entry : out.coeffs.drift)
        entry = compose_translation(entry, zeta, B);
    out.coeffs.c = compose_translation(out.coeffs.c, zeta, B);
    return out;
}

double scaled_kernel_check(const GaussianKernel& k, double lambda,
                           const std::vector<std::pair<GroupElement, GroupElement>>& samples) {
    if (!k.drift().homogeneous)
        throw Error("scaled_kernel_check: inapplicable, drift matrix is not homogeneous");
    if (!(lambda > 0.0))
        throw Error("scaled_kernel_check: lambda must be positive");

    const double logQ = k.fam().Q * std::log(lambda);
    double worst = 0.0;
    for (const auto& [z, zeta] : samples) {
        if (!(z.t < zeta.t))
            throw Error("scaled_kernel_check: samples must satisfy z.t < zeta.t");
        const GroupElement dz = dilate(z, lambda, k.fam());
        const GroupElement dzeta = dilate(zeta, lambda, k.fam());
        const double base = k.log_density(z.t, z.x, zeta.t, zeta.x);
        const double scaled = logQ + k.log_density(dz.t, dz.x, dzeta.t, dzeta.x);
        const double rel = std::abs(std::expm1(scaled - base));
        worst = std::max(worst, rel);
    }
    return worst;
}

} // namespace kolmo
