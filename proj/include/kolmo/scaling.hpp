#pragma once

#include <utility>
#include <vector>

#include "kolmo/kernel.hpp"
#include "kolmo/operator_spec.hpp"

namespace kolmo {

// Operator obtained by dilating the coefficients:
//   a'(t,x)  = a(delta_lambda(t,x))
//   drift'   = lambda * drift o delta_lambda
//   c'       = lambda^2 * c o delta_lambda
//   B'       = lambda^2 D(1/lambda) B D(lambda)
// The subdiagonal blocks of B are unchanged; the free block at block
// position (i,j) picks up lambda^{2(j-i+1)}. For homogeneous B, B' = B.
struct ScaledOperator {
    double lambda = 1.0;
    OperatorSpec op; // transformed coefficients are closures over the base evaluators
};

Matrix scale_drift(const Matrix& B, const BlockStructure& blocks, double lambda);

ScaledOperator scale_operator(const OperatorSpec& spec, double lambda); // lambda in (0,1]

// Operator with left-translated coefficients: f'(z) = f(zeta o z). The
// drift matrix, mu and M are unchanged.
OperatorSpec translate_operator(const OperatorSpec& spec, const GroupElement& zeta);

// Max over the samples of the relative error in the scaled-kernel identity
//   lambda^Q Gamma0(delta_lambda z; delta_lambda zeta) = Gamma0(z; zeta),
// which is exact for homogeneous drift. Throws for non-homogeneous B.
double scaled_kernel_check(const GaussianKernel& k, double lambda,
                           const std::vector<std::pair<GroupElement, GroupElement>>& samples);

} // namespace kolmo
