#pragma once

#include <functional>
#include <vector>

#include "kolmo/expr.hpp"
#include "kolmo/group.hpp"
#include "kolmo/numeric.hpp"

namespace kolmo {

// Scalar coefficient as an evaluator (t, x) -> value. Parsed expressions,
// constants and the closures produced by operator scaling/translation all
// share this type.
using ScalarField = std::function<double(double, const Vector&)>;

ScalarField field_from_expr(const Expr& e);
ScalarField constant_field(double v);

// Variable coefficients of the operator: the symmetric m0 x m0 diffusion
// matrix a_ij, the first-order coefficients a_i and the zero-order c.
// Symmetry is structural: only the upper triangle is stored.
struct CoefficientField {
    int m0 = 0;
    std::vector<ScalarField> a; // packed upper triangle, row-major, size m0(m0+1)/2
    std::vector<ScalarField> drift;
    ScalarField c;
    double bound_M = 1.0;

    static CoefficientField identity(int m0, double bound_M = 10.0);

    int pack_index(int i, int j) const; // i <= j
    const ScalarField& a_entry(int i, int j) const;

    Matrix eval_a(double t, const Vector& x) const;
    Vector eval_drift(double t, const Vector& x) const;
    double eval_c(double t, const Vector& x) const;
};

// The full operator data: block structure, validated drift, coefficients and
// the ellipticity constant mu >= 1.
struct OperatorSpec {
    BlockStructure blocks;
    DriftMatrix B;
    CoefficientField coeffs;
    double mu = 1.0;

    int dim() const { return blocks.d; }
    int m0() const { return blocks.m[0]; }
};

// (matrix, vector, scalar) at one point.
struct FieldValue {
    Matrix a;
    Vector drift;
    double c = 0.0;
};

FieldValue eval_field(const CoefficientField& f, double t, const Vector& x);

// Space-time box used for lattice validation of the standing assumptions.
struct Box {
    double t0 = 0.0, t1 = 1.0;
    Vector xlo, xhi;

    static Box standard(int d); // [0,1] x [-5,5]^d
};

struct AssumptionReport {
    double mu_hat = 0.0;   // smallest mu with mu^-1 <= eig(a) <= mu on the lattice
    double min_eig = 0.0;
    double max_eig = 0.0;
    Vector sup_drift;      // per-component sup |a_i|
    double sup_c = 0.0;
    long nodes = 0;
};

// Samples a(t,x) on an n-per-axis lattice over the box and reports the
// eigenvalue range and sup norms. Throws if a is not positive definite at
// some node, if mu_hat exceeds the declared mu, or if a sup norm exceeds the
// declared bound M.
AssumptionReport check_assumptions(const OperatorSpec& spec, const Box& box, int n_per_axis);

} // namespace kolmo
