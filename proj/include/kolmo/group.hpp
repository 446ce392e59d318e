#pragma once

#include <vector>

#include "kolmo/numeric.hpp"

namespace kolmo {

// Block decomposition of R^d induced by the drift matrix: coordinates are
// grouped into nu+1 blocks of sizes m[0] >= m[1] >= ... >= m[nu] >= 1 with
// sum m[i] = d. Block 0 carries the diffusion.
struct BlockStructure {
    std::vector<int> m;
    int d = 0;
    int nu = 0;

    static BlockStructure make(std::vector<int> sizes);

    int offset(int block) const;        // first coordinate of a block
    int block_of(int coord) const;      // block index of a coordinate
    int dilation_exponent(int coord) const { return 2 * block_of(coord) + 1; }
};

// Validated drift matrix: each subdiagonal block B_i (m_i x m_{i-1}) has
// full rank, everything strictly below the first subdiagonal is zero, blocks
// on and above the diagonal are arbitrary. `homogeneous` is true when those
// free blocks all vanish.
struct DriftMatrix {
    Matrix B;
    BlockStructure blocks;
    bool homogeneous = false;
};

// A point z = (t, x) of the space-time group.
struct GroupElement {
    double t = 0.0;
    Vector x;
};

// Anisotropic dilations D(r) = diag(r I_{m0}, r^3 I_{m1}, ...) acting on
// space, delta_r(t,x) = (r^2 t, D(r) x) on space-time. Q is the homogeneous
// dimension: the Jacobian of D(r) is r^Q.
struct DilationFamily {
    BlockStructure blocks;
    int Q = 0;

    static DilationFamily make(const BlockStructure& b);

    Vector weights(double r) const;     // diagonal of D(r)
    Matrix D(double r) const;
};

int homogeneous_dimension(const std::vector<int>& m);

// Checks Assumption-style structure of B against the block sizes and returns
// the validated drift matrix together with the homogeneity flag. Rank of
// each B_i is decided numerically: smallest singular value > 1e-10 * largest.
DriftMatrix validate_blocks(const Matrix& B, const std::vector<int>& m);

// Group law (tau,xi) o (t,x) = (t + tau, x + e^{tB} xi) and its inverse
// z^{-1} = (-t, -e^{-tB} x).
GroupElement group_compose(const GroupElement& a, const GroupElement& b, const Matrix& B);
GroupElement group_inverse(const GroupElement& z, const Matrix& B);

// delta_r(z) = (r^2 t, D(r) x), r > 0.
GroupElement dilate(const GroupElement& z, double r, const DilationFamily& fam);

// Kalman-type rank condition: rank[sigma, B sigma, ..., B^{d-1} sigma] = d
// with sigma = [I_{m0}; 0]. Equivalent to positive definiteness of the
// covariance C(t) for t > 0.
bool hypoellipticity_check(const Matrix& B, int m0);

// The (d x m0) matrix sigma = [I_{m0}; 0].
Matrix sigma_matrix(int d, int m0);

enum class CylinderKind { full, forward };

// Intrinsic cylinder R_r(z0) = z0 o delta_r(R_1) with the open unit cylinder
// R_1 = {|t|<1, |x|<1} (forward variant: 0<t<1).
struct Cylinder {
    GroupElement center;
    double radius = 1.0;
    CylinderKind kind = CylinderKind::full;
};

bool cylinder_contains(const Cylinder& c, const GroupElement& z,
                       const Matrix& B, const DilationFamily& fam);

} // namespace kolmo
