#include "kolmo/group.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

#include "kolmo/error.hpp"

namespace kolmo {

BlockStructure BlockStructure::make(std::vector<int> sizes) {
    if (sizes.empty())
        throw Error("block structure: at least one block required");
    BlockStructure b;
    b.m = std::move(sizes);
    b.nu = static_cast<int>(b.m.size()) - 1;
    int prev = b.m.front();
    for (int mi : b.m) {
        if (mi < 1)
            throw Error("block structure: block sizes must be >= 1");
        if (mi > prev)
            throw Error("block structure: block sizes must be non-increasing");
        prev = mi;
        b.d += mi;
    }
    return b;
}

int BlockStructure::offset(int block) const {
    int off = 0;
    for (int i = 0; i < block; ++i) off += m[i];
    return off;
}

int BlockStructure::block_of(int coord) const {
    int off = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        off += m[i];
        if (coord < off) return static_cast<int>(i);
    }
    throw Error("block structure: coordinate out of range");
}

int homogeneous_dimension(const std::vector<int>& m) {
    const BlockStructure b = BlockStructure::make(m);
    int q = 0;
    for (int i = 0; i <= b.nu; ++i) q += (2 * i + 1) * b.m[i];
    return q;
}

DilationFamily DilationFamily::make(const BlockStructure& b) {
    DilationFamily fam;
    fam.blocks = b;
    fam.Q = 0;
    for (int i = 0; i <= b.nu; ++i) fam.Q += (2 * i + 1) * b.m[i];
    return fam;
}

Vector DilationFamily::weights(double r) const {
    Vector w(blocks.d);
    int c = 0;
    for (int i = 0; i <= blocks.nu; ++i) {
        const double ri = std::pow(r, 2 * i + 1);
        for (int j = 0; j < blocks.m[i]; ++j) w[c++] = ri;
    }
    return w;
}

Matrix DilationFamily::D(double r) const {
    return weights(r).asDiagonal();
}

DriftMatrix validate_blocks(const Matrix& B, const std::vector<int>& m) {
    const BlockStructure blocks = BlockStructure::make(m);
    if (B.rows() != B.cols())
        throw Error("drift matrix must be square");
    if (B.rows() != blocks.d)
        throw Error("drift matrix size " + std::to_string(B.rows()) +
                    " does not match block sizes (sum = " + std::to_string(blocks.d) + ")");

    const double scale = 1.0 + B.cwiseAbs().maxCoeff();
    const double zero_tol = 1e-14 * scale;

    // Everything strictly below the first subdiagonal must vanish.
    for (int i = 0; i <= blocks.nu; ++i) {
        for (int j = 0; j + 1 < i; ++j) {
            const auto blk = B.block(blocks.offset(i), blocks.offset(j), blocks.m[i], blocks.m[j]);
            if (blk.cwiseAbs().maxCoeff() > zero_tol)
                throw Error("drift matrix: nonzero entries below the first subdiagonal "
                            "(block position " + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
        }
    }

    // Each subdiagonal block must have full row rank m_i.
    for (int i = 1; i <= blocks.nu; ++i) {
        const Matrix blk = B.block(blocks.offset(i), blocks.offset(i - 1), blocks.m[i], blocks.m[i - 1]);
        Eigen::JacobiSVD<Matrix> svd(blk);
        const auto& sv = svd.singularValues();
        const double smax = sv.size() > 0 ? sv(0) : 0.0;
        const double smin = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
        if (smax <= 0.0 || smin <= 1e-10 * smax)
            throw Error("B" + std::to_string(i) + " rank deficient: block (" +
                        std::to_string(blocks.m[i]) + "x" + std::to_string(blocks.m[i - 1]) +
                        ") must have rank " + std::to_string(blocks.m[i]));
    }

    // Homogeneous operators have all blocks on and above the diagonal null.
    bool homogeneous = true;
    for (int i = 0; i <= blocks.nu && homogeneous; ++i) {
        for (int j = i; j <= blocks.nu && homogeneous; ++j) {
            const auto blk = B.block(blocks.offset(i), blocks.offset(j), blocks.m[i], blocks.m[j]);
            if (blk.cwiseAbs().maxCoeff() > zero_tol) homogeneous = false;
        }
    }

    return DriftMatrix{B, blocks, homogeneous};
}

GroupElement group_compose(const GroupElement& a, const GroupElement& b, const Matrix& B) {
    if (a.x.size() != b.x.size() || a.x.size() != B.rows())
        throw Error("group_compose: dimension mismatch");
    GroupElement out;
    out.t = a.t + b.t;
    out.x = b.x + matrix_exp(b.t * B) * a.x;
    return out;
}

GroupElement group_inverse(const GroupElement& z, const Matrix& B) {
    GroupElement out;
    out.t = -z.t;
    out.x = -(matrix_exp(-z.t * B) * z.x);
    return out;
}

GroupElement dilate(const GroupElement& z, double r, const DilationFamily& fam) {
    if (!(r > 0.0))
        throw Error("dilate: radius must be positive");
    GroupElement out;
    out.t = r * r * z.t;
    out.x = fam.weights(r).cwiseProduct(z.x);
    return out;
}

Matrix sigma_matrix(int d, int m0) {
    if (m0 < 1 || m0 > d)
        throw Error("sigma_matrix: need 1 <= m0 <= d");
    Matrix s = Matrix::Zero(d, m0);
    s.topLeftCorner(m0, m0).setIdentity();
    return s;
}

bool hypoellipticity_check(const Matrix& B, int m0) {
    const int d = static_cast<int>(B.rows());
    if (B.cols() != d) throw Error("hypoellipticity_check: B must be square");
    const Matrix sigma = sigma_matrix(d, m0);
    Matrix K(d, d * m0);
    Matrix P = sigma;
    for (int k = 0; k < d; ++k) {
        K.block(0, k * m0, d, m0) = P;
        P = B * P;
    }
    Eigen::JacobiSVD<Matrix> svd(K);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    if (smax <= 0.0) return false;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-10 * smax) ++rank;
    return rank == d;
}

bool cylinder_contains(const Cylinder& c, const GroupElement& z,
                       const Matrix& B, const DilationFamily& fam) {
    if (!(c.radius > 0.0))
        throw Error("cylinder_contains: radius must be positive");
    const GroupElement rel = group_compose(group_inverse(c.center, B), z, B);
    const GroupElement unit = dilate(rel, 1.0 / c.radius, fam);
    const bool t_ok = (c.kind == CylinderKind::full)
                          ? std::abs(unit.t) < 1.0
                          : (unit.t > 0.0 && unit.t < 1.0);
    return t_ok && unit.x.norm() < 1.0;
}

} // namespace kolmo
