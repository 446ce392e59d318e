#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "kolmo/group.hpp"
#include "kolmo/kernel.hpp"
#include "kolmo/operator_spec.hpp"

namespace testutil {

using kolmo::Matrix;
using kolmo::Vector;

// prototype operator 1/2 d_{x1 x1} + x1 d_{x2} + d_t: blocks (1,1),
// B = [[0,0],[1,0]]
inline Matrix prototype_B() {
    Matrix b = Matrix::Zero(2, 2);
    b(1, 0) = 1.0;
    return b;
}

inline kolmo::DriftMatrix prototype_drift() {
    return kolmo::validate_blocks(prototype_B(), {1, 1});
}

inline kolmo::GaussianKernel prototype_kernel() {
    return kolmo::GaussianKernel(prototype_drift(), 1);
}

inline kolmo::OperatorSpec prototype_spec(double mu = 2.0, double M = 10.0) {
    kolmo::OperatorSpec spec;
    spec.blocks = kolmo::BlockStructure::make({1, 1});
    spec.B = prototype_drift();
    spec.coeffs = kolmo::CoefficientField::identity(1, M);
    spec.coeffs.a[0] = kolmo::constant_field(0.5); // principal part has 1/2 d_xx
    spec.mu = mu;
    return spec;
}

// heat operator in d dimensions: blocks (d), B = 0
inline kolmo::GaussianKernel heat_kernel(int d) {
    return kolmo::GaussianKernel(kolmo::validate_blocks(Matrix::Zero(d, d), {d}), d);
}

// truncated-series matrix exponential oracle: scale by 2^k until the norm is
// small, sum the Taylor series, square back
inline Matrix series_exp(const Matrix& a, int terms = 30) {
    int k = 0;
    double norm = a.norm();
    while (norm > 0.25) {
        norm *= 0.5;
        ++k;
    }
    const Matrix s = a / std::pow(2.0, k);
    Matrix term = Matrix::Identity(a.rows(), a.cols());
    Matrix sum = term;
    for (int i = 1; i <= terms; ++i) {
        term = (term * s) / static_cast<double>(i);
        sum += term;
    }
    for (int i = 0; i < k; ++i) sum = sum * sum;
    return sum;
}

// random valid drift matrix over a random block structure with d <= max_d
struct RandomDrift {
    kolmo::DriftMatrix drift;
    std::vector<int> m;
};

inline RandomDrift random_drift(std::mt19937& gen, int max_d = 4, bool homogeneous = false) {
    std::uniform_int_distribution<int> pick_d(2, max_d);
    const int d = pick_d(gen);

    // random non-increasing block sizes summing to d
    std::vector<int> m;
    int rest = d;
    int prev = d;
    while (rest > 0) {
        std::uniform_int_distribution<int> pick(1, std::min(prev, rest));
        int mi = pick(gen);
        if (!m.empty() && mi > m.back()) mi = m.back();
        m.push_back(mi);
        prev = mi;
        rest -= mi;
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    const kolmo::BlockStructure blocks = kolmo::BlockStructure::make(m);
    Matrix B = Matrix::Zero(d, d);

    for (std::size_t i = 0; i + 1 < m.size(); ++i) {
        // full-rank subdiagonal block: random Gaussian, resampled if nearly singular
        for (;;) {
            Matrix blk(m[i + 1], m[i]);
            for (int r = 0; r < blk.rows(); ++r)
                for (int c = 0; c < blk.cols(); ++c) blk(r, c) = normal(gen);
            Eigen::JacobiSVD<Matrix> svd(blk);
            if (svd.singularValues()(svd.singularValues().size() - 1) > 0.3) {
                B.block(blocks.offset(static_cast<int>(i) + 1), blocks.offset(static_cast<int>(i)),
                        m[i + 1], m[i]) = blk;
                break;
            }
        }
    }
    if (!homogeneous) {
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = i; j < m.size(); ++j) {
                Matrix blk(m[i], m[j]);
                for (int r = 0; r < blk.rows(); ++r)
                    for (int c = 0; c < blk.cols(); ++c) blk(r, c) = 0.5 * normal(gen);
                B.block(blocks.offset(static_cast<int>(i)), blocks.offset(static_cast<int>(j)),
                        m[i], m[j]) = blk;
            }
    }
    return RandomDrift{kolmo::validate_blocks(B, m), m};
}

inline Vector random_vector(std::mt19937& gen, int d, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = normal(gen);
    return v;
}

} // namespace testutil
