#pragma once

#include "factorcov/random.hpp"
#include "factorcov/types.hpp"

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>

namespace support {

using factorcov::Index;
using factorcov::Matrix;
using factorcov::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double sd = 1.0) {
    factorcov::Rng rng(seed);
    return factorcov::normal_matrix(rows, cols, sd, rng);
}

inline Matrix random_spd(Index n, std::uint64_t seed, double ridge = 1.0) {
    Matrix a = random_matrix(n, n, seed);
    return a * a.transpose() / static_cast<double>(n) + ridge * Matrix::Identity(n, n);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
    return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

/// Covariance with divisor T computed by explicit loops.
inline Matrix loop_covariance(const Matrix& y) {
    const Index p = y.rows(), T = y.cols();
    std::vector<double> mean(static_cast<std::size_t>(p), 0.0);
    for (Index i = 0; i < p; ++i) {
        for (Index t = 0; t < T; ++t) mean[static_cast<std::size_t>(i)] += y(i, t);
        mean[static_cast<std::size_t>(i)] /= static_cast<double>(T);
    }
    Matrix out(p, p);
    for (Index i = 0; i < p; ++i) {
        for (Index j = 0; j < p; ++j) {
            double acc = 0.0;
            for (Index t = 0; t < T; ++t) {
                acc += (y(i, t) - mean[static_cast<std::size_t>(i)]) * (y(j, t) - mean[static_cast<std::size_t>(j)]);
            }
            out(i, j) = acc / static_cast<double>(T);
        }
    }
    return out;
}

/// Eigenvalues of a symmetric 3x3 matrix from the characteristic polynomial
/// (trigonometric solution of the depressed cubic), descending.
inline std::array<double, 3> cubic_eigenvalues(const Matrix& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = a.trace() / 3.0;
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q) +
                      2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    if (p == 0.0) return {q, q, q};
    Matrix b = (a - q * Matrix::Identity(3, 3)) / p;
    const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double pi = std::acos(-1.0);
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    return {e1, e2, e3};
}

/// Unit vector spanning the null space of a - lambda I (3x3, simple eigenvalue).
inline Vector cubic_eigenvector(const Matrix& a, double lambda) {
    Matrix m = a - lambda * Matrix::Identity(3, 3);
    Eigen::Vector3d r0 = m.row(0).transpose(), r1 = m.row(1).transpose(), r2 = m.row(2).transpose();
    Eigen::Vector3d c[3] = {r0.cross(r1), r0.cross(r2), r1.cross(r2)};
    Eigen::Vector3d best = c[0];
    for (const auto& v : c) {
        if (v.norm() > best.norm()) best = v;
    }
    return best.normalized();
}

/// Largest-magnitude eigenvalue of a symmetric matrix by power iteration.
inline double power_iteration_norm(const Matrix& a, int iters = 5000) {
    Vector v = Vector::Ones(a.rows()) / std::sqrt(static_cast<double>(a.rows()));
    v(0) += 0.1;
    v.normalize();
    double lambda = 0.0;
    for (int k = 0; k < iters; ++k) {
        Vector w = a * v;
        const double n = w.norm();
        if (n == 0.0) return 0.0;
        lambda = n;
        v = w / n;
    }
    return lambda;
}

/// True when two matrices agree column by column up to a per-column sign.
inline double max_diff_up_to_sign(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (Index k = 0; k < a.cols(); ++k) {
        const double plus = (a.col(k) - b.col(k)).cwiseAbs().maxCoeff();
        const double minus = (a.col(k) + b.col(k)).cwiseAbs().maxCoeff();
        worst = std::max(worst, std::min(plus, minus));
    }
    return worst;
}

/// Panel Y = B F' + noise with known factors.
struct FactorPanel {
    Matrix loadings, factors, y;
};

inline FactorPanel factor_panel(Index p, Index T, Index K, double noise_sd, std::uint64_t seed,
                                double loading_sd = std::sqrt(5.0)) {
    factorcov::Rng rng(seed);
    FactorPanel out;
    out.loadings = factorcov::normal_matrix(p, K, loading_sd, rng);
    out.factors = factorcov::normal_matrix(T, K, 1.0, rng);
    out.y = out.loadings * out.factors.transpose() + factorcov::normal_matrix(p, T, noise_sd, rng);
    return out;
}

}  // namespace support
