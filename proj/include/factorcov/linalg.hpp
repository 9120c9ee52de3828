#pragma once

#include "factorcov/types.hpp"

#include <chrono>

namespace factorcov {

/// A <- (A + A') / 2.
void symmetrize(Matrix& a);

/// Makes the largest-magnitude entry of each column positive (lowest row wins ties).
void fix_column_signs(Matrix& vectors);

struct SymmetricEigen {
    Vector values;   // descending
    Matrix vectors;  // unit columns, sign-fixed
    bool degenerate = false;
};

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
/// Eigenvalues equal within 1e-12 relative are ordered by the lexicographic
/// order of their sign-fixed eigenvectors, and `degenerate` is set.
SymmetricEigen symmetric_eigen_desc(const Matrix& a);

/// Leading `k` eigenpairs of a symmetric matrix. `degenerate` is set only when
/// a tie involves one of the first k + 1 eigenvalues.
SymmetricEigen leading_eigenpairs(const Matrix& a, Index k);

double min_eigenvalue(const Matrix& a);

/// True when every eigenvalue of `a` is at least `floor` (checked by Cholesky of a - floor*I).
bool has_eigenvalues_above(const Matrix& a, double floor);

/// M^{-1/2} of a symmetric positive definite matrix. Throws NumericalError otherwise.
Matrix spd_inverse_sqrt(const Matrix& m);

/// Inverse of a symmetric positive definite matrix via Cholesky, symmetrized.
Matrix spd_inverse(const Matrix& m);

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace factorcov
