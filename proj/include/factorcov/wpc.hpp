#pragma once

#include "factorcov/types.hpp"

namespace factorcov {

struct WpcResult {
    Matrix factors;   // T x K, (1/T) F'F = I
    Matrix loadings;  // n x K, Y F / T
    Vector eig_diag;  // leading K eigenvalues of Y' W^{-1} Y / T, descending
    bool weight_inverse_applied = false;
    bool jitter_applied = false;      // pd_floor was added to the weight diagonal once
    bool degenerate_spectrum = false; // leading eigenvalues not distinct
    StageTimings timings;
};

/// Weighted principal components.
///
/// Solves min sum_t (y_t - B f_t)' W^{-1} (y_t - B f_t) subject to
/// (1/T) F'F = I and B' W^{-1} B diagonal. The factors are sqrt(T) times the
/// leading unit eigenvectors of the T x T matrix Y' W^{-1} Y, so the cost is
/// O(n^3 + n^2 T + T^3) regardless of how n compares with T. W^{-1} is applied
/// through a Cholesky factor; when the factorization fails, `pd_floor` is added
/// to the diagonal once and the attempt repeated.
WpcResult wpc_estimate(const Matrix& y, const Matrix& idio_weight, Index K, double pd_floor = 1e-8);

/// Identity-weighted variant (ordinary principal components, normalized as above).
WpcResult wpc_estimate_unweighted(const Matrix& y, Index K);

/// sqrt(T) times the k leading unit eigenvectors of Y'Y, sign-fixed. k = 0 gives T x 0.
Matrix ordinary_pca_factors(const Matrix& y, Index k);

/// H = V^{-1} Fhat' F B' W^{-1} B / T, the rotation under which Fhat tracks F.
Matrix rotation_matrix(const Vector& eig_diag, const Matrix& est_factors, const Matrix& true_factors,
                       const Matrix& true_loadings, const Matrix& idio_weight);

}  // namespace factorcov
