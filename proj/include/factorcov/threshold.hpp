#pragma once

#include "factorcov/types.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace factorcov {

/// How the threshold constant is picked when no fixed value is given.
enum class CSelection {
    /// Smallest grid value whose thresholded matrix has eigenvalues >= pd_floor.
    MinPositiveDefinite,
    /// Split-sample cross-validation over the grid, then the first grid value
    /// at or above it whose estimate has eigenvalues >= pd_floor (the
    /// MinPositiveDefinite value when none does).
    CrossValidation,
};

std::vector<double> default_C_grid();

struct ThresholdConfig {
    std::optional<double> C;  // fixed constant; when unset it is selected from C_grid
    double rate = 1.0;        // omega, supplied by the caller
    double pd_floor = 1e-8;
    std::vector<double> C_grid = default_C_grid();
    CSelection selection = CSelection::MinPositiveDefinite;
    int cv_splits = 5;
    std::uint64_t cv_seed = 0;

    /// Throws ValidationError on C < 0, rate <= 0, or a grid that is empty or not strictly increasing.
    void check() const;
};

struct CChoice {
    double C = 0.0;
    bool pd_reached = true;  // false: no grid value reached pd_floor, grid maximum returned
};

/// (1/T) sum_t (y_t - ybar)(y_t - ybar)'.
Matrix sample_covariance(const Matrix& y);

/// sqrt(log n / T) + 1 / sqrt(n).
double omega_rate(Index n, Index T);

/// S_y with its K leading eigencomponents removed.
Matrix pca_residual_matrix(const Matrix& sample_cov, Index K);

/// Same matrix as pca_residual_matrix(sample_covariance(y), K), but the leading
/// eigenvectors come from the T x T dual problem when the panel has more rows
/// than columns.
Matrix pca_residual_from_panel(const Matrix& y, Index K);

/// Correlation-scaled hard thresholding: off-diagonal r_ij survives when
/// |r_ij| > C * sqrt(r_ii r_jj) * rate; the diagonal is kept.
Matrix hard_threshold_correlation(const Matrix& r, double C, double rate);
Matrix hard_threshold_correlation(const Matrix& r, const ThresholdConfig& cfg);

/// Raw residual moments: sigma = U U' / T and the square root of
/// theta_ij = (1/T) sum_t (u_it u_jt - sigma_ij)^2.
struct ResidualMoments {
    Matrix sigma;
    Matrix theta_sqrt;
};
ResidualMoments residual_moments(const Matrix& residuals);

/// Hard thresholding of the residual second moments at C * sqrt(theta_ij) * rate.
Matrix threshold_residual_moments(const ResidualMoments& moments, double C, double rate);
Matrix residual_covariance_threshold(const Matrix& residuals, double C, double rate);
Matrix residual_covariance_threshold(const Matrix& residuals, const ThresholdConfig& cfg);

/// Minimum-C-for-positive-definiteness over cfg.C_grid for the two estimators.
CChoice choose_C_correlation(const Matrix& r, const ThresholdConfig& cfg);
CChoice choose_C_residual(const Matrix& residuals, const ThresholdConfig& cfg);

/// Split-sample cross-validation for the residual estimator: each split
/// thresholds a training block of floor(T (1 - 1/log T)) columns and scores the
/// squared Frobenius distance to the raw moments of the held-out columns.
/// Returns the grid value with the smallest total score (smallest C on ties).
double cross_validate_C_residual(const Matrix& residuals, const ThresholdConfig& cfg);

/// Resolves the constant per cfg (fixed, min-PD, or cross-validated) and
/// returns the thresholded residual covariance.
struct ThresholdResult {
    Matrix estimate;
    CChoice choice;
};
ThresholdResult threshold_residuals(const Matrix& residuals, const ThresholdConfig& cfg);

/// Fixed C when cfg.C is set, otherwise the first grid value >= lowest_C whose
/// thresholded matrix has eigenvalues >= pd_floor (minimum-C rule when none).
ThresholdResult threshold_correlation(const Matrix& r, const ThresholdConfig& cfg,
                                      double lowest_C = -std::numeric_limits<double>::infinity());

/// pca_residual_from_panel with the diagonal floored at 1e-12 of the mean
/// centered variance, so (near) noiseless panels keep a positive diagonal.
Matrix floored_pca_residual(const Matrix& y, Index K);

/// Split-sample cross-validation for the correlation-thresholded PCA residual
/// of a panel: each split thresholds the residual of floor(T (1 - 1/log T))
/// training columns and scores the squared Frobenius distance of the
/// off-diagonal part to the PCA residual of the held-out columns. Returns the
/// grid value with the smallest total score (smallest C on ties).
double cross_validate_C_correlation(const Matrix& y, Index K, const ThresholdConfig& cfg);

}  // namespace factorcov
