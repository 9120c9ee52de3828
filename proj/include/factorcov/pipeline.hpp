#pragma once

#include "factorcov/threshold.hpp"
#include "factorcov/types.hpp"

namespace factorcov {

/// Which rate multiplies the residual threshold.
enum class RateMode {
    /// omega(s) for every method.
    Literal,
    /// The method's own loading rate: 1/sqrt(s) + sqrt(log s / T) for the
    /// subset-only fit, 1/sqrt(p) + sqrt(log s / T) for full-panel factors,
    /// sqrt(log s / T) for the oracle.
    TheoryAware,
};

struct PipelineConfig {
    Index K = 3;
    /// Initial weight estimate (correlation thresholding of the PCA residual).
    /// The rate field is overwritten with omega of the panel dimension.
    ThresholdConfig initial_threshold = default_initial_threshold();
    /// Final idiosyncratic estimate on S. The rate field is overwritten per rate_mode.
    ThresholdConfig residual_threshold = default_residual_threshold();
    RateMode rate_mode = RateMode::Literal;
    /// Keep the weight matrices in the estimate so the rotation H can be formed later.
    bool retain_weights = false;

    static ThresholdConfig default_initial_threshold();
    static ThresholdConfig default_residual_threshold();
    void check() const;
};

/// Rate used for residual thresholding of a method under a rate mode.
double residual_rate(Method method, RateMode mode, Index s, Index p, Index T);

/// Initial idiosyncratic weight for a panel: PCA residual of the sample
/// covariance, thresholded on the correlation scale at omega(rows). With
/// cross-validated selection the constant is the first positive definite grid
/// value at or above the cross-validated one.
struct InitialWeight {
    Matrix weight;
    CChoice choice;
    double elapsed_ms = 0.0;
};
InitialWeight initial_idiosyncratic_estimate(const Matrix& y, Index K, ThresholdConfig cfg);

/// Shared tail of every method: residuals Y_S - B F', thresholded residual
/// covariance, and total covariance B B' + Sigma_u. Fills idio_cov, total_cov,
/// residual_C and the residual timing of `est`.
void finish_on_subset(const Matrix& y_subset, FactorModelEstimate& est, const PipelineConfig& cfg,
                      double rate);

/// Subset-only estimator: every step uses the s rows of S.
FactorModelEstimate estimate_method1(const ObservationMatrix& y, const SubsetSelector& subset,
                                     const PipelineConfig& cfg);

/// Full-panel factors: weighted principal components on all p rows, then
/// loadings and idiosyncratic covariance on S.
FactorModelEstimate estimate_method2(const ObservationMatrix& y, const SubsetSelector& subset,
                                     const PipelineConfig& cfg);

/// Loadings regressed on the true factors (simulation only).
FactorModelEstimate estimate_oracle(const ObservationMatrix& y, const SubsetSelector& subset,
                                    const Matrix& true_factors, const PipelineConfig& cfg);

}  // namespace factorcov
