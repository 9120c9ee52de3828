#pragma once

#include "factorcov/types.hpp"

#include <cstdint>
#include <functional>

namespace factorcov {

struct ErrorReport {
    double relative_norm = 0.0;  // d^{-1/2} ||Sigma^{-1/2} (est - Sigma) Sigma^{-1/2}||_F
    double max_norm = 0.0;
    double inv_op_norm = 0.0;    // ||est^{-1} - Sigma^{-1}||
    double factor_err = 0.0;     // max_t ||fhat_t - H f_t||
    double loading_err = 0.0;    // max_i ||bhat_i - H b_i||
    double component_err = 0.0;  // max_{i,t} |bhat_i' fhat_t - b_i' f_t|
    Method method = Method::Method1;
};

/// Relative (Frobenius) error of `est` measured in the geometry of `truth`.
/// Throws NumericalError when `truth` is not positive definite.
double relative_norm(const Matrix& est, const Matrix& truth);

double max_norm_diff(const Matrix& est, const Matrix& truth);

/// Spectral norm of est^{-1} - truth^{-1}. Throws NumericalError on a singular argument.
double inv_operator_norm_diff(const Matrix& est, const Matrix& truth);

double factor_error(const Matrix& est_factors, const Matrix& true_factors, const Matrix& rotation);
double loading_error(const Matrix& est_loadings, const Matrix& true_loadings, const Matrix& rotation);
double component_error(const Matrix& est_loadings, const Matrix& est_factors, const Matrix& true_loadings,
                       const Matrix& true_factors);

/// Rotation H for an estimate: the identity for the oracle, the single-block
/// H for weighted principal components, and the average of the aligned group
/// rotations for divide-and-conquer. Needs estimates made with retain_weights.
Matrix rotation_for_estimate(const FactorModelEstimate& est, const TrueModel& truth);

/// All six metrics of an estimate against ground truth on subset S.
ErrorReport evaluate(const FactorModelEstimate& est, const TrueModel& truth, const SubsetSelector& subset);

struct SparsityMeasure {
    Index max_row_support = 0;   // max_i #{j != i : |sigma_ij| > tol}
    Index total_support = 0;     // sum over all rows
};
SparsityMeasure sparsity_measure(const Matrix& idio_cov, double tol = 0.0);

struct ModelConditionReport {
    double min_eig_loading_gram = 0.0;  // of B'B/p
    double max_eig_loading_gram = 0.0;
    Matrix weighted_gram;               // B' Sigma_u^{-1} B / p
    double off_diagonal_ratio = 0.0;    // ||offdiag||_F / ||diag||
    double min_diagonal_gap = 0.0;      // smallest gap between sorted diagonal entries
    bool pervasive = true;
    bool distinct = true;
    std::vector<std::string> warnings;
};

/// Empirical look at pervasiveness of B'B/p and at whether B' Sigma_u^{-1} B / p
/// is close to diagonal with distinct entries. Gaps below distinct_tol times
/// the largest diagonal entry raise a warning.
ModelConditionReport check_model_conditions(const Matrix& loadings, const Matrix& idio_cov,
                                            double distinct_tol = 0.1, double pervasive_tol = 1e-8);

struct FisherReport {
    Matrix info_full;    // B' Sigma_u^{-1} B
    Matrix info_subset;  // B_S' Sigma_{u,S}^{-1} B_S
    double min_eig_diff = 0.0;
    double max_eig_diff = 0.0;
    bool block_diagonal = false;
};

/// Gaussian-error Fisher information about the factors from the whole panel
/// and from the subset alone. `block_tol` bounds |Sigma_u[S, S^c]| for the
/// block-diagonal flag.
FisherReport fisher_dominance(const Matrix& loadings, const Matrix& idio_cov, const SubsetSelector& subset,
                              double block_tol = 0.0);

/// Draws a p x K loading matrix from a seed.
using LoadingSampler = std::function<Matrix(std::uint64_t seed)>;

/// Monte-Carlo mean of both information matrices over loading draws. Draw k
/// uses a seed derived from (seed, k), so the result does not depend on
/// evaluation order.
FisherReport fisher_dominance_expected(const LoadingSampler& sampler, const Matrix& idio_cov,
                                       const SubsetSelector& subset, int n_draws, std::uint64_t seed);

}  // namespace factorcov
