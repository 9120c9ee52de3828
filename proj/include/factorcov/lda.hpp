#pragma once

#include "factorcov/pipeline.hpp"
#include "factorcov/types.hpp"

#include <cstdint>
#include <optional>

namespace factorcov {

/// Which covariance estimate feeds the discriminant: subset-only factors
/// (LDA-1) or factors from every variable (LDA-2).
enum class LdaCovariance { Method1, Method2 };

std::string_view to_string(LdaCovariance cov);

/// Centering applied to the training panel before covariance estimation.
enum class LdaCentering { ByClass, Pooled };

struct LdaRule {
    Vector delta_hat;  // case mean - control mean, on the selected variables
    Vector mu_bar;     // midpoint of the two class means
    Matrix sigma_inv;
    SubsetSelector selected;
};

/// Two-sample Welch t statistic per row (class 1 minus class 0).
Vector two_sample_t(const Matrix& y, const std::vector<int>& labels);

/// Rows with the s_max largest |t|, returned in increasing index order. Ties
/// in |t| prefer the lower index.
SubsetSelector screen_variables(const Matrix& y, const std::vector<int>& labels, Index s_max);

struct LdaFitConfig {
    LdaCovariance covariance = LdaCovariance::Method2;
    LdaCentering centering = LdaCentering::ByClass;
    PipelineConfig pipeline;
};

/// Fits the rule on training columns of a p x n panel. labels are 0 (control)
/// or 1 (case); both classes need at least two members.
LdaRule fit_lda(const Matrix& train, const std::vector<int>& labels, const SubsetSelector& subset,
                const LdaFitConfig& cfg);

/// delta' Sigma^{-1} (x - mu_bar) for x restricted to the rule's variables.
double discriminant(const Vector& x_selected, const LdaRule& rule);

/// 1 (case) when the discriminant is >= 0, else 0.
int classify(const Vector& x_selected, const LdaRule& rule);

/// Classifies every column of a p x n panel (rows are restricted to the rule's subset).
std::vector<int> classify_columns(const Matrix& panel, const LdaRule& rule);

double error_rate(const std::vector<int>& predicted, const std::vector<int>& truth);

struct SplitExperiment {
    int n_splits = 100;
    Index test_size = 10;
    Index s_max = 50;
    std::uint64_t seed = 0;
    std::vector<LdaFitConfig> rules;
};

struct RuleRate {
    LdaCovariance covariance = LdaCovariance::Method2;
    double mean_rate = 0.0;
    double sd_rate = 0.0;
    std::vector<double> rates;
};

/// Repeated random train/test splits. In each split the variables are
/// screened on the training columns, every rule is fitted on the same split,
/// and its test error is recorded.
std::vector<RuleRate> misclassification_rate(const Matrix& data, const std::vector<int>& labels,
                                             const SplitExperiment& exp);

}  // namespace factorcov
