#pragma once

#include "factorcov/types.hpp"

#include <string_view>

namespace factorcov {

enum class KPenalty { Gp1, Gp2, EigenRatio };

std::string_view to_string(KPenalty penalty);
KPenalty parse_penalty(std::string_view text);

struct KSelectionResult {
    Index k_hat = 0;
    /// Indexed by k = 0..N. Information criteria are minimized; eigen ratios are
    /// maximized and have NaN at k = 0.
    std::vector<double> criterion_values;
    KPenalty penalty = KPenalty::Gp1;
};

/// g(p, T) of the chosen information criterion.
double ic_penalty(KPenalty penalty, Index p, Index T);

/// Descending eigenvalues of Y'Y (optionally after demeaning every row).
Vector gram_spectrum(const Matrix& y, bool center = false);

/// argmin_{0<=k<=N} log(||Y - Y F_k F_k' / T||_F^2 / (pT)) + k g(p, T), with F_k
/// the unweighted principal component factors. The residual norm is the
/// eigenvalue tail sum_{j>k} lambda_j(Y'Y); a tail below 1e-12 of the total
/// counts as zero (criterion -inf). Ties go to the smallest k.
KSelectionResult select_k_ic(const Matrix& y, Index N, KPenalty penalty, bool center = false);

/// argmax_{1<=k<=N} lambda_k / lambda_{k+1} over the eigenvalues of Y'Y/T. A
/// zero lambda_{k+1} (below 1e-12 of the largest) counts as an infinite ratio.
KSelectionResult select_k_eigen_ratio(const Matrix& y, Index N, bool center = false);

}  // namespace factorcov
