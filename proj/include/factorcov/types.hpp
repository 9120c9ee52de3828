#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace factorcov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Bad input: shape, range, or content violations. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical step could not be completed (non-PD weight, singular matrix).
/// Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checks the panel invariants and returns one message per violation.
/// An empty result means the panel is valid.
std::vector<std::string> validate(const Matrix& values,
                                  const std::vector<std::string>& variable_ids = {});

/// p x T data panel. Rows are variables, columns are time points.
class ObservationMatrix {
public:
    explicit ObservationMatrix(Matrix values, std::vector<std::string> variable_ids = {});

    const Matrix& values() const { return values_; }
    Index p() const { return values_.rows(); }
    Index T() const { return values_.cols(); }

    /// Labels of the rows; defaults to "0", "1", ... when none were given.
    const std::vector<std::string>& variable_ids() const { return variable_ids_; }

private:
    Matrix values_;
    std::vector<std::string> variable_ids_;
};

/// Ordered set of distinct row indices.
class SubsetSelector {
public:
    explicit SubsetSelector(std::vector<Index> indices);

    static SubsetSelector all(Index p);
    static SubsetSelector range(Index first, Index count);

    /// Parses "0..49,100,200..205" (inclusive ranges, comma separated).
    static SubsetSelector parse(std::string_view text);

    const std::vector<Index>& indices() const { return indices_; }
    Index size() const { return static_cast<Index>(indices_.size()); }
    Index operator[](Index k) const { return indices_[static_cast<std::size_t>(k)]; }

    /// Throws ValidationError when any index is >= p.
    void check_against(Index p) const;

    /// True when this selects every row of a p-row panel in natural order.
    bool is_identity(Index p) const;

private:
    std::vector<Index> indices_;
};

/// Rows of `values` at the selected indices, in selector order.
Matrix restrict_rows(const Matrix& values, const SubsetSelector& subset);

ObservationMatrix restrict(const ObservationMatrix& y, const SubsetSelector& subset);

/// Principal submatrix A[S, S].
Matrix restrict_square(const Matrix& a, const SubsetSelector& subset);

enum class Method { Method1, Method2, Oracle, DivideConquer };

std::string_view to_string(Method method);

/// Wall-clock milliseconds spent in each pipeline stage.
struct StageTimings {
    double initial_threshold_ms = 0.0;
    double inversion_ms = 0.0;
    double eigensolve_ms = 0.0;
    double merge_ms = 0.0;
    double residual_ms = 0.0;
    double total_ms = 0.0;

    StageTimings& operator+=(const StageTimings& other);
};

/// One weighted principal component solve retained for evaluation against
/// ground truth (the rotation H needs the weight that produced the factors).
struct WeightBlock {
    std::vector<Index> rows;  // panel rows that entered the solve
    Matrix weight;            // initial idiosyncratic estimate used as W
    Vector eig_diag;
    Matrix factors;           // unaligned factors of this block
    Matrix alignment;         // K x K orthogonal map applied before averaging
};

/// Output of every covariance pipeline.
struct FactorModelEstimate {
    Matrix factors;    // T x K
    Matrix loadings;   // s x K
    Matrix idio_cov;   // s x s
    Matrix total_cov;  // s x s, loadings * loadings' + idio_cov
    Vector eig_diag;   // K, descending (empty for the oracle)
    Method method = Method::Method1;

    double initial_C = 0.0;   // threshold constant of the initial weight estimate
    double residual_C = 0.0;  // threshold constant of the final idiosyncratic estimate
    bool jitter_applied = false;
    /// (1/T) F'F of the factors actually used; identity for WPC, not for averaged factors.
    Matrix factor_gram;
    std::vector<std::string> warnings;
    StageTimings timings;
    std::vector<WeightBlock> weight_blocks;  // filled only when requested
};

/// Simulation ground truth.
struct TrueModel {
    Matrix loadings;     // p x K
    Matrix factors;      // T x K
    Matrix idio_cov;     // p x p
    Matrix implied_cov;  // loadings * loadings' + idio_cov

    static TrueModel from_parts(Matrix loadings, Matrix factors, Matrix idio_cov);
};

}  // namespace factorcov
