#pragma once

#include "factorcov/pipeline.hpp"
#include "factorcov/types.hpp"

#include <cstdint>

namespace factorcov {

/// M disjoint groups covering 0..p-1.
struct Partition {
    std::vector<std::vector<Index>> groups;
    Index M() const { return static_cast<Index>(groups.size()); }
};

/// Contiguous blocks; the first p mod M groups get one extra row.
Partition partition_variables(Index p, Index M);

/// Same group sizes as partition_variables, rows assigned by a seeded shuffle.
Partition random_partition(Index p, Index M, std::uint64_t seed);

struct GroupFactors {
    Matrix factors;  // T x K
    Vector eig_diag;
    Matrix weight;   // kept only when requested
    double initial_C = 0.0;
    bool jitter_applied = false;
    std::vector<std::string> warnings;
    StageTimings timings;
};

/// Initial weight from the group's own rows, then weighted principal components.
GroupFactors group_factor_estimate(const Matrix& y_group, Index K, const ThresholdConfig& initial,
                                   bool keep_weight = false);

struct Alignment {
    Matrix aligned;   // candidate * rotation
    Matrix rotation;  // K x K orthogonal
    bool degenerate = false;
};

/// Orthogonal Procrustes: the rotation minimizing ||candidate * R - reference||_F
/// is U V' from the SVD candidate' reference = U S V'. A zero cross-product
/// yields the identity and sets `degenerate`.
Alignment align_factors(const Matrix& reference, const Matrix& candidate);

struct DcConfig {
    Index M = 1;
    /// Rotate every group onto group 1 before averaging. When false the raw
    /// group factors are averaged.
    bool align = true;
    bool random_partition = false;
    std::uint64_t partition_seed = 0;
    /// Worker threads for the group solves; 0 means hardware concurrency.
    int threads = 0;
};

/// Divide-and-conquer estimator: per-group factors (in parallel), merged by
/// alignment and averaging, then loadings and idiosyncratic covariance on S
/// as in the full-panel method. Results do not depend on the worker count.
FactorModelEstimate dc_estimate(const ObservationMatrix& y, const SubsetSelector& subset,
                                const PipelineConfig& cfg, const DcConfig& dc);

/// Thread count from FACTORCOV_THREADS when set, else `requested`, else hardware concurrency.
int resolve_thread_count(int requested);

}  // namespace factorcov
