#include "factorcov/divide_conquer.hpp"

#include "factorcov/linalg.hpp"
#include "factorcov/wpc.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

namespace factorcov {

Partition partition_variables(Index p, Index M) {
    if (M < 1) throw ValidationError("M must be >= 1");
    if (M > p) throw ValidationError("M > p (M=" + std::to_string(M) + ", p=" + std::to_string(p) + ")");
    Partition out;
    const Index base = p / M;
    const Index extra = p % M;
    Index next = 0;
    for (Index m = 0; m < M; ++m) {
        const Index size = base + (m < extra ? 1 : 0);
        std::vector<Index> group(static_cast<std::size_t>(size));
        std::iota(group.begin(), group.end(), next);
        next += size;
        out.groups.push_back(std::move(group));
    }
    return out;
}

Partition random_partition(Index p, Index M, std::uint64_t seed) {
    Partition out = partition_variables(p, M);
    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t k = 0;
    for (auto& group : out.groups) {
        for (auto& idx : group) idx = order[k++];
        std::sort(group.begin(), group.end());
    }
    return out;
}

GroupFactors group_factor_estimate(const Matrix& y_group, Index K, const ThresholdConfig& initial,
                                   bool keep_weight) {
    GroupFactors out;
    InitialWeight init = initial_idiosyncratic_estimate(y_group, K, initial);
    out.initial_C = init.choice.C;
    out.timings.initial_threshold_ms = init.elapsed_ms;
    if (!init.choice.pd_reached) {
        out.warnings.emplace_back("initial threshold grid exhausted before reaching pd_floor");
    }
    WpcResult wpc = wpc_estimate(y_group, init.weight, K, initial.pd_floor);
    out.timings.inversion_ms = wpc.timings.inversion_ms;
    out.timings.eigensolve_ms = wpc.timings.eigensolve_ms;
    out.jitter_applied = wpc.jitter_applied;
    if (wpc.degenerate_spectrum) {
        out.warnings.emplace_back("leading eigenvalues are not distinct; factor ordering is arbitrary");
    }
    out.factors = std::move(wpc.factors);
    out.eig_diag = std::move(wpc.eig_diag);
    if (keep_weight) out.weight = std::move(init.weight);
    return out;
}

Alignment align_factors(const Matrix& reference, const Matrix& candidate) {
    if (reference.rows() != candidate.rows() || reference.cols() != candidate.cols()) {
        throw ValidationError("align_factors: shapes differ");
    }
    const Index K = reference.cols();
    Alignment out;
    Matrix cross = candidate.transpose() * reference;
    if (cross.squaredNorm() == 0.0) {
        out.rotation = Matrix::Identity(K, K);
        out.aligned = candidate;
        out.degenerate = true;
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.rotation = svd.matrixU() * svd.matrixV().transpose();
    out.aligned = candidate * out.rotation;
    return out;
}

int resolve_thread_count(int requested) {
    if (const char* env = std::getenv("FACTORCOV_THREADS")) {
        const int value = std::atoi(env);
        if (value > 0) return value;
    }
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

FactorModelEstimate dc_estimate(const ObservationMatrix& y, const SubsetSelector& subset,
                                const PipelineConfig& cfg, const DcConfig& dc) {
    Stopwatch clock;
    cfg.check();
    subset.check_against(y.p());
    if (y.T() <= cfg.K) throw ValidationError("need more time points than factors");
    Partition part = dc.random_partition ? random_partition(y.p(), dc.M, dc.partition_seed)
                                         : partition_variables(y.p(), dc.M);
    for (const auto& g : part.groups) {
        if (static_cast<Index>(g.size()) <= cfg.K) {
            throw ValidationError("every group needs more than K variables (group size " +
                                  std::to_string(g.size()) + ", K=" + std::to_string(cfg.K) + ")");
        }
    }

    const std::size_t M = part.groups.size();
    std::vector<GroupFactors> results(M);
    std::vector<std::exception_ptr> failures(M);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t m = next++; m < M; m = next++) {
            try {
                Matrix y_group = restrict_rows(y.values(), SubsetSelector(part.groups[m]));
                results[m] = group_factor_estimate(y_group, cfg.K, cfg.initial_threshold, cfg.retain_weights);
            } catch (...) {
                failures[m] = std::current_exception();
            }
        }
    };
    const int n_threads = std::min<int>(resolve_thread_count(dc.threads), static_cast<int>(M));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    }
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    FactorModelEstimate est;
    est.method = Method::DivideConquer;
    Stopwatch merge_clock;
    const Index K = cfg.K;
    Matrix sum = results[0].factors;
    for (std::size_t m = 0; m < M; ++m) {
        Matrix rotation = Matrix::Identity(K, K);
        if (m > 0) {
            if (dc.align) {
                Alignment a = align_factors(results[0].factors, results[m].factors);
                if (a.degenerate) {
                    est.warnings.push_back("group " + std::to_string(m) + " factors orthogonal to group 0; not rotated");
                }
                sum += a.aligned;
                rotation = std::move(a.rotation);
            } else {
                sum += results[m].factors;
            }
        }
        est.timings += results[m].timings;
        est.initial_C = std::max(est.initial_C, results[m].initial_C);
        est.jitter_applied = est.jitter_applied || results[m].jitter_applied;
        for (auto& w : results[m].warnings) est.warnings.push_back("group " + std::to_string(m) + ": " + w);
        if (cfg.retain_weights) {
            WeightBlock block;
            block.rows = part.groups[m];
            block.weight = std::move(results[m].weight);
            block.eig_diag = results[m].eig_diag;
            block.factors = results[m].factors;
            block.alignment = std::move(rotation);
            est.weight_blocks.push_back(std::move(block));
        }
    }
    est.factors = sum / static_cast<double>(M);
    est.timings.merge_ms = merge_clock.elapsed_ms();

    Vector eig_sum = Vector::Zero(K);
    for (const auto& r : results) eig_sum += r.eig_diag;
    est.eig_diag = eig_sum / static_cast<double>(M);

    const double T = static_cast<double>(y.T());
    Matrix y_subset = restrict_rows(y.values(), subset);
    est.loadings = y_subset * est.factors / T;
    est.factor_gram = est.factors.transpose() * est.factors / T;
    const double rate = residual_rate(Method::DivideConquer, cfg.rate_mode, subset.size(), y.p(), y.T());
    finish_on_subset(y_subset, est, cfg, rate);
    est.timings.total_ms = clock.elapsed_ms();
    return est;
}

}  // namespace factorcov
