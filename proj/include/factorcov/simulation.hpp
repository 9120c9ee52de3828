#pragma once

#include "factorcov/divide_conquer.hpp"
#include "factorcov/metrics.hpp"
#include "factorcov/pipeline.hpp"
#include "factorcov/types.hpp"

#include <cstdint>
#include <optional>
#include <utility>

namespace factorcov {

struct SimConfig {
    Index s = 50;
    Index p = 1000;
    Index T = 200;
    Index K = 3;
    int n_reps = 50;
    std::uint64_t seed = 7;
    double loading_var = 5.0;
    double idio_var = 50.0;
    /// Idiosyncratic variances drawn iid Uniform(idio_var/2, 3 idio_var/2) instead
    /// of the constant idio_var. Not part of the reference design.
    bool heteroscedastic = false;
    std::optional<Index> dc_M;
    /// Concurrent replications; 0 means hardware concurrency.
    int threads = 1;

    void check() const;
};

struct SimulatedData {
    TrueModel truth;
    ObservationMatrix y;
};

/// B rows ~ N(0, loading_var I_K), F rows ~ N(0, I_K), u_t ~ N(0, idio_var I_p)
/// (or heteroscedastic), Y = B F' + U. Deterministic in `seed`.
SimulatedData generate_model(const SimConfig& cfg, std::uint64_t seed);

/// Seed of replication `rep` under master seed `seed`.
std::uint64_t replication_seed(std::uint64_t seed, int rep);

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;  // divisor n - 1
};
MetricSummary summarize(const std::vector<double>& values);

enum class Metric { RelativeNorm, InvOpNorm, MaxNorm, FactorErr, LoadingErr, ComponentErr };
constexpr Metric kAllMetrics[] = {Metric::RelativeNorm, Metric::InvOpNorm,  Metric::MaxNorm,
                                  Metric::FactorErr,    Metric::LoadingErr, Metric::ComponentErr};
std::string_view to_string(Metric metric);
double metric_value(const ErrorReport& report, Metric metric);

struct MonteCarloTable {
    SimConfig config;
    std::vector<Method> methods;
    /// reports[m][r]: method m, replication r.
    std::vector<std::vector<ErrorReport>> reports;

    MetricSummary summary(Method method, Metric metric) const;
};

/// Runs every replication: generate, estimate with Method 1, Method 2, the
/// oracle (and divide-and-conquer when dc_M is set), evaluate on S = {0..s-1}.
/// A failing replication aborts with its seed in the message.
MonteCarloTable monte_carlo_table(const SimConfig& cfg, PipelineConfig pipeline = {});

struct BenchmarkRow {
    Index T = 0, s = 0, p = 0, M = 0;
    Method method = Method::Method1;
    MetricSummary relative_norm, inv_op_norm, max_norm;
    MetricSummary wall_ms;
    StageTimings stages;  // mean over replications
};

/// Sizes used per T: s = floor(T^0.6), p = floor(T^1.4), M = floor(T^0.2).
struct BenchmarkSizes {
    Index s, p, M;
};
BenchmarkSizes benchmark_sizes(Index T);

/// Runs the four methods serially for each T and records errors and wall time.
std::vector<BenchmarkRow> benchmark_dc(const std::vector<Index>& T_grid, int reps, std::uint64_t seed,
                                       PipelineConfig pipeline = {}, int dc_threads = 1);

struct NormalityCheck {
    Matrix empirical_cov;  // of sqrt(p) (fhat_t - H f_t), pooled over t and replications
    Matrix target;         // mean over draws of Q^{-1}, Q = B' Sigma_u^{-1} B / p
    double rel_frobenius_gap = 0.0;  // ||empirical - target||_F / ||target||_F
    Index pooled = 0;
};

/// Finite-sample look at the limiting law of the full-panel factor estimate.
NormalityCheck asymptotic_normality_check(const SimConfig& cfg, PipelineConfig pipeline = {});

}  // namespace factorcov
