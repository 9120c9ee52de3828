#include "factorcov/pipeline.hpp"

#include "factorcov/linalg.hpp"
#include "factorcov/wpc.hpp"

#include <cmath>

namespace factorcov {

ThresholdConfig PipelineConfig::default_initial_threshold() {
    ThresholdConfig cfg;
    cfg.selection = CSelection::CrossValidation;
    return cfg;
}

ThresholdConfig PipelineConfig::default_residual_threshold() {
    ThresholdConfig cfg;
    cfg.selection = CSelection::CrossValidation;
    return cfg;
}

void PipelineConfig::check() const {
    if (K < 1) throw ValidationError("K must be >= 1");
    initial_threshold.check();
    residual_threshold.check();
}

double residual_rate(Method method, RateMode mode, Index s, Index p, Index T) {
    if (mode == RateMode::Literal) return omega_rate(s, T);
    const double log_term = std::sqrt(std::log(static_cast<double>(s)) / static_cast<double>(T));
    double rate = 0.0;
    switch (method) {
        case Method::Method1: rate = omega_rate(s, T); break;
        case Method::Method2:
        case Method::DivideConquer: rate = log_term + 1.0 / std::sqrt(static_cast<double>(p)); break;
        case Method::Oracle: rate = log_term; break;
    }
    // s = 1 leaves no off-diagonal entries; any positive rate is equivalent.
    return rate > 0.0 ? rate : omega_rate(s, T);
}

InitialWeight initial_idiosyncratic_estimate(const Matrix& y, Index K, ThresholdConfig cfg) {
    Stopwatch clock;
    cfg.rate = omega_rate(y.rows(), y.cols());
    const Matrix r = floored_pca_residual(y, K);
    double lowest_C = cfg.C_grid.front();
    if (!cfg.C && cfg.selection == CSelection::CrossValidation) lowest_C = cross_validate_C_correlation(y, K, cfg);
    ThresholdResult thr = threshold_correlation(r, cfg, lowest_C);
    return {std::move(thr.estimate), thr.choice, clock.elapsed_ms()};
}

void finish_on_subset(const Matrix& y_subset, FactorModelEstimate& est, const PipelineConfig& cfg,
                      double rate) {
    Stopwatch clock;
    Matrix residuals = y_subset - est.loadings * est.factors.transpose();
    ThresholdConfig tc = cfg.residual_threshold;
    tc.rate = rate;
    ThresholdResult thr = threshold_residuals(residuals, tc);
    est.residual_C = thr.choice.C;
    if (!thr.choice.pd_reached) {
        est.warnings.emplace_back("residual threshold grid exhausted before reaching pd_floor");
    }
    est.idio_cov = std::move(thr.estimate);
    est.total_cov = est.loadings * est.loadings.transpose() + est.idio_cov;
    symmetrize(est.total_cov);
    est.timings.residual_ms += clock.elapsed_ms();
}

namespace {

void check_dims(const ObservationMatrix& y, const SubsetSelector& subset, Index rows_for_factors,
                const PipelineConfig& cfg) {
    cfg.check();
    subset.check_against(y.p());
    if (rows_for_factors <= cfg.K) {
        throw ValidationError("need more variables than factors (n=" + std::to_string(rows_for_factors) +
                              ", K=" + std::to_string(cfg.K) + ")");
    }
    if (y.T() <= cfg.K) {
        throw ValidationError("need more time points than factors (T=" + std::to_string(y.T()) +
                              ", K=" + std::to_string(cfg.K) + ")");
    }
}

// Initial weight, WPC factors on `panel`, and the retained block when asked.
struct FactorStage {
    Matrix factors;
    Vector eig_diag;
    double initial_C = 0.0;
    bool jitter = false;
    std::vector<std::string> warnings;
    StageTimings timings;
    WeightBlock block;
};

FactorStage factor_stage(const Matrix& panel, std::vector<Index> rows, const PipelineConfig& cfg) {
    FactorStage out;
    InitialWeight init = initial_idiosyncratic_estimate(panel, cfg.K, cfg.initial_threshold);
    out.initial_C = init.choice.C;
    out.timings.initial_threshold_ms = init.elapsed_ms;
    if (!init.choice.pd_reached) {
        out.warnings.emplace_back("initial threshold grid exhausted before reaching pd_floor");
    }
    WpcResult wpc = wpc_estimate(panel, init.weight, cfg.K, cfg.initial_threshold.pd_floor);
    out.timings.inversion_ms += wpc.timings.inversion_ms;
    out.timings.eigensolve_ms += wpc.timings.eigensolve_ms;
    out.jitter = wpc.jitter_applied;
    if (wpc.jitter_applied) out.warnings.emplace_back("weight jittered by pd_floor to restore positive definiteness");
    if (wpc.degenerate_spectrum) {
        out.warnings.emplace_back("leading eigenvalues are not distinct; factor ordering is arbitrary");
    }
    out.factors = std::move(wpc.factors);
    out.eig_diag = std::move(wpc.eig_diag);
    if (cfg.retain_weights) {
        out.block.rows = std::move(rows);
        out.block.weight = std::move(init.weight);
        out.block.eig_diag = out.eig_diag;
        out.block.factors = out.factors;
        out.block.alignment = Matrix::Identity(cfg.K, cfg.K);
    }
    return out;
}

FactorModelEstimate assemble(const Matrix& y_subset, FactorStage stage, Method method,
                             const PipelineConfig& cfg, double rate, Stopwatch& clock) {
    FactorModelEstimate est;
    est.method = method;
    const double T = static_cast<double>(y_subset.cols());
    est.loadings = y_subset * stage.factors / T;
    est.factors = std::move(stage.factors);
    est.eig_diag = std::move(stage.eig_diag);
    est.factor_gram = est.factors.transpose() * est.factors / T;
    est.initial_C = stage.initial_C;
    est.jitter_applied = stage.jitter;
    est.warnings = std::move(stage.warnings);
    est.timings = stage.timings;
    if (cfg.retain_weights) est.weight_blocks.push_back(std::move(stage.block));
    finish_on_subset(y_subset, est, cfg, rate);
    est.timings.total_ms = clock.elapsed_ms();
    return est;
}

}  // namespace

FactorModelEstimate estimate_method1(const ObservationMatrix& y, const SubsetSelector& subset,
                                     const PipelineConfig& cfg) {
    Stopwatch clock;
    check_dims(y, subset, subset.size(), cfg);
    Matrix y_subset = restrict_rows(y.values(), subset);
    FactorStage stage = factor_stage(y_subset, subset.indices(), cfg);
    const double rate = residual_rate(Method::Method1, cfg.rate_mode, subset.size(), y.p(), y.T());
    return assemble(y_subset, std::move(stage), Method::Method1, cfg, rate, clock);
}

FactorModelEstimate estimate_method2(const ObservationMatrix& y, const SubsetSelector& subset,
                                     const PipelineConfig& cfg) {
    Stopwatch clock;
    check_dims(y, subset, y.p(), cfg);
    FactorStage stage = factor_stage(y.values(), SubsetSelector::all(y.p()).indices(), cfg);
    Matrix y_subset = restrict_rows(y.values(), subset);
    const double rate = residual_rate(Method::Method2, cfg.rate_mode, subset.size(), y.p(), y.T());
    return assemble(y_subset, std::move(stage), Method::Method2, cfg, rate, clock);
}

FactorModelEstimate estimate_oracle(const ObservationMatrix& y, const SubsetSelector& subset,
                                    const Matrix& true_factors, const PipelineConfig& cfg) {
    Stopwatch clock;
    cfg.check();
    subset.check_against(y.p());
    if (true_factors.rows() != y.T() || true_factors.cols() != cfg.K) {
        throw ValidationError("true factors must be T x K");
    }
    FactorModelEstimate est;
    est.method = Method::Oracle;
    const double T = static_cast<double>(y.T());
    Matrix y_subset = restrict_rows(y.values(), subset);
    est.factors = true_factors;
    est.loadings = y_subset * true_factors / T;
    est.factor_gram = true_factors.transpose() * true_factors / T;
    const double rate = residual_rate(Method::Oracle, cfg.rate_mode, subset.size(), y.p(), y.T());
    finish_on_subset(y_subset, est, cfg, rate);
    est.timings.total_ms = clock.elapsed_ms();
    return est;
}

}  // namespace factorcov
