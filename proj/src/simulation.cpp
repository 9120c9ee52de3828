#include "factorcov/simulation.hpp"

#include "factorcov/linalg.hpp"
#include "factorcov/random.hpp"
#include "factorcov/wpc.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace factorcov {

void SimConfig::check() const {
    if (s < 1 || p < 1 || T < 2 || K < 1) throw ValidationError("simulation sizes must be positive (T >= 2)");
    if (s > p) throw ValidationError("s must not exceed p");
    if (K >= std::min(s, T)) throw ValidationError("K must be below min(s, T)");
    if (n_reps < 1) throw ValidationError("n_reps must be >= 1");
    if (loading_var < 0.0 || idio_var < 0.0) throw ValidationError("variances must be nonnegative");
    if (dc_M && (*dc_M < 1 || *dc_M > p)) throw ValidationError("dc M must satisfy 1 <= M <= p");
}

std::uint64_t replication_seed(std::uint64_t seed, int rep) {
    return derive_seed(seed, static_cast<std::uint64_t>(rep));
}

SimulatedData generate_model(const SimConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    Matrix loadings = normal_matrix(cfg.p, cfg.K, std::sqrt(cfg.loading_var), rng);
    Matrix factors = normal_matrix(cfg.T, cfg.K, 1.0, rng);
    Vector variances = Vector::Constant(cfg.p, cfg.idio_var);
    if (cfg.heteroscedastic) {
        std::uniform_real_distribution<double> unif(0.5 * cfg.idio_var, 1.5 * cfg.idio_var);
        for (Index i = 0; i < cfg.p; ++i) variances(i) = unif(rng);
    }
    Matrix noise = normal_matrix(cfg.p, cfg.T, 1.0, rng);
    noise = variances.cwiseSqrt().asDiagonal() * noise;
    Matrix y = loadings * factors.transpose() + noise;
    Matrix idio = variances.asDiagonal();
    return {TrueModel::from_parts(std::move(loadings), std::move(factors), std::move(idio)),
            ObservationMatrix(std::move(y))};
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary out;
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

std::string_view to_string(Metric metric) {
    switch (metric) {
        case Metric::RelativeNorm: return "relative_norm";
        case Metric::InvOpNorm: return "inv_op_norm";
        case Metric::MaxNorm: return "max_norm";
        case Metric::FactorErr: return "factor_err";
        case Metric::LoadingErr: return "loading_err";
        case Metric::ComponentErr: return "component_err";
    }
    return "unknown";
}

double metric_value(const ErrorReport& report, Metric metric) {
    switch (metric) {
        case Metric::RelativeNorm: return report.relative_norm;
        case Metric::InvOpNorm: return report.inv_op_norm;
        case Metric::MaxNorm: return report.max_norm;
        case Metric::FactorErr: return report.factor_err;
        case Metric::LoadingErr: return report.loading_err;
        case Metric::ComponentErr: return report.component_err;
    }
    return 0.0;
}

MetricSummary MonteCarloTable::summary(Method method, Metric metric) const {
    for (std::size_t m = 0; m < methods.size(); ++m) {
        if (methods[m] != method) continue;
        std::vector<double> values;
        for (const auto& r : reports[m]) values.push_back(metric_value(r, metric));
        return summarize(values);
    }
    throw ValidationError("method not present in table");
}

namespace {

// Runs body(rep) for rep in [0, n) on `threads` workers; rethrows the first
// failure in replication order.
template <typename Body>
void for_each_replication(int n, int threads, Body&& body) {
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int rep = next++; rep < n; rep = next++) {
            try {
                body(rep);
            } catch (...) {
                failures[static_cast<std::size_t>(rep)] = std::current_exception();
            }
        }
    };
    const int n_threads = std::min(resolve_thread_count(threads), n);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    }
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
}

}  // namespace

MonteCarloTable monte_carlo_table(const SimConfig& cfg, PipelineConfig pipeline) {
    cfg.check();
    pipeline.K = cfg.K;
    pipeline.retain_weights = true;

    MonteCarloTable table;
    table.config = cfg;
    table.methods = {Method::Method1, Method::Method2, Method::Oracle};
    if (cfg.dc_M) table.methods.push_back(Method::DivideConquer);
    table.reports.assign(table.methods.size(), std::vector<ErrorReport>(static_cast<std::size_t>(cfg.n_reps)));
    const SubsetSelector subset = SubsetSelector::range(0, cfg.s);

    for_each_replication(cfg.n_reps, cfg.threads, [&](int rep) {
        const std::uint64_t seed = replication_seed(cfg.seed, rep);
        try {
            SimulatedData data = generate_model(cfg, seed);
            PipelineConfig pc = pipeline;
            pc.residual_threshold.cv_seed = derive_seed(seed, 1);
            pc.initial_threshold.cv_seed = derive_seed(seed, 2);
            for (std::size_t m = 0; m < table.methods.size(); ++m) {
                FactorModelEstimate est;
                switch (table.methods[m]) {
                    case Method::Method1: est = estimate_method1(data.y, subset, pc); break;
                    case Method::Method2: est = estimate_method2(data.y, subset, pc); break;
                    case Method::Oracle: est = estimate_oracle(data.y, subset, data.truth.factors, pc); break;
                    case Method::DivideConquer: {
                        DcConfig dc;
                        dc.M = *cfg.dc_M;
                        dc.threads = 1;
                        est = dc_estimate(data.y, subset, pc, dc);
                        break;
                    }
                }
                table.reports[m][static_cast<std::size_t>(rep)] = evaluate(est, data.truth, subset);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("replication " + std::to_string(rep) + " (seed " + std::to_string(seed) +
                                     ") failed: " + e.what());
        }
    });
    return table;
}

BenchmarkSizes benchmark_sizes(Index T) {
    const double td = static_cast<double>(T);
    // small epsilon guards exact integer powers against pow rounding down
    auto floor_pow = [&](double e) { return static_cast<Index>(std::floor(std::pow(td, e) + 1e-9)); };
    return {floor_pow(0.6), floor_pow(1.4), std::max<Index>(1, floor_pow(0.2))};
}

std::vector<BenchmarkRow> benchmark_dc(const std::vector<Index>& T_grid, int reps, std::uint64_t seed,
                                       PipelineConfig pipeline, int dc_threads) {
    if (reps < 1) throw ValidationError("reps must be >= 1");
    pipeline.retain_weights = false;
    std::vector<BenchmarkRow> rows;
    const Method methods[] = {Method::Method1, Method::Method2, Method::Oracle, Method::DivideConquer};
    for (Index T : T_grid) {
        if (T < 50) throw ValidationError("benchmark T values must be >= 50");
        const BenchmarkSizes sz = benchmark_sizes(T);
        SimConfig sim;
        sim.s = sz.s;
        sim.p = sz.p;
        sim.T = T;
        sim.K = pipeline.K;
        sim.n_reps = reps;
        sim.seed = seed;
        sim.check();
        const SubsetSelector subset = SubsetSelector::range(0, sz.s);

        std::vector<std::vector<ErrorReport>> reports(4);
        std::vector<std::vector<double>> walls(4);
        std::vector<StageTimings> stages(4);
        for (int rep = 0; rep < reps; ++rep) {
            const std::uint64_t rs = derive_seed(replication_seed(seed, rep), static_cast<std::uint64_t>(T));
            SimulatedData data = generate_model(sim, rs);
            PipelineConfig pc = pipeline;
            pc.residual_threshold.cv_seed = derive_seed(rs, 1);
            pc.initial_threshold.cv_seed = derive_seed(rs, 2);
            for (std::size_t m = 0; m < 4; ++m) {
                FactorModelEstimate est;
                switch (methods[m]) {
                    case Method::Method1: est = estimate_method1(data.y, subset, pc); break;
                    case Method::Method2: est = estimate_method2(data.y, subset, pc); break;
                    case Method::Oracle: est = estimate_oracle(data.y, subset, data.truth.factors, pc); break;
                    case Method::DivideConquer: {
                        DcConfig dc;
                        dc.M = sz.M;
                        dc.threads = dc_threads;
                        est = dc_estimate(data.y, subset, pc, dc);
                        break;
                    }
                }
                Matrix sigma_s = restrict_square(data.truth.implied_cov, subset);
                ErrorReport r;
                r.method = methods[m];
                r.relative_norm = relative_norm(est.total_cov, sigma_s);
                r.max_norm = max_norm_diff(est.total_cov, sigma_s);
                r.inv_op_norm = inv_operator_norm_diff(est.total_cov, sigma_s);
                reports[m].push_back(r);
                walls[m].push_back(est.timings.total_ms);
                stages[m] += est.timings;
            }
        }
        for (std::size_t m = 0; m < 4; ++m) {
            BenchmarkRow row;
            row.T = T;
            row.s = sz.s;
            row.p = sz.p;
            row.M = methods[m] == Method::DivideConquer ? sz.M : 1;
            row.method = methods[m];
            std::vector<double> rel, inv, mx;
            for (const auto& r : reports[m]) {
                rel.push_back(r.relative_norm);
                inv.push_back(r.inv_op_norm);
                mx.push_back(r.max_norm);
            }
            row.relative_norm = summarize(rel);
            row.inv_op_norm = summarize(inv);
            row.max_norm = summarize(mx);
            row.wall_ms = summarize(walls[m]);
            const double inv_reps = 1.0 / static_cast<double>(reps);
            row.stages = stages[m];
            row.stages.initial_threshold_ms *= inv_reps;
            row.stages.inversion_ms *= inv_reps;
            row.stages.eigensolve_ms *= inv_reps;
            row.stages.merge_ms *= inv_reps;
            row.stages.residual_ms *= inv_reps;
            row.stages.total_ms *= inv_reps;
            rows.push_back(row);
        }
    }
    return rows;
}

NormalityCheck asymptotic_normality_check(const SimConfig& cfg, PipelineConfig pipeline) {
    cfg.check();
    pipeline.K = cfg.K;
    pipeline.retain_weights = true;
    const SubsetSelector subset = SubsetSelector::range(0, cfg.s);
    const Index K = cfg.K;
    const double root_p = std::sqrt(static_cast<double>(cfg.p));

    std::vector<Matrix> errors(static_cast<std::size_t>(cfg.n_reps));
    std::vector<Matrix> targets(static_cast<std::size_t>(cfg.n_reps));
    for_each_replication(cfg.n_reps, cfg.threads, [&](int rep) {
        const std::uint64_t seed = replication_seed(cfg.seed, rep);
        SimulatedData data = generate_model(cfg, seed);
        PipelineConfig pc = pipeline;
        pc.residual_threshold.cv_seed = derive_seed(seed, 1);
        pc.initial_threshold.cv_seed = derive_seed(seed, 2);
        FactorModelEstimate est = estimate_method2(data.y, subset, pc);
        Matrix h = rotation_for_estimate(est, data.truth);
        errors[static_cast<std::size_t>(rep)] =
            root_p * (est.factors - data.truth.factors * h.transpose());
        Matrix q = data.truth.loadings.transpose() *
                   spd_inverse(data.truth.idio_cov) * data.truth.loadings / static_cast<double>(cfg.p);
        targets[static_cast<std::size_t>(rep)] = spd_inverse(q);
    });

    NormalityCheck out;
    out.target = Matrix::Zero(K, K);
    Matrix second = Matrix::Zero(K, K);
    Vector mean = Vector::Zero(K);
    for (int rep = 0; rep < cfg.n_reps; ++rep) {
        const Matrix& e = errors[static_cast<std::size_t>(rep)];
        second += e.transpose() * e;
        mean += e.colwise().sum().transpose();
        out.pooled += e.rows();
        out.target += targets[static_cast<std::size_t>(rep)];
    }
    const double n = static_cast<double>(out.pooled);
    mean /= n;
    out.empirical_cov = second / n - mean * mean.transpose();
    out.target /= static_cast<double>(cfg.n_reps);
    out.rel_frobenius_gap = (out.empirical_cov - out.target).norm() / out.target.norm();
    return out;
}

}  // namespace factorcov
