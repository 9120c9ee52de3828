#include "factorcov/report.hpp"

#include "factorcov/csv_io.hpp"

#include <cmath>
#include <ostream>

namespace factorcov {

namespace {

Json number(double v) {
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

void write_summary_row(std::ostream& out, std::string_view a, std::string_view b, const MetricSummary& s) {
    out << a << ',' << b << ',' << format_double(s.mean) << ',' << format_double(s.sd) << '\n';
}

}  // namespace

Json to_json(const ErrorReport& r) {
    Json j;
    j["method"] = std::string(to_string(r.method));
    j["relative_norm"] = number(r.relative_norm);
    j["inv_op_norm"] = number(r.inv_op_norm);
    j["max_norm"] = number(r.max_norm);
    j["factor_err"] = number(r.factor_err);
    j["loading_err"] = number(r.loading_err);
    j["component_err"] = number(r.component_err);
    return j;
}

Json to_json(const StageTimings& t) {
    Json j;
    j["initial_threshold_ms"] = t.initial_threshold_ms;
    j["inversion_ms"] = t.inversion_ms;
    j["eigensolve_ms"] = t.eigensolve_ms;
    j["merge_ms"] = t.merge_ms;
    j["residual_ms"] = t.residual_ms;
    j["total_ms"] = t.total_ms;
    return j;
}

Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index k = 0; k < m.cols(); ++k) row.push_back(number(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json estimate_summary(const FactorModelEstimate& est) {
    Json j;
    j["method"] = std::string(to_string(est.method));
    j["K"] = est.factors.cols();
    j["T"] = est.factors.rows();
    j["s"] = est.loadings.rows();
    j["initial_C"] = est.initial_C;
    j["residual_C"] = est.residual_C;
    double lmin = 0.0;
    if (est.idio_cov.size() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> ev(est.idio_cov, Eigen::EigenvaluesOnly);
        lmin = ev.eigenvalues()(0);
    }
    j["idio_cov_min_eigenvalue"] = number(lmin);
    Json eig = Json::array();
    for (Index k = 0; k < est.eig_diag.size(); ++k) eig.push_back(est.eig_diag(k));
    j["eig_diag"] = eig;
    j["jitter_applied"] = est.jitter_applied;
    j["timings"] = to_json(est.timings);
    j["warnings"] = est.warnings;
    return j;
}

Json to_json(const MonteCarloTable& table) {
    const SimConfig& c = table.config;
    Json j;
    j["s"] = c.s;
    j["p"] = c.p;
    j["T"] = c.T;
    j["K"] = c.K;
    j["n_reps"] = c.n_reps;
    j["seed"] = c.seed;
    Json metrics = Json::object();
    for (Metric metric : kAllMetrics) {
        Json per = Json::object();
        for (Method m : table.methods) {
            MetricSummary s = table.summary(m, metric);
            per[std::string(to_string(m))] = {{"mean", number(s.mean)}, {"sd", number(s.sd)}};
        }
        metrics[std::string(to_string(metric))] = per;
    }
    j["metrics"] = metrics;
    return j;
}

void write_table_csv(std::ostream& out, const MonteCarloTable& table) {
    out << "metric,method,mean,sd\n";
    for (Metric metric : kAllMetrics) {
        for (Method m : table.methods) write_summary_row(out, to_string(metric), to_string(m), table.summary(m, metric));
    }
}

Json to_json(const std::vector<BenchmarkRow>& rows) {
    Json arr = Json::array();
    for (const auto& r : rows) {
        Json j;
        j["T"] = r.T;
        j["s"] = r.s;
        j["p"] = r.p;
        j["M"] = r.M;
        j["method"] = std::string(to_string(r.method));
        j["relative_norm"] = {{"mean", number(r.relative_norm.mean)}, {"sd", number(r.relative_norm.sd)}};
        j["inv_op_norm"] = {{"mean", number(r.inv_op_norm.mean)}, {"sd", number(r.inv_op_norm.sd)}};
        j["max_norm"] = {{"mean", number(r.max_norm.mean)}, {"sd", number(r.max_norm.sd)}};
        j["wall_ms"] = {{"mean", number(r.wall_ms.mean)}, {"sd", number(r.wall_ms.sd)}};
        j["stages"] = to_json(r.stages);
        arr.push_back(std::move(j));
    }
    return arr;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
    out << "T,s,p,M,method,metric,mean,sd,wall_ms\n";
    for (const auto& r : rows) {
        const std::pair<const char*, const MetricSummary*> metrics[] = {
            {"relative_norm", &r.relative_norm}, {"inv_op_norm", &r.inv_op_norm}, {"max_norm", &r.max_norm}};
        for (const auto& [name, s] : metrics) {
            out << r.T << ',' << r.s << ',' << r.p << ',' << r.M << ',' << to_string(r.method) << ',' << name << ','
                << format_double(s->mean) << ',' << format_double(s->sd) << ',' << format_double(r.wall_ms.mean)
                << '\n';
        }
    }
}

Json to_json(const KSelectionResult& result) {
    Json j;
    j["k_hat"] = result.k_hat;
    j["penalty"] = std::string(to_string(result.penalty));
    Json curve = Json::array();
    for (double v : result.criterion_values) curve.push_back(number(v));
    j["criterion"] = curve;
    return j;
}

void write_criterion_csv(std::ostream& out, const KSelectionResult& result) {
    out << "k,criterion\n";
    for (std::size_t k = 0; k < result.criterion_values.size(); ++k) {
        const double v = result.criterion_values[k];
        out << k << ',' << (std::isnan(v) ? std::string() : format_double(v)) << '\n';
    }
}

Json to_json(const FisherReport& r) {
    Json j;
    j["info_full"] = to_json(r.info_full);
    j["info_subset"] = to_json(r.info_subset);
    j["min_eig_diff"] = r.min_eig_diff;
    j["max_eig_diff"] = r.max_eig_diff;
    j["psd"] = r.min_eig_diff >= -1e-10 * std::max(1.0, std::abs(r.max_eig_diff));
    j["block_diagonal"] = r.block_diagonal;
    return j;
}

Json to_json(const RuleRate& rate, int n_splits) {
    Json j;
    j["rule"] = rate.covariance == LdaCovariance::Method1 ? "LDA-1" : "LDA-2";
    j["mean_rate"] = rate.mean_rate;
    j["sd_rate"] = number(rate.sd_rate);
    j["n_splits"] = n_splits;
    return j;
}

Matrix matrix_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw ValidationError(std::string(what) + ": expected a nonempty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) {
            throw ValidationError(std::string(what) + ": row " + std::to_string(i) + " has the wrong length");
        }
        for (std::size_t k = 0; k < cols; ++k) {
            if (!j[i][k].is_number()) {
                throw ValidationError(std::string(what) + ": non-numeric entry at (" + std::to_string(i) + "," +
                                      std::to_string(k) + ")");
            }
            m(static_cast<Index>(i), static_cast<Index>(k)) = j[i][k].get<double>();
        }
    }
    return m;
}

LoadingModel loading_model_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("loadings") || !j.contains("idio_cov")) {
        throw ValidationError("model JSON needs \"loadings\" and \"idio_cov\"");
    }
    LoadingModel m{matrix_from_json(j["loadings"], "loadings"), matrix_from_json(j["idio_cov"], "idio_cov")};
    if (m.idio_cov.rows() != m.loadings.rows() || m.idio_cov.cols() != m.loadings.rows()) {
        throw ValidationError("idio_cov must be p x p with p the number of loading rows");
    }
    return m;
}

}  // namespace factorcov
