#pragma once

#include "factorcov/lda.hpp"
#include "factorcov/metrics.hpp"
#include "factorcov/model_selection.hpp"
#include "factorcov/simulation.hpp"
#include "factorcov/types.hpp"

#include <json.hpp>

#include <iosfwd>

namespace factorcov {

using Json = nlohmann::ordered_json;

Json to_json(const ErrorReport& report);
Json to_json(const StageTimings& timings);
Json to_json(const Matrix& m);  // array of rows

/// Summary of an estimate: method, K, chosen constants, smallest eigenvalue of
/// the idiosyncratic estimate, timings, warnings.
Json estimate_summary(const FactorModelEstimate& est);

Json to_json(const MonteCarloTable& table);
/// One row per (metric, method): metric,method,mean,sd.
void write_table_csv(std::ostream& out, const MonteCarloTable& table);

Json to_json(const std::vector<BenchmarkRow>& rows);
/// Columns T,s,p,M,method,metric,mean,sd,wall_ms.
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);

Json to_json(const KSelectionResult& result);
/// Columns k,criterion.
void write_criterion_csv(std::ostream& out, const KSelectionResult& result);

Json to_json(const FisherReport& report);
Json to_json(const RuleRate& rate, int n_splits);

/// Loadings and idiosyncratic covariance for the fisher subcommand:
/// {"loadings": [[...]], "idio_cov": [[...]]}.
struct LoadingModel {
    Matrix loadings;
    Matrix idio_cov;
};
LoadingModel loading_model_from_json(const Json& j);
Matrix matrix_from_json(const Json& j, const char* what);

}  // namespace factorcov
