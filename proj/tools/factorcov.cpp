#include "factorcov/csv_io.hpp"
#include "factorcov/divide_conquer.hpp"
#include "factorcov/lda.hpp"
#include "factorcov/metrics.hpp"
#include "factorcov/model_selection.hpp"
#include "factorcov/pipeline.hpp"
#include "factorcov/random.hpp"
#include "factorcov/report.hpp"
#include "factorcov/simulation.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace factorcov;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitNumerical = 3;

struct Common {
    std::uint64_t seed = 7;
    int threads = 0;
    std::string output;
    std::string format = "json";
};

void add_common(CLI::App* cmd, Common& c, bool with_format = true) {
    cmd->add_option("--seed", c.seed, "Master random seed")->capture_default_str();
    cmd->add_option("--threads", c.threads, "Worker threads (0: all cores; FACTORCOV_THREADS overrides)")
        ->capture_default_str();
    cmd->add_option("--output,-o", c.output, "Output file (stdout when omitted)");
    if (with_format) {
        cmd->add_option("--format", c.format, "Output format")
            ->check(CLI::IsMember({"json", "csv"}))
            ->capture_default_str();
    }
}

/// Writes through `emit` to the output path, or stdout when it is empty.
template <typename Emit>
void write_output(const std::string& path, Emit&& emit) {
    if (path.empty()) {
        emit(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write " + path);
    emit(f);
}

void print_json(std::ostream& out, const Json& j) {
    out << j.dump(2) << '\n';
}

std::optional<Index> parse_auto_int(const std::string& text, const char* flag) {
    if (text == "auto") return std::nullopt;
    try {
        std::size_t used = 0;
        long long v = std::stoll(text, &used);
        if (used != text.size() || v < 0) throw std::invalid_argument(text);
        return static_cast<Index>(v);
    } catch (const std::exception&) {
        throw ValidationError(std::string(flag) + " expects a nonnegative integer or 'auto'");
    }
}

std::optional<double> parse_auto_double(const std::string& text, const char* flag) {
    if (text == "auto") return std::nullopt;
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size() || !(v >= 0.0)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(std::string(flag) + " expects a nonnegative number or 'auto'");
    }
}

struct EstimateArgs {
    std::string input;
    std::string method = "2";
    std::string k = "3";
    Index k_max = 15;
    Index m = 2;
    std::string c = "auto";
    std::string subset;
    std::string rate_mode = "literal";
    std::string selection = "cv";
    std::string prefix = "estimate";
    Common common;
};

PipelineConfig pipeline_from(const std::string& c, const std::string& rate_mode, const std::string& selection,
                             std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.residual_threshold.C = parse_auto_double(c, "--c");
    const CSelection rule = selection == "cv" ? CSelection::CrossValidation : CSelection::MinPositiveDefinite;
    cfg.initial_threshold.selection = rule;
    cfg.residual_threshold.selection = rule;
    cfg.initial_threshold.cv_seed = derive_seed(seed, 2);
    cfg.residual_threshold.cv_seed = seed;
    cfg.rate_mode = rate_mode == "theory" ? RateMode::TheoryAware : RateMode::Literal;
    return cfg;
}

int run_estimate(const EstimateArgs& a) {
    ObservationMatrix y = read_observation_csv_file(a.input);
    SubsetSelector subset = a.subset.empty() ? SubsetSelector::all(y.p()) : SubsetSelector::parse(a.subset);
    subset.check_against(y.p());
    PipelineConfig cfg = pipeline_from(a.c, a.rate_mode, a.selection, a.common.seed);
    if (std::optional<Index> k = parse_auto_int(a.k, "--k")) {
        cfg.K = *k;
    } else {
        Index n_max = std::min<Index>(a.k_max, std::min(y.p(), y.T()) - 1);
        cfg.K = select_k_eigen_ratio(y.values(), n_max).k_hat;
    }

    FactorModelEstimate est;
    if (a.method == "1") {
        est = estimate_method1(y, subset, cfg);
    } else if (a.method == "2") {
        est = estimate_method2(y, subset, cfg);
    } else if (a.method == "dc") {
        DcConfig dc;
        dc.M = a.m;
        dc.threads = a.common.threads;
        est = dc_estimate(y, subset, cfg, dc);
    } else {
        throw ValidationError("--method must be 1, 2 or dc (the oracle needs true factors; see simulate)");
    }

    const std::filesystem::path dir = a.common.output.empty() ? std::filesystem::path(".") : std::filesystem::path(a.common.output);
    std::filesystem::create_directories(dir);
    std::vector<std::string> ids;
    for (Index i : subset.indices()) ids.push_back(y.variable_ids()[static_cast<std::size_t>(i)]);
    write_matrix_csv_file((dir / (a.prefix + "_cov.csv")).string(), est.total_cov, ids);
    write_matrix_csv_file((dir / (a.prefix + "_idio_cov.csv")).string(), est.idio_cov, ids);
    write_matrix_csv_file((dir / (a.prefix + "_loadings.csv")).string(), est.loadings, ids);
    write_matrix_csv_file((dir / (a.prefix + "_factors.csv")).string(), est.factors);
    Json summary = estimate_summary(est);
    summary["subset_size"] = subset.size();
    write_output((dir / (a.prefix + "_summary.json")).string(), [&](std::ostream& o) { print_json(o, summary); });
    for (const auto& w : est.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
}

struct SimulateArgs {
    SimConfig sim;
    Index dc_m = 0;
    std::string rate_mode = "literal";
    std::string selection = "cv";
    Common common;
};

int run_simulate(SimulateArgs a) {
    a.sim.seed = a.common.seed;
    a.sim.threads = a.common.threads;
    if (a.dc_m > 0) a.sim.dc_M = a.dc_m;
    PipelineConfig cfg = pipeline_from("auto", a.rate_mode, a.selection, a.common.seed);
    MonteCarloTable table = monte_carlo_table(a.sim, cfg);
    write_output(a.common.output, [&](std::ostream& o) {
        if (a.common.format == "csv") {
            write_table_csv(o, table);
        } else {
            print_json(o, to_json(table));
        }
    });
    return 0;
}

struct BenchmarkArgs {
    std::vector<Index> t_grid{200, 350, 500};
    int reps = 3;
    Common common;
};

int run_benchmark(const BenchmarkArgs& a) {
    std::vector<BenchmarkRow> rows = benchmark_dc(a.t_grid, a.reps, a.common.seed, {}, a.common.threads);
    write_output(a.common.output, [&](std::ostream& o) {
        if (a.common.format == "csv") {
            write_benchmark_csv(o, rows);
        } else {
            print_json(o, to_json(rows));
        }
    });
    return 0;
}

struct SelectKArgs {
    std::string input;
    Index n = 15;
    std::string penalty = "gp1";
    bool center = false;
    Common common;
};

int run_select_k(const SelectKArgs& a) {
    ObservationMatrix y = read_observation_csv_file(a.input);
    KPenalty penalty = parse_penalty(a.penalty);
    KSelectionResult r = penalty == KPenalty::EigenRatio ? select_k_eigen_ratio(y.values(), a.n, a.center)
                                                         : select_k_ic(y.values(), a.n, penalty, a.center);
    write_output(a.common.output, [&](std::ostream& o) {
        if (a.common.format == "csv") {
            write_criterion_csv(o, r);
        } else {
            print_json(o, to_json(r));
        }
    });
    return 0;
}

struct ClassifyArgs {
    std::string input;
    std::string labels;
    Index k = 3;
    Index s_max = 50;
    int splits = 100;
    Index test_size = 10;
    std::string centering = "class";
    Common common;
};

int run_classify(const ClassifyArgs& a) {
    ObservationMatrix y = read_observation_csv_file(a.input);
    std::vector<int> labels = read_labels_file(a.labels);
    SplitExperiment exp;
    exp.n_splits = a.splits;
    exp.test_size = a.test_size;
    exp.s_max = a.s_max;
    exp.seed = a.common.seed;
    for (LdaCovariance cov : {LdaCovariance::Method1, LdaCovariance::Method2}) {
        LdaFitConfig fit;
        fit.covariance = cov;
        fit.centering = a.centering == "pooled" ? LdaCentering::Pooled : LdaCentering::ByClass;
        fit.pipeline.K = a.k;
        fit.pipeline.residual_threshold.cv_seed = a.common.seed;
        fit.pipeline.initial_threshold.cv_seed = derive_seed(a.common.seed, 2);
        exp.rules.push_back(fit);
    }
    std::vector<RuleRate> rates = misclassification_rate(y.values(), labels, exp);
    Json out = Json::array();
    for (const auto& r : rates) out.push_back(to_json(r, a.splits));
    write_output(a.common.output, [&](std::ostream& o) { print_json(o, out); });
    return 0;
}

struct FisherArgs {
    std::string input;
    std::string subset;
    double block_tol = 0.0;
    Common common;
};

int run_fisher(const FisherArgs& a) {
    std::ifstream f(a.input);
    if (!f) throw ValidationError("cannot open " + a.input);
    Json j;
    try {
        j = Json::parse(f);
    } catch (const Json::parse_error& e) {
        throw ValidationError(std::string("malformed model JSON: ") + e.what());
    }
    LoadingModel model = loading_model_from_json(j);
    SubsetSelector subset = SubsetSelector::parse(a.subset);
    FisherReport r = fisher_dominance(model.loadings, model.idio_cov, subset, a.block_tol);
    write_output(a.common.output, [&](std::ostream& o) { print_json(o, to_json(r)); });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Factor-model covariance estimation for a variable subset"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "factorcov 0.1.0");

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Estimate the subset covariance from a p x T CSV panel");
    estimate->add_option("input", est.input, "CSV panel, rows are variables")->required()->check(CLI::ExistingFile);
    estimate->add_option("--method", est.method, "1, 2 or dc")
        ->check(CLI::IsMember({"1", "2", "dc"}))
        ->capture_default_str();
    estimate->add_option("--k", est.k, "Number of factors or 'auto'")->capture_default_str();
    estimate->add_option("--k-max", est.k_max, "Largest K considered by --k auto")->capture_default_str();
    estimate->add_option("--m", est.m, "Divide-and-conquer groups")->capture_default_str();
    estimate->add_option("--c", est.c, "Residual threshold constant or 'auto'")->capture_default_str();
    estimate->add_option("--subset", est.subset, "Rows of S, e.g. 0..49,100 (default: all)");
    estimate->add_option("--rate-mode", est.rate_mode, "literal or theory")
        ->check(CLI::IsMember({"literal", "theory"}))
        ->capture_default_str();
    estimate->add_option("--c-selection", est.selection, "cv or min-pd, for both threshold stages")
        ->check(CLI::IsMember({"cv", "min-pd"}))
        ->capture_default_str();
    estimate->add_option("--prefix", est.prefix, "Output file prefix")->capture_default_str();
    add_common(estimate, est.common, false);
    estimate->get_option("--output")->description("Output directory (default: current directory)");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo comparison of the estimators");
    simulate->add_option("--s", sim.sim.s, "Subset size")->capture_default_str();
    simulate->add_option("--p", sim.sim.p, "Panel dimension")->capture_default_str();
    simulate->add_option("--t", sim.sim.T, "Time points")->capture_default_str();
    simulate->add_option("--k", sim.sim.K, "Number of factors")->capture_default_str();
    simulate->add_option("--reps", sim.sim.n_reps, "Replications")->capture_default_str();
    simulate->add_option("--dc-m", sim.dc_m, "Also run divide-and-conquer with this many groups");
    simulate->add_flag("--heteroscedastic", sim.sim.heteroscedastic, "Uniform idiosyncratic variances");
    simulate->add_option("--rate-mode", sim.rate_mode, "literal or theory")
        ->check(CLI::IsMember({"literal", "theory"}))
        ->capture_default_str();
    simulate->add_option("--c-selection", sim.selection, "cv or min-pd, for both threshold stages")
        ->check(CLI::IsMember({"cv", "min-pd"}))
        ->capture_default_str();
    sim.common.format = "csv";
    add_common(simulate, sim.common);

    BenchmarkArgs bench;
    auto* benchmark = app.add_subcommand("benchmark", "Divide-and-conquer timing benchmark");
    benchmark->add_option("--t", bench.t_grid, "Grid of T values")->delimiter(',')->capture_default_str();
    benchmark->add_option("--reps", bench.reps, "Replications per T")->capture_default_str();
    bench.common.format = "csv";
    add_common(benchmark, bench.common);

    SelectKArgs sk;
    auto* select_k = app.add_subcommand("select-k", "Choose the number of factors");
    select_k->add_option("input", sk.input, "CSV panel")->required()->check(CLI::ExistingFile);
    select_k->add_option("--n", sk.n, "Largest K considered")->capture_default_str();
    select_k->add_option("--penalty", sk.penalty, "gp1, gp2 or ratio")
        ->check(CLI::IsMember({"gp1", "gp2", "ratio", "eigen_ratio", "eigen-ratio"}))
        ->capture_default_str();
    select_k->add_flag("--center", sk.center, "Demean every row first");
    add_common(select_k, sk.common);

    ClassifyArgs cl;
    auto* classify = app.add_subcommand("classify", "Repeated-split LDA error rates (LDA-1 vs LDA-2)");
    classify->add_option("input", cl.input, "CSV panel, columns are subjects")->required()->check(CLI::ExistingFile);
    classify->add_option("--labels", cl.labels, "One 0/1 label per line")->required()->check(CLI::ExistingFile);
    classify->add_option("--k", cl.k, "Number of factors")->capture_default_str();
    classify->add_option("--s-max", cl.s_max, "Screened variables per split")->capture_default_str();
    classify->add_option("--splits", cl.splits, "Random splits")->capture_default_str();
    classify->add_option("--test-size", cl.test_size, "Test subjects per split")->capture_default_str();
    classify->add_option("--centering", cl.centering, "class or pooled")
        ->check(CLI::IsMember({"class", "pooled"}))
        ->capture_default_str();
    add_common(classify, cl.common, false);

    FisherArgs fi;
    auto* fisher = app.add_subcommand("fisher", "Fisher information of the full panel versus a subset");
    fisher->add_option("input", fi.input, "model JSON with loadings and idio_cov")->required()->check(
        CLI::ExistingFile);
    fisher->add_option("--subset", fi.subset, "Rows of S")->required();
    fisher->add_option("--block-tol", fi.block_tol, "Tolerance for the block-diagonal flag")->capture_default_str();
    add_common(fisher, fi.common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadInput;
    }

    try {
        if (*estimate) return run_estimate(est);
        if (*simulate) return run_simulate(sim);
        if (*benchmark) return run_benchmark(bench);
        if (*select_k) return run_select_k(sk);
        if (*classify) return run_classify(cl);
        if (*fisher) return run_fisher(fi);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBadInput;
    }
    return 0;
}
