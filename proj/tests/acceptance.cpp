// Acceptance harness: one PASS/FAIL line per criterion.

#define DOCTEST_CONFIG_DISABLE
#include "invariants.hpp"

#include "factorcov/lda.hpp"
#include "factorcov/model_selection.hpp"
#include "factorcov/random.hpp"
#include "factorcov/simulation.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

using namespace factorcov;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

bool within_rel(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

double rel_gap(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Criteria 1 and 2 share one Monte-Carlo run.
const MonteCarloTable& baseline_table() {
    static const MonteCarloTable table = [] {
        SimConfig cfg;
        cfg.s = 50;
        cfg.p = 1000;
        cfg.T = 200;
        cfg.n_reps = 50;
        cfg.seed = 2024;
        cfg.threads = 0;
        return monte_carlo_table(cfg);
    }();
    return table;
}

Outcome baseline_relative_norm() {
    const MonteCarloTable& t = baseline_table();
    const double m1 = t.summary(Method::Method1, Metric::RelativeNorm).mean;
    const double m2 = t.summary(Method::Method2, Metric::RelativeNorm).mean;
    const double ora = t.summary(Method::Oracle, Metric::RelativeNorm).mean;
    const bool pass = within(m1, 0.24, 0.30) && within(m2, 0.18, 0.23) && within(ora, 0.18, 0.23) &&
                      rel_gap(m2, ora) < 0.05;
    return {pass, "relative norm M1 " + fmt(m1) + " in [0.24,0.30], M2 " + fmt(m2) + " in [0.18,0.23], ORA " +
                      fmt(ora) + " in [0.18,0.23], |M2-ORA|/ORA " + fmt(rel_gap(m2, ora)) + " < 0.05"};
}

Outcome baseline_factor_errors() {
    const MonteCarloTable& t = baseline_table();
    const double f1 = t.summary(Method::Method1, Metric::FactorErr).mean;
    const double f2 = t.summary(Method::Method2, Metric::FactorErr).mean;
    const double l2 = t.summary(Method::Method2, Metric::LoadingErr).mean;
    const bool pass = within_rel(f1, 1.811, 0.2) && within_rel(f2, 0.445, 0.2) && within_rel(l2, 4.100, 0.2);
    return {pass, "factor err M1 " + fmt(f1) + " (1.811 +-20%), M2 " + fmt(f2) + " (0.445 +-20%); loading err M2 " +
                      fmt(l2) + " (4.100 +-20%), squared " + fmt(l2 * l2) + " for reference"};
}

Outcome large_subset_gain_vanishes() {
    SimConfig cfg;
    cfg.s = 800;
    cfg.p = 1000;
    cfg.T = 200;
    cfg.n_reps = 30;
    cfg.seed = 2025;
    cfg.threads = 0;
    MonteCarloTable t = monte_carlo_table(cfg);
    const double m1 = t.summary(Method::Method1, Metric::RelativeNorm).mean;
    const double m2 = t.summary(Method::Method2, Metric::RelativeNorm).mean;
    const double gap = rel_gap(m2, m1);
    return {gap < 0.02, "relative norm M1 " + fmt(m1) + ", M2 " + fmt(m2) + ", |M1-M2|/M1 " + fmt(gap) + " < 0.02"};
}

Outcome divide_and_conquer_benchmark() {
    std::vector<BenchmarkRow> rows = benchmark_dc({200, 350, 500}, 2, 2026, PipelineConfig{}, 1);
    std::map<std::pair<Index, Method>, const BenchmarkRow*> by;
    for (const auto& r : rows) by[{r.T, r.method}] = &r;
    bool pass = true;
    std::ostringstream detail;
    for (Index T : {200, 350, 500}) {
        const double dc = by[{T, Method::DivideConquer}]->relative_norm.mean;
        const double m2 = by[{T, Method::Method2}]->relative_norm.mean;
        const double gap = rel_gap(dc, m2);
        pass = pass && gap <= 0.05;
        detail << "T=" << T << " |DC-M2|/M2 " << fmt(gap) << "; ";
    }
    const double wall_dc = by[{500, Method::DivideConquer}]->wall_ms.mean;
    const double wall_m2 = by[{500, Method::Method2}]->wall_ms.mean;
    const double speedup = wall_m2 / wall_dc;
    pass = pass && wall_dc < wall_m2 && speedup >= 3.0;
    detail << "T=500 (p=" << by[{500, Method::Method2}]->p << ", M=" << by[{500, Method::DivideConquer}]->M
           << ") wall M2 " << fmt(wall_m2, 0) << " ms, DC " << fmt(wall_dc, 0) << " ms, speedup " << fmt(speedup, 2)
           << "x (>= 3x)";
    return {pass, detail.str()};
}

Outcome factor_normality() {
    SimConfig cfg;
    cfg.s = 50;
    cfg.p = 2000;
    cfg.T = 400;
    cfg.n_reps = 6;
    cfg.seed = 2027;
    cfg.threads = 0;
    NormalityCheck nc = asymptotic_normality_check(cfg);
    const bool pass = nc.pooled >= 2000 && nc.rel_frobenius_gap <= 0.25;
    return {pass, "pooled " + std::to_string(nc.pooled) + ", diag(emp) (" + fmt(nc.empirical_cov(0, 0), 2) + ", " +
                      fmt(nc.empirical_cov(1, 1), 2) + ", " + fmt(nc.empirical_cov(2, 2), 2) +
                      "), target diag " + fmt(nc.target(0, 0), 2) + ", rel Frobenius gap " +
                      fmt(nc.rel_frobenius_gap) + " <= 0.25"};
}

Outcome invariant_suite() {
    support::InvariantDeviations worst;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        support::InvariantDeviations d = support::check_invariants(seed);
        worst.orthonormality = std::max(worst.orthonormality, d.orthonormality);
        worst.diagonality = std::max(worst.diagonality, d.diagonality);
        worst.identity_weight_pca = std::max(worst.identity_weight_pca, d.identity_weight_pca);
        worst.dc_single_group_equal = worst.dc_single_group_equal && d.dc_single_group_equal;
        worst.threshold_monotone = worst.threshold_monotone && d.threshold_monotone;
        worst.relative_norm_of_double = std::max(worst.relative_norm_of_double, d.relative_norm_of_double);
    }
    const bool pass = worst.orthonormality < 1e-8 && worst.diagonality <= 1e-6 && worst.identity_weight_pca < 1e-8 &&
                      worst.dc_single_group_equal && worst.threshold_monotone &&
                      worst.relative_norm_of_double <= 1e-12;
    std::ostringstream d;
    d << "20 panels: orthonormality " << worst.orthonormality << ", off-diagonal " << worst.diagonality
      << ", identity-weight vs PCA " << worst.identity_weight_pca << ", M=1 bit-equal "
      << (worst.dc_single_group_equal ? "yes" : "no") << ", monotone " << (worst.threshold_monotone ? "yes" : "no")
      << ", |relnorm(2S,S)-1| " << worst.relative_norm_of_double;
    return {pass, d.str()};
}

Outcome block_diagonal_dominance() {
    Rng rng(2028);
    double worst = std::numeric_limits<double>::infinity();
    int failures = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const Index K = std::uniform_int_distribution<Index>(1, 4)(rng);
        const Index p = std::uniform_int_distribution<Index>(2, 40)(rng);
        const Index s = std::uniform_int_distribution<Index>(1, p - 1)(rng);
        Matrix b = normal_matrix(p, K, 1.0, rng);
        Matrix su = Matrix::Zero(p, p);
        su.topLeftCorner(s, s) = support::random_spd(s, rng());
        su.bottomRightCorner(p - s, p - s) = support::random_spd(p - s, rng());
        FisherReport r = fisher_dominance(b, su, SubsetSelector::range(0, s));
        worst = std::min(worst, r.min_eig_diff);
        failures += r.min_eig_diff >= -1e-10 && r.block_diagonal ? 0 : 1;
    }
    return {failures == 0, "1000 instances, smallest lambda_min " + fmt(worst, 12) + " (>= -1e-10), violations " +
                               std::to_string(failures)};
}

Outcome expected_dominance() {
    const Index p = 30;
    Matrix su = support::random_spd(p, 2029);
    Matrix off = su.topRightCorner(10, p - 10);
    LoadingSampler sampler = [](std::uint64_t seed) {
        Rng rng(seed);
        return normal_matrix(30, 3, 1.0, rng);
    };
    FisherReport r = fisher_dominance_expected(sampler, su, SubsetSelector::range(0, 10), 2000, 2029);
    const bool pass = r.min_eig_diff >= -0.05 * r.max_eig_diff && off.cwiseAbs().maxCoeff() > 0.0;
    return {pass, "2000 draws, dense Sigma_u (max |cross block| " + fmt(off.cwiseAbs().maxCoeff(), 3) +
                      "): lambda_min " + fmt(r.min_eig_diff) + " >= -0.05 * lambda_max " + fmt(r.max_eig_diff)};
}

Outcome k_selection() {
    SimConfig cfg;
    cfg.s = 50;
    cfg.p = 500;
    cfg.T = 200;
    int ic_hits = 0, ratio_hits = 0;
    for (int rep = 0; rep < 100; ++rep) {
        SimulatedData d = generate_model(cfg, replication_seed(2030, rep));
        ic_hits += select_k_ic(d.y.values(), 8, KPenalty::Gp1).k_hat == 3 ? 1 : 0;
        ratio_hits += select_k_eigen_ratio(d.y.values(), 8).k_hat == 3 ? 1 : 0;
    }
    return {ic_hits >= 95 && ratio_hits >= 95, "K-hat = 3 in " + std::to_string(ic_hits) + "/100 (gp1), " +
                                                   std::to_string(ratio_hits) + "/100 (eigen ratio), need >= 95"};
}

Outcome oracle_loading_rate() {
    auto mean_error = [](Index T) {
        SimConfig cfg;
        cfg.s = 100;
        cfg.p = 100;
        cfg.T = T;
        double sum = 0.0;
        const int reps = 50;
        for (int rep = 0; rep < reps; ++rep) {
            SimulatedData d = generate_model(cfg, replication_seed(2031 + static_cast<std::uint64_t>(T), rep));
            SubsetSelector s = SubsetSelector::all(100);
            FactorModelEstimate est = estimate_oracle(d.y, s, d.truth.factors, PipelineConfig{});
            sum += loading_error(est.loadings, d.truth.loadings, Matrix::Identity(3, 3));
        }
        return sum / reps;
    };
    const double e400 = mean_error(400);
    const double e1600 = mean_error(1600);
    const double ratio = e1600 / e400;
    return {within_rel(ratio, 0.5, 0.2), "oracle loading err T=400 " + fmt(e400) + ", T=1600 " + fmt(e1600) +
                                             ", ratio " + fmt(ratio) + " (0.5 +-20%)"};
}

Outcome lda_direction() {
    // Two balanced classes sharing a three-factor covariance with weak
    // per-variable loadings, so the factors are identified far better from all
    // 1000 variables than from the 50 screened ones. The mean gap sits on the
    // first 50 variables.
    const Index p = 1000, n = 80, K = 3;
    Rng rng(2032);
    Matrix b = normal_matrix(p, K, 0.5, rng);
    Matrix f = normal_matrix(n, K, 1.0, rng);
    Matrix data = b * f.transpose() + normal_matrix(p, n, 1.0, rng);
    std::vector<int> labels;
    for (Index j = 0; j < n; ++j) {
        labels.push_back(static_cast<int>(j % 2));
        if (j % 2 == 1) data.col(j).head(50).array() += 0.5;
    }
    SplitExperiment exp;
    exp.n_splits = 50;
    exp.test_size = 10;
    exp.s_max = 50;
    exp.seed = 2032;
    LdaFitConfig one, two;
    one.covariance = LdaCovariance::Method1;
    two.covariance = LdaCovariance::Method2;
    one.pipeline.K = two.pipeline.K = K;
    exp.rules = {one, two};
    std::vector<RuleRate> rates = misclassification_rate(data, labels, exp);
    return {rates[1].mean_rate <= rates[0].mean_rate, "50 splits: LDA-1 " + fmt(rates[0].mean_rate) + " (sd " +
                                                          fmt(rates[0].sd_rate) + "), LDA-2 " +
                                                          fmt(rates[1].mean_rate) + " (sd " + fmt(rates[1].sd_rate) +
                                                          "), need LDA-2 <= LDA-1"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    std::vector<int> allowed;
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_option("--known-failure", allowed,
                   "Criteria whose failure is a recorded deviation; reported but not counted in the exit status")
        ->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"baseline design relative norms", baseline_relative_norm},
        {"baseline design factor and loading errors", baseline_factor_errors},
        {"gain vanishes when s ~ p", large_subset_gain_vanishes},
        {"divide-and-conquer accuracy and speed", divide_and_conquer_benchmark},
        {"factor estimate covariance", factor_normality},
        {"invariant suite", invariant_suite},
        {"information dominance, block-diagonal noise", block_diagonal_dominance},
        {"expected information dominance, dense noise", expected_dominance},
        {"number of factors", k_selection},
        {"oracle loading rate", oracle_loading_rate},
        {"LDA direction", lda_direction},
    };
    const std::set<int> selected(only.begin(), only.end());
    const std::set<int> known(allowed.begin(), allowed.end());
    int counted_failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[k].second();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool excused = !out.pass && known.count(id);
        if (!out.pass && !excused) ++counted_failures;
        std::printf("[%2d] %s  %s: %s [%.1fs]%s\n", id, out.pass ? "PASS" : "FAIL", criteria[k].first,
                    out.detail.c_str(), secs, excused ? " (known deviation)" : "");
        std::fflush(stdout);
    }
    return counted_failures == 0 ? 0 : 1;
}
