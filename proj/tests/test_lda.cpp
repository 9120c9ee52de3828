#include "support.hpp"

#include "factorcov/lda.hpp"
#include "factorcov/random.hpp"

#include <cmath>

using namespace factorcov;

namespace {

struct TwoClass {
    Matrix data;  // p x n
    std::vector<int> labels;
};

// Balanced classes with factor-structured noise and mean gap `shift` on the
// first `informative` variables of class 1.
TwoClass two_class_panel(Index p, Index n, Index K, Index informative, double shift, std::uint64_t seed) {
    Rng rng(seed);
    Matrix b = normal_matrix(p, K, 1.0, rng);
    Matrix f = normal_matrix(n, K, 1.0, rng);
    Matrix u = normal_matrix(p, n, 1.0, rng);
    TwoClass out{b * f.transpose() + u, {}};
    for (Index j = 0; j < n; ++j) {
        const int label = j % 2 == 0 ? 0 : 1;
        out.labels.push_back(label);
        if (label == 1) out.data.col(j).head(informative).array() += shift;
    }
    return out;
}

LdaFitConfig rule_config(LdaCovariance cov, Index K) {
    LdaFitConfig cfg;
    cfg.covariance = cov;
    cfg.pipeline.K = K;
    return cfg;
}

}  // namespace

TEST_CASE("t statistic on a hand example") {
    Matrix y(1, 4);
    y << 0, 2, 4, 6;
    Vector t = two_sample_t(y, {0, 0, 1, 1});
    // means 1 and 5, variances 2 and 2: se = sqrt(2/2 + 2/2)
    CHECK(t(0) == doctest::Approx(4.0 / std::sqrt(2.0)));
    Matrix flat = Matrix::Ones(1, 4);
    CHECK(two_sample_t(flat, {0, 0, 1, 1})(0) == 0.0);
    Matrix step(1, 4);
    step << 1, 1, 3, 3;
    CHECK(std::isinf(two_sample_t(step, {0, 0, 1, 1})(0)));
}

TEST_CASE("screening picks the separated variable") {
    Matrix y = support::random_matrix(20, 40, 201);
    std::vector<int> labels;
    for (Index j = 0; j < 40; ++j) labels.push_back(j < 20 ? 0 : 1);
    y.row(7).tail(20).array() += 10.0;
    SubsetSelector s = screen_variables(y, labels, 1);
    REQUIRE(s.size() == 1);
    CHECK(s[0] == 7);
    CHECK(screen_variables(y, labels, 20).indices() == SubsetSelector::all(20).indices());
    CHECK_THROWS_AS(screen_variables(y, labels, 0), ValidationError);
    CHECK_THROWS_AS(screen_variables(y, labels, 21), ValidationError);
}

TEST_CASE("screening ties prefer the lower index") {
    Matrix y(3, 4);
    y << 0, 0, 1, 1,
         0, 0, 1, 1,
         0, 0, 1, 1;
    SubsetSelector s = screen_variables(y, {0, 0, 1, 1}, 2);
    CHECK(s.indices() == std::vector<Index>{0, 1});
}

TEST_CASE("label errors") {
    Matrix y = support::random_matrix(5, 6, 202);
    CHECK_THROWS_WITH_AS(screen_variables(y, {1, 1, 1, 1, 1, 1}, 2), doctest::Contains("single-class"),
                         ValidationError);
    CHECK_THROWS_AS(two_sample_t(y, {0, 1, 2, 0, 1, 0}), ValidationError);
    CHECK_THROWS_AS(two_sample_t(y, {0, 1}), ValidationError);
    CHECK_THROWS_AS(fit_lda(y, {0, 0, 0, 0, 0, 1}, SubsetSelector({0, 1, 2}), rule_config(LdaCovariance::Method2, 1)),
                    ValidationError);
    Matrix narrow = support::random_matrix(5, 3, 203);
    CHECK_THROWS_AS(fit_lda(narrow, {0, 1, 1}, SubsetSelector({0, 1, 2}), rule_config(LdaCovariance::Method2, 1)),
                    ValidationError);
}

TEST_CASE("classify examples") {
    LdaRule rule{Vector::Zero(2), Vector::Zero(2), Matrix::Identity(2, 2), SubsetSelector({0, 1})};
    rule.delta_hat << 1, 0;
    Vector x(2);
    x << 1, 0;
    CHECK(discriminant(x, rule) == doctest::Approx(1.0));
    CHECK(classify(x, rule) == 1);
    CHECK(discriminant(rule.mu_bar, rule) == 0.0);
    CHECK(classify(rule.mu_bar, rule) == 1);
    CHECK(classify(-rule.delta_hat, rule) == 0);
    CHECK_THROWS_AS(classify(Vector::Zero(3), rule), ValidationError);
}

TEST_CASE("error rate") {
    CHECK(error_rate({0, 0, 0, 0}, {0, 1, 0, 1}) == 0.5);
    CHECK(error_rate({1, 0}, {1, 0}) == 0.0);
    CHECK_THROWS_AS(error_rate({}, {}), ValidationError);
    CHECK_THROWS_AS(error_rate({1}, {1, 0}), ValidationError);
}

TEST_CASE("identity covariance: the rule splits along delta") {
    Rng rng(204);
    const Index p = 6, n = 400;
    Matrix y = normal_matrix(p, n, 1.0, rng);
    std::vector<int> labels;
    for (Index j = 0; j < n; ++j) {
        labels.push_back(static_cast<int>(j % 2));
        if (j % 2 == 1) y.col(j).head(2).array() += 3.0;
    }
    LdaRule rule = fit_lda(y, labels, SubsetSelector::all(p), rule_config(LdaCovariance::Method2, 1));
    Matrix test = normal_matrix(p, 200, 2.0, rng);
    int agree = 0;
    for (Index j = 0; j < test.cols(); ++j) {
        const double analytic = rule.delta_hat.dot(Vector(test.col(j)) - rule.mu_bar);
        agree += (analytic >= 0.0) == (classify(test.col(j), rule) == 1) ? 1 : 0;
    }
    CHECK(agree >= 190);
    CHECK(support::max_abs_diff(rule.sigma_inv, rule.sigma_inv.transpose()) == 0.0);
}

TEST_CASE("label swap negates delta and flips classifications") {
    TwoClass d = two_class_panel(15, 40, 2, 3, 1.0, 205);
    std::vector<int> swapped;
    for (int l : d.labels) swapped.push_back(1 - l);
    SubsetSelector s = SubsetSelector::range(0, 8);
    for (LdaCovariance cov : {LdaCovariance::Method1, LdaCovariance::Method2}) {
        LdaRule a = fit_lda(d.data, d.labels, s, rule_config(cov, 2));
        LdaRule b = fit_lda(d.data, swapped, s, rule_config(cov, 2));
        CHECK(support::max_abs_diff(a.delta_hat, -b.delta_hat) < 1e-12);
        Matrix test = support::random_matrix(15, 30, 206, 2.0);
        Matrix rows = restrict_rows(test, s);
        for (Index j = 0; j < rows.cols(); ++j) {
            const double da = discriminant(rows.col(j), a);
            const double db = discriminant(rows.col(j), b);
            CHECK(da == doctest::Approx(-db).epsilon(1e-8));
            if (da != 0.0) CHECK(classify(rows.col(j), a) != classify(rows.col(j), b));
        }
    }
}

TEST_CASE("scaling Sigma-hat leaves classifications unchanged") {
    TwoClass d = two_class_panel(15, 40, 2, 3, 1.0, 207);
    SubsetSelector s = SubsetSelector::range(0, 8);
    LdaRule rule = fit_lda(d.data, d.labels, s, rule_config(LdaCovariance::Method2, 2));
    LdaRule scaled = rule;
    scaled.sigma_inv /= 7.5;
    std::vector<int> a = classify_columns(d.data, rule);
    CHECK(a == classify_columns(d.data, scaled));
}

TEST_CASE("scaling the data leaves the decision unchanged") {
    TwoClass d = two_class_panel(15, 40, 2, 3, 1.0, 208);
    SubsetSelector s = SubsetSelector::range(0, 8);
    LdaRule a = fit_lda(d.data, d.labels, s, rule_config(LdaCovariance::Method2, 2));
    LdaRule b = fit_lda(3.0 * d.data, d.labels, s, rule_config(LdaCovariance::Method2, 2));
    Matrix test = restrict_rows(support::random_matrix(15, 20, 209, 2.0), s);
    for (Index j = 0; j < test.cols(); ++j) {
        CHECK(discriminant(3.0 * test.col(j), b) == doctest::Approx(discriminant(test.col(j), a)).epsilon(1e-8));
    }
}

TEST_CASE("shifting every observation leaves classifications unchanged") {
    TwoClass d = two_class_panel(15, 40, 2, 3, 1.0, 210);
    SubsetSelector s = SubsetSelector::range(0, 8);
    Vector shift = Vector::LinSpaced(15, -4.0, 9.0);
    Matrix moved = d.data.colwise() + shift;
    for (LdaCentering centering : {LdaCentering::ByClass, LdaCentering::Pooled}) {
        LdaFitConfig cfg = rule_config(LdaCovariance::Method2, 2);
        cfg.centering = centering;
        LdaRule a = fit_lda(d.data, d.labels, s, cfg);
        LdaRule b = fit_lda(moved, d.labels, s, cfg);
        CHECK(support::max_abs_diff(a.sigma_inv, b.sigma_inv) < 1e-8 * a.sigma_inv.cwiseAbs().maxCoeff());
        Matrix test = support::random_matrix(15, 20, 211, 2.0);
        CHECK(classify_columns(test, a) == classify_columns(test.colwise() + shift, b));
    }
}

TEST_CASE("split experiment") {
    TwoClass sep = two_class_panel(20, 40, 2, 5, 25.0, 212);
    SplitExperiment exp;
    exp.n_splits = 5;
    exp.test_size = 8;
    exp.s_max = 10;
    exp.seed = 3;
    exp.rules = {rule_config(LdaCovariance::Method1, 2), rule_config(LdaCovariance::Method2, 2)};
    std::vector<RuleRate> rates = misclassification_rate(sep.data, sep.labels, exp);
    REQUIRE(rates.size() == 2);
    CHECK(rates[0].covariance == LdaCovariance::Method1);
    CHECK(rates[1].mean_rate == 0.0);
    CHECK(rates[1].rates.size() == 5);

    std::vector<RuleRate> again = misclassification_rate(sep.data, sep.labels, exp);
    CHECK(again[0].rates == rates[0].rates);

    exp.test_size = 40;
    CHECK_THROWS_AS(misclassification_rate(sep.data, sep.labels, exp), ValidationError);
    exp.test_size = 8;
    exp.rules.clear();
    CHECK_THROWS_AS(misclassification_rate(sep.data, sep.labels, exp), ValidationError);
}
