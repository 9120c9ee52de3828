#include "factorcov/lda.hpp"

#include "factorcov/linalg.hpp"
#include "factorcov/random.hpp"
#include "factorcov/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace factorcov {

std::string_view to_string(LdaCovariance cov) {
    return cov == LdaCovariance::Method1 ? "method1" : "method2";
}

namespace {

struct ClassStats {
    Vector mean0, mean1;
    Index n0 = 0, n1 = 0;
};

ClassStats class_means(const Matrix& y, const std::vector<int>& labels) {
    if (static_cast<Index>(labels.size()) != y.cols()) {
        throw ValidationError("label count must equal the number of columns");
    }
    ClassStats st;
    st.mean0 = Vector::Zero(y.rows());
    st.mean1 = Vector::Zero(y.rows());
    for (Index j = 0; j < y.cols(); ++j) {
        const int l = labels[static_cast<std::size_t>(j)];
        if (l == 1) {
            st.mean1 += y.col(j);
            ++st.n1;
        } else if (l == 0) {
            st.mean0 += y.col(j);
            ++st.n0;
        } else {
            throw ValidationError("labels must be 0 or 1");
        }
    }
    if (st.n0 == 0 || st.n1 == 0) throw ValidationError("both classes must be present (single-class labels)");
    st.mean0 /= static_cast<double>(st.n0);
    st.mean1 /= static_cast<double>(st.n1);
    return st;
}

}  // namespace

Vector two_sample_t(const Matrix& y, const std::vector<int>& labels) {
    ClassStats st = class_means(y, labels);
    Vector ss0 = Vector::Zero(y.rows());
    Vector ss1 = Vector::Zero(y.rows());
    for (Index j = 0; j < y.cols(); ++j) {
        if (labels[static_cast<std::size_t>(j)] == 1) {
            ss1 += (y.col(j) - st.mean1).array().square().matrix();
        } else {
            ss0 += (y.col(j) - st.mean0).array().square().matrix();
        }
    }
    const double n0 = static_cast<double>(st.n0);
    const double n1 = static_cast<double>(st.n1);
    Vector t(y.rows());
    for (Index i = 0; i < y.rows(); ++i) {
        const double v0 = st.n0 > 1 ? ss0(i) / (n0 - 1.0) : 0.0;
        const double v1 = st.n1 > 1 ? ss1(i) / (n1 - 1.0) : 0.0;
        const double se = std::sqrt(v0 / n0 + v1 / n1);
        const double diff = st.mean1(i) - st.mean0(i);
        if (se > 0.0) {
            t(i) = diff / se;
        } else {
            t(i) = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
        }
    }
    return t;
}

SubsetSelector screen_variables(const Matrix& y, const std::vector<int>& labels, Index s_max) {
    if (s_max < 1 || s_max > y.rows()) throw ValidationError("s_max must satisfy 1 <= s_max <= p");
    Vector t = two_sample_t(y, labels).cwiseAbs();
    std::vector<Index> order(static_cast<std::size_t>(y.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return t(a) > t(b); });
    order.resize(static_cast<std::size_t>(s_max));
    std::sort(order.begin(), order.end());
    return SubsetSelector(std::move(order));
}

LdaRule fit_lda(const Matrix& train, const std::vector<int>& labels, const SubsetSelector& subset,
                const LdaFitConfig& cfg) {
    ClassStats st = class_means(train, labels);
    if (train.cols() < 4) throw ValidationError("LDA needs at least 4 training columns");
    if (st.n0 < 2 || st.n1 < 2) throw ValidationError("each class needs at least 2 training columns");
    subset.check_against(train.rows());

    Matrix centered = train;
    if (cfg.centering == LdaCentering::ByClass) {
        for (Index j = 0; j < train.cols(); ++j) {
            centered.col(j) -= labels[static_cast<std::size_t>(j)] == 1 ? st.mean1 : st.mean0;
        }
    } else {
        centered.colwise() -= train.rowwise().mean();
    }
    ObservationMatrix panel(std::move(centered));
    FactorModelEstimate est = cfg.covariance == LdaCovariance::Method1
                                  ? estimate_method1(panel, subset, cfg.pipeline)
                                  : estimate_method2(panel, subset, cfg.pipeline);

    LdaRule rule{Vector(), Vector(), Matrix(), subset};
    Vector m1 = restrict_rows(st.mean1, subset);
    Vector m0 = restrict_rows(st.mean0, subset);
    rule.delta_hat = m1 - m0;
    rule.mu_bar = 0.5 * (m1 + m0);
    rule.sigma_inv = spd_inverse(est.total_cov);
    return rule;
}

double discriminant(const Vector& x_selected, const LdaRule& rule) {
    if (x_selected.size() != rule.delta_hat.size()) throw ValidationError("classify: shape mismatch");
    return rule.delta_hat.dot(rule.sigma_inv * (x_selected - rule.mu_bar));
}

int classify(const Vector& x_selected, const LdaRule& rule) {
    return discriminant(x_selected, rule) >= 0.0 ? 1 : 0;
}

std::vector<int> classify_columns(const Matrix& panel, const LdaRule& rule) {
    Matrix rows = restrict_rows(panel, rule.selected);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(rows.cols()));
    for (Index j = 0; j < rows.cols(); ++j) out.push_back(classify(rows.col(j), rule));
    return out;
}

double error_rate(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw ValidationError("error_rate: prediction and label counts differ or are empty");
    }
    std::size_t wrong = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) wrong += predicted[k] != truth[k] ? 1 : 0;
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

std::vector<RuleRate> misclassification_rate(const Matrix& data, const std::vector<int>& labels,
                                             const SplitExperiment& exp) {
    const Index n = data.cols();
    if (static_cast<Index>(labels.size()) != n) throw ValidationError("label count must equal the number of columns");
    if (exp.test_size < 1 || exp.test_size >= n) throw ValidationError("test set must be nonempty and smaller than n");
    if (exp.rules.empty()) throw ValidationError("no rules to evaluate");

    std::vector<RuleRate> out(exp.rules.size());
    for (std::size_t r = 0; r < exp.rules.size(); ++r) out[r].covariance = exp.rules[r].covariance;

    std::vector<Index> order(static_cast<std::size_t>(n));
    for (int split = 0; split < exp.n_splits; ++split) {
        Rng rng(derive_seed(exp.seed, static_cast<std::uint64_t>(split)));
        std::iota(order.begin(), order.end(), Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        const Index n_train = n - exp.test_size;
        Matrix train(data.rows(), n_train);
        Matrix test(data.rows(), exp.test_size);
        std::vector<int> train_labels, test_labels;
        for (Index k = 0; k < n; ++k) {
            const Index col = order[static_cast<std::size_t>(k)];
            if (k < n_train) {
                train.col(k) = data.col(col);
                train_labels.push_back(labels[static_cast<std::size_t>(col)]);
            } else {
                test.col(k - n_train) = data.col(col);
                test_labels.push_back(labels[static_cast<std::size_t>(col)]);
            }
        }
        SubsetSelector subset = screen_variables(train, train_labels, std::min(exp.s_max, data.rows()));
        for (std::size_t r = 0; r < exp.rules.size(); ++r) {
            LdaRule rule = fit_lda(train, train_labels, subset, exp.rules[r]);
            out[r].rates.push_back(error_rate(classify_columns(test, rule), test_labels));
        }
    }
    for (auto& rr : out) {
        MetricSummary sm = summarize(rr.rates);
        rr.mean_rate = sm.mean;
        rr.sd_rate = sm.sd;
    }
    return out;
}

}  // namespace factorcov
