#include "support.hpp"

#include "factorcov/linalg.hpp"
#include "factorcov/threshold.hpp"

#include <cmath>

using namespace factorcov;

TEST_CASE("sample covariance: constant rows give zero") {
    Matrix y(2, 2);
    y << 1, 1, 2, 2;
    CHECK(sample_covariance(y) == Matrix::Zero(2, 2));
}

TEST_CASE("sample covariance uses divisor T") {
    Matrix y(1, 2);
    y << -1, 1;
    CHECK(sample_covariance(y)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("sample covariance matches the loop oracle") {
    Matrix y = support::random_matrix(3, 50, 11);
    CHECK(support::max_abs_diff(sample_covariance(y), support::loop_covariance(y)) < 1e-12);
    CHECK_THROWS_AS(sample_covariance(Matrix::Ones(2, 1)), ValidationError);
}

TEST_CASE("omega rate") {
    CHECK(omega_rate(1, 17) == doctest::Approx(1.0));
    CHECK(omega_rate(100, 100) == doctest::Approx(0.31460).epsilon(1e-5 / 0.3146));
    // n = e^T gives 1 + e^{-T/2}; n must be an integer, so check the formula on n = e^T directly.
    const double T2 = 3.0, nd = std::exp(T2);
    CHECK(std::sqrt(std::log(nd) / T2) + 1.0 / std::sqrt(nd) == doctest::Approx(1.0 + std::exp(-T2 / 2.0)));
}

TEST_CASE("pca residual matrix") {
    Matrix s = Vector::Map(std::vector<double>{5.0, 1.0}.data(), 2).asDiagonal();
    Matrix r = pca_residual_matrix(s, 1);
    CHECK(support::max_abs_diff(r, Vector::Map(std::vector<double>{0.0, 1.0}.data(), 2).asDiagonal()) < 1e-14);

    CHECK(pca_residual_matrix(Matrix::Identity(3, 3), 0) == Matrix::Identity(3, 3));

    Matrix b = support::random_matrix(6, 2, 3);
    CHECK(pca_residual_matrix(b * b.transpose(), 2).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_THROWS_AS(pca_residual_matrix(Matrix::Identity(3, 3), 3), ValidationError);
}

TEST_CASE("pca residual trace equals the eigenvalue tail") {
    Matrix y = support::random_matrix(8, 30, 5);
    Matrix s = sample_covariance(y);
    Eigen::SelfAdjointEigenSolver<Matrix> ev(s);
    const Vector lam = ev.eigenvalues().reverse();
    for (Index K = 0; K < 8; ++K) {
        CHECK(pca_residual_matrix(s, K).trace() == doctest::Approx(lam.tail(8 - K).sum()).epsilon(1e-10));
    }
}

TEST_CASE("dual residual path matches the direct one") {
    Matrix y = support::random_matrix(40, 12, 6);
    for (Index K : {0, 1, 3}) {
        CHECK(support::max_abs_diff(pca_residual_from_panel(y, K), pca_residual_matrix(sample_covariance(y), K)) <
              1e-10);
    }
}

TEST_CASE("correlation thresholding") {
    Matrix r(2, 2);
    r << 1, 0.05, 0.05, 1;
    CHECK(hard_threshold_correlation(r, 1.0, 0.1) == Matrix::Identity(2, 2));
    r << 1, 0.5, 0.5, 1;
    CHECK(hard_threshold_correlation(r, 1.0, 0.1) == r);
    Matrix a = support::random_spd(5, 8);
    CHECK(hard_threshold_correlation(a, 0.0, 0.7) == a);
}

TEST_CASE("correlation thresholding scales with the diagonal") {
    Matrix r(2, 2);
    r << 4, 0.3, 0.3, 1;  // tau = C * sqrt(4 * 1) * rate = 0.2 at C = 1, rate = 0.1
    CHECK(hard_threshold_correlation(r, 1.0, 0.1)(0, 1) == 0.3);
    CHECK(hard_threshold_correlation(r, 1.6, 0.1)(0, 1) == 0.0);
}

TEST_CASE("nonpositive diagonal is a degenerate variance") {
    Matrix r = Matrix::Identity(2, 2);
    r(1, 1) = 0.0;
    CHECK_THROWS_WITH_AS(hard_threshold_correlation(r, 1.0, 0.1), doctest::Contains("degenerate variance"),
                         NumericalError);
}

TEST_CASE("residual thresholding hand example") {
    Matrix u(2, 4);
    u << 1, -1, 1, -1, 1, 1, -1, -1;
    for (double C : {0.0, 1.0, 3.0}) {
        CHECK(residual_covariance_threshold(u, C, 0.5) == Matrix::Identity(2, 2));
    }
}

TEST_CASE("residual thresholding with C = 0 is the raw moment matrix") {
    Matrix u = support::random_matrix(4, 25, 12);
    Matrix est = residual_covariance_threshold(u, 0.0, 1.0);
    Matrix oracle(4, 4);
    for (Index i = 0; i < 4; ++i) {
        for (Index j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (Index t = 0; t < 25; ++t) acc += u(i, t) * u(j, t);
            oracle(i, j) = acc / 25.0;
        }
    }
    CHECK(support::max_abs_diff(est, oracle) < 1e-12);
}

TEST_CASE("theta uses divisor T, loop oracle") {
    Matrix u = support::random_matrix(3, 9, 13);
    ResidualMoments m = residual_moments(u);
    for (Index i = 0; i < 3; ++i) {
        for (Index j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (Index t = 0; t < 9; ++t) {
                const double d = u(i, t) * u(j, t) - m.sigma(i, j);
                acc += d * d;
            }
            CHECK(m.theta_sqrt(i, j) == doctest::Approx(std::sqrt(acc / 9.0)).epsilon(1e-10));
        }
    }
}

TEST_CASE("min-PD choice of C") {
    ThresholdConfig cfg;
    cfg.rate = 0.5;
    CHECK(choose_C_correlation(Vector::Constant(3, 2.0).asDiagonal().toDenseMatrix(), cfg).C == 0.0);

    Matrix r(2, 2);
    r << 1, 0.99, 0.99, 1;
    cfg.C_grid = {0, 1, 2, 3};
    CHECK(choose_C_correlation(r, cfg).C == 0.0);
}

TEST_CASE("min-PD choice agrees with a brute-force grid scan") {
    Matrix r(3, 3);
    r << 1, 1.2, 0.1, 1.2, 1, 0.05, 0.1, 0.05, 1;
    ThresholdConfig cfg;
    cfg.rate = 0.5;
    double expected = -1.0;
    for (double C : cfg.C_grid) {
        Matrix t = hard_threshold_correlation(r, C, cfg.rate);
        Eigen::SelfAdjointEigenSolver<Matrix> ev(t);
        if (ev.eigenvalues()(0) >= cfg.pd_floor) {
            expected = C;
            break;
        }
    }
    REQUIRE(expected > 0.0);
    CChoice c = choose_C_correlation(r, cfg);
    CHECK(c.C == expected);
    CHECK(c.pd_reached);
}

TEST_CASE("exhausted grid returns the maximum with a flag") {
    Matrix r(2, 2);
    r << 1, 5, 5, 1;
    ThresholdConfig cfg;
    cfg.rate = 0.1;
    CChoice c = choose_C_correlation(r, cfg);
    CHECK(c.C == cfg.C_grid.back());
    CHECK_FALSE(c.pd_reached);
}

TEST_CASE("config validation") {
    ThresholdConfig cfg;
    cfg.rate = 0.0;
    CHECK_THROWS_AS(cfg.check(), ValidationError);
    cfg.rate = 1.0;
    cfg.C = -1.0;
    CHECK_THROWS_AS(cfg.check(), ValidationError);
    cfg.C.reset();
    cfg.C_grid = {0.0, 0.0};
    CHECK_THROWS_AS(cfg.check(), ValidationError);
    cfg.C_grid = {};
    CHECK_THROWS_AS(cfg.check(), ValidationError);
}

TEST_CASE("cross-validated choice is deterministic and floored at min-PD") {
    support::FactorPanel panel = support::factor_panel(30, 120, 1, 1.0, 21, 0.0);
    ThresholdConfig cfg;
    cfg.rate = omega_rate(30, 120);
    cfg.selection = CSelection::CrossValidation;
    cfg.cv_seed = 4;
    ThresholdResult a = threshold_residuals(panel.y, cfg);
    ThresholdResult b = threshold_residuals(panel.y, cfg);
    CHECK(a.choice.C == b.choice.C);
    CHECK(a.estimate == b.estimate);
    CHECK(a.choice.C >= choose_C_residual(panel.y, cfg).C);
    CHECK(has_eigenvalues_above(a.estimate, cfg.pd_floor));
}

TEST_CASE("fixed C overrides selection") {
    Matrix u = support::random_matrix(5, 40, 22);
    ThresholdConfig cfg;
    cfg.C = 0.7;
    cfg.rate = 0.3;
    ThresholdResult res = threshold_residuals(u, cfg);
    CHECK(res.choice.C == 0.7);
    CHECK(res.estimate == residual_covariance_threshold(u, 0.7, 0.3));
}

TEST_CASE("floored pca residual keeps a positive diagonal on a noiseless panel") {
    support::FactorPanel panel = support::factor_panel(12, 40, 2, 0.0, 23);
    Matrix r = floored_pca_residual(panel.y, 2);
    CHECK(r.diagonal().minCoeff() > 0.0);
    support::FactorPanel noisy = support::factor_panel(12, 40, 2, 1.0, 24);
    Matrix plain = pca_residual_from_panel(noisy.y, 2);
    CHECK(support::max_abs_diff(floored_pca_residual(noisy.y, 2), plain) < 1e-10);
}

TEST_CASE("correlation cross-validation returns a grid value deterministically") {
    support::FactorPanel panel = support::factor_panel(30, 100, 2, 1.0, 25);
    ThresholdConfig cfg;
    cfg.rate = omega_rate(30, 100);
    cfg.cv_seed = 9;
    const double a = cross_validate_C_correlation(panel.y, 2, cfg);
    CHECK(a == cross_validate_C_correlation(panel.y, 2, cfg));
    CHECK(std::find(cfg.C_grid.begin(), cfg.C_grid.end(), a) != cfg.C_grid.end());
    Matrix r = floored_pca_residual(panel.y, 2);
    ThresholdResult res = threshold_correlation(r, cfg, a);
    CHECK(res.choice.C >= a);
    CHECK(has_eigenvalues_above(res.estimate, cfg.pd_floor));
}

TEST_CASE("correlation cross-validation keeps strong true correlation") {
    // Block-correlated noise with no factors beyond the one removed.
    factorcov::Rng rng(26);
    Matrix z = factorcov::normal_matrix(20, 400, 1.0, rng);
    for (Index i = 1; i < 20; i += 2) z.row(i) = 0.9 * z.row(i - 1) + std::sqrt(1 - 0.81) * z.row(i);
    Matrix f = factorcov::normal_matrix(1, 400, 1.0, rng);
    Matrix y = z + Vector::Constant(20, 3.0) * f;
    ThresholdConfig cfg;
    cfg.rate = omega_rate(20, 400);
    const double c = cross_validate_C_correlation(y, 1, cfg);
    Matrix kept = hard_threshold_correlation(floored_pca_residual(y, 1), c, cfg.rate);
    CHECK(kept(0, 1) != 0.0);
}
