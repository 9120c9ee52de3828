#include "factorcov/threshold.hpp"

#include "factorcov/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace factorcov {

std::vector<double> default_C_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 30; ++k) grid.push_back(0.1 * k);
    return grid;
}

void ThresholdConfig::check() const {
    if (C && *C < 0.0) throw ValidationError("threshold constant C must be >= 0");
    if (!(rate > 0.0)) throw ValidationError("threshold rate must be > 0");
    if (!(pd_floor > 0.0)) throw ValidationError("pd_floor must be > 0");
    if (C_grid.empty()) throw ValidationError("threshold grid is empty");
    for (std::size_t k = 1; k < C_grid.size(); ++k) {
        if (!(C_grid[k] > C_grid[k - 1])) throw ValidationError("threshold grid must be strictly increasing");
    }
    if (C_grid.front() < 0.0) throw ValidationError("threshold grid values must be >= 0");
    if (cv_splits < 1) throw ValidationError("cv_splits must be >= 1");
}

Matrix sample_covariance(const Matrix& y) {
    if (y.cols() < 2) throw ValidationError("T >= 2 required");
    const double T = static_cast<double>(y.cols());
    Matrix centered = y.colwise() - y.rowwise().mean();
    Matrix s = Matrix::Zero(y.rows(), y.rows());
    s.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / T);
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    return s;
}

double omega_rate(Index n, Index T) {
    const double nd = static_cast<double>(n);
    return std::sqrt(std::log(nd) / static_cast<double>(T)) + 1.0 / std::sqrt(nd);
}

Matrix pca_residual_matrix(const Matrix& sample_cov, Index K) {
    if (K < 0 || K >= sample_cov.rows()) {
        throw ValidationError("number of removed components must satisfy 0 <= K < p");
    }
    Matrix r = sample_cov;
    if (K > 0) {
        SymmetricEigen top = leading_eigenpairs(sample_cov, K);
        r -= top.vectors * top.values.asDiagonal() * top.vectors.transpose();
    }
    symmetrize(r);
    return r;
}

namespace {

// pca_residual_from_panel with only the lower triangle guaranteed.
Matrix pca_residual_lower(const Matrix& y, Index K) {
    const Index n = y.rows();
    const Index T = y.cols();
    if (K < 0 || K >= n) {
        throw ValidationError("number of removed components must satisfy 0 <= K < p");
    }
    if (n <= T || K == 0) {
        return pca_residual_matrix(sample_covariance(y), K);
    }
    if (K >= T) {
        throw ValidationError("number of removed components must be below T");
    }
    Matrix centered = y.colwise() - y.rowwise().mean();
    const double inv_t = 1.0 / static_cast<double>(T);
    Matrix r = Matrix::Zero(n, n);
    r.selfadjointView<Eigen::Lower>().rankUpdate(centered, inv_t);

    // Nonzero spectrum of S_y = Yc Yc'/T equals that of Yc'Yc/T; for a dual
    // eigenvector v the component lambda zeta zeta' is (Yc v)(Yc v)'/T.
    Matrix dual = centered.transpose() * centered * inv_t;
    SymmetricEigen top = leading_eigenpairs(dual, K);
    Matrix z = centered * top.vectors;
    r.selfadjointView<Eigen::Lower>().rankUpdate(z, -inv_t);
    return r;
}

void floor_diagonal(const Matrix& y, Matrix& r) {
    const double mean_var = (y.colwise() - y.rowwise().mean()).squaredNorm() / static_cast<double>(y.size());
    const double var_floor = 1e-12 * std::max(mean_var, std::numeric_limits<double>::min());
    for (Index i = 0; i < r.rows(); ++i) r(i, i) = std::max(r(i, i), var_floor);
}

}  // namespace

Matrix pca_residual_from_panel(const Matrix& y, Index K) {
    Matrix r = pca_residual_lower(y, K);
    r.triangularView<Eigen::StrictlyUpper>() = r.transpose();
    return r;
}

Matrix hard_threshold_correlation(const Matrix& r, double C, double rate) {
    const Index n = r.rows();
    Vector scale(n);
    for (Index i = 0; i < n; ++i) {
        if (!(r(i, i) > 0.0)) {
            throw NumericalError("degenerate variance at index " + std::to_string(i));
        }
        scale(i) = std::sqrt(r(i, i));
    }
    Matrix out = r;
    const double level = C * rate;
    for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i < n; ++i) {
            const double v = 0.5 * (r(i, j) + r(j, i));
            const double kept = std::abs(v) > level * scale(i) * scale(j) ? v : 0.0;
            out(i, j) = kept;
            out(j, i) = kept;
        }
    }
    return out;
}

Matrix hard_threshold_correlation(const Matrix& r, const ThresholdConfig& cfg) {
    return hard_threshold_correlation(r, cfg.C.value_or(0.0), cfg.rate);
}

ResidualMoments residual_moments(const Matrix& residuals) {
    const Index n = residuals.rows();
    const double inv_t = 1.0 / static_cast<double>(residuals.cols());
    ResidualMoments m;
    m.sigma = Matrix::Zero(n, n);
    m.sigma.selfadjointView<Eigen::Lower>().rankUpdate(residuals, inv_t);
    m.sigma.triangularView<Eigen::StrictlyUpper>() = m.sigma.transpose();

    Matrix squared = residuals.array().square().matrix();
    Matrix fourth = Matrix::Zero(n, n);
    fourth.selfadjointView<Eigen::Lower>().rankUpdate(squared, inv_t);
    m.theta_sqrt = Matrix(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = j; i < n; ++i) {
            const double s = m.sigma(i, j);
            const double theta = std::max(fourth(i, j) - s * s, 0.0);
            m.theta_sqrt(i, j) = std::sqrt(theta);
            m.theta_sqrt(j, i) = m.theta_sqrt(i, j);
        }
    }
    return m;
}

Matrix threshold_residual_moments(const ResidualMoments& moments, double C, double rate) {
    const Index n = moments.sigma.rows();
    Matrix out = moments.sigma;
    const double level = C * rate;
    for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i < n; ++i) {
            const double v = moments.sigma(i, j);
            const double kept = std::abs(v) > level * moments.theta_sqrt(i, j) ? v : 0.0;
            out(i, j) = kept;
            out(j, i) = kept;
        }
    }
    return out;
}

Matrix residual_covariance_threshold(const Matrix& residuals, double C, double rate) {
    if (residuals.cols() < 2) throw ValidationError("T >= 2 required");
    return threshold_residual_moments(residual_moments(residuals), C, rate);
}

Matrix residual_covariance_threshold(const Matrix& residuals, const ThresholdConfig& cfg) {
    return residual_covariance_threshold(residuals, cfg.C.value_or(0.0), cfg.rate);
}

namespace {

template <typename Thresholder>
CChoice scan_grid_for_pd(const ThresholdConfig& cfg, Thresholder&& thresholded_at) {
    for (double C : cfg.C_grid) {
        if (has_eigenvalues_above(thresholded_at(C), cfg.pd_floor)) {
            return {C, true};
        }
    }
    return {cfg.C_grid.back(), false};
}

// First grid value >= lowest that keeps the estimate positive definite.
// Positive definiteness is not monotone in C, so when no such value exists
// the plain minimum-C rule applies.
template <typename Thresholder>
CChoice scan_grid_for_pd_from(const ThresholdConfig& cfg, double lowest, Thresholder&& thresholded_at) {
    for (double C : cfg.C_grid) {
        if (C >= lowest && has_eigenvalues_above(thresholded_at(C), cfg.pd_floor)) {
            return {C, true};
        }
    }
    return scan_grid_for_pd(cfg, thresholded_at);
}

}  // namespace

CChoice choose_C_correlation(const Matrix& r, const ThresholdConfig& cfg) {
    cfg.check();
    return scan_grid_for_pd(cfg, [&](double C) { return hard_threshold_correlation(r, C, cfg.rate); });
}

CChoice choose_C_residual(const Matrix& residuals, const ThresholdConfig& cfg) {
    cfg.check();
    ResidualMoments moments = residual_moments(residuals);
    return scan_grid_for_pd(cfg,
                            [&](double C) { return threshold_residual_moments(moments, C, cfg.rate); });
}

double cross_validate_C_residual(const Matrix& residuals, const ThresholdConfig& cfg) {
    cfg.check();
    const Index T = residuals.cols();
    if (T < 4) return cfg.C_grid.front();
    const double logt = std::log(static_cast<double>(T));
    Index n_train = static_cast<Index>(std::floor(static_cast<double>(T) * (1.0 - 1.0 / logt)));
    n_train = std::clamp<Index>(n_train, 2, T - 2);
    const Index n_test = T - n_train;

    std::mt19937_64 rng(cfg.cv_seed);
    std::vector<Index> perm(static_cast<std::size_t>(T));
    std::vector<double> score(cfg.C_grid.size(), 0.0);
    Matrix train(residuals.rows(), n_train);
    Matrix test(residuals.rows(), n_test);
    for (int split = 0; split < cfg.cv_splits; ++split) {
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (Index k = 0; k < n_train; ++k) train.col(k) = residuals.col(perm[static_cast<std::size_t>(k)]);
        for (Index k = 0; k < n_test; ++k) test.col(k) = residuals.col(perm[static_cast<std::size_t>(n_train + k)]);
        ResidualMoments fit = residual_moments(train);
        Matrix held_out = test * test.transpose() / static_cast<double>(n_test);
        for (std::size_t g = 0; g < cfg.C_grid.size(); ++g) {
            score[g] += (threshold_residual_moments(fit, cfg.C_grid[g], cfg.rate) - held_out).squaredNorm();
        }
    }
    auto best = std::min_element(score.begin(), score.end());
    return cfg.C_grid[static_cast<std::size_t>(best - score.begin())];
}

ThresholdResult threshold_residuals(const Matrix& residuals, const ThresholdConfig& cfg) {
    cfg.check();
    ResidualMoments moments = residual_moments(residuals);
    auto thresholded_at = [&](double C) { return threshold_residual_moments(moments, C, cfg.rate); };
    ThresholdResult out;
    if (cfg.C) {
        out.choice = {*cfg.C, true};
    } else if (cfg.selection == CSelection::CrossValidation) {
        out.choice = scan_grid_for_pd_from(cfg, cross_validate_C_residual(residuals, cfg), thresholded_at);
    } else {
        out.choice = scan_grid_for_pd(cfg, thresholded_at);
    }
    out.estimate = thresholded_at(out.choice.C);
    return out;
}

ThresholdResult threshold_correlation(const Matrix& r, const ThresholdConfig& cfg, double lowest_C) {
    cfg.check();
    auto thresholded_at = [&](double C) { return hard_threshold_correlation(r, C, cfg.rate); };
    ThresholdResult out;
    out.choice = cfg.C ? CChoice{*cfg.C, true} : scan_grid_for_pd_from(cfg, lowest_C, thresholded_at);
    out.estimate = thresholded_at(out.choice.C);
    return out;
}

Matrix floored_pca_residual(const Matrix& y, Index K) {
    Matrix r = pca_residual_from_panel(y, K);
    floor_diagonal(y, r);
    return r;
}

namespace {

// lower_bound over a sorted grid through a lookup table on [0, grid.back()].
class GridLocator {
public:
    explicit GridLocator(const std::vector<double>& grid) : grid_(grid) {
        const double top = grid.back();
        double gap = top;
        for (std::size_t k = 1; k < grid.size(); ++k) gap = std::min(gap, grid[k] - grid[k - 1]);
        if (!(top > 0.0) || !(gap > 0.0)) return;
        const std::size_t cells = std::min<std::size_t>(1 << 16, static_cast<std::size_t>(std::ceil(top / gap)) + 1);
        scale_ = static_cast<double>(cells) / top;
        table_.resize(cells + 1);
        for (std::size_t c = 0; c <= cells; ++c) {
            table_[c] = std::lower_bound(grid.begin(), grid.end(), static_cast<double>(c) / scale_) - grid.begin();
        }
    }

    std::size_t operator()(double z) const {
        const std::size_t G = grid_.size();
        if (table_.empty()) return std::lower_bound(grid_.begin(), grid_.end(), z) - grid_.begin();
        if (z > grid_.back()) return G;
        std::size_t b = z > 0.0 ? table_[static_cast<std::size_t>(z * scale_)] : 0;
        while (b > 0 && grid_[b - 1] >= z) --b;
        while (b < G && grid_[b] < z) ++b;
        return b;
    }

private:
    const std::vector<double>& grid_;
    std::vector<std::ptrdiff_t> table_;
    double scale_ = 0.0;
};

}  // namespace

double cross_validate_C_correlation(const Matrix& y, Index K, const ThresholdConfig& cfg) {
    cfg.check();
    const Index n = y.rows();
    const Index T = y.cols();
    if (T < 4) return cfg.C_grid.front();
    const double logt = std::log(static_cast<double>(T));
    Index n_train = static_cast<Index>(std::floor(static_cast<double>(T) * (1.0 - 1.0 / logt)));
    n_train = std::clamp<Index>(n_train, 2, T - 2);
    const Index n_test = T - n_train;
    if (K >= std::min(n, n_test)) return cfg.C_grid.front();

    // A pair kept at C contributes (r_ij - h_ij)^2 and a zeroed pair h_ij^2, so
    // score(C) is a constant plus the sum of the differences over kept pairs.
    // Pair (i, j) is kept exactly at the grid values below |corr_ij| / rate.
    const std::size_t G = cfg.C_grid.size();
    std::vector<double> bucket(G + 1, 0.0);
    const GridLocator locate(cfg.C_grid);
    std::mt19937_64 rng(cfg.cv_seed);
    std::vector<Index> perm(static_cast<std::size_t>(T));
    Matrix train(n, n_train);
    Matrix test(n, n_test);
    for (int split = 0; split < cfg.cv_splits; ++split) {
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (Index k = 0; k < n_train; ++k) train.col(k) = y.col(perm[static_cast<std::size_t>(k)]);
        for (Index k = 0; k < n_test; ++k) test.col(k) = y.col(perm[static_cast<std::size_t>(n_train + k)]);
        Matrix fit = pca_residual_lower(train, K);
        floor_diagonal(train, fit);
        const Matrix held_out = pca_residual_lower(test, K);
        const Vector inv_sd = fit.diagonal().cwiseSqrt().cwiseInverse();
        const double inv_rate = 1.0 / cfg.rate;
        for (Index j = 0; j < n; ++j) {
            for (Index i = j + 1; i < n; ++i) {
                const double r = fit(i, j);
                const double h = held_out(i, j);
                const double z = std::abs(r) * inv_sd(i) * inv_sd(j) * inv_rate;
                bucket[locate(z)] += (r - h) * (r - h) - h * h;
            }
        }
    }
    // score(C_g) = sum of buckets b > g
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    double running = 0.0;
    for (std::size_t b = 1; b <= G; ++b) running += bucket[b];
    for (std::size_t g = 0; g < G; ++g) {
        if (running < best_score) {
            best_score = running;
            best = g;
        }
        running -= bucket[g + 1];
    }
    return cfg.C_grid[best];
}

}  // namespace factorcov
