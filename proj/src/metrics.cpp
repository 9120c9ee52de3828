#include "factorcov/metrics.hpp"

#include "factorcov/linalg.hpp"
#include "factorcov/random.hpp"
#include "factorcov/wpc.hpp"

#include <algorithm>
#include <cmath>

namespace factorcov {

namespace {

void require_same_square(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw ValidationError(std::string(what) + ": arguments must be square and of equal size");
    }
}

Matrix general_inverse(const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) {
        Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
        symmetrize(inv);
        return inv;
    }
    Eigen::FullPivLU<Matrix> lu(m);
    if (!lu.isInvertible()) throw NumericalError("matrix is singular");
    return lu.inverse();
}

double max_row_norm(const Matrix& m) {
    return m.rows() == 0 ? 0.0 : m.rowwise().norm().maxCoeff();
}

}  // namespace

double relative_norm(const Matrix& est, const Matrix& truth) {
    require_same_square(est, truth, "relative_norm");
    Matrix root = spd_inverse_sqrt(truth);
    Matrix scaled = root * (est - truth) * root;
    return scaled.norm() / std::sqrt(static_cast<double>(truth.rows()));
}

double max_norm_diff(const Matrix& est, const Matrix& truth) {
    require_same_square(est, truth, "max_norm_diff");
    return (est - truth).cwiseAbs().maxCoeff();
}

double inv_operator_norm_diff(const Matrix& est, const Matrix& truth) {
    require_same_square(est, truth, "inv_operator_norm_diff");
    Matrix diff = general_inverse(est) - general_inverse(truth);
    symmetrize(diff);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(diff, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition did not converge");
    const Vector& ev = solver.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double factor_error(const Matrix& est_factors, const Matrix& true_factors, const Matrix& rotation) {
    if (est_factors.rows() != true_factors.rows() || est_factors.cols() != rotation.rows() ||
        true_factors.cols() != rotation.cols()) {
        throw ValidationError("factor_error: shapes are not conformable");
    }
    return max_row_norm(est_factors - true_factors * rotation.transpose());
}

double loading_error(const Matrix& est_loadings, const Matrix& true_loadings, const Matrix& rotation) {
    if (est_loadings.rows() != true_loadings.rows() || est_loadings.cols() != rotation.rows() ||
        true_loadings.cols() != rotation.cols()) {
        throw ValidationError("loading_error: shapes are not conformable");
    }
    return max_row_norm(est_loadings - true_loadings * rotation.transpose());
}

double component_error(const Matrix& est_loadings, const Matrix& est_factors, const Matrix& true_loadings,
                       const Matrix& true_factors) {
    if (est_loadings.rows() != true_loadings.rows() || est_factors.rows() != true_factors.rows() ||
        est_loadings.cols() != est_factors.cols() || true_loadings.cols() != true_factors.cols()) {
        throw ValidationError("component_error: shapes are not conformable");
    }
    Matrix diff = est_loadings * est_factors.transpose() - true_loadings * true_factors.transpose();
    return diff.size() == 0 ? 0.0 : diff.cwiseAbs().maxCoeff();
}

Matrix rotation_for_estimate(const FactorModelEstimate& est, const TrueModel& truth) {
    const Index K = truth.loadings.cols();
    if (est.method == Method::Oracle) return Matrix::Identity(K, K);
    if (est.weight_blocks.empty()) {
        throw ValidationError("rotation needs an estimate computed with retain_weights");
    }
    Matrix sum = Matrix::Zero(K, K);
    for (const auto& block : est.weight_blocks) {
        Matrix b_rows = restrict_rows(truth.loadings, SubsetSelector(block.rows));
        Matrix h = rotation_matrix(block.eig_diag, block.factors, truth.factors, b_rows, block.weight);
        sum += block.alignment.transpose() * h;
    }
    return sum / static_cast<double>(est.weight_blocks.size());
}

ErrorReport evaluate(const FactorModelEstimate& est, const TrueModel& truth, const SubsetSelector& subset) {
    ErrorReport r;
    r.method = est.method;
    Matrix sigma_s = restrict_square(truth.implied_cov, subset);
    Matrix b_s = restrict_rows(truth.loadings, subset);
    r.relative_norm = relative_norm(est.total_cov, sigma_s);
    r.max_norm = max_norm_diff(est.total_cov, sigma_s);
    r.inv_op_norm = inv_operator_norm_diff(est.total_cov, sigma_s);
    Matrix h = rotation_for_estimate(est, truth);
    r.factor_err = factor_error(est.factors, truth.factors, h);
    r.loading_err = loading_error(est.loadings, b_s, h);
    r.component_err = component_error(est.loadings, est.factors, b_s, truth.factors);
    return r;
}

SparsityMeasure sparsity_measure(const Matrix& idio_cov, double tol) {
    if (idio_cov.rows() != idio_cov.cols()) throw ValidationError("sparsity_measure: matrix must be square");
    SparsityMeasure out;
    for (Index i = 0; i < idio_cov.rows(); ++i) {
        Index row = 0;
        for (Index j = 0; j < idio_cov.cols(); ++j) {
            if (j != i && std::abs(idio_cov(i, j)) > tol) ++row;
        }
        out.max_row_support = std::max(out.max_row_support, row);
        out.total_support += row;
    }
    return out;
}

ModelConditionReport check_model_conditions(const Matrix& loadings, const Matrix& idio_cov,
                                            double distinct_tol, double pervasive_tol) {
    const Index p = loadings.rows();
    const Index K = loadings.cols();
    if (idio_cov.rows() != p || idio_cov.cols() != p) {
        throw ValidationError("check_model_conditions: shapes are not conformable");
    }
    ModelConditionReport out;
    const double pd = static_cast<double>(p);
    Matrix gram = loadings.transpose() * loadings / pd;
    Eigen::SelfAdjointEigenSolver<Matrix> ev(gram, Eigen::EigenvaluesOnly);
    out.min_eig_loading_gram = K > 0 ? ev.eigenvalues()(0) : 0.0;
    out.max_eig_loading_gram = K > 0 ? ev.eigenvalues()(K - 1) : 0.0;
    if (!(out.min_eig_loading_gram > pervasive_tol)) {
        out.pervasive = false;
        out.warnings.emplace_back("condition (i) violated: B'B/p has an eigenvalue near zero");
    }

    Eigen::LLT<Matrix> llt(idio_cov);
    if (llt.info() != Eigen::Success) {
        out.warnings.emplace_back("idiosyncratic covariance is not positive definite");
        out.distinct = false;
        return out;
    }
    out.weighted_gram = loadings.transpose() * llt.solve(loadings) / pd;
    Vector diag = out.weighted_gram.diagonal();
    Matrix off = out.weighted_gram;
    off.diagonal().setZero();
    out.off_diagonal_ratio = diag.norm() > 0.0 ? off.norm() / diag.norm() : 0.0;

    std::vector<double> sorted(diag.data(), diag.data() + diag.size());
    std::sort(sorted.begin(), sorted.end());
    out.min_diagonal_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < sorted.size(); ++k) {
        out.min_diagonal_gap = std::min(out.min_diagonal_gap, sorted[k] - sorted[k - 1]);
    }
    if (sorted.size() < 2) out.min_diagonal_gap = 0.0;
    const double largest = sorted.empty() ? 0.0 : std::abs(sorted.back());
    if (sorted.size() >= 2 && out.min_diagonal_gap <= distinct_tol * largest) {
        out.distinct = false;
        out.warnings.emplace_back("condition (ii) distinctness fails: diagonal entries of B'Sigma_u^{-1}B/p are close");
    }
    return out;
}

namespace {

double min_eig_sym(const Matrix& a, double* max_out) {
    Eigen::SelfAdjointEigenSolver<Matrix> ev(a, Eigen::EigenvaluesOnly);
    if (ev.info() != Eigen::Success) throw NumericalError("eigendecomposition did not converge");
    if (max_out) *max_out = ev.eigenvalues()(ev.eigenvalues().size() - 1);
    return ev.eigenvalues()(0);
}

bool is_block_diagonal(const Matrix& idio_cov, const SubsetSelector& subset, double tol) {
    std::vector<bool> in_s(static_cast<std::size_t>(idio_cov.rows()), false);
    for (Index k : subset.indices()) in_s[static_cast<std::size_t>(k)] = true;
    for (Index j = 0; j < idio_cov.cols(); ++j) {
        for (Index i = 0; i < idio_cov.rows(); ++i) {
            if (in_s[static_cast<std::size_t>(i)] != in_s[static_cast<std::size_t>(j)] &&
                std::abs(idio_cov(i, j)) > tol) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

FisherReport fisher_dominance(const Matrix& loadings, const Matrix& idio_cov, const SubsetSelector& subset,
                              double block_tol) {
    const Index p = loadings.rows();
    if (idio_cov.rows() != p || idio_cov.cols() != p) {
        throw ValidationError("fisher_dominance: shapes are not conformable");
    }
    subset.check_against(p);
    Eigen::LLT<Matrix> full(idio_cov);
    if (full.info() != Eigen::Success) throw NumericalError("idiosyncratic covariance is singular");
    Eigen::LLT<Matrix> sub(restrict_square(idio_cov, subset));
    if (sub.info() != Eigen::Success) throw NumericalError("idiosyncratic covariance is singular on S");

    FisherReport out;
    Matrix b_s = restrict_rows(loadings, subset);
    out.info_full = loadings.transpose() * full.solve(loadings);
    out.info_subset = b_s.transpose() * sub.solve(b_s);
    symmetrize(out.info_full);
    symmetrize(out.info_subset);
    Matrix diff = out.info_full - out.info_subset;
    out.min_eig_diff = min_eig_sym(diff, &out.max_eig_diff);
    out.block_diagonal = is_block_diagonal(idio_cov, subset, block_tol);
    return out;
}

FisherReport fisher_dominance_expected(const LoadingSampler& sampler, const Matrix& idio_cov,
                                       const SubsetSelector& subset, int n_draws, std::uint64_t seed) {
    if (n_draws < 1) throw ValidationError("n_draws must be >= 1");
    const Index p = idio_cov.rows();
    subset.check_against(p);
    Matrix full_inv = spd_inverse(idio_cov);
    Matrix sub_inv = spd_inverse(restrict_square(idio_cov, subset));

    FisherReport out;
    for (int k = 0; k < n_draws; ++k) {
        Matrix b = sampler(derive_seed(seed, static_cast<std::uint64_t>(k)));
        if (b.rows() != p) throw ValidationError("sampler returned loadings with the wrong number of rows");
        Matrix b_s = restrict_rows(b, subset);
        Matrix full = b.transpose() * full_inv * b;
        Matrix part = b_s.transpose() * sub_inv * b_s;
        if (k == 0) {
            out.info_full = full;
            out.info_subset = part;
        } else {
            out.info_full += full;
            out.info_subset += part;
        }
    }
    out.info_full /= static_cast<double>(n_draws);
    out.info_subset /= static_cast<double>(n_draws);
    symmetrize(out.info_full);
    symmetrize(out.info_subset);
    out.min_eig_diff = min_eig_sym(out.info_full - out.info_subset, &out.max_eig_diff);
    out.block_diagonal = is_block_diagonal(idio_cov, subset, 0.0);
    return out;
}

}  // namespace factorcov
