#include "factorcov/wpc.hpp"

#include "factorcov/linalg.hpp"

#include <cmath>

namespace factorcov {

namespace {

void check_rank(Index n, Index T, Index K) {
    if (K < 1 || K >= std::min(n, T)) {
        throw ValidationError("K must satisfy 1 <= K < min(n, T); got K=" + std::to_string(K) +
                              " for n=" + std::to_string(n) + ", T=" + std::to_string(T));
    }
}

WpcResult factors_from_gram(const Matrix& y, const Matrix& gram, Index K, WpcResult out) {
    const Index T = y.cols();
    const double td = static_cast<double>(T);
    Stopwatch eig_clock;
    SymmetricEigen top = leading_eigenpairs(gram / td, K);
    out.timings.eigensolve_ms += eig_clock.elapsed_ms();
    if (!(top.values(K - 1) > 0.0)) {
        throw NumericalError("panel has fewer than K nonzero weighted principal components");
    }
    out.degenerate_spectrum = top.degenerate;
    out.eig_diag = top.values;
    out.factors = std::sqrt(td) * top.vectors;
    out.loadings = y * out.factors / td;
    return out;
}

}  // namespace

WpcResult wpc_estimate(const Matrix& y, const Matrix& idio_weight, Index K, double pd_floor) {
    const Index n = y.rows();
    check_rank(n, y.cols(), K);
    if (idio_weight.rows() != n || idio_weight.cols() != n) {
        throw ValidationError("weight matrix must be n x n");
    }
    WpcResult out;
    out.weight_inverse_applied = true;

    Stopwatch inv_clock;
    Eigen::LLT<Matrix> llt(idio_weight);
    if (llt.info() != Eigen::Success) {
        Matrix jittered = idio_weight;
        jittered.diagonal().array() += pd_floor;
        llt.compute(jittered);
        out.jitter_applied = true;
        if (llt.info() != Eigen::Success) {
            throw NumericalError("idiosyncratic weight matrix is not positive definite");
        }
    }
    // Y' W^{-1} Y = (L^{-1} Y)' (L^{-1} Y)
    Matrix whitened = llt.matrixL().solve(y);
    Matrix gram = Matrix::Zero(y.cols(), y.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(whitened.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    out.timings.inversion_ms += inv_clock.elapsed_ms();

    return factors_from_gram(y, gram, K, std::move(out));
}

WpcResult wpc_estimate_unweighted(const Matrix& y, Index K) {
    check_rank(y.rows(), y.cols(), K);
    Matrix gram = Matrix::Zero(y.cols(), y.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    return factors_from_gram(y, gram, K, WpcResult{});
}

Matrix ordinary_pca_factors(const Matrix& y, Index k) {
    const Index T = y.cols();
    if (k < 0 || k > std::min(y.rows(), T)) {
        throw ValidationError("k must satisfy 0 <= k <= min(n, T)");
    }
    if (k == 0) return Matrix(T, 0);
    Matrix gram = Matrix::Zero(T, T);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    SymmetricEigen top = leading_eigenpairs(gram, k);
    return std::sqrt(static_cast<double>(T)) * top.vectors;
}

Matrix rotation_matrix(const Vector& eig_diag, const Matrix& est_factors, const Matrix& true_factors,
                       const Matrix& true_loadings, const Matrix& idio_weight) {
    const Index K = eig_diag.size();
    if (est_factors.cols() != K || true_factors.cols() != K || true_loadings.cols() != K ||
        est_factors.rows() != true_factors.rows() || idio_weight.rows() != true_loadings.rows() ||
        idio_weight.cols() != true_loadings.rows()) {
        throw ValidationError("rotation_matrix: shapes are not conformable");
    }
    for (Index k = 0; k < K; ++k) {
        if (!(std::abs(eig_diag(k)) > 0.0) || !std::isfinite(1.0 / eig_diag(k))) {
            throw NumericalError("rotation_matrix: eigenvalue matrix is singular");
        }
    }
    Eigen::LLT<Matrix> llt(idio_weight);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("rotation_matrix: weight matrix is not positive definite");
    }
    const double T = static_cast<double>(est_factors.rows());
    Matrix info = true_loadings.transpose() * llt.solve(true_loadings);
    Matrix cross = est_factors.transpose() * true_factors;
    return eig_diag.cwiseInverse().asDiagonal() * cross * info / T;
}

}  // namespace factorcov
