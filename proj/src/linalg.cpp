#include "factorcov/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace factorcov {

void symmetrize(Matrix& a) {
    const Index n = a.rows();
    for (Index j = 0; j < n; ++j) {
        for (Index i = j + 1; i < n; ++i) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }
    }
}

void fix_column_signs(Matrix& vectors) {
    for (Index j = 0; j < vectors.cols(); ++j) {
        Index best = 0;
        double best_abs = -1.0;
        for (Index i = 0; i < vectors.rows(); ++i) {
            const double v = std::abs(vectors(i, j));
            if (v > best_abs) {
                best_abs = v;
                best = i;
            }
        }
        if (vectors.rows() > 0 && vectors(best, j) < 0.0) {
            vectors.col(j) = -vectors.col(j);
        }
    }
}

namespace {

bool lexicographically_greater(const Matrix& v, Index a, Index b) {
    for (Index i = 0; i < v.rows(); ++i) {
        if (v(i, a) != v(i, b)) return v(i, a) > v(i, b);
    }
    return false;
}

}  // namespace

SymmetricEigen symmetric_eigen_desc(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigendecomposition did not converge");
    }
    const Index n = a.rows();
    SymmetricEigen out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    fix_column_signs(out.vectors);

    const double scale = n > 0 ? std::max(std::abs(out.values(0)), std::abs(out.values(n - 1))) : 0.0;
    const double tol = 1e-12 * std::max(scale, std::numeric_limits<double>::min());
    Index start = 0;
    while (start < n) {
        Index end = start + 1;
        while (end < n && std::abs(out.values(end - 1) - out.values(end)) <= tol) ++end;
        if (end - start > 1) {
            out.degenerate = true;
            std::vector<Index> order(static_cast<std::size_t>(end - start));
            std::iota(order.begin(), order.end(), start);
            std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
                return lexicographically_greater(out.vectors, x, y);
            });
            Matrix block(n, end - start);
            Vector vals(end - start);
            for (Index k = 0; k < end - start; ++k) {
                block.col(k) = out.vectors.col(order[static_cast<std::size_t>(k)]);
                vals(k) = out.values(order[static_cast<std::size_t>(k)]);
            }
            out.vectors.middleCols(start, end - start) = block;
            out.values.segment(start, end - start) = vals;
        }
        start = end;
    }
    return out;
}

namespace {

SymmetricEigen leading_from_full(const Matrix& a, Index k) {
    SymmetricEigen full = symmetric_eigen_desc(a);
    SymmetricEigen out;
    out.values = full.values.head(k);
    out.vectors = full.vectors.leftCols(k);
    const Index n = full.values.size();
    const double scale = n > 0 ? std::max(std::abs(full.values(0)), std::abs(full.values(n - 1))) : 0.0;
    const double tol = 1e-12 * std::max(scale, std::numeric_limits<double>::min());
    for (Index j = 0; j < k && j + 1 < n; ++j) {
        if (std::abs(full.values(j) - full.values(j + 1)) <= tol) out.degenerate = true;
    }
    return out;
}

// Tridiagonal T with diagonal d and off-diagonal e, factored as P(T - mu I) = LU
// with partial pivoting; solve() overwrites b with (T - mu I)^{-1} b.
class ShiftedTridiagonalLu {
public:
    ShiftedTridiagonalLu(const Vector& d, const Vector& e, double mu, double tiny)
        : n_(d.size()), l_(n_), u0_(d.array() - mu), u1_(n_), u2_(n_), swapped_(static_cast<std::size_t>(n_)) {
        u1_.head(n_ - 1) = e;
        u2_.setZero();
        l_.head(n_ - 1) = e;
        for (Index i = 0; i + 1 < n_; ++i) {
            if (std::abs(u0_(i)) >= std::abs(l_(i))) {
                swapped_[static_cast<std::size_t>(i)] = false;
                if (u0_(i) == 0.0) u0_(i) = tiny;
                const double fact = l_(i) / u0_(i);
                l_(i) = fact;
                u0_(i + 1) -= fact * u1_(i);
            } else {
                swapped_[static_cast<std::size_t>(i)] = true;
                const double fact = u0_(i) / l_(i);
                u0_(i) = l_(i);
                l_(i) = fact;
                const double tmp = u1_(i);
                u1_(i) = u0_(i + 1);
                u0_(i + 1) = tmp - fact * u0_(i + 1);
                if (i + 2 < n_) {
                    u2_(i) = u1_(i + 1);
                    u1_(i + 1) = -fact * u1_(i + 1);
                }
            }
        }
        if (u0_(n_ - 1) == 0.0) u0_(n_ - 1) = tiny;
    }

    void solve(Vector& b) const {
        for (Index i = 0; i + 1 < n_; ++i) {
            if (!swapped_[static_cast<std::size_t>(i)]) {
                b(i + 1) -= l_(i) * b(i);
            } else {
                const double tmp = b(i);
                b(i) = b(i + 1);
                b(i + 1) = tmp - l_(i) * b(i);
            }
        }
        b(n_ - 1) /= u0_(n_ - 1);
        if (n_ > 1) b(n_ - 2) = (b(n_ - 2) - u1_(n_ - 2) * b(n_ - 1)) / u0_(n_ - 2);
        for (Index i = n_ - 3; i >= 0; --i) b(i) = (b(i) - u1_(i) * b(i + 1) - u2_(i) * b(i + 2)) / u0_(i);
    }

private:
    Index n_;
    Vector l_, u0_, u1_, u2_;
    std::vector<bool> swapped_;
};

}  // namespace

SymmetricEigen leading_eigenpairs(const Matrix& a, Index k) {
    const Index n = a.rows();
    // Small problems and k close to n gain nothing from the partial solve.
    if (n < 64 || 4 * k > n) return leading_from_full(a, k);

    // Householder tridiagonalization, all eigenvalues of the tridiagonal
    // matrix, then inverse iteration for the k leading vectors only.
    Eigen::Tridiagonalization<Matrix> tri(a);
    const Vector d = tri.diagonal();
    const Vector e = tri.subDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> values_only;
    values_only.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
    if (values_only.info() != Eigen::Success) return leading_from_full(a, k);
    const Vector all = values_only.eigenvalues().reverse();

    const double scale = std::max(std::abs(all(0)), std::abs(all(n - 1)));
    if (!(scale > 0.0)) return leading_from_full(a, k);
    // Ties and near-ties among the first k + 1 values go to the full solver,
    // which owns the ordering rule for equal eigenvalues.
    for (Index j = 0; j < k; ++j) {
        if (all(j) - all(j + 1) <= 1e-8 * scale) return leading_from_full(a, k);
    }

    const double eps = std::numeric_limits<double>::epsilon();
    const double t_norm = d.cwiseAbs().maxCoeff() + 2.0 * e.cwiseAbs().maxCoeff();
    Matrix x(n, k);
    for (Index j = 0; j < k; ++j) {
        const double mu = all(j) + 4.0 * eps * t_norm;
        ShiftedTridiagonalLu lu(d, e, mu, eps * t_norm);
        Vector v(n);
        for (Index i = 0; i < n; ++i) v(i) = 1.0 + 1e-3 * static_cast<double>(i % 7);
        for (int it = 0; it < 3; ++it) {
            lu.solve(v);
            for (Index q = 0; q < j; ++q) v -= x.col(q).dot(v) * x.col(q);
            const double norm = v.norm();
            if (!(norm > 0.0) || !std::isfinite(norm)) return leading_from_full(a, k);
            v /= norm;
        }
        Vector tv = d.cwiseProduct(v) - all(j) * v;
        tv.head(n - 1) += e.cwiseProduct(v.tail(n - 1));
        tv.tail(n - 1) += e.cwiseProduct(v.head(n - 1));
        if (tv.norm() > 1e-10 * t_norm) return leading_from_full(a, k);
        x.col(j) = v;
    }

    SymmetricEigen out;
    out.values = all.head(k);
    out.vectors = tri.matrixQ() * x;
    fix_column_signs(out.vectors);
    return out;
}

double min_eigenvalue(const Matrix& a) {
    if (a.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigendecomposition did not converge");
    }
    return solver.eigenvalues()(0);
}

bool has_eigenvalues_above(const Matrix& a, double floor) {
    Matrix shifted = a;
    shifted.diagonal().array() -= floor;
    Eigen::LLT<Matrix> llt(shifted);
    return llt.info() == Eigen::Success;
}

Matrix spd_inverse_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigendecomposition did not converge");
    }
    const Vector& values = solver.eigenvalues();
    if (values.size() > 0 && !(values(0) > 0.0)) {
        throw NumericalError("matrix is not positive definite");
    }
    Matrix out = solver.eigenvectors() * values.array().rsqrt().matrix().asDiagonal() *
                 solver.eigenvectors().transpose();
    symmetrize(out);
    return out;
}

Matrix spd_inverse(const Matrix& m) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("matrix is not positive definite");
    }
    Matrix out = llt.solve(Matrix::Identity(m.rows(), m.cols()));
    symmetrize(out);
    return out;
}

}  // namespace factorcov
