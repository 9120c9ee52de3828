#include "factorcov/model_selection.hpp"

#include "factorcov/linalg.hpp"

#include <cmath>
#include <limits>

namespace factorcov {

std::string_view to_string(KPenalty penalty) {
    switch (penalty) {
        case KPenalty::Gp1: return "gp1";
        case KPenalty::Gp2: return "gp2";
        case KPenalty::EigenRatio: return "eigen_ratio";
    }
    return "unknown";
}

KPenalty parse_penalty(std::string_view text) {
    if (text == "gp1") return KPenalty::Gp1;
    if (text == "gp2") return KPenalty::Gp2;
    if (text == "eigen_ratio" || text == "eigen-ratio" || text == "ratio") return KPenalty::EigenRatio;
    throw ValidationError("unknown penalty '" + std::string(text) + "'");
}

double ic_penalty(KPenalty penalty, Index p, Index T) {
    const double pd = static_cast<double>(p);
    const double td = static_cast<double>(T);
    const double scale = (pd + td) / (pd * td);
    switch (penalty) {
        case KPenalty::Gp1: return scale * std::log(pd * td / (pd + td));
        case KPenalty::Gp2: return scale * std::log(std::min(pd, td));
        case KPenalty::EigenRatio: break;
    }
    throw ValidationError("eigen_ratio has no information-criterion penalty");
}

Vector gram_spectrum(const Matrix& y, bool center) {
    Matrix data = center ? Matrix(y.colwise() - y.rowwise().mean()) : y;
    Matrix gram = Matrix::Zero(y.cols(), y.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(data.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition did not converge");
    return solver.eigenvalues().reverse().cwiseMax(0.0);
}

KSelectionResult select_k_ic(const Matrix& y, Index N, KPenalty penalty, bool center) {
    const Index p = y.rows();
    const Index T = y.cols();
    if (penalty == KPenalty::EigenRatio) return select_k_eigen_ratio(y, N, center);
    if (N < 0 || N >= std::min(p, T)) throw ValidationError("N must satisfy 0 <= N < min(p, T)");
    if (y.squaredNorm() == 0.0) throw ValidationError("degenerate input: Y is identically zero");

    Vector lambda = gram_spectrum(y, center);
    const double g = ic_penalty(penalty, p, T);
    const double pt = static_cast<double>(p) * static_cast<double>(T);

    // tail(k) = sum_{j>k} lambda_j, accumulated from the small end
    Vector tail = Vector::Zero(lambda.size() + 1);
    for (Index j = lambda.size() - 1; j >= 0; --j) tail(j) = tail(j + 1) + lambda(j);

    // A tail at rounding level means the first k components reproduce Y exactly.
    const double zero = 1e-12 * tail(0);

    KSelectionResult out;
    out.penalty = penalty;
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 0; k <= N; ++k) {
        const double value = tail(k) <= zero ? -std::numeric_limits<double>::infinity()
                                             : std::log(tail(k) / pt) + static_cast<double>(k) * g;
        out.criterion_values.push_back(value);
        if (value < best) {
            best = value;
            out.k_hat = k;
        }
    }
    return out;
}

KSelectionResult select_k_eigen_ratio(const Matrix& y, Index N, bool center) {
    const Index p = y.rows();
    const Index T = y.cols();
    if (N < 1 || N + 1 > std::min(p, T)) throw ValidationError("N must satisfy 1 <= N and N + 1 <= min(p, T)");
    if (y.squaredNorm() == 0.0) throw ValidationError("degenerate input: Y is identically zero");

    Vector lambda = gram_spectrum(y, center) / static_cast<double>(T);
    const double zero = 1e-12 * lambda(0);

    KSelectionResult out;
    out.penalty = KPenalty::EigenRatio;
    out.criterion_values.push_back(std::numeric_limits<double>::quiet_NaN());
    double best = -1.0;
    bool found_infinite = false;
    for (Index k = 1; k <= N; ++k) {
        double ratio;
        if (lambda(k) <= zero) {
            ratio = lambda(k - 1) <= zero ? std::numeric_limits<double>::quiet_NaN()
                                          : std::numeric_limits<double>::infinity();
        } else {
            ratio = lambda(k - 1) / lambda(k);
        }
        out.criterion_values.push_back(ratio);
        if (found_infinite || std::isnan(ratio)) continue;
        if (std::isinf(ratio)) {
            out.k_hat = k;
            found_infinite = true;
        } else if (ratio > best) {
            best = ratio;
            out.k_hat = k;
        }
    }
    return out;
}

}  // namespace factorcov
