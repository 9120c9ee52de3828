#include "factorcov/types.hpp"

#include "factorcov/linalg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

namespace factorcov {

std::vector<std::string> validate(const Matrix& values, const std::vector<std::string>& variable_ids) {
    std::vector<std::string> errors;
    if (values.rows() < 1) {
        errors.emplace_back("p >= 1 required");
    }
    if (values.cols() < 2) {
        errors.emplace_back("T >= 2 required");
    }
    for (Index t = 0; t < values.cols(); ++t) {
        for (Index i = 0; i < values.rows(); ++i) {
            if (!std::isfinite(values(i, t))) {
                std::ostringstream msg;
                msg << "non-finite entry at (" << i << "," << t << ")";
                errors.push_back(msg.str());
            }
        }
    }
    if (!variable_ids.empty()) {
        if (static_cast<Index>(variable_ids.size()) != values.rows()) {
            errors.emplace_back("variable_ids length must equal p");
        }
        std::unordered_set<std::string> seen;
        for (const auto& id : variable_ids) {
            if (!seen.insert(id).second) {
                errors.push_back("duplicate variable id '" + id + "'");
            }
        }
    }
    return errors;
}

ObservationMatrix::ObservationMatrix(Matrix values, std::vector<std::string> variable_ids)
    : values_(std::move(values)), variable_ids_(std::move(variable_ids)) {
    auto errors = validate(values_, variable_ids_);
    if (!errors.empty()) {
        std::string joined = errors.front();
        for (std::size_t k = 1; k < errors.size() && k < 5; ++k) {
            joined += "; " + errors[k];
        }
        throw ValidationError(joined);
    }
    if (variable_ids_.empty()) {
        variable_ids_.reserve(static_cast<std::size_t>(values_.rows()));
        for (Index i = 0; i < values_.rows(); ++i) {
            variable_ids_.push_back(std::to_string(i));
        }
    }
}

SubsetSelector::SubsetSelector(std::vector<Index> indices) : indices_(std::move(indices)) {
    if (indices_.empty()) {
        throw ValidationError("subset must contain at least one index");
    }
    std::set<Index> seen;
    for (Index k : indices_) {
        if (k < 0) {
            throw ValidationError("subset index " + std::to_string(k) + " is negative");
        }
        if (!seen.insert(k).second) {
            throw ValidationError("duplicate subset index " + std::to_string(k));
        }
    }
}

SubsetSelector SubsetSelector::all(Index p) { return range(0, p); }

SubsetSelector SubsetSelector::range(Index first, Index count) {
    std::vector<Index> idx(static_cast<std::size_t>(std::max<Index>(count, 0)));
    std::iota(idx.begin(), idx.end(), first);
    return SubsetSelector(std::move(idx));
}

namespace {

Index parse_index(std::string_view token, std::string_view whole) {
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
        throw ValidationError("bad subset syntax '" + std::string(whole) + "'");
    }
    return static_cast<Index>(value);
}

}  // namespace

SubsetSelector SubsetSelector::parse(std::string_view text) {
    std::vector<Index> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string_view item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                  : comma - start);
        std::size_t dots = item.find("..");
        if (dots == std::string_view::npos) {
            out.push_back(parse_index(item, text));
        } else {
            Index lo = parse_index(item.substr(0, dots), text);
            Index hi = parse_index(item.substr(dots + 2), text);
            if (hi < lo) {
                throw ValidationError("empty range in subset '" + std::string(text) + "'");
            }
            for (Index k = lo; k <= hi; ++k) out.push_back(k);
        }
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return SubsetSelector(std::move(out));
}

void SubsetSelector::check_against(Index p) const {
    for (Index k : indices_) {
        if (k >= p) {
            throw ValidationError("subset index " + std::to_string(k) + " out of range for p=" +
                                  std::to_string(p));
        }
    }
}

bool SubsetSelector::is_identity(Index p) const {
    if (size() != p) return false;
    for (Index k = 0; k < p; ++k) {
        if (indices_[static_cast<std::size_t>(k)] != k) return false;
    }
    return true;
}

Matrix restrict_rows(const Matrix& values, const SubsetSelector& subset) {
    subset.check_against(values.rows());
    Matrix out(subset.size(), values.cols());
    for (Index k = 0; k < subset.size(); ++k) {
        out.row(k) = values.row(subset[k]);
    }
    return out;
}

ObservationMatrix restrict(const ObservationMatrix& y, const SubsetSelector& subset) {
    Matrix rows = restrict_rows(y.values(), subset);
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(subset.size()));
    for (Index k : subset.indices()) {
        ids.push_back(y.variable_ids()[static_cast<std::size_t>(k)]);
    }
    return ObservationMatrix(std::move(rows), std::move(ids));
}

Matrix restrict_square(const Matrix& a, const SubsetSelector& subset) {
    subset.check_against(a.rows());
    const Index s = subset.size();
    Matrix out(s, s);
    for (Index j = 0; j < s; ++j) {
        for (Index i = 0; i < s; ++i) {
            out(i, j) = a(subset[i], subset[j]);
        }
    }
    return out;
}

std::string_view to_string(Method method) {
    switch (method) {
        case Method::Method1: return "method1";
        case Method::Method2: return "method2";
        case Method::Oracle: return "oracle";
        case Method::DivideConquer: return "dc";
    }
    return "unknown";
}

StageTimings& StageTimings::operator+=(const StageTimings& other) {
    initial_threshold_ms += other.initial_threshold_ms;
    inversion_ms += other.inversion_ms;
    eigensolve_ms += other.eigensolve_ms;
    merge_ms += other.merge_ms;
    residual_ms += other.residual_ms;
    total_ms += other.total_ms;
    return *this;
}

TrueModel TrueModel::from_parts(Matrix loadings, Matrix factors, Matrix idio_cov) {
    if (loadings.rows() != idio_cov.rows() || idio_cov.rows() != idio_cov.cols()) {
        throw ValidationError("true model: loadings and idiosyncratic covariance disagree on p");
    }
    if (loadings.cols() != factors.cols()) {
        throw ValidationError("true model: loadings and factors disagree on K");
    }
    TrueModel m;
    m.implied_cov = loadings * loadings.transpose() + idio_cov;
    symmetrize(m.implied_cov);
    m.loadings = std::move(loadings);
    m.factors = std::move(factors);
    m.idio_cov = std::move(idio_cov);
    return m;
}

}  // namespace factorcov
