#include "remmap/core.hpp"

#include <cmath>
#include <sstream>

namespace remmap {

namespace {

std::string dims(Index r, Index c) {
    std::ostringstream os;
    os << r << "x" << c;
    return os.str();
}

void check_binary(const Mask& m, const char* name) {
    for (Index q = 0; q < m.cols(); ++q) {
        for (Index p = 0; p < m.rows(); ++p) {
            if (m(p, q) != 0 && m(p, q) != 1) {
                std::ostringstream os;
                os << name << " must contain only 0/1; found " << int(m(p, q)) << " at (" << p + 1
                   << "," << q + 1 << ")";
                throw ValidationError(ValidationError::Kind::non_binary_mask, os.str(), p + 1,
                                      q + 1);
            }
        }
    }
}

}  // namespace

RegressionProblem make_problem(Matrix x, Matrix y, std::optional<Mask> c,
                               std::optional<Mask> frozen) {
    RegressionProblem problem;
    const Index p = x.cols();
    const Index q = y.cols();
    problem.c = c ? std::move(*c) : Mask::Ones(p, q);
    problem.frozen = frozen ? std::move(*frozen) : Mask::Zero(p, q);
    problem.x = std::move(x);
    problem.y = std::move(y);
    validate_problem(problem);
    return problem;
}

void validate_problem(const RegressionProblem& problem) {
    using Kind = ValidationError::Kind;
    const auto& x = problem.x;
    const auto& y = problem.y;
    if (x.rows() < 1 || x.cols() < 1 || y.cols() < 1) {
        throw ValidationError(Kind::dimension_mismatch,
                              "empty problem: x is " + dims(x.rows(), x.cols()) + ", y is " +
                                  dims(y.rows(), y.cols()));
    }
    if (x.rows() != y.rows()) {
        throw ValidationError(Kind::dimension_mismatch,
                              "x and y row counts differ: x is " + dims(x.rows(), x.cols()) +
                                  ", y is " + dims(y.rows(), y.cols()));
    }
    const Index p = x.cols();
    const Index q = y.cols();
    if (problem.c.rows() != p || problem.c.cols() != q) {
        throw ValidationError(Kind::dimension_mismatch, "c is " +
                                                            dims(problem.c.rows(), problem.c.cols()) +
                                                            ", expected " + dims(p, q));
    }
    if (problem.frozen.rows() != p || problem.frozen.cols() != q) {
        throw ValidationError(Kind::dimension_mismatch,
                              "frozen is " + dims(problem.frozen.rows(), problem.frozen.cols()) +
                                  ", expected " + dims(p, q));
    }
    check_binary(problem.c, "c");
    check_binary(problem.frozen, "frozen");
    for (Index j = 0; j < q; ++j) {
        for (Index i = 0; i < p; ++i) {
            if (problem.c(i, j) == 0 && problem.frozen(i, j) == 1) {
                std::ostringstream os;
                os << "coefficient (" << i + 1 << "," << j + 1
                   << ") is both unpenalized (c = 0) and frozen";
                throw ValidationError(Kind::mask_conflict, os.str(), i + 1, j + 1);
            }
        }
    }
    for (Index j = 0; j < p; ++j) {
        const double norm = x.col(j).squaredNorm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            std::ostringstream os;
            os << "predictor column " << j + 1 << " has zero or non-finite norm";
            throw ValidationError(Kind::zero_norm_column, os.str(), 0, j + 1);
        }
    }
    if (!y.allFinite()) {
        throw ValidationError(Kind::bad_parameter, "y contains non-finite values");
    }
}

void validate_params(const PenaltyParams& params) {
    using Kind = ValidationError::Kind;
    if (!(params.lambda1 >= 0.0) || !(params.lambda2 >= 0.0)) {
        throw ValidationError(Kind::bad_parameter, "lambda1 and lambda2 must be non-negative");
    }
    if (!(params.tol > 0.0)) {
        throw ValidationError(Kind::bad_parameter, "tol must be positive");
    }
    if (params.max_sweeps < 1 || params.max_inner < 1) {
        throw ValidationError(Kind::bad_parameter, "max_sweeps and max_inner must be positive");
    }
}

Mask CoefficientMatrix::support() const {
    return (b_.array() != 0.0).cast<std::int8_t>().matrix();
}

Index CoefficientMatrix::nonzero_count() const {
    return (b_.array() != 0.0).count();
}

std::vector<Index> CoefficientMatrix::active_rows(const Mask& c) const {
    std::vector<Index> rows;
    for (Index p = 0; p < b_.rows(); ++p) {
        for (Index q = 0; q < b_.cols(); ++q) {
            if (c(p, q) != 0 && b_(p, q) != 0.0) {
                rows.push_back(p);
                break;
            }
        }
    }
    return rows;
}

std::pair<Matrix, StandardizationRecord> standardize(const Matrix& m) {
    const Index n = m.rows();
    if (n < 1) {
        throw ValidationError(ValidationError::Kind::dimension_mismatch,
                              "cannot standardize a matrix with no rows");
    }
    StandardizationRecord record;
    record.center.resize(m.cols());
    record.scale.resize(m.cols());
    Matrix out(n, m.cols());
    for (Index j = 0; j < m.cols(); ++j) {
        const double mean = m.col(j).mean();
        auto centered = (m.col(j).array() - mean).matrix().eval();
        // Recentering removes the rounding left by the first pass.
        const double residual_mean = centered.mean();
        centered.array() -= residual_mean;
        const double sd = std::sqrt(centered.squaredNorm() / double(n));
        if (!(sd > 0.0) || sd <= 1e-14 * (std::abs(mean) + 1.0)) {
            std::ostringstream os;
            os << "column " << j + 1 << " is constant and cannot be standardized";
            throw ValidationError(ValidationError::Kind::constant_column, os.str(), 0, j + 1);
        }
        out.col(j) = centered / sd;
        record.center(j) = mean + residual_mean;
        record.scale(j) = sd;
    }
    return {std::move(out), std::move(record)};
}

Matrix destandardize(const Matrix& standardized, const StandardizationRecord& record) {
    if (standardized.cols() != record.center.size() || standardized.cols() != record.scale.size()) {
        throw ValidationError(ValidationError::Kind::dimension_mismatch,
                              "standardization record does not match matrix width");
    }
    Matrix out = standardized;
    for (Index j = 0; j < out.cols(); ++j) {
        out.col(j) = (out.col(j).array() * record.scale(j) + record.center(j)).matrix();
    }
    return out;
}

double penalty(const Mask& c, const Matrix& b, double lambda1, double lambda2) {
    double l1 = 0.0;
    double l2 = 0.0;
    for (Index p = 0; p < b.rows(); ++p) {
        double sq = 0.0;
        for (Index q = 0; q < b.cols(); ++q) {
            if (c(p, q) != 0) {
                l1 += std::abs(b(p, q));
                sq += b(p, q) * b(p, q);
            }
        }
        l2 += std::sqrt(sq);
    }
    return lambda1 * l1 + lambda2 * l2;
}

double objective(const RegressionProblem& problem, const CoefficientMatrix& b,
                 const PenaltyParams& params) {
    if (b.rows() != problem.p() || b.cols() != problem.q()) {
        throw ValidationError(ValidationError::Kind::dimension_mismatch,
                              "coefficients are " + dims(b.rows(), b.cols()) + ", expected " +
                                  dims(problem.p(), problem.q()));
    }
    // Frozen entries are zero in any estimate the solver produces; masking
    // here keeps the value well-defined for arbitrary B as well.
    Matrix effective = b.values();
    for (Index q = 0; q < effective.cols(); ++q)
        for (Index p = 0; p < effective.rows(); ++p)
            if (problem.frozen(p, q) != 0) effective(p, q) = 0.0;
    const double loss = 0.5 * (problem.y - problem.x * effective).squaredNorm();
    return loss + penalty(problem.c, effective, params.lambda1, params.lambda2);
}

}  // namespace remmap
