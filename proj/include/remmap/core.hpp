#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace remmap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// 0/1 indicator matrix. Values outside {0,1} are representable so that
/// validation can report them.
using Mask = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;
using MaskVector = Eigen::Matrix<std::int8_t, Eigen::Dynamic, 1>;

/// Raised when a problem, matrix or parameter set violates its invariants.
/// Row/column indices in the message and in the fields are 1-based; zero
/// means "not applicable".
class ValidationError : public std::invalid_argument {
public:
    enum class Kind {
        dimension_mismatch,
        non_binary_mask,
        zero_norm_column,
        mask_conflict,
        constant_column,
        bad_parameter,
    };

    ValidationError(Kind kind, const std::string& what, Index row = 0, Index col = 0)
        : std::invalid_argument(what), kind_(kind), row_(row), col_(col) {}

    Kind kind() const noexcept { return kind_; }
    Index row() const noexcept { return row_; }
    Index col() const noexcept { return col_; }

private:
    Kind kind_;
    Index row_;
    Index col_;
};

/// Multivariate regression data: Y (N x Q) regressed on X (N x P).
///
/// `c(p, q) == 0` leaves coefficient (p, q) unpenalized. `frozen(p, q) == 1`
/// pins coefficient (p, q) at exactly zero for the whole fit.
struct RegressionProblem {
    Matrix y;
    Matrix x;
    Mask c;
    Mask frozen;

    Index n() const noexcept { return x.rows(); }
    Index p() const noexcept { return x.cols(); }
    Index q() const noexcept { return y.cols(); }
};

/// Builds a problem, defaulting C to all ones and the frozen mask to all
/// zeros, then validates it.
RegressionProblem make_problem(Matrix x, Matrix y, std::optional<Mask> c = std::nullopt,
                               std::optional<Mask> frozen = std::nullopt);

/// Throws ValidationError naming the first offending index.
void validate_problem(const RegressionProblem& problem);

struct PenaltyParams {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double tol = 1e-6;
    int max_sweeps = 500;
    int max_inner = 10000;
};

void validate_params(const PenaltyParams& params);

/// Dense P x Q estimate.
class CoefficientMatrix {
public:
    CoefficientMatrix() = default;
    CoefficientMatrix(Index p, Index q) : b_(Matrix::Zero(p, q)) {}
    explicit CoefficientMatrix(Matrix b) : b_(std::move(b)) {}

    const Matrix& values() const noexcept { return b_; }
    Matrix& values() noexcept { return b_; }

    Index rows() const noexcept { return b_.rows(); }
    Index cols() const noexcept { return b_.cols(); }
    double operator()(Index p, Index q) const { return b_(p, q); }
    double& operator()(Index p, Index q) { return b_(p, q); }

    /// 1 where the coefficient is nonzero.
    Mask support() const;
    Index nonzero_count() const;
    /// Rows with a nonzero penalized entry, i.e. ||C_p . B_p||_2 != 0.
    std::vector<Index> active_rows(const Mask& c) const;

private:
    Matrix b_;
};

/// Per-column centering and scaling. Scales use the population (1/N)
/// standard deviation.
struct StandardizationRecord {
    Vector center;
    Vector scale;
};

std::pair<Matrix, StandardizationRecord> standardize(const Matrix& m);
Matrix destandardize(const Matrix& standardized, const StandardizationRecord& record);

/// 0.5 ||Y - XB||_F^2 + lambda1 sum_p ||C_p . B_p||_1 + lambda2 sum_p ||C_p . B_p||_2
double objective(const RegressionProblem& problem, const CoefficientMatrix& b,
                 const PenaltyParams& params);

/// Penalty part of the objective only.
double penalty(const Mask& c, const Matrix& b, double lambda1, double lambda2);

}  // namespace remmap
