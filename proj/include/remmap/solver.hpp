#pragma once

#include "remmap/core.hpp"

#include <functional>
#include <optional>

namespace remmap {

/// Univariate step for one coefficient given xty = X_p^T Ytilde_q.
/// Unpenalized coefficients get the univariate least-squares value;
/// penalized ones are soft-thresholded at lambda1. |xty| == lambda1 gives 0.
double lasso_update(double xty, double col_sq_norm, double lambda1, bool penalized);

/// Group shrinkage of a row of lasso values over its penalized entries.
/// Unpenalized entries pass through unchanged.
Vector group_shrink_row(const Eigen::Ref<const Vector>& lasso_row, const Eigen::Ref<const MaskVector>& c_row,
                        double col_sq_norm, double lambda2);

/// Residuals Y - XB kept in step with the coefficient matrix.
class ResidualState {
public:
    ResidualState(const RegressionProblem& problem, const CoefficientMatrix& b);

    /// Recomputes the residuals from scratch.
    void refresh(const RegressionProblem& problem, const CoefficientMatrix& b);

    const Matrix& residuals() const noexcept { return residuals_; }
    Matrix& residuals() noexcept { return residuals_; }
    const Vector& col_sq_norms() const noexcept { return col_sq_norms_; }

private:
    Matrix residuals_;
    Vector col_sq_norms_;
};

struct RowUpdateResult {
    double max_delta = 0.0;
    bool changed(double tol) const noexcept { return max_delta > tol; }
};

/// Replaces row p of `b` with the exact minimizer of the objective over that
/// row, all other rows held fixed, and updates `state` to match.
/// Frozen entries stay at zero and take no part in the group norm.
RowUpdateResult update_row(ResidualState& state, CoefficientMatrix& b, Index p,
                           const RegressionProblem& problem, const PenaltyParams& params);

/// Lasso intermediates at `b`: for each (p, q) the soft-thresholded
/// (or least-squares, when unpenalized) univariate value computed from the
/// partial residual that excludes row p. Frozen entries are 0.
/// At a fixed point of update_row, group-shrinking each row of this matrix
/// reproduces `b`.
Matrix lasso_intermediate(const RegressionProblem& problem, const CoefficientMatrix& b,
                          double lambda1);

/// Per-entry soft-thresholding of X^T Y used as the default starting point.
CoefficientMatrix initial_estimate(const RegressionProblem& problem, double lambda1);

struct SolveReport {
    CoefficientMatrix b;
    int sweeps_used = 0;
    bool converged = false;
    double final_max_delta = 0.0;
    double objective_value = 0.0;
};

/// Observer hook, called after every sweep (active-set or full) with the
/// current coefficients. `full` marks passes over all rows.
struct SweepEvent {
    const CoefficientMatrix& b;
    int sweep_index;
    bool full;
    double max_delta;
};
using SweepObserver = std::function<void(const SweepEvent&)>;

struct FitOptions {
    std::optional<CoefficientMatrix> warm_start;
    SweepObserver observer;
    /// 0 disables periodic residual refresh.
    int refresh_every = 50;
    /// When false the problem is assumed to have been validated already.
    bool validate = true;
    /// Anderson extrapolation over this many inner sweeps; a step is kept
    /// only when it lowers the objective. 0 disables.
    int extrapolation_depth = 5;
};

/// Active-shooting coordinate descent. On convergence the returned B is the
/// start of a full pass that moved no entry by more than tol. Non-convergence
/// is reported through `SolveReport::converged`, not thrown.
SolveReport fit(const RegressionProblem& problem, const PenaltyParams& params,
                const FitOptions& options = {});

/// One full pass of update_row over every row in ascending order.
/// Returns the largest coefficient change.
double full_sweep(ResidualState& state, CoefficientMatrix& b, const RegressionProblem& problem,
                  const PenaltyParams& params);

}  // namespace remmap
