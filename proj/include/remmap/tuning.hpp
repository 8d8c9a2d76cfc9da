#pragma once

#include "remmap/core.hpp"
#include "remmap/solver.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace remmap {

/// Fold labels in [1, v] for n samples.
struct FoldAssignment {
    int v = 0;
    std::vector<int> labels;
    std::uint64_t seed = 0;

    std::vector<Index> test_rows(int fold) const;
    std::vector<Index> train_rows(int fold) const;
};

/// Seeded permutation of the samples cut into v contiguous blocks whose
/// sizes differ by at most one. Requires 2 <= v <= n.
FoldAssignment assign_folds(Index n, int v, std::uint64_t seed);

/// Row subset of a problem, masks unchanged.
RegressionProblem subset_rows(const RegressionProblem& problem, std::span<const Index> rows);

/// Per-response least squares restricted to the support. Rank-deficient or
/// underdetermined selections get the minimum-norm solution (singular values
/// below 1e-10 times the largest are dropped).
CoefficientMatrix ols_refit(const Matrix& x, const Matrix& y, const Mask& support);

struct LambdaPair {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

struct CvCell {
    double score = 0.0;
    std::vector<double> fold_scores;
    std::vector<Mask> fold_supports;
    /// True when some fold fit hit its sweep cap.
    bool flagged = false;
};

/// V-fold prediction error of the refitted supports at one (lambda1, lambda2).
/// `controls` supplies tol and iteration caps; its lambdas are ignored.
CvCell cv_score(const RegressionProblem& problem, const PenaltyParams& controls,
                const FoldAssignment& folds, LambdaPair lambdas);

/// Keeps entries of `final_support` selected in more than v_a folds.
Mask cv_vote(const Mask& final_support, std::span<const Mask> fold_supports, int v_a);

struct DfEstimate {
    Vector df;
    /// False when the design columns are not mutually orthogonal, in which
    /// case the closed form is applied anyway.
    bool orthogonal_design = true;
};

bool is_orthogonal_design(const Matrix& x, double tol = 1e-8);

/// Closed-form degrees of freedom per response, evaluated from the fitted
/// coefficients and their lasso intermediates (see lasso_intermediate).
/// Frozen entries contribute nothing.
DfEstimate df_estimate(const RegressionProblem& problem, const CoefficientMatrix& b_hat,
                       const Matrix& b_lasso, LambdaPair lambdas);

/// N sum_q log(RSS_q) + log(N) sum_q df_q. Throws std::domain_error when
/// some RSS_q is zero.
double bic_score(const RegressionProblem& problem, const CoefficientMatrix& b_hat,
                 const Eigen::Ref<const Vector>& df);

/// Per-response residual sums of squares of Y - X B.
Vector residual_sums(const RegressionProblem& problem, const Matrix& b);

struct GridSpec {
    std::vector<double> lambda1;
    std::vector<double> lambda2;

    std::size_t size() const noexcept { return lambda1.size() * lambda2.size(); }
    /// Cell k pairs lambda1[k / lambda2.size()] with lambda2[k % lambda2.size()].
    LambdaPair at(std::size_t k) const {
        return {lambda1[k / lambda2.size()], lambda2[k % lambda2.size()]};
    }
};

/// max |X_p^T Y_q| over penalized, non-frozen entries.
double lambda1_max(const RegressionProblem& problem);
/// max_p ||C_p . X_p^T Y||_2 over non-frozen entries.
double lambda2_max(const RegressionProblem& problem);

/// Log-spaced values from `max` down to `max * min_ratio`.
std::vector<double> log_spaced(double max, double min_ratio, int count);

/// n1 lambda1 values from lambda1_max down by min_ratio, crossed with n2
/// lambda2 values likewise from lambda2_max. n2 == 0 yields lambda2 = {0}.
GridSpec default_grid(const RegressionProblem& problem, int n1 = 10, int n2 = 10,
                      double min_ratio = 0.01);

enum class Criterion { cv, bic };

struct TuningOptions {
    /// Tolerance and caps for every fit; lambdas ignored.
    PenaltyParams controls;
    int vote_threshold = 5;
    /// 0 uses default_thread_count().
    int threads = 0;
};

struct TuningResult {
    GridSpec grid;
    Criterion criterion = Criterion::cv;

    std::vector<double> cv_scores;
    std::vector<std::vector<double>> fold_scores;
    /// [cell][fold]
    std::vector<std::vector<Mask>> per_fold_support;

    std::vector<double> bic_scores;
    /// [cell] per-response df
    std::vector<Vector> df_estimates;
    bool df_orthogonal_design = true;

    /// Some fit for the cell hit its sweep cap.
    std::vector<bool> flagged;
    /// The cell produced no usable score.
    std::vector<bool> failed;

    std::size_t best_index = 0;
    LambdaPair best_pair;
    int vote_threshold = 5;

    /// Full-data penalized fit at best_pair.
    SolveReport best_fit;
    Mask support;
    /// cv only: support filtered by the fold votes.
    Mask vote_support;
};

/// Evaluates every grid cell. Fits along each lambda2 column are warm-started
/// from the previous (larger) lambda1. `folds` is only used for cv.
/// Throws std::runtime_error if every cell fails.
TuningResult grid_search(const RegressionProblem& problem, const GridSpec& grid,
                         const FoldAssignment& folds, Criterion criterion,
                         const TuningOptions& options = {});

/// Q independent single-response lasso fits, each tuned on its own lambda1
/// grid. For bic the degrees of freedom are the selected-predictor counts.
struct SeparateTuningResult {
    Criterion criterion = Criterion::cv;
    std::vector<std::vector<double>> lambda1_grid;  // [response][cell]
    std::vector<std::vector<double>> scores;        // [response][cell]
    std::vector<double> best_lambda1;               // [response]
    CoefficientMatrix b;
    Mask support;
    Mask vote_support;
};

SeparateTuningResult separate_search(const RegressionProblem& problem, int n_lambda,
                                     double min_ratio, const FoldAssignment& folds,
                                     Criterion criterion, const TuningOptions& options = {});

/// Worker count from REMMAP_THREADS, else hardware concurrency (at least 1).
int default_thread_count();

}  // namespace remmap
