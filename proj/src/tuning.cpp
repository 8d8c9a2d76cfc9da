#include "remmap/tuning.hpp"

#include "parallel.hpp"
#include "remmap/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace remmap {

int default_thread_count() {
    if (const char* env = std::getenv("REMMAP_THREADS")) {
        const int value = std::atoi(env);
        if (value > 0) return value;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Index> FoldAssignment::test_rows(int fold) const {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == fold) rows.push_back(Index(i));
    return rows;
}

std::vector<Index> FoldAssignment::train_rows(int fold) const {
    std::vector<Index> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != fold) rows.push_back(Index(i));
    return rows;
}

FoldAssignment assign_folds(Index n, int v, std::uint64_t seed) {
    if (v < 2) throw std::invalid_argument("fold count must be at least 2");
    if (n < v) {
        std::ostringstream os;
        os << "cannot split " << n << " samples into " << v << " folds";
        throw std::invalid_argument(os.str());
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    auto rng = make_stream(seed, std::uint64_t(n), 0x666f6c64ULL);
    std::shuffle(order.begin(), order.end(), rng);

    FoldAssignment folds;
    folds.v = v;
    folds.seed = seed;
    folds.labels.assign(order.size(), 0);
    const Index base = n / v;
    const Index extra = n % v;
    Index pos = 0;
    for (int f = 0; f < v; ++f) {
        const Index size = base + (f < extra ? 1 : 0);
        for (Index k = 0; k < size; ++k) folds.labels[std::size_t(order[std::size_t(pos++)])] = f + 1;
    }
    return folds;
}

RegressionProblem subset_rows(const RegressionProblem& problem, std::span<const Index> rows) {
    RegressionProblem out;
    out.x.resize(Index(rows.size()), problem.p());
    out.y.resize(Index(rows.size()), problem.q());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.x.row(Index(i)) = problem.x.row(rows[i]);
        out.y.row(Index(i)) = problem.y.row(rows[i]);
    }
    out.c = problem.c;
    out.frozen = problem.frozen;
    return out;
}

namespace {

CoefficientMatrix refit_with_gram(const Matrix& x, const Matrix& y, const Matrix& gram, const Matrix& xty,
                                  const Mask& support) {
    CoefficientMatrix b(x.cols(), y.cols());
    std::vector<Index> selected;
    Matrix g;
    Vector rhs;
    Matrix xs;
    for (Index q = 0; q < y.cols(); ++q) {
        selected.clear();
        for (Index p = 0; p < x.cols(); ++p)
            if (support(p, q) != 0) selected.push_back(p);
        if (selected.empty()) continue;
        const Index k = Index(selected.size());
        Vector coef;
        bool solved = false;
        if (k <= x.rows()) {
            // Well-conditioned selections: Cholesky of the Gram block.
            g.resize(k, k);
            rhs.resize(k);
            for (Index i = 0; i < k; ++i) {
                rhs(i) = xty(selected[std::size_t(i)], q);
                for (Index j = 0; j < k; ++j) g(i, j) = gram(selected[std::size_t(i)], selected[std::size_t(j)]);
            }
            Eigen::LLT<Matrix> llt(g);
            if (llt.info() == Eigen::Success && llt.rcond() > 1e-12) {
                coef = llt.solve(rhs);
                solved = true;
            }
        }
        if (!solved && k > x.rows()) {
            // Full row rank: the minimum-norm solution is X_S^T (X_S X_S^T)^-1 y.
            xs.resize(x.rows(), k);
            for (Index i = 0; i < k; ++i) xs.col(i) = x.col(selected[std::size_t(i)]);
            g.noalias() = xs * xs.transpose();
            Eigen::LLT<Matrix> llt(g);
            if (llt.info() == Eigen::Success && llt.rcond() > 1e-12) {
                coef.noalias() = xs.transpose() * llt.solve(y.col(q));
                solved = true;
            }
        }
        if (!solved) {
            xs.resize(x.rows(), k);
            for (Index i = 0; i < k; ++i) xs.col(i) = x.col(selected[std::size_t(i)]);
            Eigen::BDCSVD<Matrix> svd(xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
            svd.setThreshold(1e-10);
            coef = svd.solve(y.col(q));
        }
        for (Index i = 0; i < k; ++i) b(selected[std::size_t(i)], q) = coef(i);
    }
    return b;
}

}  // namespace

CoefficientMatrix ols_refit(const Matrix& x, const Matrix& y, const Mask& support) {
    if (support.rows() != x.cols() || support.cols() != y.cols() || x.rows() != y.rows()) {
        throw ValidationError(ValidationError::Kind::dimension_mismatch,
                              "ols_refit: support, x and y shapes disagree");
    }
    if (support.cast<int>().sum() == 0) return CoefficientMatrix(x.cols(), y.cols());
    return refit_with_gram(x, y, x.transpose() * x, x.transpose() * y, support);
}

namespace {

struct FoldData {
    RegressionProblem train;
    Matrix x_test;
    Matrix y_test;
    Matrix gram;
    Matrix xty;
};

std::vector<FoldData> split_folds(const RegressionProblem& problem, const FoldAssignment& folds) {
    if (Index(folds.labels.size()) != problem.n()) {
        throw std::invalid_argument("fold assignment does not match the sample count");
    }
    std::vector<FoldData> out(std::size_t(folds.v));
    for (int f = 1; f <= folds.v; ++f) {
        const auto train = folds.train_rows(f);
        const auto test = folds.test_rows(f);
        auto& fd = out[std::size_t(f - 1)];
        fd.train = subset_rows(problem, train);
        const RegressionProblem t = subset_rows(problem, test);
        fd.x_test = t.x;
        fd.y_test = t.y;
        fd.gram = fd.train.x.transpose() * fd.train.x;
        fd.xty = fd.train.x.transpose() * fd.train.y;
    }
    return out;
}

double refit_prediction_error(const FoldData& fd, const Mask& support) {
    const CoefficientMatrix refit = refit_with_gram(fd.train.x, fd.train.y, fd.gram, fd.xty, support);
    return (fd.y_test - fd.x_test * refit.values()).squaredNorm();
}

/// Visits the fits along one lambda2 column, largest lambda1 first, each
/// warm-started from the last.
template <class Visit>
void run_path(const RegressionProblem& problem, const GridSpec& grid, std::size_t i2,
              const PenaltyParams& controls, Visit&& visit) {
    std::vector<std::size_t> order(grid.lambda1.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return grid.lambda1[a] > grid.lambda1[b];
    });
    FitOptions options;
    options.validate = false;
    for (std::size_t i1 : order) {
        PenaltyParams params = controls;
        params.lambda1 = grid.lambda1[i1];
        params.lambda2 = grid.lambda2[i2];
        SolveReport report = fit(problem, params, options);
        options.warm_start = report.b;
        visit(i1 * grid.lambda2.size() + i2, report);
    }
}

/// argmin over usable cells; ties go to the larger lambda1 + lambda2.
std::size_t pick_best(const GridSpec& grid, const std::vector<double>& scores,
                      const std::vector<bool>& failed) {
    std::size_t best = scores.size();
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (failed[k]) continue;
        if (best == scores.size() || scores[k] < scores[best]) {
            best = k;
            continue;
        }
        if (scores[k] == scores[best]) {
            const auto a = grid.at(k);
            const auto b = grid.at(best);
            if (a.lambda1 + a.lambda2 > b.lambda1 + b.lambda2) best = k;
        }
    }
    if (best == scores.size()) throw std::runtime_error("every grid cell failed");
    return best;
}

void check_grid(const GridSpec& grid) {
    if (grid.lambda1.empty() || grid.lambda2.empty()) throw std::invalid_argument("empty grid");
    for (double l : grid.lambda1)
        if (!(l >= 0.0)) throw std::invalid_argument("grid lambda1 values must be non-negative");
    for (double l : grid.lambda2)
        if (!(l >= 0.0)) throw std::invalid_argument("grid lambda2 values must be non-negative");
}

/// BIC is only compared across models leaving at least half the samples as
/// residual degrees of freedom; near-saturated fits drive log RSS to -inf.
bool saturated(double df, Index n) { return df >= 0.5 * double(n); }

int resolve_threads(int threads) { return threads > 0 ? threads : default_thread_count(); }

}  // namespace

CvCell cv_score(const RegressionProblem& problem, const PenaltyParams& controls,
                const FoldAssignment& folds, LambdaPair lambdas) {
    validate_problem(problem);
    const auto fold_data = split_folds(problem, folds);
    CvCell cell;
    PenaltyParams params = controls;
    params.lambda1 = lambdas.lambda1;
    params.lambda2 = lambdas.lambda2;
    FitOptions options;
    options.validate = false;
    for (const auto& fd : fold_data) {
        const SolveReport report = fit(fd.train, params, options);
        cell.flagged = cell.flagged || !report.converged;
        Mask support = report.b.support();
        cell.fold_scores.push_back(refit_prediction_error(fd, support));
        cell.fold_supports.push_back(std::move(support));
    }
    for (double s : cell.fold_scores) cell.score += s;
    return cell;
}

Mask cv_vote(const Mask& final_support, std::span<const Mask> fold_supports, int v_a) {
    if (v_a < 0 || std::size_t(v_a) >= fold_supports.size()) {
        throw std::invalid_argument("vote threshold must satisfy 0 <= v_a < number of folds");
    }
    Eigen::MatrixXi votes = Eigen::MatrixXi::Zero(final_support.rows(), final_support.cols());
    for (const auto& s : fold_supports) {
        if (s.rows() != final_support.rows() || s.cols() != final_support.cols()) {
            throw ValidationError(ValidationError::Kind::dimension_mismatch,
                                  "fold support shape differs from the final support");
        }
        votes += (s.array() != 0).cast<int>().matrix();
    }
    Mask out = Mask::Zero(final_support.rows(), final_support.cols());
    for (Index q = 0; q < out.cols(); ++q)
        for (Index p = 0; p < out.rows(); ++p)
            out(p, q) = (final_support(p, q) != 0 && votes(p, q) > v_a) ? 1 : 0;
    return out;
}

bool is_orthogonal_design(const Matrix& x, double tol) {
    const Matrix gram = x.transpose() * x;
    for (Index j = 0; j < gram.cols(); ++j) {
        for (Index i = 0; i < j; ++i) {
            const double scale = std::sqrt(gram(i, i) * gram(j, j));
            if (std::abs(gram(i, j)) > tol * scale) return false;
        }
    }
    return true;
}

DfEstimate df_estimate(const RegressionProblem& problem, const CoefficientMatrix& b_hat,
                       const Matrix& b_lasso, LambdaPair lambdas) {
    const Index np = problem.p();
    const Index nq = problem.q();
    if (b_hat.rows() != np || b_hat.cols() != nq || b_lasso.rows() != np || b_lasso.cols() != nq) {
        throw ValidationError(ValidationError::Kind::dimension_mismatch,
                              "df_estimate: coefficient shapes disagree with the problem");
    }
    DfEstimate out;
    out.orthogonal_design = is_orthogonal_design(problem.x);
    out.df = Vector::Zero(nq);
    const Vector sq_norms = problem.x.colwise().squaredNorm().transpose();

    for (Index p = 0; p < np; ++p) {
        double m2 = 0.0;
        for (Index q = 0; q < nq; ++q)
            if (problem.c(p, q) != 0 && problem.frozen(p, q) == 0) m2 += b_lasso(p, q) * b_lasso(p, q);
        const double m = std::sqrt(m2);
        const double group_threshold = lambdas.lambda2 / sq_norms(p);
        for (Index q = 0; q < nq; ++q) {
            if (problem.c(p, q) == 0) {
                out.df(q) += 1.0;
                continue;
            }
            if (problem.frozen(p, q) != 0) continue;
            // |beta_ols| > lambda1 / ||X_p||^2 is exactly a nonzero lasso value.
            if (!(m > group_threshold) || b_lasso(p, q) == 0.0) continue;
            const double lasso = b_lasso(p, q);
            out.df(q) += 1.0 - group_threshold * (m2 - lasso * lasso) / (m2 * m);
        }
    }
    return out;
}

Vector residual_sums(const RegressionProblem& problem, const Matrix& b) {
    return (problem.y - problem.x * b).colwise().squaredNorm().transpose();
}

double bic_score(const RegressionProblem& problem, const CoefficientMatrix& b_hat,
                 const Eigen::Ref<const Vector>& df) {
    if (df.size() != problem.q()) {
        throw ValidationError(ValidationError::Kind::dimension_mismatch,
                              "df length differs from the response count");
    }
    const Vector rss = residual_sums(problem, b_hat.values());
    const double n = double(problem.n());
    double log_rss = 0.0;
    for (Index q = 0; q < rss.size(); ++q) {
        if (!(rss(q) > 0.0)) {
            std::ostringstream os;
            os << "residual sum of squares is zero for response " << q + 1;
            throw std::domain_error(os.str());
        }
        log_rss += std::log(rss(q));
    }
    return n * log_rss + std::log(n) * df.sum();
}

double lambda1_max(const RegressionProblem& problem) {
    const Matrix xty = problem.x.transpose() * problem.y;
    double best = 0.0;
    for (Index q = 0; q < xty.cols(); ++q)
        for (Index p = 0; p < xty.rows(); ++p)
            if (problem.c(p, q) != 0 && problem.frozen(p, q) == 0)
                best = std::max(best, std::abs(xty(p, q)));
    return best;
}

double lambda2_max(const RegressionProblem& problem) {
    const Matrix xty = problem.x.transpose() * problem.y;
    double best = 0.0;
    for (Index p = 0; p < xty.rows(); ++p) {
        double sq = 0.0;
        for (Index q = 0; q < xty.cols(); ++q)
            if (problem.c(p, q) != 0 && problem.frozen(p, q) == 0) sq += xty(p, q) * xty(p, q);
        best = std::max(best, std::sqrt(sq));
    }
    return best;
}

std::vector<double> log_spaced(double max, double min_ratio, int count) {
    std::vector<double> out;
    if (count <= 0) return out;
    if (count == 1) return {max};
    const double step = std::log(min_ratio) / double(count - 1);
    for (int i = 0; i < count; ++i) out.push_back(max * std::exp(step * i));
    return out;
}

GridSpec default_grid(const RegressionProblem& problem, int n1, int n2, double min_ratio) {
    if (n1 < 1) throw std::invalid_argument("grid needs at least one lambda1 value");
    if (!(min_ratio > 0.0) || min_ratio > 1.0) throw std::invalid_argument("min_ratio must lie in (0, 1]");
    GridSpec grid;
    grid.lambda1 = log_spaced(lambda1_max(problem), min_ratio, n1);
    grid.lambda2 = n2 > 0 ? log_spaced(lambda2_max(problem), min_ratio, n2) : std::vector<double>{0.0};
    return grid;
}

namespace {

TuningResult grid_search_cv(const RegressionProblem& problem, const GridSpec& grid,
                            const FoldAssignment& folds, const TuningOptions& options) {
    const auto fold_data = split_folds(problem, folds);
    const std::size_t cells = grid.size();
    const std::size_t v = fold_data.size();
    const std::size_t n2 = grid.lambda2.size();

    TuningResult result;
    result.grid = grid;
    result.criterion = Criterion::cv;
    result.vote_threshold = options.vote_threshold;
    result.fold_scores.assign(cells, std::vector<double>(v, 0.0));
    result.per_fold_support.assign(cells, std::vector<Mask>(v));
    std::vector<std::vector<char>> not_converged(cells, std::vector<char>(v, 0));

    detail::parallel_for(v * n2, resolve_threads(options.threads), [&](std::size_t task) {
        const std::size_t f = task / n2;
        const std::size_t i2 = task % n2;
        const auto& fd = fold_data[f];
        run_path(fd.train, grid, i2, options.controls, [&](std::size_t k, const SolveReport& r) {
            Mask support = r.b.support();
            result.fold_scores[k][f] = refit_prediction_error(fd, support);
            result.per_fold_support[k][f] = std::move(support);
            not_converged[k][f] = r.converged ? 0 : 1;
        });
    });

    result.cv_scores.assign(cells, 0.0);
    result.flagged.assign(cells, false);
    result.failed.assign(cells, false);
    for (std::size_t k = 0; k < cells; ++k) {
        double sum = 0.0;
        for (std::size_t f = 0; f < v; ++f) {
            sum += result.fold_scores[k][f];
            if (not_converged[k][f]) result.flagged[k] = true;
        }
        result.cv_scores[k] = sum;
        result.failed[k] = !std::isfinite(sum);
    }

    result.best_index = pick_best(grid, result.cv_scores, result.failed);
    result.best_pair = grid.at(result.best_index);
    PenaltyParams params = options.controls;
    params.lambda1 = result.best_pair.lambda1;
    params.lambda2 = result.best_pair.lambda2;
    FitOptions fit_options;
    fit_options.validate = false;
    result.best_fit = fit(problem, params, fit_options);
    result.support = result.best_fit.b.support();
    result.vote_support =
        cv_vote(result.support, result.per_fold_support[result.best_index], options.vote_threshold);
    return result;
}

TuningResult grid_search_bic(const RegressionProblem& problem, const GridSpec& grid,
                             const TuningOptions& options) {
    const std::size_t cells = grid.size();
    const std::size_t n2 = grid.lambda2.size();
    const bool orthogonal = is_orthogonal_design(problem.x);

    TuningResult result;
    result.grid = grid;
    result.criterion = Criterion::bic;
    result.vote_threshold = options.vote_threshold;
    result.df_orthogonal_design = orthogonal;
    result.bic_scores.assign(cells, std::numeric_limits<double>::infinity());
    result.df_estimates.assign(cells, Vector());
    std::vector<char> flagged(cells, 0);
    std::vector<char> failed(cells, 0);
    std::vector<SolveReport> fits(cells);

    detail::parallel_for(n2, resolve_threads(options.threads), [&](std::size_t i2) {
        run_path(problem, grid, i2, options.controls, [&](std::size_t k, const SolveReport& r) {
            const auto pair = grid.at(k);
            const Matrix lasso = lasso_intermediate(problem, r.b, pair.lambda1);
            DfEstimate df = df_estimate(problem, r.b, lasso, pair);
            flagged[k] = r.converged ? 0 : 1;
            try {
                result.bic_scores[k] = bic_score(problem, r.b, df.df);
            } catch (const std::domain_error&) {
                failed[k] = 1;
            }
            if (saturated(df.df.maxCoeff(), problem.n())) failed[k] = 1;
            result.df_estimates[k] = std::move(df.df);
            fits[k] = r;
        });
    });

    result.flagged.assign(flagged.begin(), flagged.end());
    result.failed.assign(failed.begin(), failed.end());
    result.best_index = pick_best(grid, result.bic_scores, result.failed);
    result.best_pair = grid.at(result.best_index);
    result.best_fit = std::move(fits[result.best_index]);
    result.support = result.best_fit.b.support();
    return result;
}

RegressionProblem single_response(const RegressionProblem& problem, Index q) {
    RegressionProblem out;
    out.x = problem.x;
    out.y = problem.y.col(q);
    out.c = problem.c.col(q);
    out.frozen = problem.frozen.col(q);
    return out;
}

}  // namespace

TuningResult grid_search(const RegressionProblem& problem, const GridSpec& grid,
                         const FoldAssignment& folds, Criterion criterion,
                         const TuningOptions& options) {
    validate_problem(problem);
    validate_params(options.controls);
    check_grid(grid);
    if (criterion == Criterion::cv) return grid_search_cv(problem, grid, folds, options);
    return grid_search_bic(problem, grid, options);
}

SeparateTuningResult separate_search(const RegressionProblem& problem, int n_lambda,
                                     double min_ratio, const FoldAssignment& folds,
                                     Criterion criterion, const TuningOptions& options) {
    validate_problem(problem);
    validate_params(options.controls);
    if (n_lambda < 1) throw std::invalid_argument("n_lambda must be positive");
    const Index nq = problem.q();
    const Index np = problem.p();

    SeparateTuningResult result;
    result.criterion = criterion;
    result.lambda1_grid.resize(std::size_t(nq));
    result.scores.resize(std::size_t(nq));
    result.best_lambda1.assign(std::size_t(nq), 0.0);
    result.b = CoefficientMatrix(np, nq);
    result.support = Mask::Zero(np, nq);
    result.vote_support = Mask::Zero(np, nq);

    std::vector<FoldData> fold_data;
    if (criterion == Criterion::cv) fold_data = split_folds(problem, folds);
    const double log_n = std::log(double(problem.n()));

    detail::parallel_for(std::size_t(nq), resolve_threads(options.threads), [&](std::size_t qi) {
        const Index q = Index(qi);
        const RegressionProblem sub = single_response(problem, q);
        GridSpec grid;
        const double top = lambda1_max(sub);
        grid.lambda1 = top > 0.0 ? log_spaced(top, min_ratio, n_lambda) : std::vector<double>{0.0};
        grid.lambda2 = {0.0};
        const std::size_t cells = grid.lambda1.size();
        std::vector<double> scores(cells, 0.0);
        std::vector<bool> failed(cells, false);
        std::vector<SolveReport> full_fits;

        std::vector<std::vector<Mask>> fold_supports;
        if (criterion == Criterion::cv) {
            fold_supports.assign(cells, std::vector<Mask>(fold_data.size()));
            for (std::size_t f = 0; f < fold_data.size(); ++f) {
                FoldData fd;
                fd.train = single_response(fold_data[f].train, q);
                fd.x_test = fold_data[f].x_test;
                fd.y_test = fold_data[f].y_test.col(q);
                fd.gram = fold_data[f].gram;
                fd.xty = fold_data[f].xty.col(q);
                run_path(fd.train, grid, 0, options.controls, [&](std::size_t k, const SolveReport& r) {
                    Mask support = r.b.support();
                    scores[k] += refit_prediction_error(fd, support);
                    fold_supports[k][f] = std::move(support);
                });
            }
            for (std::size_t k = 0; k < cells; ++k) failed[k] = !std::isfinite(scores[k]);
        } else {
            full_fits.resize(cells);
            run_path(sub, grid, 0, options.controls, [&](std::size_t k, const SolveReport& r) {
                const double rss = residual_sums(sub, r.b.values())(0);
                if (!(rss > 0.0) || saturated(double(r.b.nonzero_count()), sub.n())) {
                    failed[k] = true;
                    scores[k] = std::numeric_limits<double>::infinity();
                } else {
                    scores[k] = double(sub.n()) * std::log(rss) + log_n * double(r.b.nonzero_count());
                }
                full_fits[k] = r;
            });
        }

        const std::size_t best = pick_best(grid, scores, failed);
        const double best_lambda = grid.lambda1[best];
        SolveReport chosen;
        if (criterion == Criterion::cv) {
            PenaltyParams params = options.controls;
            params.lambda1 = best_lambda;
            params.lambda2 = 0.0;
            FitOptions fit_options;
            fit_options.validate = false;
            chosen = fit(sub, params, fit_options);
        } else {
            chosen = std::move(full_fits[best]);
        }

        // Each response writes only its own column.
        result.lambda1_grid[qi] = grid.lambda1;
        result.scores[qi] = scores;
        result.best_lambda1[qi] = best_lambda;
        result.b.values().col(q) = chosen.b.values().col(0);
        const Mask support = chosen.b.support();
        result.support.col(q) = support.col(0);
        if (criterion == Criterion::cv) {
            result.vote_support.col(q) =
                cv_vote(support, fold_supports[best], options.vote_threshold).col(0);
        }
    });
    return result;
}

}  // namespace remmap
