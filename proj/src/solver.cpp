#include "remmap/solver.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace remmap {

double lasso_update(double xty, double col_sq_norm, double lambda1, bool penalized) {
    if (!penalized) return xty / col_sq_norm;
    const double magnitude = std::abs(xty) - lambda1;
    if (!(magnitude > 0.0)) return 0.0;
    return std::copysign(magnitude, xty) / col_sq_norm;
}

namespace {

/// Shrinks `row` in place. `c_row` and `frozen_row` are length-Q strided
/// views into the problem masks.
template <class CRow, class FrozenRow>
void group_shrink_inplace(Vector& row, const CRow& c_row, const FrozenRow& frozen_row,
                          double col_sq_norm, double lambda2) {
    double sq = 0.0;
    for (Index q = 0; q < row.size(); ++q)
        if (c_row(q) != 0 && frozen_row(q) == 0) sq += row(q) * row(q);
    const double norm = std::sqrt(sq);
    double factor = 0.0;
    if (norm > 0.0) {
        factor = 1.0 - lambda2 / (norm * col_sq_norm);
        if (!(factor > 0.0)) factor = 0.0;
    }
    if (factor == 1.0) return;
    for (Index q = 0; q < row.size(); ++q)
        if (c_row(q) != 0) row(q) = frozen_row(q) != 0 ? 0.0 : factor * row(q);
}

struct NoFrozen {
    std::int8_t operator()(Index) const { return 0; }
};

}  // namespace

Vector group_shrink_row(const Eigen::Ref<const Vector>& lasso_row, const Eigen::Ref<const MaskVector>& c_row,
                        double col_sq_norm, double lambda2) {
    if (c_row.size() != lasso_row.size()) {
        throw ValidationError(ValidationError::Kind::dimension_mismatch,
                              "c_row and lasso_row lengths differ");
    }
    Vector out = lasso_row;
    group_shrink_inplace(out, [&](Index q) { return c_row(q); }, NoFrozen{}, col_sq_norm, lambda2);
    return out;
}

ResidualState::ResidualState(const RegressionProblem& problem, const CoefficientMatrix& b) {
    col_sq_norms_ = problem.x.colwise().squaredNorm().transpose();
    refresh(problem, b);
}

void ResidualState::refresh(const RegressionProblem& problem, const CoefficientMatrix& b) {
    residuals_ = problem.y;
    residuals_.noalias() -= problem.x * b.values();
}

namespace {

/// Scratch-buffer variant used by the sweep loops.
struct RowWorkspace {
    Vector xty;
    Vector row;
    Vector delta;
};

double update_row_impl(ResidualState& state, CoefficientMatrix& b, Index p,
                       const RegressionProblem& problem, const PenaltyParams& params,
                       RowWorkspace& ws) {
    const Index nq = problem.q();
    const double sq_norm = state.col_sq_norms()(p);
    auto xp = problem.x.col(p);
    auto& r = state.residuals();

    // With R = Y - XB: X_p^T Ytilde_q = X_p^T R_q + ||X_p||^2 beta_pq.
    ws.xty.noalias() = r.transpose() * xp;
    auto b_row = b.values().row(p);
    ws.xty += sq_norm * b_row.transpose();

    ws.row.resize(nq);
    for (Index q = 0; q < nq; ++q) {
        if (problem.frozen(p, q) != 0) {
            ws.row(q) = 0.0;
        } else {
            ws.row(q) = lasso_update(ws.xty(q), sq_norm, params.lambda1, problem.c(p, q) != 0);
        }
    }
    if (params.lambda2 > 0.0) {
        group_shrink_inplace(
            ws.row, [&](Index q) { return problem.c(p, q); },
            [&](Index q) { return problem.frozen(p, q); }, sq_norm, params.lambda2);
    }

    ws.delta = ws.row - b_row.transpose();
    const double max_delta = ws.delta.lpNorm<Eigen::Infinity>();
    if (max_delta > 0.0) {
        r.noalias() -= xp * ws.delta.transpose();
        b_row = ws.row.transpose();
    }
    return max_delta;
}

}  // namespace

RowUpdateResult update_row(ResidualState& state, CoefficientMatrix& b, Index p,
                           const RegressionProblem& problem, const PenaltyParams& params) {
    RowWorkspace ws;
    return {update_row_impl(state, b, p, problem, params, ws)};
}

double full_sweep(ResidualState& state, CoefficientMatrix& b, const RegressionProblem& problem,
                  const PenaltyParams& params) {
    RowWorkspace ws;
    double max_delta = 0.0;
    for (Index p = 0; p < problem.p(); ++p)
        max_delta = std::max(max_delta, update_row_impl(state, b, p, problem, params, ws));
    return max_delta;
}

Matrix lasso_intermediate(const RegressionProblem& problem, const CoefficientMatrix& b,
                          double lambda1) {
    const Vector sq_norms = problem.x.colwise().squaredNorm().transpose();
    Matrix residuals = problem.y;
    residuals.noalias() -= problem.x * b.values();
    Matrix xty = problem.x.transpose() * residuals;
    Matrix out(problem.p(), problem.q());
    for (Index q = 0; q < problem.q(); ++q) {
        for (Index p = 0; p < problem.p(); ++p) {
            if (problem.frozen(p, q) != 0) {
                out(p, q) = 0.0;
                continue;
            }
            const double inner = xty(p, q) + sq_norms(p) * b(p, q);
            out(p, q) = lasso_update(inner, sq_norms(p), lambda1, problem.c(p, q) != 0);
        }
    }
    return out;
}

CoefficientMatrix initial_estimate(const RegressionProblem& problem, double lambda1) {
    const Vector sq_norms = problem.x.colwise().squaredNorm().transpose();
    const Matrix xty = problem.x.transpose() * problem.y;
    CoefficientMatrix b(problem.p(), problem.q());
    for (Index q = 0; q < problem.q(); ++q) {
        for (Index p = 0; p < problem.p(); ++p) {
            if (problem.frozen(p, q) != 0) continue;
            b(p, q) = lasso_update(xty(p, q), sq_norms(p), lambda1, problem.c(p, q) != 0);
        }
    }
    return b;
}

namespace {

/// Iterates of the active rows for Anderson extrapolation.
class Extrapolator {
public:
    explicit Extrapolator(int depth) : depth_(depth) {}

    bool enabled() const { return depth_ > 0; }
    void clear() { history_.clear(); }

    void push(const Matrix& b, const std::vector<Index>& rows) {
        Matrix snap(Index(rows.size()), b.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) snap.row(Index(i)) = b.row(rows[i]);
        history_.push_back(std::move(snap));
    }

    bool ready() const { return int(history_.size()) == depth_ + 1; }

    /// Affine combination of the stored iterates minimizing the norm of the
    /// combined differences, over all columns at once or column by column.
    std::optional<Matrix> extrapolate(bool per_column) const {
        Matrix out = Matrix::Zero(history_[0].rows(), history_[0].cols());
        if (!per_column) {
            const auto w = weights([&](int i, int j) {
                return ((history_[i + 1] - history_[i]).array() * (history_[j + 1] - history_[j]).array()).sum();
            });
            if (!w) return std::nullopt;
            for (int i = 0; i < depth_; ++i) out += (*w)(i) * history_[i + 1];
            return out;
        }
        for (Index q = 0; q < out.cols(); ++q) {
            const auto w = weights([&](int i, int j) {
                return (history_[i + 1].col(q) - history_[i].col(q)).dot(history_[j + 1].col(q) - history_[j].col(q));
            });
            if (!w) {
                out.col(q) = history_.back().col(q);
                continue;
            }
            for (int i = 0; i < depth_; ++i) out.col(q) += (*w)(i) * history_[i + 1].col(q);
        }
        return out;
    }

private:
    template <class Inner>
    std::optional<Vector> weights(Inner&& inner) const {
        const int k = depth_;
        Matrix gram(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j <= i; ++j) gram(i, j) = gram(j, i) = inner(i, j);
        const double scale = gram.trace();
        if (!(scale > 0.0)) return std::nullopt;
        gram.diagonal().array() += 1e-12 * scale;
        Eigen::LDLT<Matrix> ldlt(gram);
        if (ldlt.info() != Eigen::Success) return std::nullopt;
        const Vector z = ldlt.solve(Vector::Ones(k));
        const double total = z.sum();
        if (!std::isfinite(total) || total == 0.0) return std::nullopt;
        return Vector(z / total);
    }

    int depth_;
    std::vector<Matrix> history_;
};

bool try_candidate(ResidualState& state, CoefficientMatrix& b, const std::vector<Index>& active,
                   const RegressionProblem& problem, const PenaltyParams& params,
                   const std::optional<Matrix>& candidate);

void try_extrapolation(ResidualState& state, CoefficientMatrix& b, const std::vector<Index>& active,
                       const RegressionProblem& problem, const PenaltyParams& params,
                       const Extrapolator& accel) {
    // Column-wise weights first; the single shared combination is the fallback.
    if (try_candidate(state, b, active, problem, params, accel.extrapolate(true))) return;
    try_candidate(state, b, active, problem, params, accel.extrapolate(false));
}

bool try_candidate(ResidualState& state, CoefficientMatrix& b, const std::vector<Index>& active,
                   const RegressionProblem& problem, const PenaltyParams& params,
                   const std::optional<Matrix>& candidate) {
    if (!candidate) return false;
    const Index k = Index(active.size());
    Matrix step(k, problem.q());
    for (Index i = 0; i < k; ++i) step.row(i) = candidate->row(i) - b.values().row(active[std::size_t(i)]);
    for (Index i = 0; i < k; ++i)
        for (Index q = 0; q < problem.q(); ++q)
            if (problem.frozen(active[std::size_t(i)], q) != 0) step(i, q) = 0.0;

    Matrix x_active(problem.n(), k);
    for (Index i = 0; i < k; ++i) x_active.col(i) = problem.x.col(active[std::size_t(i)]);
    Matrix trial_residuals = state.residuals();
    trial_residuals.noalias() -= x_active * step;

    Matrix trial = b.values();
    for (Index i = 0; i < k; ++i) trial.row(active[std::size_t(i)]) += step.row(i);


    const double current = 0.5 * state.residuals().squaredNorm() +
                           penalty(problem.c, b.values(), params.lambda1, params.lambda2);
    const double proposed =
        0.5 * trial_residuals.squaredNorm() + penalty(problem.c, trial, params.lambda1, params.lambda2);
    if (!(proposed < current)) return false;
    b.values() = std::move(trial);
    state.residuals() = std::move(trial_residuals);
    return true;
}

/// Inner iterations when lambda2 = 0: responses decouple, so each column
/// sweeps only its nonzero entries among the active rows and stops once its
/// own change falls below tol.
class ColumnLassoPhase {
public:
    ColumnLassoPhase(const RegressionProblem& problem, const PenaltyParams& params, int depth,
                     const std::vector<Index>& active, const CoefficientMatrix& b)
        : problem_(problem), params_(params), depth_(depth), entries_(std::size_t(problem.q())),
          live_(std::size_t(problem.q()), 1), history_(std::size_t(problem.q())) {
        for (Index q = 0; q < problem.q(); ++q) {
            for (Index p : active) {
                if (problem.frozen(p, q) != 0) continue;
                if (b(p, q) != 0.0 || problem.c(p, q) == 0) entries_[std::size_t(q)].push_back(p);
            }
            if (entries_[std::size_t(q)].empty()) live_[std::size_t(q)] = 0;
        }
    }

    /// One pass over the live columns; returns the largest change.
    double sweep(ResidualState& state, CoefficientMatrix& b) {
        double delta = 0.0;
        auto& r = state.residuals();
        const Vector& sq = state.col_sq_norms();
        for (Index q = 0; q < problem_.q(); ++q) {
            if (!live_[std::size_t(q)]) continue;
            const auto& e = entries_[std::size_t(q)];
            auto rq = r.col(q);
            double dq = 0.0;
            for (Index p : e) {
                const auto xp = problem_.x.col(p);
                const double old = b(p, q);
                const double next =
                    lasso_update(rq.dot(xp) + sq(p) * old, sq(p), params_.lambda1, problem_.c(p, q) != 0);
                const double d = next - old;
                if (d != 0.0) {
                    rq.noalias() -= d * xp;
                    b(p, q) = next;
                    dq = std::max(dq, std::abs(d));
                }
            }
            delta = std::max(delta, dq);
            if (dq <= params_.tol) {
                live_[std::size_t(q)] = 0;
                continue;
            }
            if (depth_ > 0) extrapolate(q, rq, b);
        }
        return delta;
    }

private:
    template <class Col>
    void extrapolate(Index q, Col& rq, CoefficientMatrix& b) {
        const auto& e = entries_[std::size_t(q)];
        const Index k = Index(e.size());
        auto& hist = history_[std::size_t(q)];
        Vector snap(k);
        for (Index i = 0; i < k; ++i) snap(i) = b(e[std::size_t(i)], q);
        hist.push_back(std::move(snap));
        if (int(hist.size()) < depth_ + 1) return;

        Matrix gram(depth_, depth_);
        for (int i = 0; i < depth_; ++i)
            for (int j = 0; j <= i; ++j)
                gram(i, j) = gram(j, i) = (hist[i + 1] - hist[i]).dot(hist[j + 1] - hist[j]);
        const double scale = gram.trace();
        Vector cand = Vector::Zero(k);
        bool ok = scale > 0.0;
        if (ok) {
            gram.diagonal().array() += 1e-12 * scale;
            Eigen::LDLT<Matrix> ldlt(gram);
            const Vector z = ldlt.solve(Vector::Ones(depth_));
            const double total = z.sum();
            ok = ldlt.info() == Eigen::Success && std::isfinite(total) && total != 0.0;
            if (ok)
                for (int i = 0; i < depth_; ++i) cand += (z(i) / total) * hist[i + 1];
        }
        hist.clear();
        if (!ok) return;

        Vector trial_r = rq;
        double l1_now = 0.0, l1_trial = 0.0;
        for (Index i = 0; i < k; ++i) {
            const Index p = e[std::size_t(i)];
            trial_r.noalias() -= (cand(i) - b(p, q)) * problem_.x.col(p);
            if (problem_.c(p, q) != 0) {
                l1_now += std::abs(b(p, q));
                l1_trial += std::abs(cand(i));
            }
        }
        const double now = 0.5 * rq.squaredNorm() + params_.lambda1 * l1_now;
        const double trial = 0.5 * trial_r.squaredNorm() + params_.lambda1 * l1_trial;
        if (!(trial < now)) return;
        for (Index i = 0; i < k; ++i) b(e[std::size_t(i)], q) = cand(i);
        rq = trial_r;
    }

    const RegressionProblem& problem_;
    const PenaltyParams& params_;
    int depth_;
    std::vector<std::vector<Index>> entries_;
    std::vector<char> live_;
    std::vector<std::vector<Vector>> history_;
};

/// Inner iterations when lambda2 > 0: each active row updates only its
/// nonzero entries (and unpenalized ones); zeros are revisited by the
/// following full pass.
class RowGroupPhase {
public:
    RowGroupPhase(const RegressionProblem& problem, const PenaltyParams& params,
                  const std::vector<Index>& active, const CoefficientMatrix& b)
        : problem_(problem), params_(params), active_(active), entries_(active.size()) {
        for (std::size_t i = 0; i < active.size(); ++i) {
            const Index p = active[i];
            for (Index q = 0; q < problem.q(); ++q) {
                if (problem.frozen(p, q) != 0) continue;
                if (b(p, q) != 0.0 || problem.c(p, q) == 0) entries_[i].push_back(q);
            }
        }
    }

    double sweep(ResidualState& state, CoefficientMatrix& b) {
        auto& r = state.residuals();
        const Vector& sq = state.col_sq_norms();
        double delta = 0.0;
        for (std::size_t i = 0; i < active_.size(); ++i) {
            const Index p = active_[i];
            const auto& e = entries_[i];
            const auto xp = problem_.x.col(p);
            next_.resize(Index(e.size()));
            double norm_sq = 0.0;
            for (std::size_t j = 0; j < e.size(); ++j) {
                const Index q = e[j];
                const bool penalized = problem_.c(p, q) != 0;
                const double v =
                    lasso_update(r.col(q).dot(xp) + sq(p) * b(p, q), sq(p), params_.lambda1, penalized);
                next_(Index(j)) = v;
                if (penalized) norm_sq += v * v;
            }
            const double norm = std::sqrt(norm_sq);
            double factor = 0.0;
            if (norm > 0.0) factor = std::max(0.0, 1.0 - params_.lambda2 / (norm * sq(p)));
            for (std::size_t j = 0; j < e.size(); ++j) {
                const Index q = e[j];
                const double v = problem_.c(p, q) != 0 ? factor * next_(Index(j)) : next_(Index(j));
                const double d = v - b(p, q);
                if (d != 0.0) {
                    r.col(q).noalias() -= d * xp;
                    b(p, q) = v;
                    delta = std::max(delta, std::abs(d));
                }
            }
        }
        return delta;
    }

private:
    const RegressionProblem& problem_;
    const PenaltyParams& params_;
    const std::vector<Index>& active_;
    std::vector<std::vector<Index>> entries_;
    Vector next_;
};

}  // namespace

SolveReport fit(const RegressionProblem& problem, const PenaltyParams& params,
                const FitOptions& options) {
    if (options.validate) validate_problem(problem);
    validate_params(params);

    SolveReport report;
    if (options.warm_start) {
        const auto& warm = *options.warm_start;
        if (warm.rows() != problem.p() || warm.cols() != problem.q()) {
            throw ValidationError(ValidationError::Kind::dimension_mismatch,
                                  "warm start has the wrong shape");
        }
        report.b = warm;
        for (Index q = 0; q < problem.q(); ++q)
            for (Index p = 0; p < problem.p(); ++p)
                if (problem.frozen(p, q) != 0) report.b(p, q) = 0.0;
    } else {
        report.b = initial_estimate(problem, params.lambda1);
    }

    CoefficientMatrix& b = report.b;
    ResidualState state(problem, b);
    RowWorkspace ws;
    Extrapolator accel(options.extrapolation_depth);
    int sweep_index = 0;
    int since_refresh = 0;

    auto after_sweep = [&](bool full, double delta) {
        ++sweep_index;
        if (options.refresh_every > 0 && ++since_refresh >= options.refresh_every) {
            state.refresh(problem, b);
            since_refresh = 0;
        }
        if (options.observer) options.observer(SweepEvent{b, sweep_index, full, delta});
    };

    for (;;) {
        // Iterate over the rows with any nonzero coefficient until stable.
        std::vector<Index> active;
        for (Index p = 0; p < problem.p(); ++p)
            if ((b.values().row(p).array() != 0.0).any()) active.push_back(p);
        if (!active.empty() && params.lambda2 == 0.0) {
            ColumnLassoPhase phase(problem, params, options.extrapolation_depth, active, b);
            for (int inner = 0; inner < params.max_inner; ++inner) {
                const double delta = phase.sweep(state, b);
                after_sweep(false, delta);
                if (delta <= params.tol) break;
            }
        } else if (!active.empty()) {
            accel.clear();
            RowGroupPhase phase(problem, params, active, b);
            for (int inner = 0; inner < params.max_inner; ++inner) {
                const double delta = phase.sweep(state, b);
                after_sweep(false, delta);
                if (delta <= params.tol) break;
                if (!accel.enabled()) continue;
                accel.push(b.values(), active);
                if (!accel.ready()) continue;
                try_extrapolation(state, b, active, problem, params, accel);
                accel.clear();
            }
        }

        // Full pass from fresh residuals. When it moves nothing by more than
        // tol, the state it started from is returned.
        state.refresh(problem, b);
        since_refresh = 0;
        const CoefficientMatrix start = b;
        double delta = 0.0;
        for (Index p = 0; p < problem.p(); ++p)
            delta = std::max(delta, update_row_impl(state, b, p, problem, params, ws));
        ++report.sweeps_used;
        report.final_max_delta = delta;
        after_sweep(true, delta);
        if (delta <= params.tol) {
            report.converged = true;
            b = start;
            break;
        }
        if (report.sweeps_used >= params.max_sweeps) break;
    }

    report.objective_value = objective(problem, b, params);
    return report;
}

}  // namespace remmap
