#include "remmap/core.hpp"
#include "remmap/io.hpp"
#include "remmap/simulate.hpp"
#include "remmap/solver.hpp"
#include "remmap/tuning.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <optional>

namespace py = pybind11;
using namespace remmap;

namespace {

using OptMatrix = std::optional<Matrix>;

Mask to_mask(const Matrix& m) {
    Mask out(m.rows(), m.cols());
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) {
            const double v = m(i, j);
            if (v != 0.0 && v != 1.0) throw ValidationError(ValidationError::Kind::non_binary_mask,
                                                              "mask entries must be 0 or 1", i + 1, j + 1);
            out(i, j) = std::int8_t(v);
        }
    return out;
}

Matrix from_mask(const Mask& m) { return m.cast<double>(); }

RegressionProblem problem_of(const Matrix& x, const Matrix& y, const OptMatrix& c, const OptMatrix& frozen) {
    std::optional<Mask> cm, fm;
    if (c) cm = to_mask(*c);
    if (frozen) fm = to_mask(*frozen);
    return make_problem(x, y, cm, fm);
}

py::dict tune(const Matrix& x, const Matrix& y, const std::string& criterion, const std::string& method,
              const OptMatrix& c, int n_lambda1, int n_lambda2, double min_ratio,
              std::optional<std::vector<double>> lambda1, std::optional<std::vector<double>> lambda2, int folds,
              std::uint64_t seed, int vote_threshold, double tol, int threads) {
    const RegressionProblem problem = problem_of(x, y, c, std::nullopt);
    Criterion crit;
    if (criterion == "cv") crit = Criterion::cv;
    else if (criterion == "bic") crit = Criterion::bic;
    else throw py::value_error("criterion must be 'cv' or 'bic'");
    TuningOptions options;
    options.controls.tol = tol;
    options.vote_threshold = vote_threshold;
    options.threads = threads;
    const FoldAssignment fa = crit == Criterion::cv ? assign_folds(problem.n(), folds, seed) : FoldAssignment{};

    py::dict out;
    if (method == "sep") {
        SeparateTuningResult r;
        {
            py::gil_scoped_release release;
            r = separate_search(problem, n_lambda1, min_ratio, fa, crit, options);
        }
        out["best_lambda1"] = r.best_lambda1;
        out["coefficients"] = r.b.values();
        out["support"] = from_mask(r.support);
        if (crit == Criterion::cv) out["vote_support"] = from_mask(r.vote_support);
        return out;
    }
    if (method != "remmap" && method != "joint") throw py::value_error("method must be 'remmap', 'joint' or 'sep'");
    const bool joint = method == "joint";
    GridSpec grid = default_grid(problem, n_lambda1, joint ? 0 : n_lambda2, min_ratio);
    if (lambda1) grid.lambda1 = *lambda1;
    if (lambda2 && !joint) grid.lambda2 = *lambda2;
    TuningResult r;
    {
        py::gil_scoped_release release;
        r = grid_search(problem, grid, fa, crit, options);
    }
    out["lambda1"] = grid.lambda1;
    out["lambda2"] = grid.lambda2;
    out["best_lambda1"] = r.best_pair.lambda1;
    out["best_lambda2"] = r.best_pair.lambda2;
    out["coefficients"] = r.best_fit.b.values();
    out["support"] = from_mask(r.support);
    if (crit == Criterion::cv) {
        out["scores"] = r.cv_scores;
        out["vote_support"] = from_mask(r.vote_support);
    } else {
        out["scores"] = r.bic_scores;
    }
    return out;
}

SimScenario scenario_of(const std::string& text) {
    const std::filesystem::path path(text);
    if (text.find('\n') == std::string::npos && std::filesystem::exists(path)) return io::load_scenario(path);
    return io::parse_scenario(text);
}

}  // namespace

PYBIND11_MODULE(_remmap, m) {
    m.doc() = "remMap: multivariate regression with an l1 plus row-wise l2 penalty";
    m.attr("__version__") = "0.1.0";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    m.def(
        "standardize",
        [](const Matrix& a) {
            auto [s, record] = standardize(a);
            return py::make_tuple(s, record.center, record.scale);
        },
        py::arg("matrix"), "Columns centred and scaled to unit (population) sd. Returns (matrix, center, scale).");

    m.def(
        "objective",
        [](const Matrix& x, const Matrix& y, const Matrix& b, double lambda1, double lambda2, const OptMatrix& c) {
            return objective(problem_of(x, y, c, std::nullopt), CoefficientMatrix(b), PenaltyParams{lambda1, lambda2});
        },
        py::arg("x"), py::arg("y"), py::arg("b"), py::arg("lambda1"), py::arg("lambda2"), py::arg("c") = py::none());

    m.def("lasso_update", &lasso_update, py::arg("xty"), py::arg("col_sq_norm"), py::arg("lambda1"),
          py::arg("penalized") = true);

    m.def(
        "group_shrink_row",
        [](const Vector& row, const Vector& c_row, double col_sq_norm, double lambda2) {
            MaskVector c = to_mask(c_row);
            return group_shrink_row(row, c, col_sq_norm, lambda2);
        },
        py::arg("lasso_row"), py::arg("c_row"), py::arg("col_sq_norm"), py::arg("lambda2"));

    m.def(
        "fit",
        [](const Matrix& x, const Matrix& y, double lambda1, double lambda2, const OptMatrix& c,
           const OptMatrix& frozen, double tol, int max_sweeps, const OptMatrix& warm_start) {
            const RegressionProblem problem = problem_of(x, y, c, frozen);
            PenaltyParams params{lambda1, lambda2, tol, max_sweeps};
            FitOptions options;
            if (warm_start) options.warm_start = CoefficientMatrix(*warm_start);
            SolveReport report;
            {
                py::gil_scoped_release release;
                report = fit(problem, params, options);
            }
            py::dict out;
            out["coefficients"] = report.b.values();
            out["sweeps"] = report.sweeps_used;
            out["converged"] = report.converged;
            out["final_max_delta"] = report.final_max_delta;
            out["objective"] = report.objective_value;
            return out;
        },
        py::arg("x"), py::arg("y"), py::arg("lambda1"), py::arg("lambda2"), py::arg("c") = py::none(),
        py::arg("frozen") = py::none(), py::arg("tol") = 1e-6, py::arg("max_sweeps") = 500,
        py::arg("warm_start") = py::none(),
        "Active-shooting fit at one (lambda1, lambda2). Returns a dict with coefficients and diagnostics.");

    m.def(
        "ols_refit",
        [](const Matrix& x, const Matrix& y, const Matrix& support) {
            return ols_refit(x, y, to_mask(support)).values();
        },
        py::arg("x"), py::arg("y"), py::arg("support"));

    m.def(
        "cv_vote",
        [](const Matrix& final_support, const std::vector<Matrix>& fold_supports, int vote_threshold) {
            std::vector<Mask> folds;
            for (const auto& f : fold_supports) folds.push_back(to_mask(f));
            return from_mask(cv_vote(to_mask(final_support), folds, vote_threshold));
        },
        py::arg("final_support"), py::arg("fold_supports"), py::arg("vote_threshold") = 5);

    m.def(
        "df_estimate",
        [](const Matrix& x, const Matrix& y, const Matrix& b, double lambda1, double lambda2, const OptMatrix& c) {
            const RegressionProblem problem = problem_of(x, y, c, std::nullopt);
            const CoefficientMatrix coef(b);
            const DfEstimate df =
                df_estimate(problem, coef, lasso_intermediate(problem, coef, lambda1), {lambda1, lambda2});
            return py::make_tuple(df.df, df.orthogonal_design);
        },
        py::arg("x"), py::arg("y"), py::arg("b"), py::arg("lambda1"), py::arg("lambda2"), py::arg("c") = py::none(),
        "Per-response degrees of freedom and whether the design is orthogonal.");

    m.def("tune", &tune, py::arg("x"), py::arg("y"), py::arg("criterion") = "cv", py::arg("method") = "remmap",
          py::arg("c") = py::none(), py::arg("n_lambda1") = 10, py::arg("n_lambda2") = 10,
          py::arg("min_ratio") = 0.01, py::arg("lambda1") = py::none(), py::arg("lambda2") = py::none(),
          py::arg("folds") = 10, py::arg("seed") = 1, py::arg("vote_threshold") = 5, py::arg("tol") = 1e-6,
          py::arg("threads") = 0, "Grid search by cross-validation or BIC.");

    m.def(
        "simulate",
        [](const std::string& scenario, std::uint64_t replicate) {
            const SimulatedData d = generate_dataset(scenario_of(scenario), replicate);
            py::dict out;
            out["x"] = d.problem.x;
            out["y"] = d.problem.y;
            out["c"] = from_mask(d.problem.c);
            out["adjacency"] = from_mask(d.truth.adjacency);
            out["coefficients"] = d.truth.coefficients;
            out["noise_variance"] = d.noise_variance;
            out["covariance_clipped"] = d.covariance_clipped;
            return out;
        },
        py::arg("scenario"), py::arg("replicate") = 0, "Dataset from a YAML scenario (path or text).");

    m.def(
        "score_support",
        [](const Matrix& estimate, const Matrix& adjacency, const OptMatrix& c) {
            GroundTruth truth;
            truth.adjacency = to_mask(adjacency);
            const Mask cm = c ? to_mask(*c) : Mask(Mask::Ones(adjacency.rows(), adjacency.cols()));
            const ErrorMetrics e = score_support(to_mask(estimate), truth, cm);
            py::dict out;
            out["FP"] = e.fp;
            out["FN"] = e.fn;
            out["TF"] = e.tf;
            out["FPP"] = e.fpp;
            out["FNP"] = e.fnp;
            return out;
        },
        py::arg("estimate"), py::arg("adjacency"), py::arg("c") = py::none());
}
