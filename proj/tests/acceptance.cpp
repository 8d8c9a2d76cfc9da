// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero
// if any fails. Optional arguments select criteria by number.
#include "oracles.hpp"
#include "properties.hpp"

#include "remmap/io.hpp"
#include "remmap/simulate.hpp"
#include "remmap/solver.hpp"
#include "remmap/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace remmap;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

// 1
Verdict oracle_equivalence() {
    const auto start = Clock::now();
    const double levels[] = {0.1, 1.0, 5.0};
    std::mt19937_64 rng(1001);
    double worst_gap = -1e300, worst_coef = 0.0;
    int bad = 0;
    for (int k = 0; k < 30; ++k) {
        const Matrix x = oracle::gaussian(20, 6, rng);
        Matrix b = oracle::gaussian(6, 5, rng);
        b.row(k % 6).setZero();
        const Matrix y = x * b + oracle::gaussian(20, 5, rng);
        const Mask c = oracle::random_mask(6, 5, 0.15, rng);
        const RegressionProblem problem = make_problem(x, y, c);
        PenaltyParams params;
        params.lambda1 = levels[k % 3];
        params.lambda2 = levels[(k / 3) % 3];
        const SolveReport report = fit(problem, params);
        const auto ref = oracle::proximal_gradient(x, y, c, problem.frozen, params.lambda1, params.lambda2);
        const double mine = oracle::objective(x, y, c, report.b.values(), params.lambda1, params.lambda2);
        const double gap = mine - ref.value;
        const double coef = (report.b.values() - ref.b).cwiseAbs().maxCoeff();
        worst_gap = std::max(worst_gap, gap);
        worst_coef = std::max(worst_coef, coef);
        if (!(gap <= 1e-6 && coef <= 1e-4 && report.converged)) ++bad;
    }
    const double elapsed = seconds_since(start);
    return {bad == 0 && elapsed < 60.0,
            fmt("30 instances, %g failing; max objective excess %.3g, max coefficient diff %.3g; %.1f s", bad,
                worst_gap, worst_coef, elapsed)};
}

// 2
Verdict reductions() {
    std::mt19937_64 rng(1002);
    double lasso_diff = 0.0, ols_diff = 0.0, zero_max = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Index n = 25 + k, p = 5 + k % 8, q = 2 + k % 4;
        const Matrix x = oracle::gaussian(n, p, rng);
        const Matrix y = x * oracle::gaussian(p, q, rng) + oracle::gaussian(n, q, rng);
        const RegressionProblem problem = make_problem(x, y);
        const double l1 = 0.5 + 0.25 * double(k % 6);
        const SolveReport report = fit(problem, PenaltyParams{l1, 0.0, 1e-10});
        for (Index j = 0; j < q; ++j) {
            const Vector ref = oracle::lasso_cd(x, y.col(j), l1);
            lasso_diff = std::max(lasso_diff, (report.b.values().col(j) - ref).cwiseAbs().maxCoeff());
        }

        const Matrix xo = oracle::orthonormal(n, p, rng);
        const RegressionProblem ortho = make_problem(xo, y);
        const SolveReport ols = fit(ortho, PenaltyParams{0.0, 0.0});
        ols_diff = std::max(ols_diff, (ols.b.values() - xo.transpose() * y).cwiseAbs().maxCoeff());

        const double lmax = (x.transpose() * y).cwiseAbs().maxCoeff();
        const SolveReport zero = fit(problem, PenaltyParams{lmax * (1.0 + double(k % 3)), double(k % 2)});
        zero_max = std::max(zero_max, zero.b.values().cwiseAbs().maxCoeff());
    }
    return {lasso_diff <= 1e-6 && ols_diff <= 1e-10 && zero_max == 0.0,
            fmt("20 instances each; lasso max diff %.3g, orthonormal OLS max diff %.3g, max |b| above threshold %g",
                lasso_diff, ols_diff, zero_max)};
}

// 3
Verdict selection_rule() {
    std::mt19937_64 rng(1003);
    std::uniform_real_distribution<double> lam(0.2, 4.0);
    int violations = 0, selected = 0, rows = 0;
    for (int k = 0; k < 100; ++k) {
        const Index n = 40, p = 12, q = 6;
        const Matrix x = oracle::orthonormal(n, p, rng);
        Matrix b = oracle::gaussian(p, q, rng);
        for (Index i = 0; i < p; i += 2) b.row(i) *= 0.2;
        const Matrix y = x * b + 0.5 * oracle::gaussian(n, q, rng);
        const Mask c = oracle::random_mask(p, q, 0.15, rng);
        const RegressionProblem problem = make_problem(x, y, c);
        const double l2 = lam(rng);
        const SolveReport report = fit(problem, PenaltyParams{0.0, l2});
        const Matrix ols = x.transpose() * y;
        for (Index i = 0; i < p; ++i) {
            double sq = 0.0, fitted = 0.0;
            bool any = false;
            for (Index j = 0; j < q; ++j) {
                if (c(i, j) == 0) continue;
                any = true;
                sq += ols(i, j) * ols(i, j);
                fitted += report.b(i, j) * report.b(i, j);
            }
            if (!any) continue;
            ++rows;
            const bool expect = std::sqrt(sq) > l2 / x.col(i).squaredNorm();
            if ((fitted > 0.0) != expect) ++violations;
            selected += expect ? 1 : 0;
        }
    }
    return {violations == 0, fmt("100 designs, %g penalized rows (%g above threshold), %g violations", rows,
                                 selected, violations)};
}

// 4
Verdict df_unbiasedness() {
    const auto start = Clock::now();
    const Index n = 64, p = 16, q = 4;
    const int reps = 2000;
    std::mt19937_64 rng(1004);
    const Matrix x = oracle::orthonormal(n, p, rng);
    Matrix b = Matrix::Zero(p, q);
    for (Index i = 0; i < 4; ++i) b.row(i) = 3.0 * oracle::gaussian(1, q, rng);
    for (Index i = 4; i < 8; ++i) b(i, i % q) = 1.0;
    b(8, 0) = 0.5;
    b(8, 1) = -0.5;
    const Matrix mu = x * b;
    const LambdaPair settings[] = {{0.5, 0.0}, {1.5, 0.0}, {0.0, 1.0}, {0.0, 3.0}, {1.0, 1.0}, {0.5, 2.5}};

    std::ostringstream detail;
    int misses = 0;
    double worst = 0.0;
    for (const LambdaPair& l : settings) {
        std::vector<Vector> diffs;
        Vector mean_df = Vector::Zero(q), mean_cov = Vector::Zero(q);
        for (int r = 0; r < reps; ++r) {
            const Matrix eps = oracle::gaussian(n, q, rng);
            const RegressionProblem problem = make_problem(x, Matrix(mu + eps));
            const SolveReport fitted = fit(problem, PenaltyParams{l.lambda1, l.lambda2, 1e-10});
            const Matrix inter = lasso_intermediate(problem, fitted.b, l.lambda1);
            const Vector df = df_estimate(problem, fitted.b, inter, l).df;
            const Matrix yhat = x * fitted.b.values();
            // Cov(yhat, y) / sigma^2 with sigma = 1 and known mean.
            const Vector cov = (yhat.array() * eps.array()).colwise().sum().transpose();
            mean_df += df;
            mean_cov += cov;
            diffs.push_back(df - cov);
        }
        mean_df /= double(reps);
        mean_cov /= double(reps);
        for (Index j = 0; j < q; ++j) {
            double ss = 0.0;
            const double md = mean_df(j) - mean_cov(j);
            for (const Vector& d : diffs) ss += (d(j) - md) * (d(j) - md);
            const double se = std::sqrt(ss / double(reps - 1) / double(reps));
            const double z = std::abs(md) / se;
            worst = std::max(worst, z);
            if (z > 3.0) ++misses;
        }
        detail << " (" << l.lambda1 << "," << l.lambda2 << "): df";
        for (Index j = 0; j < q; ++j) detail << ' ' << fmt("%.2f/%.2f", mean_df(j), mean_cov(j));
        detail << ';';
    }
    const double elapsed = seconds_since(start);
    return {misses == 0 && elapsed < 300.0,
            fmt("6 settings x 4 responses, %g beyond 3 SE (max %.2f SE); %.1f s;", misses, worst, elapsed) +
                detail.str()};
}

struct StudyOutcome {
    bool ran = false;
    double elapsed = 0.0;
    std::map<std::string, std::array<double, 5>> means;
    std::string table;
};

StudyOutcome& reduced_study() {
    static StudyOutcome outcome;
    if (outcome.ran) return outcome;
    const SimScenario scenario = io::load_scenario(fs::path(REMMAP_CONFIG_DIR) / "sim2_reduced.yaml");
    StudyOptions options;
    options.methods = {Method::remmap_cv, Method::remmap_cv_vote, Method::joint_cv,
                       Method::joint_cv_vote, Method::sep_cv, Method::sep_cv_vote};
    options.replicates = 25;
    const auto start = Clock::now();
    const StudyResult result = run_study(scenario, options);
    outcome.elapsed = seconds_since(start);
    for (const auto& row : result.rows) {
        std::array<double, 5> m{};
        for (std::size_t k = 0; k < 5; ++k) m[k] = row.metrics[k].mean;
        outcome.means[method_name(row.method)] = m;
    }
    outcome.table = format_study_table(result);
    outcome.ran = true;
    return outcome;
}

// 5
Verdict vote_effect() {
    int violations = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SimScenario s;
        s.n = 60;
        s.p = s.q = 30;
        s.topology = UniformTopology{8, {1, 3}, 14};
        s.snr = 0.25;
        s.seed = 500 + seed;
        const SimulatedData data = generate_dataset(s, 0);
        const FoldAssignment folds = assign_folds(s.n, 10, seed);
        const TuningResult r =
            grid_search(data.problem, default_grid(data.problem, 8, 6), folds, Criterion::cv, TuningOptions{});
        for (Index p = 0; p < s.p; ++p)
            for (Index q = 0; q < s.q; ++q)
                if (r.vote_support(p, q) != 0 && r.support(p, q) == 0) ++violations;
    }
    const StudyOutcome& study = reduced_study();
    const auto& cv = study.means.at("remMap.cv");
    const auto& vote = study.means.at("remMap.cv.vote");
    const double fp_drop = cv[0] - vote[0];
    const double fn_rise = vote[1] - cv[1];
    const bool direction = vote[0] <= cv[0] && fn_rise <= 0.3 * fp_drop;
    return {violations == 0 && direction,
            fmt("containment violations over 10 instances: %g; reduced study remMap FP %.2f -> %.2f, ", violations,
                cv[0], vote[0]) +
                fmt("FN %.2f -> %.2f (rise %.2f vs 30%% of FP drop = %.2f)", cv[1], vote[1], fn_rise,
                    0.3 * fp_drop)};
}

// 6
Verdict reduced_ordering() {
    const StudyOutcome& study = reduced_study();
    auto tf = [&](const char* name) { return study.means.at(name)[2]; };
    const bool order = tf("remMap.cv.vote") < tf("joint.cv.vote") && tf("joint.cv.vote") < tf("sep.cv.vote") &&
                       tf("remMap.cv") < tf("sep.cv");
    std::string table = study.table;
    std::replace(table.begin(), table.end(), '\n', ' ');
    return {order && study.elapsed < 1800.0,
            fmt("TF remMap.cv.vote %.2f, joint.cv.vote %.2f, sep.cv.vote %.2f; ", tf("remMap.cv.vote"),
                tf("joint.cv.vote"), tf("sep.cv.vote")) +
                fmt("remMap.cv %.2f, sep.cv %.2f; %.0f s; ", tf("remMap.cv"), tf("sep.cv"), study.elapsed) + table};
}

// 7
double sweep_seconds(Index n, Index p, Index q) {
    std::mt19937_64 rng(1007 + std::uint64_t(n * 7 + p * 3 + q));
    const Matrix x = oracle::gaussian(n, p, rng);
    const Matrix y = oracle::gaussian(n, q, rng);
    const RegressionProblem problem = make_problem(x, y);
    const PenaltyParams params{1e-3, 1e-3};
    CoefficientMatrix b(oracle::gaussian(p, q, rng));
    ResidualState state(problem, b);
    int sweeps = 1;
    double best = 1e300;
    for (int trial = 0; trial < 9; ++trial) {
        const auto start = Clock::now();
        for (int s = 0; s < sweeps; ++s) full_sweep(state, b, problem, params);
        const double t = seconds_since(start);
        if (t < 0.05) {
            sweeps *= 2;
            --trial;
            continue;
        }
        best = std::min(best, t / sweeps);
    }
    return best;
}

Verdict cost_scaling() {
    const Index n = 200, p = 200, q = 100;
    const double base = sweep_seconds(n, p, q);
    const double fn = sweep_seconds(2 * n, p, q) / base;
    const double fp = sweep_seconds(n, 2 * p, q) / base;
    const double fq = sweep_seconds(n, p, 2 * q) / base;
    auto ok = [](double f) { return f >= 1.6 && f <= 2.6; };
    return {ok(fn) && ok(fp) && ok(fq),
            fmt("base %.3g ms per sweep (N=200, P=200, Q=100); doubling N x%.2f, P x%.2f, Q x%.2f", base * 1e3, fn,
                fp, fq)};
}

// 8
int sh(const std::string& command) { return std::system((command + " > /dev/null 2>&1").c_str()); }

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        files[fs::relative(entry.path(), root).string()] = os.str();
    }
    return files;
}

Verdict cli_determinism() {
    const fs::path work = fs::temp_directory_path() / "remmap_acceptance_cli";
    fs::remove_all(work);
    fs::create_directories(work);
    io::write_text(work / "scenario.yaml",
                   "n: 60\np: 25\nq: 25\nsnr: 0.5\nseed: 42\ncovariance: {type: ar, rho: 0.4}\n"
                   "topology: {type: uniform, n_trans_predictors: 6, degree: [1, 3], target_trans_edges: 12}\n");
    const std::string cli = REMMAP_CLI_PATH;
    const std::string data = (work / "data").string();
    if (sh(cli + " simulate --scenario " + (work / "scenario.yaml").string() + " --out " + data) != 0)
        return {false, "simulate failed"};
    const std::string xy = " --x " + data + "/x.txt --y " + data + "/y.txt --c " + data + "/c.txt";
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "simulate --scenario " + (work / "scenario.yaml").string()},
        {"fit", "fit" + xy + " --lambda1 0.5 --lambda2 1.0"},
        {"cv", "cv" + xy + " --grid 5x4 --folds 5 --vote-threshold 2"},
        {"cv_joint", "cv" + xy + " --grid 5x4 --folds 5 --vote-threshold 2 --method joint"},
        {"cv_sep", "cv" + xy + " --grid 5x4 --folds 5 --vote-threshold 2 --method sep"},
        {"bic", "bic" + xy + " --grid 5x4"},
        {"evaluate", "evaluate --truth " + data + "/truth_adjacency.txt --estimate " + data +
                         "/truth_trans_edges.txt --c " + data + "/c.txt"},
        {"study", "study --scenario " + (work / "scenario.yaml").string() +
                      " --replicates 2 --grid 4x3 --folds 4 --vote-threshold 1 --methods remMap.cv,remMap.cv.vote,joint.bic,sep.bic"},
    };
    std::vector<std::string> failures;
    std::size_t files = 0;
    for (const auto& [name, args] : commands) {
        const fs::path a = work / (name + "_a");
        const fs::path b = work / (name + "_b");
        const int sa = sh(cli + " " + args + " --out " + a.string());
        const int sb = sh(cli + " " + args + " --out " + b.string());
        if (sa != 0 || sb != 0) {
            failures.push_back(name + " exited nonzero");
            continue;
        }
        const auto ta = tree(a);
        const auto tb = tree(b);
        files += ta.size();
        if (ta.empty() || ta != tb) failures.push_back(name + " differs");
    }
    std::string detail = std::to_string(commands.size()) + " commands, " + std::to_string(files) +
                         " files compared byte-for-byte";
    for (const auto& f : failures) detail += "; " + f;
    return {failures.empty(), detail};
}

// 9
Verdict property_suites() {
    const int convex = props::convexity(500, 9001);
    const int descent = props::monotone_descent(200, 9002);
    const int fixed = props::fixed_point(200, 9003);
    const int metrics = props::metric_identities(500, 9004);
    return {convex + descent + fixed + metrics == 0,
            fmt("violations: convexity %g/500, descent %g/200, fixed point %g/200, ", convex, descent, fixed) +
                fmt("metric identities %g/500", metrics)};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"oracle equivalence", oracle_equivalence},
        {"reduction checks", reductions},
        {"orthonormal selection rule", selection_rule},
        {"df unbiasedness", df_unbiasedness},
        {"cv.vote containment and effect", vote_effect},
        {"reduced Simulation II ordering", reduced_ordering},
        {"cost scaling", cost_scaling},
        {"CLI determinism", cli_determinism},
        {"property suites", property_suites},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = int(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failed;
        std::cout << "criterion " << id << " [" << criteria[i].first << "]: " << (v.pass ? "PASS" : "FAIL") << " - "
                  << v.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
