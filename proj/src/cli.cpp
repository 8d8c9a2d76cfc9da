#include "remmap/cli.hpp"

#include "remmap/io.hpp"
#include "remmap/simulate.hpp"
#include "remmap/solver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace remmap::cli {

namespace fs = std::filesystem;
using io::format_double;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void require(const fs::path& path, const char* flag) {
    if (path.empty()) throw UsageError(std::string("missing required flag ") + flag);
    if (!fs::exists(path)) throw UsageError(std::string(flag) + ": no such file: " + path.string());
}

RegressionProblem load_problem(const RunConfig& config) {
    require(config.x, "--x");
    require(config.y, "--y");
    Matrix x = io::read_matrix(config.x);
    Matrix y = io::read_matrix(config.y);
    std::optional<Mask> c;
    std::optional<Mask> frozen;
    if (!config.c.empty()) {
        require(config.c, "--c");
        c = io::read_mask(config.c);
    }
    if (!config.frozen.empty()) {
        require(config.frozen, "--frozen");
        frozen = io::read_mask(config.frozen);
    }
    return make_problem(std::move(x), std::move(y), std::move(c), std::move(frozen));
}

PenaltyParams controls_of(const RunConfig& config) {
    PenaltyParams params;
    params.tol = config.tol;
    params.max_sweeps = config.max_sweeps;
    return params;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw UsageError("--grid: invalid number '" + item + "'");
        }
        if (used != item.size() || !(v >= 0.0)) throw UsageError("--grid: invalid value '" + item + "'");
        values.push_back(v);
    }
    return values;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

enum class Model { remmap, joint, sep };

Model parse_model(const std::string& name) {
    if (name == "remmap" || name == "remMap") return Model::remmap;
    if (name == "joint") return Model::joint;
    if (name == "sep") return Model::sep;
    throw UsageError("--method must be remmap, joint or sep; got '" + name + "'");
}

/// Sizes and ratio of a "N1xN2[:ratio]" grid, or nullopt for explicit lists.
struct GridShape {
    int n1 = 10;
    int n2 = 10;
    double ratio = 0.01;
};

std::optional<GridShape> parse_grid_shape(const std::string& text) {
    if (text.find('=') != std::string::npos) return std::nullopt;
    GridShape shape;
    std::string body = text;
    if (const auto colon = body.find(':'); colon != std::string::npos) {
        try {
            shape.ratio = std::stod(body.substr(colon + 1));
        } catch (const std::exception&) {
            throw UsageError("--grid: invalid ratio in '" + text + "'");
        }
        body = body.substr(0, colon);
    }
    const auto x = body.find('x');
    try {
        if (x == std::string::npos) {
            shape.n1 = std::stoi(body);
            shape.n2 = 1;
        } else {
            shape.n1 = std::stoi(body.substr(0, x));
            shape.n2 = std::stoi(body.substr(x + 1));
        }
    } catch (const std::exception&) {
        throw UsageError("--grid: expected N1xN2[:ratio] or lambda1=...;lambda2=..., got '" + text + "'");
    }
    if (shape.n1 < 1 || shape.n2 < 1 || !(shape.ratio > 0.0) || shape.ratio > 1.0) {
        throw UsageError("--grid: sizes must be positive and ratio in (0, 1]");
    }
    return shape;
}

std::string pair_line(LambdaPair pair) {
    return format_double(pair.lambda1) + " " + format_double(pair.lambda2) + "\n";
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int tuned_threads(const RunConfig& config) {
    return config.threads > 0 ? config.threads : default_thread_count();
}

void write_grid_outputs(const fs::path& out, const TuningResult& r) {
    std::ostringstream best;
    best << "lambda1 lambda2\n" << pair_line(r.best_pair);
    io::write_text(out / "best_pair.txt", best.str());
    io::write_support(out / "support.txt", r.support);
    io::write_matrix(out / "coefficients.txt", r.best_fit.b.values());
}

}  // namespace

GridSpec parse_grid(const std::string& text, const RegressionProblem& problem, bool joint) {
    if (auto shape = parse_grid_shape(text)) {
        return default_grid(problem, shape->n1, joint ? 0 : shape->n2, shape->ratio);
    }
    GridSpec grid;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
        part = trim(part);
        if (part.empty()) continue;
        const auto eq = part.find('=');
        const std::string key = trim(part.substr(0, eq));
        const std::string value = eq == std::string::npos ? "" : part.substr(eq + 1);
        if (key == "lambda1") {
            grid.lambda1 = parse_list(value);
        } else if (key == "lambda2") {
            grid.lambda2 = parse_list(value);
        } else {
            throw UsageError("--grid: unknown key '" + key + "'");
        }
    }
    if (grid.lambda1.empty()) throw UsageError("--grid: lambda1 list is empty");
    if (joint || grid.lambda2.empty()) grid.lambda2 = {0.0};
    return grid;
}

int cmd_fit(const RunConfig& config, std::ostream& log) {
    if (!config.lambda1 || !config.lambda2) throw UsageError("fit needs --lambda1 and --lambda2");
    const RegressionProblem problem = load_problem(config);
    PenaltyParams params = controls_of(config);
    params.lambda1 = *config.lambda1;
    params.lambda2 = *config.lambda2;

    Stopwatch clock;
    const SolveReport report = fit(problem, params);
    const double elapsed = clock.seconds();

    io::write_matrix(config.out / "coefficients.txt", report.b.values());
    io::write_triplets(config.out / "coefficients_sparse.txt", report.b.values());
    std::ostringstream rep;
    rep << "lambda1 " << format_double(params.lambda1) << "\n"
        << "lambda2 " << format_double(params.lambda2) << "\n"
        << "objective " << format_double(report.objective_value) << "\n"
        << "sweeps " << report.sweeps_used << "\n"
        << "converged " << (report.converged ? 1 : 0) << "\n"
        << "final_max_delta " << format_double(report.final_max_delta) << "\n"
        << "nonzeros " << report.b.nonzero_count() << "\n";
    io::write_text(config.out / "report.txt", rep.str());

    log << "fit: objective " << format_double(report.objective_value) << ", " << report.sweeps_used
        << " sweeps, " << (report.converged ? "converged" : "NOT converged") << ", " << std::fixed
        << std::setprecision(3) << elapsed << " s\n";
    log.unsetf(std::ios::floatfield);
    return 0;
}

namespace {

int tune(const RunConfig& config, Criterion criterion, std::ostream& log) {
    if (config.folds < 2) throw UsageError("--folds must be at least 2");
    const RegressionProblem problem = load_problem(config);
    const Model model = parse_model(config.method);
    TuningOptions options;
    options.controls = controls_of(config);
    options.vote_threshold = config.vote_threshold;
    options.threads = tuned_threads(config);
    if (criterion == Criterion::cv && (config.vote_threshold < 0 || config.vote_threshold >= config.folds)) {
        throw UsageError("--vote-threshold must satisfy 0 <= v_a < folds");
    }
    const FoldAssignment folds = criterion == Criterion::cv
                                     ? assign_folds(problem.n(), config.folds, config.seed)
                                     : FoldAssignment{};
    Stopwatch clock;

    if (model == Model::sep) {
        const auto shape = parse_grid_shape(config.grid);
        if (!shape) throw UsageError("--method sep needs an N1[xN2][:ratio] grid");
        const auto r = separate_search(problem, shape->n1, shape->ratio, folds, criterion, options);
        std::ostringstream table;
        table << "response lambda1 score\n";
        for (std::size_t q = 0; q < r.scores.size(); ++q)
            for (std::size_t k = 0; k < r.scores[q].size(); ++k)
                table << q + 1 << ' ' << format_double(r.lambda1_grid[q][k]) << ' '
                      << format_double(r.scores[q][k]) << '\n';
        io::write_text(config.out / (criterion == Criterion::cv ? "cv_table.txt" : "bic_table.txt"),
                       table.str());
        std::ostringstream best;
        best << "response lambda1\n";
        for (std::size_t q = 0; q < r.best_lambda1.size(); ++q)
            best << q + 1 << ' ' << format_double(r.best_lambda1[q]) << '\n';
        io::write_text(config.out / "best_pair.txt", best.str());
        io::write_support(config.out / "support.txt", r.support);
        io::write_matrix(config.out / "coefficients.txt", r.b.values());
        if (criterion == Criterion::cv) io::write_support(config.out / "support_cv_vote.txt", r.vote_support);
        log << "sep search done in " << std::fixed << std::setprecision(3) << clock.seconds() << " s\n";
        log.unsetf(std::ios::floatfield);
        return 0;
    }

    const GridSpec grid = parse_grid(config.grid, problem, model == Model::joint);
    const TuningResult r = grid_search(problem, grid, folds, criterion, options);
    std::ostringstream table;
    if (criterion == Criterion::cv) {
        table << "lambda1 lambda2 score flagged\n";
        for (std::size_t k = 0; k < grid.size(); ++k)
            table << format_double(grid.at(k).lambda1) << ' ' << format_double(grid.at(k).lambda2) << ' '
                  << format_double(r.cv_scores[k]) << ' ' << (r.flagged[k] ? 1 : 0) << '\n';
        io::write_text(config.out / "cv_table.txt", table.str());
        write_grid_outputs(config.out, r);
        io::write_support(config.out / "support_cv_vote.txt", r.vote_support);
        const auto& fold_supports = r.per_fold_support[r.best_index];
        for (std::size_t f = 0; f < fold_supports.size(); ++f) {
            std::ostringstream name;
            name << "fold_" << std::setw(2) << std::setfill('0') << f + 1 << ".txt";
            io::write_support(config.out / "fold_supports" / name.str(), fold_supports[f]);
        }
    } else {
        table << "lambda1 lambda2 bic df flagged failed\n";
        for (std::size_t k = 0; k < grid.size(); ++k)
            table << format_double(grid.at(k).lambda1) << ' ' << format_double(grid.at(k).lambda2) << ' '
                  << (r.failed[k] ? std::string("nan") : format_double(r.bic_scores[k])) << ' '
                  << format_double(r.df_estimates[k].sum()) << ' ' << (r.flagged[k] ? 1 : 0) << ' '
                  << (r.failed[k] ? 1 : 0) << '\n';
        io::write_text(config.out / "bic_table.txt", table.str());
        write_grid_outputs(config.out, r);
        if (!r.df_orthogonal_design) {
            log << "warning: design columns are not orthogonal; df estimates use the orthogonal-design "
                   "formula\n";
        }
    }
    log << (criterion == Criterion::cv ? "cv" : "bic") << ": best lambda1 "
        << format_double(r.best_pair.lambda1) << " lambda2 " << format_double(r.best_pair.lambda2) << ", "
        << r.support.cast<int>().sum() << " selected, " << std::fixed << std::setprecision(3)
        << clock.seconds() << " s\n";
    log.unsetf(std::ios::floatfield);
    return 0;
}

SimScenario scenario_of(const RunConfig& config) {
    require(config.scenario, "--scenario");
    SimScenario s = io::load_scenario(config.scenario);
    if (config.seed_override) s.seed = *config.seed_override;
    return s;
}

}  // namespace

int cmd_cv(const RunConfig& config, std::ostream& log) { return tune(config, Criterion::cv, log); }

int cmd_bic(const RunConfig& config, std::ostream& log) { return tune(config, Criterion::bic, log); }

int cmd_simulate(const RunConfig& config, std::ostream& log) {
    const SimScenario scenario = scenario_of(config);
    const SimulatedData data = generate_dataset(scenario, 0);
    io::write_matrix(config.out / "x.txt", data.problem.x);
    io::write_matrix(config.out / "y.txt", data.problem.y);
    io::write_mask(config.out / "c.txt", data.problem.c);
    io::write_mask(config.out / "truth_adjacency.txt", data.truth.adjacency);
    io::write_matrix(config.out / "truth_coefficients.txt", data.truth.coefficients);
    Mask trans = Mask::Zero(scenario.p, scenario.q);
    for (const auto& [p, q] : data.truth.trans_edges) trans(p, q) = 1;
    io::write_support(config.out / "truth_trans_edges.txt", trans);
    std::string echo = io::scenario_to_yaml(scenario);
    echo += "# noise_variance: " + format_double(data.noise_variance) + "\n";
    echo += std::string("# covariance_clipped: ") + (data.covariance_clipped ? "true" : "false") + "\n";
    io::write_text(config.out / "scenario.yaml", echo);
    log << "simulate: " << data.truth.trans_edge_count() << " trans-edges, "
        << data.truth.trans_predictors.size() << " trans-predictors\n";
    return 0;
}

int cmd_evaluate(const RunConfig& config, std::ostream& log) {
    require(config.truth, "--truth");
    require(config.estimate, "--estimate");
    const Mask adjacency = io::read_mask(config.truth);
    Mask c;
    if (!config.c.empty()) {
        require(config.c, "--c");
        c = io::read_mask(config.c);
    } else {
        c = Mask::Ones(adjacency.rows(), adjacency.cols());
    }
    const Mask estimate = io::read_support(config.estimate, adjacency.rows(), adjacency.cols());
    GroundTruth truth;
    truth.adjacency = adjacency;
    const ErrorMetrics m = score_support(estimate, truth, c);
    std::ostringstream os;
    os << "FP,FN,TF,FPP,FNP\n" << m.fp << ',' << m.fn << ',' << m.tf << ',' << m.fpp << ',' << m.fnp << '\n';
    io::write_text(config.out / "metrics.txt", os.str());
    log << os.str();
    return 0;
}

int cmd_study(const RunConfig& config, std::ostream& log) {
    const SimScenario scenario = scenario_of(config);
    StudyOptions options;
    options.replicates = config.replicates;
    options.folds = config.folds;
    options.vote_threshold = config.vote_threshold;
    options.controls = controls_of(config);
    options.threads = tuned_threads(config);
    if (auto shape = parse_grid_shape(config.grid)) {
        options.grid_lambda1 = shape->n1;
        options.grid_lambda2 = shape->n2;
        options.min_ratio = shape->ratio;
    } else {
        throw UsageError("study needs an N1xN2[:ratio] grid");
    }
    if (config.methods != "all") {
        options.methods.clear();
        std::stringstream ss(config.methods);
        std::string name;
        while (std::getline(ss, name, ',')) {
            const auto m = parse_method(trim(name));
            if (!m) throw UsageError("--methods: unknown method '" + name + "'");
            options.methods.push_back(*m);
        }
    }
    Stopwatch clock;
    const StudyResult result = run_study(scenario, options);
    const std::string table = format_study_table(result);
    io::write_text(config.out / "table.csv", table);
    std::ostringstream report;
    report << "replicates " << options.replicates << "\nfailed " << result.failed_replicates << "\n";
    for (const auto& f : result.failures) report << "# " << f << "\n";
    io::write_text(config.out / "study_report.txt", report.str());
    log << table << "study: " << result.failed_replicates << " failed replicates, " << std::fixed
        << std::setprecision(1) << clock.seconds() << " s\n";
    log.unsetf(std::ios::floatfield);
    return 0;
}

int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
    CLI::App app{"remmap: sparse multivariate regression with master-predictor penalties"};
    app.set_config("--config", "", "TOML/INI file with command options; command-line flags win");
    app.require_subcommand(1);

    RunConfig config;
    std::string x, y, c, frozen, truth, estimate, scenario, out = ".";
    std::uint64_t seed = 1;

    auto add_problem = [&](CLI::App* sub) {
        sub->add_option("--x", x, "Predictor matrix file (N x P)");
        sub->add_option("--y", y, "Response matrix file (N x Q)");
        sub->add_option("--c", c, "Penalty indicator matrix (P x Q), default all ones");
        sub->add_option("--frozen", frozen, "Frozen-zero mask (P x Q), default none");
        sub->add_option("--tol", config.tol, "Convergence threshold on coefficient change");
        sub->add_option("--max-sweeps", config.max_sweeps, "Cap on full passes");
    };
    auto add_out = [&](CLI::App* sub) { sub->add_option("--out", out, "Output directory"); };
    auto add_threads = [&](CLI::App* sub) {
        sub->add_option("--threads", config.threads, "Worker threads (default: REMMAP_THREADS or all cores)");
    };
    auto add_tuning = [&](CLI::App* sub) {
        sub->add_option("--grid", config.grid, "N1xN2[:ratio] or lambda1=a,b;lambda2=c,d");
        sub->add_option("--method", config.method, "remmap, joint or sep");
        sub->add_option("--folds", config.folds, "Number of cross-validation folds");
        sub->add_option("--vote-threshold", config.vote_threshold, "cv.vote threshold V_a");
        sub->add_option("--seed", seed, "Fold assignment seed");
    };

    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit at one (lambda1, lambda2)");
    add_problem(fit_cmd);
    add_out(fit_cmd);
    double lambda1 = 0.0, lambda2 = 0.0;
    auto* l1_opt = fit_cmd->add_option("--lambda1", lambda1, "l1 penalty");
    auto* l2_opt = fit_cmd->add_option("--lambda2", lambda2, "row-group l2 penalty");

    CLI::App* cv_cmd = app.add_subcommand("cv", "Tune by v-fold cross-validation with OLS refit and cv.vote");
    add_problem(cv_cmd);
    add_out(cv_cmd);
    add_threads(cv_cmd);
    add_tuning(cv_cmd);

    CLI::App* bic_cmd = app.add_subcommand("bic", "Tune by BIC");
    add_problem(bic_cmd);
    add_out(bic_cmd);
    add_threads(bic_cmd);
    add_tuning(bic_cmd);

    CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate a simulated dataset");
    sim_cmd->add_option("--scenario", scenario, "Scenario YAML file");
    auto* sim_seed = sim_cmd->add_option("--seed", seed, "Override the scenario seed");
    add_out(sim_cmd);

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score an estimated support against the truth");
    eval_cmd->add_option("--truth", truth, "Truth adjacency matrix");
    eval_cmd->add_option("--estimate", estimate, "Estimated support (dense or triplet)");
    eval_cmd->add_option("--c", c, "Penalty indicator matrix; only c = 1 entries are scored");
    add_out(eval_cmd);

    CLI::App* study_cmd = app.add_subcommand("study", "Run replicated simulations and tabulate error metrics");
    study_cmd->add_option("--scenario", scenario, "Scenario YAML file");
    auto* study_seed = study_cmd->add_option("--seed", seed, "Override the scenario seed");
    study_cmd->add_option("--replicates", config.replicates, "Number of datasets");
    study_cmd->add_option("--methods", config.methods, "Comma-separated method names or 'all'");
    study_cmd->add_option("--grid", config.grid, "N1xN2[:ratio]");
    study_cmd->add_option("--folds", config.folds, "Number of cross-validation folds");
    study_cmd->add_option("--vote-threshold", config.vote_threshold, "cv.vote threshold V_a");
    study_cmd->add_option("--tol", config.tol, "Convergence threshold on coefficient change");
    add_threads(study_cmd);
    add_out(study_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, log, err);
        return code;
    }

    config.x = x;
    config.y = y;
    config.c = c;
    config.frozen = frozen;
    config.truth = truth;
    config.estimate = estimate;
    config.scenario = scenario;
    config.out = out;
    config.seed = seed;
    if (l1_opt->count()) config.lambda1 = lambda1;
    if (l2_opt->count()) config.lambda2 = lambda2;
    if (sim_seed->count() || study_seed->count()) config.seed_override = seed;

    try {
        if (*fit_cmd) return cmd_fit(config, log);
        if (*cv_cmd) return cmd_cv(config, log);
        if (*bic_cmd) return cmd_bic(config, log);
        if (*sim_cmd) return cmd_simulate(config, log);
        if (*eval_cmd) return cmd_evaluate(config, log);
        if (*study_cmd) return cmd_study(config, log);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "error: no command given\n";
    return 1;
}

}  // namespace remmap::cli
