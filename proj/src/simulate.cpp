#include "remmap/simulate.hpp"

#include "parallel.hpp"
#include "remmap/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace remmap {

// Relative number of alteration intervals per chromosome (1-22, X).
const std::array<int, 23> kDefaultBlockProfile = {38, 26, 22, 15, 18, 20, 19, 22, 15, 16, 21, 18,
                                                  8,  11, 12, 16, 24, 7,  17, 13, 5,  9,  12};

namespace {

enum Stream : std::uint64_t {
    covariance_stream = 1,
    topology_stream = 2,
    coefficient_stream = 3,
    predictor_stream = 4,
    noise_stream = 5,
};

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw ValidationError(ValidationError::Kind::bad_parameter, "scenario." + field + ": " + why);
}

void check_range(const DegreeRange& range, const std::string& field, Index q) {
    if (range.min < 1 || range.max < range.min) bad_field(field, "needs 1 <= min <= max");
    if (range.max > q - 1) bad_field(field, "max degree exceeds the number of other responses");
}

/// Degree draws per predictor; `adjust` is the slot absorbing the remainder.
struct DegreePlan {
    std::vector<DegreeRange> ranges;
    std::size_t adjust = 0;
    int target = 0;
};

DegreePlan degree_plan(const TopologySpec& topology) {
    DegreePlan plan;
    std::visit(
        [&](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, HubTopology>) {
                plan.ranges.assign(std::size_t(std::max(t.n_hubs, 0)), t.degree);
                plan.adjust = plan.ranges.empty() ? 0 : plan.ranges.size() - 1;
            } else if constexpr (std::is_same_v<T, UniformTopology>) {
                plan.ranges.assign(std::size_t(std::max(t.n_trans_predictors, 0)), t.degree);
                plan.adjust = plan.ranges.empty() ? 0 : plan.ranges.size() - 1;
            } else {
                plan.ranges.assign(std::size_t(std::max(t.large_hubs.count, 0)), t.large_hubs.degree);
                plan.adjust = plan.ranges.empty() ? 0 : plan.ranges.size() - 1;
                plan.ranges.insert(plan.ranges.end(), std::size_t(std::max(t.small_hubs.count, 0)),
                                   t.small_hubs.degree);
                plan.ranges.insert(plan.ranges.end(), std::size_t(std::max(t.singletons.count, 0)),
                                   t.singletons.degree);
            }
            plan.target = t.target_trans_edges;
        },
        topology);
    return plan;
}

void check_plan(const DegreePlan& plan, Index p) {
    if (plan.target < 0) bad_field("topology.target_trans_edges", "must be non-negative");
    if (Index(plan.ranges.size()) > p) bad_field("topology", "more trans-predictors than predictors");
    if (plan.ranges.empty()) {
        if (plan.target != 0) bad_field("topology.target_trans_edges", "must be 0 without trans-predictors");
        return;
    }
    long lo = 0;
    long hi = 0;
    for (const auto& r : plan.ranges) {
        lo += r.min;
        hi += r.max;
    }
    if (plan.target < lo || plan.target > hi) {
        bad_field("topology.target_trans_edges", "not reachable with the given degree ranges (" +
                                                     std::to_string(lo) + ".." + std::to_string(hi) +
                                                     ")");
    }
}

}  // namespace

void validate_scenario(const SimScenario& s) {
    if (s.n < 2) bad_field("n", "must be at least 2");
    if (s.p < 2) bad_field("p", "must be at least 2");
    if (s.q != s.p) bad_field("q", "must equal p");
    if (!(s.snr > 0.0)) bad_field("snr", "must be positive");
    if (!(std::abs(s.rho_eps) < 1.0)) bad_field("rho_eps", "must satisfy |rho| < 1");
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, ArCovariance>) {
                if (!(std::abs(c.rho) < 1.0)) bad_field("covariance.rho", "must satisfy |rho| < 1");
            } else {
                if (!(std::abs(c.rho_wb) < 1.0)) bad_field("covariance.rho_wb", "must satisfy |rho| < 1");
                if (!(std::abs(c.rho_bb) < 1.0)) bad_field("covariance.rho_bb", "must satisfy |rho| < 1");
                if (!c.block_sizes.empty()) {
                    long total = 0;
                    for (int b : c.block_sizes) {
                        if (b < 1) bad_field("covariance.block_sizes", "entries must be positive");
                        total += b;
                    }
                    if (total != s.p) bad_field("covariance.block_sizes", "must sum to p");
                }
            }
        },
        s.covariance);
    std::visit(
        [&](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, HubTopology>) {
                if (t.n_hubs < 0) bad_field("topology.n_hubs", "must be non-negative");
                if (t.n_hubs > 0) check_range(t.degree, "topology.degree", s.q);
            } else if constexpr (std::is_same_v<T, UniformTopology>) {
                if (t.n_trans_predictors < 0) bad_field("topology.n_trans_predictors", "must be non-negative");
                if (t.n_trans_predictors > 0) check_range(t.degree, "topology.degree", s.q);
            } else {
                for (auto [cls, name] : {std::pair{&t.large_hubs, "large_hubs"},
                                         std::pair{&t.small_hubs, "small_hubs"},
                                         std::pair{&t.singletons, "singletons"}}) {
                    if (cls->count < 0) bad_field(std::string("topology.") + name + ".count", "must be non-negative");
                    if (cls->count > 0) check_range(cls->degree, std::string("topology.") + name + ".degree", s.q);
                }
            }
        },
        s.topology);
    check_plan(degree_plan(s.topology), s.p);
}

std::vector<int> scale_block_sizes(std::span<const int> profile, Index p) {
    if (profile.empty() || Index(profile.size()) > p) {
        throw ValidationError(ValidationError::Kind::bad_parameter,
                              "block profile must have between 1 and p entries");
    }
    const double total = std::accumulate(profile.begin(), profile.end(), 0.0);
    std::vector<int> sizes(profile.size(), 1);
    // One predictor per block up front, the rest split by largest remainder.
    const double spare = double(p - Index(profile.size()));
    std::vector<std::pair<double, std::size_t>> remainders;
    Index assigned = Index(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const double share = spare * double(profile[i]) / total;
        const int whole = int(std::floor(share));
        sizes[i] += whole;
        assigned += whole;
        remainders.emplace_back(share - whole, i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < p; ++k, ++assigned) sizes[remainders[k].second] += 1;
    return sizes;
}

CovarianceResult make_covariance(const SimScenario& scenario, std::mt19937_64& rng) {
    const Index p = scenario.p;
    CovarianceResult out;
    if (const auto* ar = std::get_if<ArCovariance>(&scenario.covariance)) {
        if (!(std::abs(ar->rho) < 1.0)) bad_field("covariance.rho", "must satisfy |rho| < 1");
        out.sigma.resize(p, p);
        for (Index j = 0; j < p; ++j)
            for (Index i = 0; i < p; ++i) out.sigma(i, j) = std::pow(ar->rho, double(std::abs(i - j)));
        return out;
    }

    const auto& block = std::get<BlockCovariance>(scenario.covariance);
    if (!(std::abs(block.rho_wb) < 1.0)) bad_field("covariance.rho_wb", "must satisfy |rho| < 1");
    if (!(std::abs(block.rho_bb) < 1.0)) bad_field("covariance.rho_bb", "must satisfy |rho| < 1");
    const std::vector<int> sizes =
        block.block_sizes.empty() ? scale_block_sizes(kDefaultBlockProfile, p) : block.block_sizes;
    const std::size_t nb = sizes.size();
    std::vector<Index> start(nb + 1, 0);
    for (std::size_t i = 0; i < nb; ++i) start[i + 1] = start[i] + sizes[i];
    if (start[nb] != p) bad_field("covariance.block_sizes", "must sum to p");

    std::uniform_int_distribution<int> exponent(1, 23);
    std::bernoulli_distribution positive(0.5);
    Matrix between = Matrix::Zero(Index(nb), Index(nb));
    for (std::size_t k = 1; k < nb; ++k) {
        for (std::size_t i = 0; i < k; ++i) {
            const double sign = positive(rng) ? 1.0 : -1.0;
            const double value = sign * std::pow(block.rho_bb, double(exponent(rng)));
            between(Index(i), Index(k)) = value;
            between(Index(k), Index(i)) = value;
        }
    }

    out.sigma.resize(p, p);
    for (std::size_t bi = 0; bi < nb; ++bi) {
        for (std::size_t bk = 0; bk < nb; ++bk) {
            for (Index j = start[bi]; j < start[bi + 1]; ++j) {
                for (Index l = start[bk]; l < start[bk + 1]; ++l) {
                    out.sigma(j, l) = bi == bk
                                          ? std::pow(block.rho_wb, 0.5 * double(std::abs((j - start[bi]) -
                                                                                         (l - start[bk]))))
                                          : between(Index(bi), Index(bk));
                }
            }
        }
    }

    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.sigma);
    if (eig.eigenvalues().minCoeff() < 1e-6) {
        const Vector clipped = eig.eigenvalues().cwiseMax(1e-6);
        Matrix repaired = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
        const Vector inv_sd = repaired.diagonal().cwiseSqrt().cwiseInverse();
        repaired = inv_sd.asDiagonal() * repaired * inv_sd.asDiagonal();
        out.sigma = 0.5 * (repaired + repaired.transpose());
        out.sigma.diagonal().setOnes();
        out.clipped = true;
    }
    return out;
}

Mask make_topology(const SimScenario& scenario, std::mt19937_64& rng) {
    const Index p = scenario.p;
    const Index q = scenario.q;
    const DegreePlan plan = degree_plan(scenario.topology);
    check_plan(plan, p);

    Mask adjacency = Mask::Zero(p, q);
    for (Index i = 0; i < std::min(p, q); ++i) adjacency(i, i) = 1;
    if (plan.ranges.empty()) return adjacency;

    std::vector<Index> predictors(static_cast<std::size_t>(p));
    std::iota(predictors.begin(), predictors.end(), Index{0});
    std::shuffle(predictors.begin(), predictors.end(), rng);

    // Redraw until the remainder slot lands inside its own range.
    std::vector<int> degrees(plan.ranges.size());
    const auto& adjust_range = plan.ranges[plan.adjust];
    bool found = false;
    for (int attempt = 0; attempt < 1000000 && !found; ++attempt) {
        long sum = 0;
        for (std::size_t i = 0; i < plan.ranges.size(); ++i) {
            if (i == plan.adjust) continue;
            std::uniform_int_distribution<int> d(plan.ranges[i].min, plan.ranges[i].max);
            degrees[i] = d(rng);
            sum += degrees[i];
        }
        const long last = plan.target - sum;
        if (last >= adjust_range.min && last <= adjust_range.max) {
            degrees[plan.adjust] = int(last);
            found = true;
        }
    }
    if (!found) bad_field("topology.target_trans_edges", "degree budget could not be met");

    std::vector<Index> targets;
    for (std::size_t i = 0; i < plan.ranges.size(); ++i) {
        const Index pred = predictors[i];
        targets.clear();
        for (Index r = 0; r < q; ++r)
            if (r != pred) targets.push_back(r);
        std::shuffle(targets.begin(), targets.end(), rng);
        for (int k = 0; k < degrees[i]; ++k) adjacency(pred, targets[std::size_t(k)]) = 1;
    }
    return adjacency;
}

GroundTruth make_ground_truth(const Mask& adjacency, std::mt19937_64& rng) {
    GroundTruth truth;
    truth.adjacency = adjacency;
    truth.coefficients = Matrix::Zero(adjacency.rows(), adjacency.cols());
    std::uniform_real_distribution<double> magnitude(1.0, 5.0);
    std::bernoulli_distribution positive(0.5);
    for (Index q = 0; q < adjacency.cols(); ++q) {
        for (Index p = 0; p < adjacency.rows(); ++p) {
            if (adjacency(p, q) == 0) continue;
            const double m = magnitude(rng);
            truth.coefficients(p, q) = positive(rng) ? m : -m;
        }
    }
    for (Index p = 0; p < adjacency.rows(); ++p) {
        bool any = false;
        for (Index q = 0; q < adjacency.cols(); ++q) {
            if (p != q && adjacency(p, q) != 0) {
                truth.trans_edges.emplace_back(p, q);
                any = true;
            }
        }
        if (any) truth.trans_predictors.push_back(p);
    }
    return truth;
}

double calibrate_noise(const Matrix& coefficients, const Matrix& covariance, double snr) {
    if (!(snr > 0.0)) throw ValidationError(ValidationError::Kind::bad_parameter, "snr must be positive");
    if (covariance.rows() != coefficients.rows() || covariance.cols() != coefficients.rows()) {
        throw ValidationError(ValidationError::Kind::dimension_mismatch,
                              "covariance does not match the coefficient row count");
    }
    if (coefficients.cols() < 1 || coefficients.isZero(0.0)) {
        throw ValidationError(ValidationError::Kind::bad_parameter,
                              "cannot calibrate noise for all-zero coefficients");
    }
    const Matrix weighted = covariance * coefficients;
    const double signal = (coefficients.array() * weighted.array()).sum() / double(coefficients.cols());
    return signal / snr;
}

Matrix sample_gaussian(const Matrix& sigma, Index rows, std::mt19937_64& rng) {
    const Index d = sigma.rows();
    Matrix factor;
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() == Eigen::Success) {
        factor = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
        factor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix z(rows, d);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < d; ++j) z(i, j) = normal(rng);
    return z * factor.transpose();
}

SimulatedData generate_dataset(const SimScenario& scenario, std::uint64_t replicate) {
    validate_scenario(scenario);
    auto cov_rng = make_stream(scenario.seed, replicate, covariance_stream);
    auto topo_rng = make_stream(scenario.seed, replicate, topology_stream);
    auto coef_rng = make_stream(scenario.seed, replicate, coefficient_stream);
    auto x_rng = make_stream(scenario.seed, replicate, predictor_stream);
    auto eps_rng = make_stream(scenario.seed, replicate, noise_stream);

    SimulatedData data;
    const CovarianceResult cov = make_covariance(scenario, cov_rng);
    data.covariance_clipped = cov.clipped;
    data.truth = make_ground_truth(make_topology(scenario, topo_rng), coef_rng);
    data.noise_variance = calibrate_noise(data.truth.coefficients, cov.sigma, scenario.snr);

    Matrix eps_cov(scenario.q, scenario.q);
    for (Index j = 0; j < scenario.q; ++j)
        for (Index i = 0; i < scenario.q; ++i)
            eps_cov(i, j) = data.noise_variance * std::pow(scenario.rho_eps, double(std::abs(i - j)));

    const Matrix x = sample_gaussian(cov.sigma, scenario.n, x_rng);
    const Matrix eps = sample_gaussian(eps_cov, scenario.n, eps_rng);
    const Matrix y = x * data.truth.coefficients + eps;

    auto [xs, x_record] = standardize(x);
    auto [ys, y_record] = standardize(y);
    data.x_record = std::move(x_record);
    data.y_record = std::move(y_record);
    Mask c = Mask::Ones(scenario.p, scenario.q);
    for (Index i = 0; i < std::min(scenario.p, scenario.q); ++i) c(i, i) = 0;
    data.problem = make_problem(std::move(xs), std::move(ys), std::move(c));
    return data;
}

ErrorMetrics score_support(const Mask& estimated, const GroundTruth& truth, const Mask& c) {
    const Mask& a = truth.adjacency;
    if (estimated.rows() != a.rows() || estimated.cols() != a.cols() || c.rows() != a.rows() ||
        c.cols() != a.cols()) {
        std::ostringstream os;
        os << "estimate is " << estimated.rows() << "x" << estimated.cols() << ", truth is "
           << a.rows() << "x" << a.cols() << ", c is " << c.rows() << "x" << c.cols();
        throw ValidationError(ValidationError::Kind::dimension_mismatch, os.str());
    }
    ErrorMetrics m;
    for (Index p = 0; p < a.rows(); ++p) {
        bool true_trans = false;
        bool estimated_trans = false;
        for (Index q = 0; q < a.cols(); ++q) {
            if (c(p, q) == 0) continue;
            const bool est = estimated(p, q) != 0;
            const bool edge = a(p, q) != 0;
            if (est && !edge) ++m.fp;
            if (!est && edge) ++m.fn;
            true_trans = true_trans || edge;
            estimated_trans = estimated_trans || est;
        }
        if (!true_trans && estimated_trans) ++m.fpp;
        if (true_trans && !estimated_trans) ++m.fnp;
    }
    m.tf = m.fp + m.fn;
    return m;
}

std::vector<Method> all_methods() {
    return {Method::remmap_bic, Method::remmap_cv, Method::remmap_cv_vote,
            Method::joint_bic,  Method::joint_cv,  Method::joint_cv_vote,
            Method::sep_bic,    Method::sep_cv,    Method::sep_cv_vote};
}

std::string method_name(Method method) {
    switch (method) {
        case Method::remmap_cv: return "remMap.cv";
        case Method::remmap_cv_vote: return "remMap.cv.vote";
        case Method::remmap_bic: return "remMap.bic";
        case Method::joint_cv: return "joint.cv";
        case Method::joint_cv_vote: return "joint.cv.vote";
        case Method::joint_bic: return "joint.bic";
        case Method::sep_cv: return "sep.cv";
        case Method::sep_cv_vote: return "sep.cv.vote";
        case Method::sep_bic: return "sep.bic";
    }
    return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
    for (Method m : all_methods()) {
        std::string canonical = method_name(m);
        std::string lowered = canonical;
        std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                       [](unsigned char ch) { return char(std::tolower(ch)); });
        if (name == canonical || name == lowered) return m;
    }
    return std::nullopt;
}

std::vector<std::pair<Method, Mask>> select_supports(const RegressionProblem& problem,
                                                     const std::vector<Method>& methods,
                                                     const StudyOptions& options,
                                                     std::uint64_t fold_seed) {
    auto wants = [&](std::initializer_list<Method> any) {
        return std::any_of(methods.begin(), methods.end(), [&](Method m) {
            return std::find(any.begin(), any.end(), m) != any.end();
        });
    };
    TuningOptions tuning;
    tuning.controls = options.controls;
    tuning.vote_threshold = options.vote_threshold;
    tuning.threads = options.threads;
    const FoldAssignment folds = assign_folds(problem.n(), options.folds, fold_seed);

    std::vector<std::pair<Method, Mask>> selected;
    auto put = [&](Method m, const Mask& s) {
        if (std::find(methods.begin(), methods.end(), m) != methods.end()) selected.emplace_back(m, s);
    };

    const GridSpec remmap_grid =
        default_grid(problem, options.grid_lambda1, options.grid_lambda2, options.min_ratio);
    const GridSpec joint_grid = default_grid(problem, options.grid_lambda1, 0, options.min_ratio);

    if (wants({Method::remmap_cv, Method::remmap_cv_vote})) {
        const auto r = grid_search(problem, remmap_grid, folds, Criterion::cv, tuning);
        put(Method::remmap_cv, r.support);
        put(Method::remmap_cv_vote, r.vote_support);
    }
    if (wants({Method::remmap_bic})) {
        put(Method::remmap_bic, grid_search(problem, remmap_grid, folds, Criterion::bic, tuning).support);
    }
    if (wants({Method::joint_cv, Method::joint_cv_vote})) {
        const auto r = grid_search(problem, joint_grid, folds, Criterion::cv, tuning);
        put(Method::joint_cv, r.support);
        put(Method::joint_cv_vote, r.vote_support);
    }
    if (wants({Method::joint_bic})) {
        put(Method::joint_bic, grid_search(problem, joint_grid, folds, Criterion::bic, tuning).support);
    }
    if (wants({Method::sep_cv, Method::sep_cv_vote})) {
        const auto r = separate_search(problem, options.grid_lambda1, options.min_ratio, folds,
                                       Criterion::cv, tuning);
        put(Method::sep_cv, r.support);
        put(Method::sep_cv_vote, r.vote_support);
    }
    if (wants({Method::sep_bic})) {
        put(Method::sep_bic, separate_search(problem, options.grid_lambda1, options.min_ratio, folds,
                                             Criterion::bic, tuning)
                                 .support);
    }

    // Report in the caller's method order.
    std::vector<std::pair<Method, Mask>> ordered;
    for (Method m : methods)
        for (auto& entry : selected)
            if (entry.first == m) ordered.push_back(entry);
    return ordered;
}

StudyResult run_study(const SimScenario& scenario, const StudyOptions& options) {
    validate_scenario(scenario);
    if (options.replicates < 1) throw std::invalid_argument("replicates must be positive");
    if (options.methods.empty()) throw std::invalid_argument("no methods requested");

    const int threads = options.threads > 0 ? options.threads : default_thread_count();
    const int outer = std::min(threads, options.replicates);
    StudyOptions inner = options;
    inner.threads = std::max(1, threads / outer);

    const std::size_t reps = std::size_t(options.replicates);
    StudyResult result;
    result.per_replicate.assign(reps, {});
    std::vector<std::string> errors(reps);

    detail::parallel_for(reps, outer, [&](std::size_t r) {
        try {
            const SimulatedData data = generate_dataset(scenario, r);
            const auto supports = select_supports(data.problem, options.methods, inner,
                                                  splitmix64(scenario.seed ^ (0x5eed0000ULL + r)));
            std::vector<ErrorMetrics> metrics;
            for (const auto& [method, support] : supports)
                metrics.push_back(score_support(support, data.truth, data.problem.c));
            result.per_replicate[r] = std::move(metrics);
        } catch (const std::exception& e) {
            errors[r] = e.what();
        }
    });

    for (std::size_t r = 0; r < reps; ++r) {
        if (result.per_replicate[r].empty()) {
            ++result.failed_replicates;
            result.failures.push_back("replicate " + std::to_string(r) + ": " + errors[r]);
        }
    }

    for (std::size_t mi = 0; mi < options.methods.size(); ++mi) {
        MethodSummary row;
        row.method = options.methods[mi];
        std::array<std::vector<double>, 5> values;
        for (const auto& rep : result.per_replicate) {
            if (rep.empty()) continue;
            const ErrorMetrics& m = rep[mi];
            values[0].push_back(double(m.fp));
            values[1].push_back(double(m.fn));
            values[2].push_back(double(m.tf));
            values[3].push_back(double(m.fpp));
            values[4].push_back(double(m.fnp));
        }
        row.replicates = int(values[0].size());
        for (std::size_t k = 0; k < 5; ++k) {
            const auto& v = values[k];
            if (v.empty()) continue;
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            row.metrics[k].mean = mean;
            row.metrics[k].sd = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
        }
        result.rows.push_back(row);
    }
    return result;
}

std::string format_study_table(const StudyResult& result) {
    std::ostringstream os;
    os << "Method,FP,FN,TF,FPP,FNP\n";
    char cell[64];
    for (const auto& row : result.rows) {
        os << method_name(row.method);
        for (const auto& metric : row.metrics) {
            if (row.replicates == 0) {
                os << ",NA";
            } else if (row.replicates == 1) {
                std::snprintf(cell, sizeof cell, ",%.2f(—)", metric.mean);
                os << cell;
            } else {
                std::snprintf(cell, sizeof cell, ",%.2f(%.2f)", metric.mean, metric.sd);
                os << cell;
            }
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace remmap
