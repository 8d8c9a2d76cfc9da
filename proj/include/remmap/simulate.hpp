#pragma once

#include "remmap/core.hpp"
#include "remmap/solver.hpp"
#include "remmap/tuning.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace remmap {

/// Sigma(p, p') = rho^|p - p'|.
struct ArCovariance {
    double rho = 0.0;
};

/// Within-block rho_wb^(0.5 |j - l|); between blocks a constant with random
/// sign and magnitude drawn from {rho_bb, rho_bb^2, ..., rho_bb^23}.
/// Empty `block_sizes` means the bundled 23-block profile scaled to P.
struct BlockCovariance {
    double rho_wb = 0.9;
    double rho_bb = 0.25;
    std::vector<int> block_sizes;
};

using CovarianceSpec = std::variant<ArCovariance, BlockCovariance>;

struct DegreeRange {
    int min = 1;
    int max = 1;
};

/// A few hubs, everything else cis-only.
struct HubTopology {
    int n_hubs = 5;
    DegreeRange degree{20, 40};
    int target_trans_edges = 132;
};

/// Many trans-predictors with small degrees.
struct UniformTopology {
    int n_trans_predictors = 60;
    DegreeRange degree{1, 4};
    int target_trans_edges = 151;
};

struct PredictorClass {
    int count = 0;
    DegreeRange degree;
};

/// Large hubs, small hubs and singletons. The degree fix-up lands on the
/// last large hub.
struct MixedTopology {
    PredictorClass large_hubs{5, {14, 26}};
    PredictorClass small_hubs{5, {3, 4}};
    PredictorClass singletons{20, {1, 2}};
    int target_trans_edges = 151;
};

using TopologySpec = std::variant<HubTopology, UniformTopology, MixedTopology>;

struct SimScenario {
    Index n = 200;
    Index p = 600;
    Index q = 600;
    CovarianceSpec covariance = ArCovariance{0.4};
    TopologySpec topology = UniformTopology{};
    double snr = 0.25;
    double rho_eps = 0.0;
    std::uint64_t seed = 1;
};

/// Throws ValidationError naming the offending field.
void validate_scenario(const SimScenario& scenario);

/// Relative chromosome profile used when block sizes are not given.
extern const std::array<int, 23> kDefaultBlockProfile;

/// Scales a profile to sum to p by largest remainders, every block >= 1.
std::vector<int> scale_block_sizes(std::span<const int> profile, Index p);

struct CovarianceResult {
    Matrix sigma;
    /// Eigenvalues were clipped to restore positive definiteness.
    bool clipped = false;
};

CovarianceResult make_covariance(const SimScenario& scenario, std::mt19937_64& rng);

struct GroundTruth {
    Mask adjacency;
    Matrix coefficients;
    /// Off-diagonal (p, q) pairs with adjacency 1, row-major order.
    std::vector<std::pair<Index, Index>> trans_edges;
    std::vector<Index> trans_predictors;

    Index trans_edge_count() const { return Index(trans_edges.size()); }
};

/// Adjacency with unit diagonal and exactly the target number of trans-edges.
Mask make_topology(const SimScenario& scenario, std::mt19937_64& rng);

/// Coefficients Uniform([-5,-1] U [1,5]) on edges, 0 elsewhere.
GroundTruth make_ground_truth(const Mask& adjacency, std::mt19937_64& rng);

/// Residual variance giving the requested average signal-to-noise ratio:
/// mean_q(B_q^T Sigma B_q) / snr.
double calibrate_noise(const Matrix& coefficients, const Matrix& covariance, double snr);

/// Rows drawn from N(0, sigma) through a Cholesky factor (eigen factor when
/// Cholesky fails).
Matrix sample_gaussian(const Matrix& sigma, Index rows, std::mt19937_64& rng);

struct SimulatedData {
    RegressionProblem problem;
    GroundTruth truth;
    StandardizationRecord x_record;
    StandardizationRecord y_record;
    double noise_variance = 0.0;
    bool covariance_clipped = false;
};

/// Dataset for replicate `replicate` of the scenario. Standardized X and Y,
/// C = 1 off the diagonal and 0 on it.
SimulatedData generate_dataset(const SimScenario& scenario, std::uint64_t replicate = 0);

struct ErrorMetrics {
    Index fp = 0;
    Index fn = 0;
    Index tf = 0;
    Index fpp = 0;
    Index fnp = 0;
};

ErrorMetrics score_support(const Mask& estimated, const GroundTruth& truth, const Mask& c);

enum class Method {
    remmap_cv,
    remmap_cv_vote,
    remmap_bic,
    joint_cv,
    joint_cv_vote,
    joint_bic,
    sep_cv,
    sep_cv_vote,
    sep_bic,
};

std::string method_name(Method method);
std::optional<Method> parse_method(const std::string& name);
std::vector<Method> all_methods();

struct StudyOptions {
    std::vector<Method> methods = all_methods();
    int replicates = 25;
    int folds = 10;
    int vote_threshold = 5;
    int grid_lambda1 = 10;
    int grid_lambda2 = 10;
    double min_ratio = 0.01;
    PenaltyParams controls;
    /// Replicates run concurrently; 0 uses default_thread_count().
    int threads = 0;
};

/// Supports selected by every requested method on one dataset.
std::vector<std::pair<Method, Mask>> select_supports(const RegressionProblem& problem,
                                                     const std::vector<Method>& methods,
                                                     const StudyOptions& options,
                                                     std::uint64_t fold_seed);

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;
};

struct MethodSummary {
    Method method;
    /// FP, FN, TF, FPP, FNP.
    std::array<MetricSummary, 5> metrics;
    int replicates = 0;
};

struct StudyResult {
    std::vector<MethodSummary> rows;
    /// [replicate][method], empty for failed replicates.
    std::vector<std::vector<ErrorMetrics>> per_replicate;
    int failed_replicates = 0;
    std::vector<std::string> failures;
};

StudyResult run_study(const SimScenario& scenario, const StudyOptions& options);

/// Comma-separated: Method,FP,FN,TF,FPP,FNP with mean(sd) cells.
std::string format_study_table(const StudyResult& result);

}  // namespace remmap
