#pragma once

#include "remmap/tuning.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace remmap::cli {

enum class Command { fit, cv, bic, simulate, evaluate, study };

/// Resolved settings for one invocation.
struct RunConfig {
    Command command = Command::fit;
    std::filesystem::path x, y, c, frozen, truth, estimate, scenario;
    std::filesystem::path out = ".";
    std::optional<double> lambda1, lambda2;
    std::string grid = "10x10";
    std::string method = "remmap";
    int folds = 10;
    int vote_threshold = 5;
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> seed_override;
    int threads = 0;
    int replicates = 25;
    std::string methods = "all";
    double tol = 1e-6;
    int max_sweeps = 500;
};

/// "N1xN2[:ratio]" for the default log grid or
/// "lambda1=a,b,...;lambda2=c,d,..." for explicit values.
GridSpec parse_grid(const std::string& text, const RegressionProblem& problem, bool joint);

int cmd_fit(const RunConfig& config, std::ostream& log);
int cmd_cv(const RunConfig& config, std::ostream& log);
int cmd_bic(const RunConfig& config, std::ostream& log);
int cmd_simulate(const RunConfig& config, std::ostream& log);
int cmd_evaluate(const RunConfig& config, std::ostream& log);
int cmd_study(const RunConfig& config, std::ostream& log);

/// Parses arguments and dispatches. Returns the process exit status:
/// nonzero exactly when an error was reported on `err`.
int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace remmap::cli
