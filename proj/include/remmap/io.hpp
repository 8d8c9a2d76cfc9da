#pragma once

#include "remmap/core.hpp"
#include "remmap/simulate.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace remmap::io {

/// File or parse failure; `line` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::filesystem::path& path, std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double value);

/// Dense matrix text: "rows cols" then one whitespace-delimited row per line.
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// Dense 0/1 matrix in the same layout; entries must be integers.
Mask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const Mask& m);

/// "p q value" header, then one 1-based line per nonzero, row-major order.
void write_triplets(const std::filesystem::path& path, const Matrix& m);
/// Triplets with value 1 for each selected entry.
void write_support(const std::filesystem::path& path, const Mask& support);

/// Reads either a dense mask or a triplet file (nonzero values select).
/// Triplet files take their shape from `rows` x `cols`.
Mask read_support(const std::filesystem::path& path, Index rows, Index cols);

/// YAML scenario description; missing fields take the struct defaults.
SimScenario load_scenario(const std::filesystem::path& path);
SimScenario parse_scenario(const std::string& text, const std::string& source = "<string>");
/// Every field written out, including resolved block sizes.
std::string scenario_to_yaml(const SimScenario& scenario);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace remmap::io
