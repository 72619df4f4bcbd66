#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pspline/error.hpp"

namespace pspline::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kOk = 0,
  kParseFailure = 2,
  kValidationFailure = 3,
  kNumericalFailure = 4,
};

int exit_code_for(Errc code);

// x,y rows as read from disk. x keeps its original units; the fit works on
// the min-max image in [0, 1].
struct Dataset {
  std::vector<double> x;
  std::vector<double> y;
  double x_min = 0.0;
  double x_span = 1.0;

  std::size_t size() const noexcept { return y.size(); }
  double to_unit(double v) const;
  double from_unit(double u) const;
  std::vector<double> unit_x() const;
};

// Comma-separated with a header line. Columns are located by name ("x",
// "y"); a file whose header has a single column is read as y only, with x
// set to the row index. Rows are stable-sorted by x. Throws parse-error
// with the offending line number.
Dataset read_dataset(std::istream& in, bool require_x = true);
Dataset read_dataset_file(const std::string& path, bool require_x = true);

std::uint64_t fnv1a(std::string_view bytes);

// Entry point shared by the executable and the tests. argv[0] is the
// program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pspline::cli
