#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pspline {

enum class Errc {
  invalid_parameter,
  domain_error,
  dimension_mismatch,
  degenerate_scale,
  insufficient_data,
  singular_system,
  saturated_fit,
  unknown_function,
  parse_error,
};

std::string_view to_string(Errc code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace pspline
