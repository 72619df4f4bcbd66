#include "pspline/error.hpp"

namespace pspline {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::domain_error: return "domain-error";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::degenerate_scale: return "degenerate-scale";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::singular_system: return "singular-system";
    case Errc::saturated_fit: return "saturated-fit";
    case Errc::unknown_function: return "unknown-function";
    case Errc::parse_error: return "parse-error";
  }
  return "unknown-error";
}

}  // namespace pspline
