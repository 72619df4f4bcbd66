#include "pspline/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pspline/error.hpp"

namespace pspline {

namespace {

void require(bool ok, const char* what) {
  if (!ok) fail(Errc::invalid_parameter, what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double bisquare_rho(double x, double c) {
  const double u = x / c;
  if (std::abs(u) > 1.0) return 1.0;
  const double v = 1.0 - u * u;
  return 1.0 - v * v * v;
}

LossSpec LossSpec::least_squares() { return LossSpec(LossKind::least_squares); }

LossSpec LossSpec::huber(double k) {
  require(finite_positive(k), "huber k must be finite and positive");
  return LossSpec(LossKind::huber, k);
}

LossSpec LossSpec::tukey(double c) {
  require(finite_positive(c), "tukey c must be finite and positive");
  return LossSpec(LossKind::tukey, c);
}

LossSpec LossSpec::hampel(double a, double b, double c) {
  require(finite_positive(a) && finite_positive(b) && finite_positive(c),
          "hampel constants must be finite and positive");
  require(a <= b && b < c, "hampel constants must satisfy a <= b < c");
  return LossSpec(LossKind::hampel, a, b, c);
}

LossSpec LossSpec::check(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "check alpha must lie in (0, 1)");
  return LossSpec(LossKind::check, alpha);
}

LossSpec LossSpec::expectile(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "expectile alpha must lie in (0, 1)");
  return LossSpec(LossKind::expectile, alpha);
}

LossSpec LossSpec::lq(double exponent) {
  require(exponent > 1.0 && exponent < 2.0, "lq exponent must lie in (1, 2)");
  return LossSpec(LossKind::lq, exponent);
}

LossSpec LossSpec::absolute() { return LossSpec(LossKind::absolute); }

LossSpec LossSpec::log_cosh() { return LossSpec(LossKind::log_cosh); }

std::string LossSpec::name() const {
  std::ostringstream os;
  os << to_string(kind_);
  switch (kind_) {
    case LossKind::huber:
    case LossKind::tukey:
    case LossKind::check:
    case LossKind::expectile:
    case LossKind::lq:
      os << '(' << params_[0] << ')';
      break;
    case LossKind::hampel:
      os << '(' << params_[0] << ',' << params_[1] << ',' << params_[2] << ')';
      break;
    default:
      break;
  }
  return os.str();
}

double LossSpec::rho(double x) const {
  const double ax = std::abs(x);
  switch (kind_) {
    case LossKind::least_squares:
      return x * x;
    case LossKind::huber: {
      const double k = params_[0];
      return ax <= k ? 0.5 * x * x : k * ax - 0.5 * k * k;
    }
    case LossKind::tukey:
      return bisquare_rho(x, params_[0]);
    case LossKind::hampel: {
      const double a = params_[0], b = params_[1], c = params_[2];
      if (ax <= a) return 0.5 * x * x;
      if (ax < b) return a * (ax - 0.5 * a);
      if (ax < c) return a * (ax - c) * (ax - c) / (2.0 * (b - c)) + 0.5 * a * (b + c - a);
      return 0.5 * a * (b + c - a);
    }
    case LossKind::check: {
      const double alpha = params_[0];
      return x * (alpha - (x < 0.0 ? 1.0 : 0.0));
    }
    case LossKind::expectile: {
      const double alpha = params_[0];
      return 0.5 * x * x * (x <= 0.0 ? 1.0 - alpha : alpha);
    }
    case LossKind::lq:
      return std::pow(ax, params_[0]);
    case LossKind::absolute:
      return ax;
    case LossKind::log_cosh:
      return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
  }
  return 0.0;
}

double LossSpec::psi(double x) const {
  const double ax = std::abs(x);
  switch (kind_) {
    case LossKind::least_squares:
      return 2.0 * x;
    case LossKind::huber:
      return std::clamp(x, -params_[0], params_[0]);
    case LossKind::tukey: {
      const double c = params_[0];
      if (ax > c) return 0.0;
      const double v = 1.0 - (x / c) * (x / c);
      return 6.0 * x / (c * c) * v * v;
    }
    case LossKind::hampel: {
      const double a = params_[0], b = params_[1], c = params_[2];
      if (ax <= a) return x;
      if (ax < b) return a * sign(x);
      if (ax < c) return a * sign(x) * (c - ax) / (c - b);
      return 0.0;
    }
    case LossKind::check: {
      const double alpha = params_[0];
      if (x > 0.0) return alpha;
      if (x < 0.0) return alpha - 1.0;
      return alpha - 0.5;
    }
    case LossKind::expectile: {
      const double alpha = params_[0];
      return x <= 0.0 ? (1.0 - alpha) * x : alpha * x;
    }
    case LossKind::lq:
      return params_[0] * std::pow(ax, params_[0] - 1.0) * sign(x);
    case LossKind::absolute:
      return sign(x);
    case LossKind::log_cosh:
      return std::tanh(x);
  }
  return 0.0;
}

double LossSpec::weight(double r) const {
  if (std::abs(r) > kWeightEpsilon) return psi(r) / r;
  switch (kind_) {
    case LossKind::least_squares:
      return 2.0;
    case LossKind::huber:
    case LossKind::hampel:
    case LossKind::log_cosh:
      return 1.0;
    case LossKind::tukey:
      return 6.0 / (params_[0] * params_[0]);
    default: {
      const double e = r < 0.0 ? -kWeightEpsilon : kWeightEpsilon;
      return psi(e) / e;
    }
  }
}

bool LossSpec::convex() const noexcept {
  return kind_ != LossKind::tukey && kind_ != LossKind::hampel;
}

std::optional<double> LossSpec::psi_bound() const {
  switch (kind_) {
    case LossKind::huber:
      return params_[0];
    case LossKind::tukey:
      return 96.0 / (25.0 * std::sqrt(5.0) * params_[0]);
    case LossKind::hampel:
      return params_[0];
    case LossKind::check:
      return std::max(params_[0], 1.0 - params_[0]);
    case LossKind::absolute:
    case LossKind::log_cosh:
      return 1.0;
    default:
      return std::nullopt;
  }
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
  if (name == "ls" || name == "least-squares") return LossKind::least_squares;
  if (name == "huber") return LossKind::huber;
  if (name == "tukey") return LossKind::tukey;
  if (name == "hampel") return LossKind::hampel;
  if (name == "check") return LossKind::check;
  if (name == "expectile") return LossKind::expectile;
  if (name == "lq") return LossKind::lq;
  if (name == "abs" || name == "absolute") return LossKind::absolute;
  if (name == "logcosh" || name == "log-cosh") return LossKind::log_cosh;
  return std::nullopt;
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::least_squares: return "ls";
    case LossKind::huber: return "huber";
    case LossKind::tukey: return "tukey";
    case LossKind::hampel: return "hampel";
    case LossKind::check: return "check";
    case LossKind::expectile: return "expectile";
    case LossKind::lq: return "lq";
    case LossKind::absolute: return "abs";
    case LossKind::log_cosh: return "logcosh";
  }
  return "?";
}

}  // namespace pspline
