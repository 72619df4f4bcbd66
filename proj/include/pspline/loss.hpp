#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace pspline {

enum class LossKind {
  least_squares,
  huber,
  tukey,
  hampel,
  check,
  expectile,
  lq,
  absolute,
  log_cosh,
};

// Residuals (standardized) with |r| below this are weighted by the limit
// of psi(r) / r, or by psi(+-eps) / eps where that limit does not exist.
inline constexpr double kWeightEpsilon = 1e-8;

inline constexpr double kDefaultHuberK = 1.345;
inline constexpr double kDefaultTukeyC = 4.685;
inline constexpr double kDefaultHampelA = 1.5;
inline constexpr double kDefaultHampelB = 3.5;
inline constexpr double kDefaultHampelC = 8.0;

// A loss rho together with its score psi = rho' and IRLS weight psi(r)/r.
// Immutable value type; construct through the named factories.
class LossSpec {
 public:
  static LossSpec least_squares();
  static LossSpec huber(double k = kDefaultHuberK);
  // Bounded bisquare rho(x) = 1 - (1 - (x/c)^2)^3 for |x| <= c, 1 beyond.
  static LossSpec tukey(double c = kDefaultTukeyC);
  static LossSpec hampel(double a = kDefaultHampelA, double b = kDefaultHampelB,
                         double c = kDefaultHampelC);
  static LossSpec check(double alpha);
  static LossSpec expectile(double alpha);
  static LossSpec lq(double exponent);
  static LossSpec absolute();
  static LossSpec log_cosh();

  LossKind kind() const noexcept { return kind_; }
  std::string name() const;

  // Tuning constants; meaning depends on kind (k, c, alpha, exponent or the
  // Hampel triple a, b, c). Unused slots are zero.
  double param(int i) const { return params_[i]; }

  double rho(double x) const;
  double psi(double x) const;
  double weight(double r) const;

  bool convex() const noexcept;
  // Constant weight, so a single weighted solve is the exact minimizer.
  bool constant_weight() const noexcept { return kind_ == LossKind::least_squares; }
  // sup |psi| when finite.
  std::optional<double> psi_bound() const;

 private:
  LossSpec(LossKind kind, double a = 0.0, double b = 0.0, double c = 0.0)
      : kind_(kind), params_{a, b, c} {}

  LossKind kind_;
  double params_[3];
};

// Tukey bisquare used by the difference-based M-scale; c = 0.704 there.
double bisquare_rho(double x, double c);

std::optional<LossKind> parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

}  // namespace pspline
