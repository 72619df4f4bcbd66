#pragma once

#include <span>

namespace pspline {

inline constexpr double kScaleTuning = 0.704;
inline constexpr double kScaleTarget = 0.75;

struct ScaleEstimate {
  double sigma = 0.0;
  int n_used = 0;      // consecutive differences entering the equation
  int zero_diffs = 0;  // of which exactly zero
  bool converged = false;
};

// M-scale of consecutive response differences: the sigma solving
//   mean_i rho_c((y[i+1] - y[i]) / (sqrt(2) sigma)) = target
// with rho_c the bounded bisquare. Only differences enter, so the result is
// location invariant and scale equivariant. The left side is nonincreasing
// in sigma; the root is bracketed geometrically and refined by bisection.
ScaleEstimate m_scale(std::span<const double> y, double c = kScaleTuning,
                      double target = kScaleTarget);

// Left side of the scale equation at a given sigma.
double m_scale_lhs(std::span<const double> y, double sigma, double c = kScaleTuning);

}  // namespace pspline
