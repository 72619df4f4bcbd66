#include "pspline/scale.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pspline/error.hpp"
#include "pspline/loss.hpp"

namespace pspline {

namespace {

double lhs_from_diffs(const std::vector<double>& diffs, double sigma, double c) {
  const double denom = std::numbers::sqrt2 * sigma;
  double s = 0.0;
  for (double d : diffs) s += bisquare_rho(d / denom, c);
  return s / static_cast<double>(diffs.size());
}

std::vector<double> differences(std::span<const double> y) {
  std::vector<double> d(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = y[i + 1] - y[i];
  return d;
}

}  // namespace

double m_scale_lhs(std::span<const double> y, double sigma, double c) {
  if (y.size() < 2) fail(Errc::insufficient_data, "scale equation needs at least two responses");
  return lhs_from_diffs(differences(y), sigma, c);
}

ScaleEstimate m_scale(std::span<const double> y, double c, double target) {
  if (y.size() < 2) fail(Errc::insufficient_data, "M-scale needs at least two responses");
  if (!(c > 0.0) || !(target > 0.0 && target < 1.0)) {
    fail(Errc::invalid_parameter, "M-scale tuning must be positive and target in (0, 1)");
  }
  for (double v : y) {
    if (!std::isfinite(v)) fail(Errc::domain_error, "responses must be finite");
  }
  const std::vector<double> diffs = differences(y);
  const auto m = static_cast<double>(diffs.size());

  ScaleEstimate est;
  est.n_used = static_cast<int>(diffs.size());
  est.zero_diffs = static_cast<int>(std::count(diffs.begin(), diffs.end(), 0.0));
  // As sigma -> 0 the left side tends to the fraction of nonzero
  // differences, so no root exists once too many are zero.
  if (est.zero_diffs > (1.0 - target) * m || est.zero_diffs == est.n_used) {
    fail(Errc::degenerate_scale, std::to_string(est.zero_diffs) + " of " +
                                     std::to_string(est.n_used) +
                                     " consecutive differences are zero");
  }

  std::vector<double> abs_diffs(diffs.size());
  std::transform(diffs.begin(), diffs.end(), abs_diffs.begin(), [](double d) { return std::abs(d); });
  auto mid = abs_diffs.begin() + abs_diffs.size() / 2;
  std::nth_element(abs_diffs.begin(), mid, abs_diffs.end());
  double seed = *mid / 0.6745 / std::numbers::sqrt2;
  if (!(seed > 0.0)) seed = *std::max_element(abs_diffs.begin(), abs_diffs.end());

  double lo = seed;
  double hi = seed;
  for (int i = 0; i < 2100 && lhs_from_diffs(diffs, lo, c) < target; ++i) lo *= 0.5;
  for (int i = 0; i < 2100 && lhs_from_diffs(diffs, hi, c) > target; ++i) hi *= 2.0;

  for (int iter = 0; iter < 300; ++iter) {
    const double mid_sigma = 0.5 * (lo + hi);
    if (mid_sigma <= lo || mid_sigma >= hi) break;
    if (lhs_from_diffs(diffs, mid_sigma, c) >= target) {
      lo = mid_sigma;
    } else {
      hi = mid_sigma;
    }
  }
  const double f_lo = std::abs(lhs_from_diffs(diffs, lo, c) - target);
  const double f_hi = std::abs(lhs_from_diffs(diffs, hi, c) - target);
  est.sigma = f_lo <= f_hi ? lo : hi;
  est.converged = std::min(f_lo, f_hi) < 1e-10 && est.sigma > 0.0;
  return est;
}

}  // namespace pspline
