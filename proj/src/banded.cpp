#include "pspline/banded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pspline/error.hpp"

namespace pspline {

BandedSymmetric::BandedSymmetric(int n, int bandwidth)
    : n_(n), bw_(bandwidth), data_(static_cast<std::size_t>(n) * (bandwidth + 1), 0.0) {
  if (n < 0 || bandwidth < 0) fail(Errc::invalid_parameter, "banded matrix dimensions must be >= 0");
}

void BandedSymmetric::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

void BandedSymmetric::add_scaled(const BandedSymmetric& other, double alpha) {
  if (other.n_ != n_ || other.bw_ > bw_) {
    fail(Errc::dimension_mismatch, "banded add: incompatible shapes");
  }
  for (int i = 0; i < n_; ++i) {
    for (int j = std::max(0, i - other.bw_); j <= i; ++j) at(i, j) += alpha * other(i, j);
  }
}

std::vector<double> BandedSymmetric::multiply(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) fail(Errc::dimension_mismatch, "banded multiply: length");
  std::vector<double> y(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    y[i] += (*this)(i, i) * x[i];
    for (int j = std::max(0, i - bw_); j < i; ++j) {
      const double a = (*this)(i, j);
      y[i] += a * x[j];
      y[j] += a * x[i];
    }
  }
  return y;
}

Eigen::MatrixXd BandedSymmetric::to_dense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = std::max(0, i - bw_); j <= i; ++j) dense(i, j) = dense(j, i) = (*this)(i, j);
  }
  return dense;
}

bool BandedCholesky::factor(const BandedSymmetric& a) {
  const int n = a.size();
  const int bw = a.bandwidth();
  l_ = BandedSymmetric(n, bw);
  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double pivot_floor = max_diag * n * std::numeric_limits<double>::epsilon();

  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = std::max(0, j - bw); k < j; ++k) d -= l_(j, k) * l_(j, k);
    if (!(d > pivot_floor)) return false;
    const double ljj = std::sqrt(d);
    l_.at(j, j) = ljj;
    for (int i = j + 1; i <= std::min(n - 1, j + bw); ++i) {
      double s = a(i, j);
      for (int k = std::max(0, i - bw); k < j; ++k) s -= l_(i, k) * l_(j, k);
      l_.at(i, j) = s / ljj;
    }
  }
  return true;
}

std::vector<double> BandedCholesky::solve(std::span<const double> rhs) const {
  const int n = l_.size();
  const int bw = l_.bandwidth();
  if (static_cast<int>(rhs.size()) != n) fail(Errc::dimension_mismatch, "cholesky solve: length");
  std::vector<double> x(rhs.begin(), rhs.end());
  for (int i = 0; i < n; ++i) {
    for (int k = std::max(0, i - bw); k < i; ++k) x[i] -= l_(i, k) * x[k];
    x[i] /= l_(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    for (int k = i + 1; k <= std::min(n - 1, i + bw); ++k) x[i] -= l_(k, i) * x[k];
    x[i] /= l_(i, i);
  }
  return x;
}

BandedSymmetric BandedCholesky::inverse_band() const {
  const int n = l_.size();
  const int bw = l_.bandwidth();
  BandedSymmetric sigma(n, bw);
  // From Sigma L = L^{-T}: for j > i,
  //   Sigma_ij = -(1 / L_ii) sum_{k=i+1}^{i+bw} L_ki Sigma_kj
  //   Sigma_ii = 1 / L_ii^2 - (1 / L_ii) sum_{k=i+1}^{i+bw} L_ki Sigma_ki
  // and every Sigma_kj referenced lies inside the band.
  for (int i = n - 1; i >= 0; --i) {
    const int last = std::min(n - 1, i + bw);
    const double lii = l_(i, i);
    for (int j = last; j > i; --j) {
      double s = 0.0;
      for (int k = i + 1; k <= last; ++k) s += l_(k, i) * sigma(k, j);
      sigma.at(j, i) = -s / lii;
    }
    double s = 0.0;
    for (int k = i + 1; k <= last; ++k) s += l_(k, i) * sigma(k, i);
    sigma.at(i, i) = 1.0 / (lii * lii) - s / lii;
  }
  return sigma;
}

double BandedCholesky::log_det() const {
  double s = 0.0;
  for (int i = 0; i < l_.size(); ++i) s += 2.0 * std::log(l_(i, i));
  return s;
}

double trace_product(const BandedSymmetric& inverse_band, const BandedSymmetric& m) {
  if (m.size() != inverse_band.size() || m.bandwidth() > inverse_band.bandwidth()) {
    fail(Errc::dimension_mismatch, "trace_product: incompatible shapes");
  }
  double tr = 0.0;
  for (int i = 0; i < m.size(); ++i) {
    tr += inverse_band(i, i) * m(i, i);
    for (int j = std::max(0, i - m.bandwidth()); j < i; ++j) tr += 2.0 * inverse_band(i, j) * m(i, j);
  }
  return tr;
}

}  // namespace pspline
