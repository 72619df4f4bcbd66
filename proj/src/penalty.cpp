#include "pspline/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pspline/error.hpp"

namespace pspline {

namespace {

std::vector<double> difference_stencil(int q) {
  // Coefficients of (1 - z)^q, reversed so index j multiplies beta[r + j].
  std::vector<double> s(q + 1, 0.0);
  double binom = 1.0;
  for (int k = 0; k <= q; ++k) {
    s[q - k] = (k % 2 == 0 ? 1.0 : -1.0) * binom;
    binom = binom * (q - k) / (k + 1);
  }
  return s;
}

// Orthonormal basis of sequences polynomial in the index of degree < q.
Eigen::MatrixXd null_space_basis(int dim, int q) {
  Eigen::MatrixXd poly(dim, q);
  for (int i = 0; i < dim; ++i) {
    const double u = dim > 1 ? 2.0 * i / (dim - 1) - 1.0 : 0.0;
    double v = 1.0;
    for (int d = 0; d < q; ++d) {
      poly(i, d) = v;
      v *= u;
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(poly);
  return qr.householderQ() * Eigen::MatrixXd::Identity(dim, q);
}

}  // namespace

DifferencePenalty::DifferencePenalty(int order, int dim)
    : order_(order), dim_(dim), stencil_(difference_stencil(std::max(order, 0))) {
  if (order < 1) fail(Errc::invalid_parameter, "penalty order must be >= 1");
  if (order >= dim) fail(Errc::invalid_parameter, "penalty order must be smaller than the dimension");
  gram_ = BandedSymmetric(dim, order);
  for (int r = 0; r < rows(); ++r) {
    for (int a = 0; a <= order; ++a) {
      for (int b = 0; b <= a; ++b) gram_.at(r + a, r + b) += stencil_[a] * stencil_[b];
    }
  }
}

DifferencePenalty penalty_matrix(int order, int dim) { return DifferencePenalty(order, dim); }

std::vector<double> DifferencePenalty::apply(std::span<const double> beta) const {
  if (static_cast<int>(beta.size()) != dim_) {
    fail(Errc::dimension_mismatch, "coefficient vector length differs from penalty dimension");
  }
  std::vector<double> out(rows(), 0.0);
  for (int r = 0; r < rows(); ++r) {
    double acc = 0.0;
    for (int j = 0; j <= order_; ++j) acc += stencil_[j] * beta[r + j];
    out[r] = acc;
  }
  return out;
}

double DifferencePenalty::value(std::span<const double> beta) const {
  double s = 0.0;
  for (double d : apply(beta)) s += d * d;
  return s;
}

Eigen::MatrixXd DifferencePenalty::dense() const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(rows(), dim_);
  for (int r = 0; r < rows(); ++r) {
    for (int j = 0; j <= order_; ++j) p(r, r + j) = stencil_[j];
  }
  return p;
}

double derivative_energy(const BSplineBasis& basis, std::span<const double> beta, int q) {
  const auto coeffs = spline_derivative_coeffs(basis, beta, q);
  const Eigen::MatrixXd gram = gram_matrix(basis.derivative_basis(q));
  const Eigen::Map<const Eigen::VectorXd> c(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  return c.dot(gram * c);
}

bool penalty_ratio(const BSplineBasis& basis, std::span<const double> beta, int q, double& ratio) {
  const DifferencePenalty penalty(q, basis.dim());
  const double diff = penalty.value(beta);
  double norm2 = 0.0;
  for (double b : beta) norm2 += b * b;
  if (diff <= 1e-20 * norm2 || diff == 0.0) return false;
  const double K = basis.interior_knots();
  ratio = std::pow(K, 1.0 - 2.0 * q) * derivative_energy(basis, beta, q) / diff;
  return true;
}

RatioBracket penalty_ratio_bracket(int order, int q, int interior, int trials, std::uint64_t seed,
                                   KnotLayout layout) {
  if (q < 1 || q >= order) fail(Errc::invalid_parameter, "penalty order must satisfy 1 <= q < p");
  if (trials < 1) fail(Errc::invalid_parameter, "trial count must be >= 1");
  const BSplineBasis basis = make_basis(order, interior, layout);
  const int dim = basis.dim();
  const Eigen::MatrixXd null_basis = null_space_basis(dim, q);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  RatioBracket bracket;
  bracket.lo = std::numeric_limits<double>::infinity();
  bracket.hi = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd beta(dim);
  for (int t = 0; t < trials; ++t) {
    for (int j = 0; j < dim; ++j) beta(j) = normal(rng);
    const Eigen::VectorXd proj = null_basis * (null_basis.transpose() * beta);
    if (proj.norm() > 0.99 * beta.norm()) beta -= proj;
    double ratio = 0.0;
    if (!penalty_ratio(basis, {beta.data(), static_cast<std::size_t>(dim)}, q, ratio)) {
      ++bracket.skipped;
      continue;
    }
    ++bracket.used;
    bracket.lo = std::min(bracket.lo, ratio);
    bracket.hi = std::max(bracket.hi, ratio);
  }
  return bracket;
}

}  // namespace pspline
