#include "pspline/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pspline/error.hpp"

namespace pspline {

namespace {

std::vector<double> build_knots(int p, int K, KnotLayout layout) {
  std::vector<double> t(static_cast<std::size_t>(K + 2 * p));
  const double denom = K + 1;
  if (layout == KnotLayout::clamped) {
    for (int j = 0; j < p; ++j) t[j] = 0.0;
    for (int i = 1; i <= K; ++i) t[p + i - 1] = i / denom;
    for (int j = 0; j < p; ++j) t[p + K + j] = 1.0;
  } else {
    for (int j = 0; j < K + 2 * p; ++j) t[j] = (j - p + 1) / denom;
  }
  return t;
}

void check_point(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    fail(Errc::domain_error, "evaluation point " + std::to_string(x) + " outside [0, 1]");
  }
}

}  // namespace

KnotVector::KnotVector(int order, int interior, KnotLayout layout)
    : order_(order), interior_(interior), layout_(layout) {
  if (order < 1) fail(Errc::invalid_parameter, "spline order must be >= 1");
  if (order > 32) fail(Errc::invalid_parameter, "spline order must be <= 32");
  if (interior < 1) fail(Errc::invalid_parameter, "interior knot count must be >= 1");
  knots_ = build_knots(order, interior, layout);
}

KnotVector::KnotVector(int order, int interior, KnotLayout layout, std::vector<double> knots)
    : order_(order), interior_(interior), layout_(layout), knots_(std::move(knots)) {}

KnotVector KnotVector::trimmed(int q) const {
  if (q < 0 || q >= order_) fail(Errc::invalid_parameter, "trim count must be in [0, order)");
  std::vector<double> inner(knots_.begin() + q, knots_.end() - q);
  return KnotVector(order_ - q, interior_, layout_, std::move(inner));
}

BSplineBasis::BSplineBasis(KnotVector knots)
    : knots_(std::move(knots)), dim_(knots_.interior() + knots_.order()) {}

BSplineBasis make_basis(int order, int interior, KnotLayout layout) {
  return BSplineBasis(KnotVector(order, interior, layout));
}

int BSplineBasis::find_span(double x) const {
  const auto t = knots_.knots();
  const int p = order();
  // Spans live in [p - 1, dim - 1]; x == 1 falls into the last one.
  auto it = std::upper_bound(t.begin() + p, t.begin() + dim_, x);
  return static_cast<int>(it - t.begin()) - 1;
}

int BSplineBasis::eval_local(double x, std::span<double> out) const {
  check_point(x);
  const int p = order();
  const auto t = knots_.knots();
  const int s = find_span(x);

  // Cox-de Boor triangle; left/right hold distances to neighbouring knots.
  double left[64];
  double right[64];
  out[0] = 1.0;
  for (int j = 1; j < p; ++j) {
    left[j] = x - t[s + 1 - j];
    right[j] = t[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
  return s - p + 1;
}

std::vector<double> BSplineBasis::eval(double x) const {
  std::vector<double> local(order());
  const int first = eval_local(x, local);
  std::vector<double> full(dim_, 0.0);
  for (int r = 0; r < order(); ++r) full[first + r] = local[r];
  return full;
}

double BSplineBasis::eval_spline(std::span<const double> beta, double x) const {
  if (static_cast<int>(beta.size()) != dim_) {
    fail(Errc::dimension_mismatch, "coefficient vector length differs from basis dimension");
  }
  double local[64];
  const int first = eval_local(x, {local, static_cast<std::size_t>(order())});
  double value = 0.0;
  for (int r = 0; r < order(); ++r) value += beta[first + r] * local[r];
  return value;
}

BSplineBasis BSplineBasis::derivative_basis(int q) const {
  if (q < 1 || q >= order()) fail(Errc::invalid_parameter, "derivative order must satisfy 1 <= q < p");
  return BSplineBasis(knots_.trimmed(q));
}

DesignMatrix::DesignMatrix(std::size_t rows, int cols, int order)
    : rows_(rows), cols_(cols), order_(order), first_(rows, 0), values_(rows * order, 0.0) {}

double DesignMatrix::row_dot(std::size_t i, std::span<const double> beta) const {
  const auto r = row(i);
  const int j0 = first_[i];
  double acc = 0.0;
  for (int k = 0; k < order_; ++k) acc += r[k] * beta[j0 + k];
  return acc;
}

std::vector<double> DesignMatrix::multiply(std::span<const double> beta) const {
  if (static_cast<int>(beta.size()) != cols_) {
    fail(Errc::dimension_mismatch, "coefficient vector length differs from design columns");
  }
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = row_dot(i, beta);
  return out;
}

Eigen::MatrixXd DesignMatrix::to_dense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto r = row(i);
    for (int k = 0; k < order_; ++k) dense(static_cast<Eigen::Index>(i), first_[i] + k) = r[k];
  }
  return dense;
}

DesignMatrix design_matrix_serial(const BSplineBasis& basis, std::span<const double> xs) {
  DesignMatrix design(xs.size(), basis.dim(), basis.order());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    design.set_first(i, basis.eval_local(xs[i], design.row_mut(i)));
  }
  return design;
}

DesignMatrix design_matrix(const BSplineBasis& basis, std::span<const double> xs) {
  for (double x : xs) check_point(x);
  DesignMatrix design(xs.size(), basis.dim(), basis.order());
  const auto n = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    design.set_first(row, basis.eval_local(xs[row], design.row_mut(row)));
  }
  return design;
}

std::vector<double> spline_derivative_coeffs(const BSplineBasis& basis,
                                             std::span<const double> beta, int q) {
  const int p = basis.order();
  if (q < 1 || q >= p) fail(Errc::invalid_parameter, "derivative order must satisfy 1 <= q < p");
  if (static_cast<int>(beta.size()) != basis.dim()) {
    fail(Errc::dimension_mismatch, "coefficient vector length differs from basis dimension");
  }
  std::vector<double> coeffs(beta.begin(), beta.end());
  for (int step = 0; step < q; ++step) {
    const KnotVector knots = basis.knot_vector().trimmed(step);
    const auto u = knots.knots();
    const int m = p - step;
    std::vector<double> next(coeffs.size() - 1);
    for (std::size_t j = 0; j < next.size(); ++j) {
      next[j] = (m - 1) * (coeffs[j + 1] - coeffs[j]) / (u[j + m] - u[j + 1]);
    }
    coeffs = std::move(next);
  }
  return coeffs;
}

void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(count, 0.0);
  weights.assign(count, 0.0);
  for (int i = 0; i < (count + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 1; j <= count; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = count * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    nodes[i] = -z;
    nodes[count - 1 - i] = z;
    weights[i] = weights[count - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

Eigen::MatrixXd gram_matrix(const BSplineBasis& basis) {
  const int p = basis.order();
  const int dim = basis.dim();
  std::vector<double> nodes;
  std::vector<double> weights;
  gauss_legendre(p + 1, nodes, weights);

  // Breakpoints of [0, 1]: the distinct knots inside it.
  std::vector<double> breaks;
  for (double t : basis.knot_vector().knots()) {
    if (t >= 0.0 && t <= 1.0 && (breaks.empty() || t > breaks.back())) breaks.push_back(t);
  }

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  std::vector<double> local(p);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k];
    const double b = breaks[k + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int g = 0; g < p + 1; ++g) {
      const double x = mid + half * nodes[g];
      const double w = half * weights[g];
      const int first = basis.eval_local(x, local);
      for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) gram(first + r, first + c) += w * local[r] * local[c];
      }
    }
  }
  return gram;
}

}  // namespace pspline
