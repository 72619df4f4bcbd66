#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pspline {

// Placement of the 2p outer knots around the K equidistant interior knots.
//   uniform: outer knots continue the interior spacing beyond [0, 1], so
//            every basis function is a shifted copy of the same cardinal
//            B-spline. Coefficients linear in the index give functions
//            affine in x, and the difference formula for derivatives is
//            exact. The default.
//   clamped: 0 and 1 each repeated p times.
enum class KnotLayout { clamped, uniform };

class KnotVector {
 public:
  KnotVector(int order, int interior, KnotLayout layout = KnotLayout::uniform);

  int order() const noexcept { return order_; }
  int interior() const noexcept { return interior_; }
  KnotLayout layout() const noexcept { return layout_; }
  double spacing() const noexcept { return 1.0 / (interior_ + 1); }
  std::span<const double> knots() const noexcept { return knots_; }
  double operator[](std::size_t i) const { return knots_[i]; }
  std::size_t size() const noexcept { return knots_.size(); }

  // Knot sequence of the order-(p - q) spline space that holds the q-th
  // derivative: q knots dropped from each end.
  KnotVector trimmed(int q) const;

 private:
  KnotVector(int order, int interior, KnotLayout layout, std::vector<double> knots);

  int order_;
  int interior_;
  KnotLayout layout_;
  std::vector<double> knots_;
};

// Order-p B-spline basis on [0, 1] of dimension K + p. Immutable.
class BSplineBasis {
 public:
  explicit BSplineBasis(KnotVector knots);

  int order() const noexcept { return knots_.order(); }
  int interior_knots() const noexcept { return knots_.interior(); }
  int dim() const noexcept { return dim_; }
  const KnotVector& knot_vector() const noexcept { return knots_; }

  // Writes the p possibly-nonzero values at x into `out` (size >= order())
  // and returns the index of the first of them. x must lie in [0, 1]; the
  // last knot interval is closed on the right.
  int eval_local(double x, std::span<double> out) const;

  // Full length-dim vector of basis values at x.
  std::vector<double> eval(double x) const;

  // Value of sum_j beta_j B_j(x).
  double eval_spline(std::span<const double> beta, double x) const;

  // Basis of order p - q on the trimmed knots (holds the q-th derivative).
  BSplineBasis derivative_basis(int q) const;

 private:
  int find_span(double x) const;

  KnotVector knots_;
  int dim_;
};

BSplineBasis make_basis(int order, int interior, KnotLayout layout = KnotLayout::uniform);

// Row-compressed n x dim design matrix: row i holds `order` consecutive
// values starting at column first(i).
class DesignMatrix {
 public:
  DesignMatrix(std::size_t rows, int cols, int order);

  std::size_t rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int order() const noexcept { return order_; }

  int first(std::size_t i) const { return first_[i]; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * order_, static_cast<std::size_t>(order_)};
  }
  std::span<double> row_mut(std::size_t i) {
    return {values_.data() + i * order_, static_cast<std::size_t>(order_)};
  }
  void set_first(std::size_t i, int j) { first_[i] = j; }

  // Returns B * beta.
  std::vector<double> multiply(std::span<const double> beta) const;
  double row_dot(std::size_t i, std::span<const double> beta) const;
  Eigen::MatrixXd to_dense() const;

 private:
  std::size_t rows_;
  int cols_;
  int order_;
  std::vector<int> first_;
  std::vector<double> values_;
};

// OpenMP kernel over rows.
DesignMatrix design_matrix(const BSplineBasis& basis, std::span<const double> xs);
// Serial reference for the same computation.
DesignMatrix design_matrix_serial(const BSplineBasis& basis, std::span<const double> xs);

// Coefficients of the q-th derivative on basis.derivative_basis(q), using
// the exact knot-difference recursion. On the uniform layout this reduces
// to (K + 1)^q * Delta^q beta.
std::vector<double> spline_derivative_coeffs(const BSplineBasis& basis,
                                             std::span<const double> beta, int q);

// G_ij = int_0^1 B_i B_j dx, by Gauss-Legendre with order + 1 nodes per
// knot interval (exact for the piecewise polynomial integrand).
Eigen::MatrixXd gram_matrix(const BSplineBasis& basis);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int count, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace pspline
