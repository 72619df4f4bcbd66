#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pspline/banded.hpp"
#include "pspline/basis.hpp"

namespace pspline {

// The (dim - q) x dim matrix of the q-th order difference operator. Row r
// applies the stencil (-1)^(q-j) C(q, j), j = 0..q, to beta[r..r+q], so
// (P beta)_r is the backward difference Delta^q beta_{r+q}.
class DifferencePenalty {
 public:
  DifferencePenalty(int order, int dim);

  int order() const noexcept { return order_; }
  int dim() const noexcept { return dim_; }
  int rows() const noexcept { return dim_ - order_; }
  std::span<const double> stencil() const noexcept { return stencil_; }

  std::vector<double> apply(std::span<const double> beta) const;
  // ||P beta||^2
  double value(std::span<const double> beta) const;
  // P^T P, half-bandwidth q.
  const BandedSymmetric& gram() const noexcept { return gram_; }
  Eigen::MatrixXd dense() const;

 private:
  int order_;
  int dim_;
  std::vector<double> stencil_;
  BandedSymmetric gram_;
};

DifferencePenalty penalty_matrix(int order, int dim);

// int_0^1 |f^(q)|^2 for f = sum_j beta_j B_j, from the exact derivative
// coefficients and the Gram matrix of the order-(p - q) basis.
double derivative_energy(const BSplineBasis& basis, std::span<const double> beta, int q);

struct RatioBracket {
  double lo = 0.0;
  double hi = 0.0;
  int used = 0;     // vectors that entered the bracket
  int skipped = 0;  // vectors with vanishing difference penalty
};

// Ratio K^(1-2q) int |f^(q)|^2 / sum (Delta^q beta)^2 for one coefficient
// vector; returns false (and leaves `ratio` untouched) when the difference
// penalty vanishes.
bool penalty_ratio(const BSplineBasis& basis, std::span<const double> beta, int q, double& ratio);

// Draws `trials` standard-normal coefficient vectors and returns the range
// of penalty_ratio over them.
RatioBracket penalty_ratio_bracket(int order, int q, int interior, int trials, std::uint64_t seed,
                                 KnotLayout layout = KnotLayout::uniform);

}  // namespace pspline
