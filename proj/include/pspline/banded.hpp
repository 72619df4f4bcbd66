#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pspline {

// Symmetric matrix with half-bandwidth `bandwidth`, lower triangle stored
// row-wise: entry (i, j) with i - bandwidth <= j <= i.
class BandedSymmetric {
 public:
  BandedSymmetric() = default;
  BandedSymmetric(int n, int bandwidth);

  int size() const noexcept { return n_; }
  int bandwidth() const noexcept { return bw_; }

  // Requires |i - j| <= bandwidth.
  double operator()(int i, int j) const {
    return i >= j ? data_[index(i, j)] : data_[index(j, i)];
  }
  double& at(int i, int j) { return i >= j ? data_[index(i, j)] : data_[index(j, i)]; }
  bool in_band(int i, int j) const { return (i >= j ? i - j : j - i) <= bw_; }

  void set_zero();
  // this += alpha * other; other's bandwidth must not exceed ours.
  void add_scaled(const BandedSymmetric& other, double alpha);
  std::vector<double> multiply(std::span<const double> x) const;
  Eigen::MatrixXd to_dense() const;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * (bw_ + 1) + static_cast<std::size_t>(bw_ - (i - j));
  }

  int n_ = 0;
  int bw_ = 0;
  std::vector<double> data_;
};

// Cholesky factor L (A = L L^T) of a symmetric positive definite banded
// matrix, with the same band.
class BandedCholesky {
 public:
  // Returns false when a pivot is not safely positive.
  bool factor(const BandedSymmetric& a);

  std::vector<double> solve(std::span<const double> rhs) const;

  // Entries of A^{-1} inside the band of A (Takahashi recursion), enough to
  // evaluate tr(A^{-1} M) for any M sharing the band.
  BandedSymmetric inverse_band() const;

  double log_det() const;
  int size() const noexcept { return l_.size(); }

 private:
  BandedSymmetric l_;  // lower factor; (i, j) for j <= i holds L_ij
};

// tr(A^{-1} M) given the band of A^{-1} and a banded M of no larger width.
double trace_product(const BandedSymmetric& inverse_band, const BandedSymmetric& m);

}  // namespace pspline
