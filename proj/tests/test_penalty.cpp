#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles/oracle_values.hpp"
#include "pspline/error.hpp"
#include "pspline/penalty.hpp"

using namespace pspline;

namespace {

std::vector<double> loop_difference(std::vector<double> v, int q) {
  for (int level = 0; level < q; ++level) {
    for (std::size_t j = 0; j + 1 < v.size(); ++j) v[j] = v[j + 1] - v[j];
    v.pop_back();
  }
  return v;
}

std::vector<double> random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

}  // namespace

TEST(DifferencePenalty, Stencils) {
  const std::vector<std::vector<double>> expected{{-1, 1}, {1, -2, 1}, {-1, 3, -3, 1}};
  for (int q = 1; q <= 3; ++q) {
    const DifferencePenalty p(q, 10);
    const auto s = p.stencil();
    ASSERT_EQ(s.size(), expected[q - 1].size());
    for (std::size_t j = 0; j < s.size(); ++j) EXPECT_EQ(s[j], expected[q - 1][j]);
    EXPECT_EQ(p.rows(), 10 - q);
  }
}

TEST(DifferencePenalty, RejectsBadOrders) {
  EXPECT_THROW(DifferencePenalty(0, 5), Error);
  EXPECT_THROW(DifferencePenalty(5, 5), Error);
  EXPECT_NO_THROW(DifferencePenalty(4, 5));
}

TEST(DifferencePenalty, ApplyMatchesLoopDifferencing) {
  const auto beta = random_vector(17, 1);
  for (int q = 1; q <= 4; ++q) {
    const DifferencePenalty p(q, 17);
    const auto d = p.apply(beta);
    const auto ref = loop_difference(beta, q);
    ASSERT_EQ(d.size(), ref.size());
    double ss = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      EXPECT_NEAR(d[j], ref[j], 1e-12);
      ss += ref[j] * ref[j];
    }
    EXPECT_NEAR(p.value(beta), ss, 1e-11);
  }
}

TEST(DifferencePenalty, GramIsPtP) {
  for (int q = 1; q <= 3; ++q) {
    const DifferencePenalty p(q, 12);
    const Eigen::MatrixXd dense = p.dense();
    EXPECT_EQ(dense.rows(), 12 - q);
    const Eigen::MatrixXd ptp = dense.transpose() * dense;
    EXPECT_EQ(p.gram().bandwidth(), q);
    EXPECT_NEAR((p.gram().to_dense() - ptp).cwiseAbs().maxCoeff(), 0.0, 1e-14);
    const DifferencePenalty same = penalty_matrix(q, 12);
    EXPECT_EQ((same.dense() - dense).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(DifferencePenalty, AnnihilatesIndexPolynomials) {
  for (int q = 1; q <= 4; ++q) {
    const DifferencePenalty p(q, 15);
    std::vector<double> beta(15);
    for (int j = 0; j < 15; ++j) beta[j] = std::pow(j - 7.0, q - 1) + 0.5 * (j - 3.0);
    if (q == 1) {
      for (double& b : beta) b = 2.5;
    }
    EXPECT_NEAR(p.value(beta), 0.0, 1e-16 + 1e-20 * std::pow(15.0, 2 * q));
  }
}

TEST(DerivativeEnergy, MatchesScipyQuadrature) {
  struct Case {
    const double* beta;
    double energy;
    int p, K, q;
    KnotLayout layout;
  };
  const Case cases[] = {
      {oracle::kEnergyBeta_uniform_p4_K6_q2, oracle::kEnergy_uniform_p4_K6_q2, 4, 6, 2,
       KnotLayout::uniform},
      {oracle::kEnergyBeta_clamped_p4_K6_q2, oracle::kEnergy_clamped_p4_K6_q2, 4, 6, 2,
       KnotLayout::clamped},
      {oracle::kEnergyBeta_uniform_p3_K7_q1, oracle::kEnergy_uniform_p3_K7_q1, 3, 7, 1,
       KnotLayout::uniform},
  };
  for (const auto& c : cases) {
    const BSplineBasis basis = make_basis(c.p, c.K, c.layout);
    const std::vector<double> beta(c.beta, c.beta + basis.dim());
    EXPECT_NEAR(derivative_energy(basis, beta, c.q) / c.energy, 1.0, 1e-11);
  }
}

TEST(DerivativeEnergy, UniformLayoutDifferenceIdentity) {
  // h^{-2q} (Delta^q beta)^T G (Delta^q beta) = int |f^(q)|^2 with G the
  // Gram matrix of the order-(p - q) basis and h = 1 / (K + 1).
  const int p = 4;
  const int K = 20;
  for (int q : {1, 2, 3}) {
    const BSplineBasis basis = make_basis(p, K);
    const Eigen::MatrixXd g = gram_matrix(basis.derivative_basis(q));
    for (int trial = 0; trial < 20; ++trial) {
      const auto beta = random_vector(basis.dim(), 100 + trial);
      const auto d = loop_difference(beta, q);
      const Eigen::Map<const Eigen::VectorXd> dv(d.data(), static_cast<Eigen::Index>(d.size()));
      const double lhs = std::pow(K + 1.0, 2 * q) * dv.dot(g * dv);
      EXPECT_NEAR(lhs / derivative_energy(basis, beta, q), 1.0, 1e-10);
    }
  }
}

TEST(PenaltyRatio, SkipsNullSpaceVectors) {
  const BSplineBasis basis = make_basis(4, 10);
  std::vector<double> beta(basis.dim());
  for (int j = 0; j < basis.dim(); ++j) beta[j] = 1.0 + 0.1 * j;
  double ratio = -1.0;
  EXPECT_FALSE(penalty_ratio(basis, beta, 2, ratio));
  EXPECT_EQ(ratio, -1.0);
  beta[3] += 1.0;
  EXPECT_TRUE(penalty_ratio(basis, beta, 2, ratio));
  EXPECT_GT(ratio, 0.0);
}

TEST(PenaltyRatio, BracketsShareAnInterval) {
  double common_lo = 0.0;
  double common_hi = 1e300;
  for (int K : {10, 20, 40}) {
    const RatioBracket b = penalty_ratio_bracket(4, 2, K, 200, 42);
    EXPECT_EQ(b.used + b.skipped, 200);
    EXPECT_GT(b.lo, 0.0);
    EXPECT_LE(b.lo, b.hi);
    common_lo = std::max(common_lo, b.lo);
    common_hi = std::min(common_hi, b.hi);
  }
  EXPECT_LT(common_lo, common_hi);
}

TEST(PenaltyRatio, FirstDifferences) {
  const RatioBracket b = penalty_ratio_bracket(4, 1, 10, 200, 7);
  EXPECT_GT(b.lo, 0.0);
  EXPECT_TRUE(std::isfinite(b.hi));
  EXPECT_THROW(penalty_ratio_bracket(2, 2, 10, 10, 1), Error);
}
