#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pspline/error.hpp"
#include "pspline/loss.hpp"

using namespace pspline;

namespace {

std::vector<LossSpec> all_losses() {
  return {LossSpec::least_squares(), LossSpec::huber(), LossSpec::tukey(), LossSpec::hampel(),
          LossSpec::check(0.3),      LossSpec::expectile(0.7), LossSpec::lq(1.5),
          LossSpec::absolute(),      LossSpec::log_cosh()};
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

// Asymptotic efficiency (E psi')^2 / E psi^2 at N(0, 1), by midpoint
// integration with psi' from central differences.
double gaussian_efficiency(const LossSpec& loss) {
  const double lo = -12.0;
  const double h = 1e-4;
  double e_dpsi = 0.0;
  double e_psi2 = 0.0;
  for (double z = lo + 0.5 * h; z < -lo; z += h) {
    const double d = 1e-6;
    const double dpsi = (loss.psi(z + d) - loss.psi(z - d)) / (2 * d);
    e_dpsi += dpsi * normal_pdf(z) * h;
    e_psi2 += loss.psi(z) * loss.psi(z) * normal_pdf(z) * h;
  }
  return e_dpsi * e_dpsi / e_psi2;
}

}  // namespace

TEST(Loss, PsiIsDerivativeOfRho) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  for (const auto& loss : all_losses()) {
    for (int trial = 0; trial < 500; ++trial) {
      const double x = unif(rng);
      const double h = 1e-6;
      // Skip points next to a kink.
      bool near_kink = std::abs(x) < 1e-3;
      for (int i = 0; i < 3; ++i) {
        const double k = loss.param(i);
        if (k > 0.0 && loss.kind() != LossKind::check && loss.kind() != LossKind::expectile &&
            loss.kind() != LossKind::lq && std::abs(std::abs(x) - k) < 1e-3) {
          near_kink = true;
        }
      }
      if (near_kink) continue;
      const double fd = (loss.rho(x + h) - loss.rho(x - h)) / (2 * h);
      EXPECT_NEAR(loss.psi(x), fd, 1e-6 * (1.0 + std::abs(fd))) << loss.name() << " x=" << x;
    }
  }
}

TEST(Loss, WeightIsPsiOverResidual) {
  for (const auto& loss : all_losses()) {
    for (double r : {-7.5, -2.0, -0.3, 0.2, 1.1, 6.0}) {
      EXPECT_NEAR(loss.weight(r), loss.psi(r) / r, 1e-14) << loss.name();
    }
  }
}

TEST(Loss, WeightLimitsAtZero) {
  EXPECT_EQ(LossSpec::least_squares().weight(0.0), 2.0);
  EXPECT_EQ(LossSpec::huber().weight(0.0), 1.0);
  EXPECT_EQ(LossSpec::hampel().weight(0.0), 1.0);
  EXPECT_EQ(LossSpec::log_cosh().weight(0.0), 1.0);
  EXPECT_NEAR(LossSpec::tukey(4.0).weight(0.0), 6.0 / 16.0, 1e-15);
  for (const auto& loss : {LossSpec::huber(), LossSpec::tukey(), LossSpec::log_cosh()}) {
    EXPECT_NEAR(loss.weight(1e-9), loss.weight(2e-8), 1e-10) << loss.name();
  }
  // No finite limit: the weight is psi(eps) / eps.
  const LossSpec abs = LossSpec::absolute();
  EXPECT_NEAR(abs.weight(0.0), 1.0 / kWeightEpsilon, 1.0);
  const LossSpec chk = LossSpec::check(0.25);
  EXPECT_NEAR(chk.weight(0.0), 0.25 / kWeightEpsilon, 1.0);
  EXPECT_NEAR(chk.weight(-1e-12), 0.75 / kWeightEpsilon, 1.0);
}

TEST(Loss, CheckScoreAtZero) {
  EXPECT_DOUBLE_EQ(LossSpec::check(0.5).psi(0.0), 0.0);
  EXPECT_DOUBLE_EQ(LossSpec::check(0.2).psi(0.0), -0.3);
  EXPECT_DOUBLE_EQ(LossSpec::check(0.2).psi(1.0), 0.2);
  EXPECT_DOUBLE_EQ(LossSpec::check(0.2).psi(-1.0), -0.8);
  EXPECT_DOUBLE_EQ(LossSpec::check(0.2).rho(-2.0), 1.6);
}

TEST(Loss, TukeyIsBoundedAndRedescending) {
  const LossSpec t = LossSpec::tukey(4.685);
  EXPECT_DOUBLE_EQ(t.rho(10.0), 1.0);
  EXPECT_DOUBLE_EQ(t.rho(4.685), 1.0);
  EXPECT_EQ(t.psi(5.0), 0.0);
  EXPECT_EQ(t.weight(5.0), 0.0);
  EXPECT_FALSE(t.convex());
}

TEST(Loss, HampelIsContinuous) {
  const LossSpec h = LossSpec::hampel(1.5, 3.5, 8.0);
  for (double k : {1.5, 3.5, 8.0}) {
    EXPECT_NEAR(h.rho(k - 1e-10), h.rho(k + 1e-10), 1e-9);
    EXPECT_NEAR(h.psi(k - 1e-10), h.psi(k + 1e-10), 1e-9);
  }
  EXPECT_EQ(h.psi(9.0), 0.0);
  EXPECT_FALSE(h.convex());
}

TEST(Loss, PsiBoundIsSupremum) {
  for (const auto& loss : all_losses()) {
    const auto bound = loss.psi_bound();
    double sup = 0.0;
    for (double x = -50.0; x <= 50.0; x += 1e-3) sup = std::max(sup, std::abs(loss.psi(x)));
    if (bound) {
      EXPECT_LE(sup, *bound * (1 + 1e-12)) << loss.name();
      EXPECT_GE(sup, *bound * (1 - 1e-6)) << loss.name();
    } else {
      EXPECT_GT(sup, 10.0) << loss.name();
    }
  }
}

TEST(Loss, DefaultTuningGivesNinetyFivePercentEfficiency) {
  EXPECT_NEAR(gaussian_efficiency(LossSpec::huber()), 0.95, 2e-3);
  EXPECT_NEAR(gaussian_efficiency(LossSpec::tukey()), 0.95, 2e-3);
}

TEST(Loss, ConvexityFlags) {
  for (const auto& loss : all_losses()) {
    const bool redescending = loss.kind() == LossKind::tukey || loss.kind() == LossKind::hampel;
    EXPECT_EQ(loss.convex(), !redescending) << loss.name();
  }
  EXPECT_TRUE(LossSpec::least_squares().constant_weight());
  EXPECT_FALSE(LossSpec::huber().constant_weight());
}

TEST(Loss, FactoriesValidate) {
  auto code_of = [](auto&& make) {
    try {
      make();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::parse_error;
  };
  EXPECT_EQ(code_of([] { LossSpec::huber(0.0); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { LossSpec::tukey(-1.0); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { LossSpec::check(1.0); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { LossSpec::expectile(0.0); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { LossSpec::lq(2.5); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { LossSpec::hampel(3.0, 2.0, 1.0); }), Errc::invalid_parameter);
  EXPECT_EQ(code_of([] { LossSpec::huber(std::nan("")); }), Errc::invalid_parameter);
}

TEST(Loss, ParseNames) {
  EXPECT_EQ(parse_loss_kind("ls"), LossKind::least_squares);
  EXPECT_EQ(parse_loss_kind("huber"), LossKind::huber);
  EXPECT_EQ(parse_loss_kind("logcosh"), LossKind::log_cosh);
  EXPECT_EQ(parse_loss_kind("abs"), LossKind::absolute);
  EXPECT_FALSE(parse_loss_kind("bogus").has_value());
  for (const auto& loss : all_losses()) {
    EXPECT_EQ(parse_loss_kind(to_string(loss.kind())), loss.kind());
  }
}

TEST(Loss, BisquareRho) {
  EXPECT_EQ(bisquare_rho(0.0, 0.704), 0.0);
  EXPECT_EQ(bisquare_rho(1.0, 0.704), 1.0);
  EXPECT_NEAR(bisquare_rho(0.352, 0.704), 1.0 - std::pow(0.75, 3), 1e-15);
}
