#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pspline/banded.hpp"
#include "pspline/basis.hpp"
#include "pspline/loss.hpp"
#include "pspline/penalty.hpp"

namespace pspline {

struct ScaleMode {
  enum class Kind { none, mscale, fixed };
  Kind kind = Kind::mscale;
  double value = 1.0;  // used by Kind::fixed

  static ScaleMode none() { return {Kind::none, 1.0}; }
  static ScaleMode mscale() { return {Kind::mscale, 1.0}; }
  static ScaleMode fixed(double sigma) { return {Kind::fixed, sigma}; }
};

// Log-spaced lambda grid followed by golden-section refinement on log lambda
// around the grid minimizer.
// Numerator of the selection criterion for redescending losses. `weights`
// is sum W_i r_i^2; `loss` replaces it by sum sigma^2 rhohat(r_i / sigma),
// rhohat = 2 rho / rho''(0), which charges rejected points a bounded cost
// instead of nothing. Convex losses always use `weights`.
enum class GcvNumerator { weights, loss };

struct GridSpec {
  int points = 50;
  double lo = 1e-8;
  double hi = 1e4;
  double refine_tol = 1e-3;  // width of the final log10-lambda bracket
  GcvNumerator redescending = GcvNumerator::loss;

  std::vector<double> lambdas() const;  // descending
};

struct IrlsOptions {
  int max_iter = 100;
  double tol = 1e-8;  // on ||b_new - b_old||_inf / (1 + ||b_old||_inf)
};

struct FitConfig {
  LossSpec loss = LossSpec::huber();
  int order = 4;
  int interior = 40;
  int penalty_order = 2;
  std::optional<double> lambda;  // empty: select by weighted GCV
  ScaleMode scale = ScaleMode::mscale();
  IrlsOptions irls;
  GridSpec grid;
  KnotLayout layout = KnotLayout::uniform;

  void validate() const;
};

struct FitResult {
  std::vector<double> beta;
  double lambda = 0.0;
  double lambda_eff = 0.0;  // 2 n sigma^2 lambda
  double sigma = 1.0;
  std::vector<double> fitted;
  std::vector<double> residuals;
  std::vector<double> weights;  // at the returned beta
  double edf = 0.0;
  double gcv = 0.0;       // weighted GCV
  double loss_gcv = 0.0;  // GCV with the loss-based numerator
  int iterations = 0;
  bool converged = false;
  double estimating_eq_norm = 0.0;
  // Penalized objective (1/n) sum rho(r_i / sigma) + lambda ||P beta||^2 at
  // the start value and after every update.
  std::vector<double> objective_trace;
};

// Basis, design matrix and penalty for one set of design points.
class PsplineProblem {
 public:
  PsplineProblem(std::span<const double> xs, std::span<const double> y, int order, int interior,
                 int penalty_order, KnotLayout layout = KnotLayout::uniform);

  const BSplineBasis& basis() const noexcept { return basis_; }
  const DesignMatrix& design() const noexcept { return design_; }
  const DifferencePenalty& penalty() const noexcept { return penalty_; }
  std::span<const double> y() const noexcept { return y_; }
  std::span<const double> xs() const noexcept { return xs_; }
  std::size_t n() const noexcept { return y_.size(); }

 private:
  std::vector<double> xs_;
  std::vector<double> y_;
  BSplineBasis basis_;
  DesignMatrix design_;
  DifferencePenalty penalty_;
};

// B^T W B (half-bandwidth order - 1) and B^T W y.
BandedSymmetric weighted_gram(const DesignMatrix& design, std::span<const double> w);
std::vector<double> weighted_rhs(const DesignMatrix& design, std::span<const double> w,
                                 std::span<const double> y);

// argmin_beta sum_i w_i (y_i - B_i beta)^2 + lambda_eff ||P beta||^2 by
// banded Cholesky. Throws singular-system when the system is not positive
// definite.
std::vector<double> pwls_solve(const DesignMatrix& design, std::span<const double> w,
                               std::span<const double> y, double lambda_eff,
                               const DifferencePenalty& penalty);

// tr H for H = B (B^T W B + lambda_eff P^T P)^{-1} B^T W, from the band of
// the inverse; H is never formed.
double hat_trace(const DesignMatrix& design, std::span<const double> w, double lambda_eff,
                 const DifferencePenalty& penalty);

// n^{-1} sum w_i r_i^2 / (1 - tr H / n)^2. Throws saturated-fit when
// tr H / n >= 1 - 1e-8.
double gcv_score(const DesignMatrix& design, std::span<const double> w,
                 std::span<const double> residuals, double lambda_eff,
                 const DifferencePenalty& penalty, double* trace_out = nullptr);

// n^{-1} sum sigma^2 rhohat(r_i / sigma) / (1 - trace / n)^2 with
// rhohat = 2 rho / rho''(0) (so rhohat(u) ~ u^2 near 0).
double loss_gcv_score(const LossSpec& loss, double sigma, std::span<const double> residuals,
                      double trace);

// Iteratively reweighted penalized least squares at fixed lambda and sigma.
// `start` may be empty (zero start). Never throws on non-convergence; the
// converged flag reports it.
FitResult irls_fit(const PsplineProblem& problem, const LossSpec& loss, double sigma,
                   double lambda, const IrlsOptions& options, std::span<const double> start = {});

struct LambdaSearch {
  FitResult best;
  std::vector<double> grid_lambdas;  // descending
  std::vector<double> grid_scores;   // +inf where the fit saturated or failed
  std::vector<std::vector<double>> grid_betas;
  bool refined = false;
};

// Weighted-GCV lambda selection over a log grid, refined by golden-section
// search on log lambda between the grid neighbours of the minimizer.
// Convex losses warm-start each grid fit from the previous (larger) lambda,
// with `start` seeding the first. Non-convex losses start every fit from
// `start`, which defaults to the GCV-selected fit of `seed_loss` (Huber).
LambdaSearch select_lambda(const PsplineProblem& problem, const LossSpec& loss, double sigma,
                           const IrlsOptions& options, const GridSpec& grid,
                           std::span<const double> start = {},
                           std::optional<LossSpec> seed_loss = std::nullopt);

// Scale used by a configuration: 1 (none), the fixed value, or the M-scale
// of y.
double resolve_sigma(std::span<const double> y, const ScaleMode& mode);

// One-call fitting: resolves sigma, then fits at config.lambda or selects it
// by GCV. Non-convex losses are started from a Huber fit. y is centered at
// its median internally; beta and fitted values are returned uncentered.
FitResult fit(std::span<const double> xs, std::span<const double> y, const FitConfig& config);

// Fixed-lambda fit with sigma resolved from the configuration.
FitResult irls_fit(std::span<const double> xs, std::span<const double> y, const FitConfig& config,
                   double lambda);

// Sup norm of -(1/n) sum psi_w(r_i/sigma) B_i + 2 lambda sigma P^T P beta,
// with psi_w(u) = weight(u) u (equal to psi for |u| > kWeightEpsilon).
double estimating_equation_norm(const PsplineProblem& problem, const LossSpec& loss,
                                double sigma, double lambda, std::span<const double> beta);

double penalized_objective(const PsplineProblem& problem, const LossSpec& loss, double sigma,
                           double lambda, std::span<const double> beta);

}  // namespace pspline
