#include "pspline/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "pspline/error.hpp"
#include "pspline/scale.hpp"

namespace pspline {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> residuals_of(const PsplineProblem& problem, std::span<const double> beta) {
  const auto y = problem.y();
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - problem.design().row_dot(i, beta);
  return r;
}

std::vector<double> weights_of(const LossSpec& loss, std::span<const double> residuals, double sigma) {
  std::vector<double> w(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) w[i] = loss.weight(residuals[i] / sigma);
  return w;
}

// Weighted least-squares fit restricted to the null space of P, i.e.
// coefficients polynomial in the index of degree < q.
std::vector<double> null_space_fit(const DesignMatrix& design, std::span<const double> w,
                                   std::span<const double> y, int q) {
  const int dim = design.cols();
  Eigen::MatrixXd basis(dim, q);
  for (int j = 0; j < dim; ++j) {
    const double t = dim > 1 ? (2.0 * j - (dim - 1)) / (dim - 1) : 0.0;
    double pw = 1.0;
    for (int k = 0; k < q; ++k, pw *= t) basis(j, k) = pw;
  }
  const auto n = static_cast<Eigen::Index>(design.rows());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, q);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sw = std::sqrt(w[i]);
    const auto row = design.row(i);
    for (int a = 0; a < design.order(); ++a) {
      x.row(i) += sw * row[a] * basis.row(design.first(i) + a);
    }
    z(i) = sw * y[i];
  }
  const Eigen::VectorXd alpha = x.colPivHouseholderQr().solve(z);
  const Eigen::VectorXd beta = basis * alpha;
  return {beta.data(), beta.data() + dim};
}

BandedSymmetric system_matrix(const DesignMatrix& design, std::span<const double> w,
                              double lambda_eff, const DifferencePenalty& penalty,
                              BandedSymmetric* gram_out) {
  BandedSymmetric gram = weighted_gram(design, w);
  const int bw = std::max(gram.bandwidth(), penalty.order());
  BandedSymmetric a(gram.size(), bw);
  a.add_scaled(gram, 1.0);
  if (lambda_eff != 0.0) a.add_scaled(penalty.gram(), lambda_eff);
  if (gram_out != nullptr) *gram_out = std::move(gram);
  return a;
}

// Fills edf and gcv of a finished fit; a singular or saturated system
// leaves gcv at +inf.
void finish_fit(const PsplineProblem& problem, const LossSpec& loss, FitResult& fit) {
  fit.residuals = residuals_of(problem, fit.beta);
  fit.fitted.resize(fit.residuals.size());
  const auto y = problem.y();
  for (std::size_t i = 0; i < y.size(); ++i) fit.fitted[i] = y[i] - fit.residuals[i];
  fit.weights = weights_of(loss, fit.residuals, fit.sigma);
  fit.estimating_eq_norm =
      estimating_equation_norm(problem, loss, fit.sigma, fit.lambda, fit.beta);
  fit.gcv = kInf;
  fit.loss_gcv = kInf;
  fit.edf = std::numeric_limits<double>::quiet_NaN();
  try {
    double trace = 0.0;
    fit.gcv = gcv_score(problem.design(), fit.weights, fit.residuals, fit.lambda_eff,
                        problem.penalty(), &trace);
    fit.edf = trace;
    fit.loss_gcv = loss_gcv_score(loss, fit.sigma, fit.residuals, trace);
  } catch (const Error& e) {
    if (e.code() == Errc::saturated_fit) {
      fit.edf = hat_trace(problem.design(), fit.weights, fit.lambda_eff, problem.penalty());
    } else if (e.code() != Errc::singular_system) {
      throw;
    }
  }
}

}  // namespace

std::vector<double> GridSpec::lambdas() const {
  if (points < 1 || !(lo > 0.0) || !(hi >= lo)) {
    fail(Errc::invalid_parameter, "lambda grid needs points >= 1 and 0 < lo <= hi");
  }
  std::vector<double> out(points);
  const double a = std::log(hi);
  const double b = std::log(lo);
  for (int j = 0; j < points; ++j) {
    out[j] = points == 1 ? hi : std::exp(a + (b - a) * j / (points - 1));
  }
  return out;
}

void FitConfig::validate() const {
  if (order < 1) fail(Errc::invalid_parameter, "spline order p must be >= 1");
  if (interior < 1) fail(Errc::invalid_parameter, "interior knot count K must be >= 1");
  if (penalty_order < 1 || penalty_order >= order) {
    fail(Errc::invalid_parameter, "penalty order q must satisfy 1 <= q < p");
  }
  if (interior < penalty_order) fail(Errc::invalid_parameter, "need K >= q");
  if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) {
    fail(Errc::invalid_parameter, "fixed lambda must be finite and >= 0");
  }
  if (scale.kind == ScaleMode::Kind::fixed && !(scale.value > 0.0 && std::isfinite(scale.value))) {
    fail(Errc::invalid_parameter, "fixed scale must be finite and positive");
  }
  if (irls.max_iter < 1 || !(irls.tol > 0.0)) {
    fail(Errc::invalid_parameter, "IRLS needs max_iter >= 1 and tol > 0");
  }
  (void)grid.lambdas();
}

PsplineProblem::PsplineProblem(std::span<const double> xs, std::span<const double> y, int order,
                               int interior, int penalty_order, KnotLayout layout)
    : xs_(xs.begin(), xs.end()),
      y_(y.begin(), y.end()),
      basis_(make_basis(order, interior, layout)),
      design_(design_matrix(basis_, xs_)),
      penalty_(penalty_matrix(penalty_order, basis_.dim())) {
  if (xs.size() != y.size()) fail(Errc::dimension_mismatch, "xs and y differ in length");
  if (static_cast<int>(y.size()) < penalty_order) {
    fail(Errc::insufficient_data, "need at least q observations");
  }
  for (double v : y_) {
    if (!std::isfinite(v)) fail(Errc::domain_error, "responses must be finite");
  }
}

BandedSymmetric weighted_gram(const DesignMatrix& design, std::span<const double> w) {
  if (w.size() != design.rows()) fail(Errc::dimension_mismatch, "weight vector length");
  const int p = design.order();
  BandedSymmetric g(design.cols(), p - 1);
  for (std::size_t i = 0; i < design.rows(); ++i) {
    const auto row = design.row(i);
    const int j0 = design.first(i);
    for (int a = 0; a < p; ++a) {
      const double wa = w[i] * row[a];
      for (int b = 0; b <= a; ++b) g.at(j0 + a, j0 + b) += wa * row[b];
    }
  }
  return g;
}

std::vector<double> weighted_rhs(const DesignMatrix& design, std::span<const double> w,
                                 std::span<const double> y) {
  if (w.size() != design.rows() || y.size() != design.rows()) {
    fail(Errc::dimension_mismatch, "weight/response length");
  }
  std::vector<double> rhs(design.cols(), 0.0);
  for (std::size_t i = 0; i < design.rows(); ++i) {
    const auto row = design.row(i);
    const int j0 = design.first(i);
    for (int a = 0; a < design.order(); ++a) rhs[j0 + a] += w[i] * row[a] * y[i];
  }
  return rhs;
}

std::vector<double> pwls_solve(const DesignMatrix& design, std::span<const double> w,
                               std::span<const double> y, double lambda_eff,
                               const DifferencePenalty& penalty) {
  if (penalty.dim() != design.cols()) fail(Errc::dimension_mismatch, "penalty vs design columns");
  if (!(lambda_eff >= 0.0)) fail(Errc::invalid_parameter, "effective lambda must be >= 0");
  const BandedSymmetric a = system_matrix(design, w, lambda_eff, penalty, nullptr);
  BandedCholesky chol;
  if (!chol.factor(a)) {
    fail(Errc::singular_system, "penalized normal equations are not positive definite");
  }
  // Solve for the part outside the null space of P only, so that round-off
  // scales with the detrended response.
  const std::vector<double> base = null_space_fit(design, w, y, penalty.order());
  const std::vector<double> trend = design.multiply(base);
  std::vector<double> detrended(y.begin(), y.end());
  for (std::size_t i = 0; i < detrended.size(); ++i) detrended[i] -= trend[i];
  const std::vector<double> rhs = weighted_rhs(design, w, detrended);
  std::vector<double> beta = chol.solve(rhs);
  // Iterative refinement; large lambda_eff makes the system ill conditioned.
  double last = kInf;
  for (int step = 0; step < 4; ++step) {
    std::vector<double> r = a.multiply(beta);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = rhs[j] - r[j];
    const std::vector<double> delta = chol.solve(r);
    for (std::size_t j = 0; j < beta.size(); ++j) beta[j] += delta[j];
    const double size = sup_norm(delta);
    if (size <= 1e-15 * sup_norm(beta) || size >= 0.5 * last) break;
    last = size;
  }
  for (std::size_t j = 0; j < beta.size(); ++j) beta[j] += base[j];
  return beta;
}

double hat_trace(const DesignMatrix& design, std::span<const double> w, double lambda_eff,
                 const DifferencePenalty& penalty) {
  BandedSymmetric gram;
  const BandedSymmetric a = system_matrix(design, w, lambda_eff, penalty, &gram);
  BandedCholesky chol;
  if (!chol.factor(a)) {
    fail(Errc::singular_system, "penalized normal equations are not positive definite");
  }
  return trace_product(chol.inverse_band(), gram);
}

double gcv_score(const DesignMatrix& design, std::span<const double> w,
                 std::span<const double> residuals, double lambda_eff,
                 const DifferencePenalty& penalty, double* trace_out) {
  const double n = static_cast<double>(design.rows());
  const double trace = hat_trace(design, w, lambda_eff, penalty);
  if (trace_out != nullptr) *trace_out = trace;
  const double denom = 1.0 - trace / n;
  if (denom <= 1e-8) {
    fail(Errc::saturated_fit, "tr H / n = " + std::to_string(trace / n));
  }
  double num = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) num += w[i] * residuals[i] * residuals[i];
  return num / n / (denom * denom);
}

double loss_gcv_score(const LossSpec& loss, double sigma, std::span<const double> residuals,
                      double trace) {
  const double n = static_cast<double>(residuals.size());
  const double denom = 1.0 - trace / n;
  if (denom <= 1e-8) {
    fail(Errc::saturated_fit, "tr H / n = " + std::to_string(trace / n));
  }
  const double curvature = loss.weight(0.0);
  if (!(curvature > 0.0)) {
    fail(Errc::invalid_parameter, "loss-based GCV needs rho''(0) > 0");
  }
  double num = 0.0;
  for (double r : residuals) num += loss.rho(r / sigma);
  num *= 2.0 * sigma * sigma / curvature;
  return num / n / (denom * denom);
}

double estimating_equation_norm(const PsplineProblem& problem, const LossSpec& loss,
                                double sigma, double lambda, std::span<const double> beta) {
  const auto r = residuals_of(problem, beta);
  const double n = static_cast<double>(problem.n());
  std::vector<double> g = problem.penalty().gram().multiply(beta);
  for (double& v : g) v *= 2.0 * lambda * sigma;
  const auto& design = problem.design();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double u = r[i] / sigma;
    const double score = loss.weight(u) * u;
    const auto row = design.row(i);
    for (int a = 0; a < design.order(); ++a) g[design.first(i) + a] -= score * row[a] / n;
  }
  return sup_norm(g);
}

double penalized_objective(const PsplineProblem& problem, const LossSpec& loss, double sigma,
                           double lambda, std::span<const double> beta) {
  const auto r = residuals_of(problem, beta);
  double s = 0.0;
  for (double v : r) s += loss.rho(v / sigma);
  return s / static_cast<double>(r.size()) + lambda * problem.penalty().value(beta);
}

FitResult irls_fit(const PsplineProblem& problem, const LossSpec& loss, double sigma,
                   double lambda, const IrlsOptions& options, std::span<const double> start) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(Errc::invalid_parameter, "sigma must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(Errc::invalid_parameter, "lambda must be >= 0");
  const int dim = problem.basis().dim();
  if (!start.empty() && static_cast<int>(start.size()) != dim) {
    fail(Errc::dimension_mismatch, "start vector length differs from basis dimension");
  }
  const double n = static_cast<double>(problem.n());

  FitResult fit;
  fit.lambda = lambda;
  fit.sigma = sigma;
  fit.lambda_eff = 2.0 * n * sigma * sigma * lambda;
  fit.beta = start.empty() ? std::vector<double>(dim, 0.0)
                           : std::vector<double>(start.begin(), start.end());
  fit.objective_trace.push_back(penalized_objective(problem, loss, sigma, lambda, fit.beta));

  if (loss.constant_weight()) {
    const std::vector<double> w(problem.n(), loss.weight(0.0));
    fit.beta = pwls_solve(problem.design(), w, problem.y(), fit.lambda_eff, problem.penalty());
    fit.objective_trace.push_back(penalized_objective(problem, loss, sigma, lambda, fit.beta));
    fit.iterations = 1;
    fit.converged = true;
  } else {
    for (int iter = 1; iter <= options.max_iter; ++iter) {
      const auto w = weights_of(loss, residuals_of(problem, fit.beta), sigma);
      auto next = pwls_solve(problem.design(), w, problem.y(), fit.lambda_eff, problem.penalty());
      double change = 0.0;
      for (int j = 0; j < dim; ++j) change = std::max(change, std::abs(next[j] - fit.beta[j]));
      change /= 1.0 + sup_norm(fit.beta);
      fit.beta = std::move(next);
      fit.iterations = iter;
      fit.objective_trace.push_back(penalized_objective(problem, loss, sigma, lambda, fit.beta));
      if (change < options.tol) {
        fit.converged = true;
        break;
      }
    }
  }
  finish_fit(problem, loss, fit);
  return fit;
}

LambdaSearch select_lambda(const PsplineProblem& problem, const LossSpec& loss, double sigma,
                           const IrlsOptions& options, const GridSpec& grid,
                           std::span<const double> start, std::optional<LossSpec> seed_loss) {
  // Non-convex losses restart every fit from one robust estimate: the
  // caller's start, or the GCV-selected fit of the convex seed loss.
  const bool fixed_start = !loss.convex();
  const bool by_loss = !loss.convex() && grid.redescending == GcvNumerator::loss;
  // Scores below round-off of the data are ties, which then go to the
  // larger lambda.
  double mean_sq = 0.0;
  for (double v : problem.y()) mean_sq += v * v;
  mean_sq /= static_cast<double>(problem.n());
  const double floor = 1e-20 * loss.weight(0.0) * std::max(mean_sq, 1e-300);
  auto score_of = [by_loss, floor](const FitResult& f) {
    const double v = by_loss ? f.loss_gcv : f.gcv;
    return std::isfinite(v) ? std::max(v, floor) : kInf;
  };
  std::vector<double> robust_start(start.begin(), start.end());
  if (fixed_start && robust_start.empty()) {
    const LossSpec seeder = seed_loss.value_or(LossSpec::huber());
    if (!seeder.convex()) fail(Errc::invalid_parameter, "seed loss must be convex");
    robust_start = select_lambda(problem, seeder, sigma, options, grid).best.beta;
  }

  LambdaSearch search;
  search.grid_lambdas = grid.lambdas();
  const auto& lambdas = search.grid_lambdas;
  const std::size_t m = lambdas.size();

  std::vector<FitResult> fits(m);
  search.grid_scores.assign(m, kInf);
  search.grid_betas.assign(m, {});
  std::vector<double> warm = robust_start;
  for (std::size_t j = 0; j < m; ++j) {
    try {
      fits[j] = irls_fit(problem, loss, sigma, lambdas[j], options,
                         fixed_start ? std::span<const double>(robust_start) : warm);
      if (!fixed_start) warm = fits[j].beta;
      search.grid_betas[j] = fits[j].beta;
      search.grid_scores[j] = score_of(fits[j]);
    } catch (const Error& e) {
      if (e.code() != Errc::singular_system) throw;
    }
  }

  std::size_t best = m;
  for (std::size_t j = 0; j < m; ++j) {
    // Strict comparison from the largest lambda down breaks ties toward
    // smoother fits.
    if (std::isfinite(search.grid_scores[j]) &&
        (best == m || search.grid_scores[j] < search.grid_scores[best])) {
      best = j;
    }
  }
  if (best == m) {
    fail(Errc::saturated_fit, "GCV undefined at every grid lambda");
  }
  search.best = fits[best];
  if (best == 0 || best + 1 == m) return search;

  // Golden-section search on log lambda between the grid neighbours.
  const std::vector<double> anchor = fixed_start ? robust_start : fits[best].beta;
  FitResult champion = fits[best];
  double champion_score = search.grid_scores[best];
  auto evaluate = [&](double log_lambda) {
    try {
      FitResult f = irls_fit(problem, loss, sigma, std::exp(log_lambda), options, anchor);
      const double score = score_of(f);
      if (score < champion_score || (score == champion_score && f.lambda > champion.lambda)) {
        champion = std::move(f);
        champion_score = score;
        search.refined = true;
      }
      return score;
    } catch (const Error& e) {
      if (e.code() != Errc::singular_system) throw;
      return kInf;
    }
  };
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(lambdas[best + 1]);
  double b = std::log(lambdas[best - 1]);
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = evaluate(c);
  double fd = evaluate(d);
  const double tol = grid.refine_tol * std::numbers::ln10;
  for (int iter = 0; iter < 200 && (b - a) > tol; ++iter) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = evaluate(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = evaluate(d);
    }
  }
  search.best = std::move(champion);
  return search;
}

double resolve_sigma(std::span<const double> y, const ScaleMode& mode) {
  switch (mode.kind) {
    case ScaleMode::Kind::none:
      return 1.0;
    case ScaleMode::Kind::fixed:
      if (!(mode.value > 0.0)) fail(Errc::invalid_parameter, "fixed scale must be positive");
      return mode.value;
    case ScaleMode::Kind::mscale:
      return m_scale(y).sigma;
  }
  return 1.0;
}

namespace {

// The fit is location equivariant (the basis sums to one and the penalty
// annihilates constants), so fitting y - median(y) and shifting back only
// improves conditioning for data far from zero.
double location_shift(std::span<const double> y) {
  if (y.empty()) return 0.0;
  std::vector<double> v(y.begin(), y.end());
  auto mid = v.begin() + v.size() / 2;
  std::nth_element(v.begin(), mid, v.end());
  return std::isfinite(*mid) ? *mid : 0.0;
}

void shift_back(FitResult& fit, double shift) {
  for (double& b : fit.beta) b += shift;
  for (double& f : fit.fitted) f += shift;
}

}  // namespace

FitResult irls_fit(std::span<const double> xs, std::span<const double> y, const FitConfig& config,
                   double lambda) {
  config.validate();
  const double shift = location_shift(y);
  std::vector<double> centered(y.begin(), y.end());
  for (double& v : centered) v -= shift;
  const PsplineProblem problem(xs, centered, config.order, config.interior, config.penalty_order,
                               config.layout);
  const double sigma = resolve_sigma(centered, config.scale);
  FitResult out;
  if (config.loss.convex()) {
    out = irls_fit(problem, config.loss, sigma, lambda, config.irls);
  } else {
    const FitResult seed = irls_fit(problem, LossSpec::huber(), sigma, lambda, config.irls);
    out = irls_fit(problem, config.loss, sigma, lambda, config.irls, seed.beta);
  }
  shift_back(out, shift);
  return out;
}

FitResult fit(std::span<const double> xs, std::span<const double> y, const FitConfig& config) {
  if (config.lambda) return irls_fit(xs, y, config, *config.lambda);
  config.validate();
  const double shift = location_shift(y);
  std::vector<double> centered(y.begin(), y.end());
  for (double& v : centered) v -= shift;
  const PsplineProblem problem(xs, centered, config.order, config.interior, config.penalty_order,
                               config.layout);
  const double sigma = resolve_sigma(centered, config.scale);
  FitResult out = select_lambda(problem, config.loss, sigma, config.irls, config.grid).best;
  shift_back(out, shift);
  return out;
}

}  // namespace pspline
