#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pspline/solver.hpp"

namespace pspline::sim {

enum class TestFunction { f1, f2, f3 };
enum class ErrorDist { gaussian, t3, skew_t3, mixture, slash };
enum class Estimator { ls, huber, tukey };

std::string_view to_string(TestFunction f);
std::string_view to_string(ErrorDist d);
std::string_view to_string(Estimator e);
std::optional<TestFunction> parse_function(std::string_view s);
std::optional<ErrorDist> parse_error_dist(std::string_view s);
std::optional<Estimator> parse_estimator(std::string_view s);

// f1 = cos(2 pi x), f2 = 3 atan(10 (x - 0.5)),
// f3 = phi((x - 0.3) / 0.1) - phi((x - 0.8) / 0.04) with phi the N(0,1) density.
double test_function(TestFunction f, double x);

// iid draws. skew_t3 is the noncentral t with 3 df and noncentrality 0.5;
// mixture is 0.85 N(0, 1) + 0.15 N(0, 81); slash is N(0,1) / U(0,1).
std::vector<double> draw_errors(ErrorDist dist, std::size_t n, std::mt19937_64& rng);

struct Scenario {
  TestFunction f = TestFunction::f1;
  ErrorDist error = ErrorDist::gaussian;
  int n = 60;
  double noise_scale = 0.5;

  std::vector<double> design() const;  // x_i = i / n, i = 1..n
};

// (1/n) sum (fhat(x_i) - f(x_i))^2 over the scenario's design points.
double mse(std::span<const double> fitted, const Scenario& scenario);

struct StudyConfig {
  std::vector<Scenario> scenarios;
  std::vector<Estimator> estimators{Estimator::ls, Estimator::huber, Estimator::tukey};
  int reps = 1000;
  std::uint64_t seed = 20240601;
  int order = 4;
  int interior = 40;
  int penalty_order = 2;
  double huber_k = kDefaultHuberK;
  double tukey_c = kDefaultTukeyC;
  GridSpec grid;
  IrlsOptions irls;

  void validate() const;
};

struct ReportRow {
  Scenario scenario;
  Estimator estimator = Estimator::ls;
  double mean_mse = 0.0;
  double median_mse = 0.0;
  double mc_se = 0.0;
  int reps = 0;      // successful replications
  int failures = 0;  // replications whose fit threw
  std::vector<std::string> failure_reasons;
};

struct SimulationReport {
  StudyConfig config;
  std::vector<ReportRow> rows;  // scenario-major, estimator-minor

  const ReportRow* find(TestFunction f, ErrorDist d, Estimator e) const;
  void write_csv(std::ostream& os) const;
  void write_table(std::ostream& os) const;
};

// Independent stream for one replication, derived from (seed, scenario, rep).
std::mt19937_64 replication_rng(std::uint64_t seed, std::size_t scenario, std::size_t rep);

// MSEs of the configured estimators on one replication (NaN where a fit
// failed; the reason goes to `failures` when given).
std::vector<double> run_replication(const StudyConfig& config, std::size_t scenario,
                                    std::size_t rep,
                                    std::vector<std::string>* failures = nullptr);

// OpenMP over (scenario, replication) pairs; `threads` <= 0 uses the
// OpenMP default. Bit-identical to run_study_serial for the same config.
SimulationReport run_study(const StudyConfig& config, int threads = 0);
SimulationReport run_study_serial(const StudyConfig& config);

}  // namespace pspline::sim
