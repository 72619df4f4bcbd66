#include "pspline/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pspline/error.hpp"
#include "pspline/scale.hpp"

namespace pspline::sim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normal_density(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct RowStats {
  double mean = kNaN;
  double median = kNaN;
  double se = kNaN;
  int count = 0;
};

RowStats summarize(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }),
               values.end());
  RowStats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.se = s.count > 1 ? std::sqrt(ss / (s.count - 1) / s.count) : kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  s.median = values.size() % 2 == 1 ? values[h] : 0.5 * (values[h - 1] + values[h]);
  return s;
}

}  // namespace

std::string_view to_string(TestFunction f) {
  switch (f) {
    case TestFunction::f1: return "f1";
    case TestFunction::f2: return "f2";
    case TestFunction::f3: return "f3";
  }
  return "?";
}

std::string_view to_string(ErrorDist d) {
  switch (d) {
    case ErrorDist::gaussian: return "gaussian";
    case ErrorDist::t3: return "t3";
    case ErrorDist::skew_t3: return "skew-t3";
    case ErrorDist::mixture: return "mixture";
    case ErrorDist::slash: return "slash";
  }
  return "?";
}

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::ls: return "ls";
    case Estimator::huber: return "huber";
    case Estimator::tukey: return "tukey";
  }
  return "?";
}

std::optional<TestFunction> parse_function(std::string_view s) {
  for (auto f : {TestFunction::f1, TestFunction::f2, TestFunction::f3}) {
    if (s == to_string(f)) return f;
  }
  return std::nullopt;
}

std::optional<ErrorDist> parse_error_dist(std::string_view s) {
  for (auto d : {ErrorDist::gaussian, ErrorDist::t3, ErrorDist::skew_t3, ErrorDist::mixture,
                 ErrorDist::slash}) {
    if (s == to_string(d)) return d;
  }
  return std::nullopt;
}

std::optional<Estimator> parse_estimator(std::string_view s) {
  for (auto e : {Estimator::ls, Estimator::huber, Estimator::tukey}) {
    if (s == to_string(e)) return e;
  }
  return std::nullopt;
}

double test_function(TestFunction f, double x) {
  if (!(x >= 0.0 && x <= 1.0)) fail(Errc::domain_error, "test functions live on [0, 1]");
  switch (f) {
    case TestFunction::f1:
      return std::cos(2.0 * std::numbers::pi * x);
    case TestFunction::f2:
      return 3.0 * std::atan(10.0 * (x - 0.5));
    case TestFunction::f3:
      return normal_density((x - 0.3) / 0.1) - normal_density((x - 0.8) / 0.04);
  }
  fail(Errc::unknown_function, "unknown test function");
}

std::vector<double> draw_errors(ErrorDist dist, std::size_t n, std::mt19937_64& rng) {
  std::vector<double> e(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (dist) {
    case ErrorDist::gaussian:
      for (double& v : e) v = normal(rng);
      break;
    case ErrorDist::t3: {
      std::chi_squared_distribution<double> chi2(3.0);
      for (double& v : e) {
        const double z = normal(rng);
        v = z / std::sqrt(chi2(rng) / 3.0);
      }
      break;
    }
    case ErrorDist::skew_t3: {
      std::chi_squared_distribution<double> chi2(3.0);
      for (double& v : e) {
        const double z = normal(rng);
        v = (z + 0.5) / std::sqrt(chi2(rng) / 3.0);
      }
      break;
    }
    case ErrorDist::mixture: {
      std::bernoulli_distribution wide(0.15);
      for (double& v : e) {
        const double sd = wide(rng) ? 9.0 : 1.0;
        v = sd * normal(rng);
      }
      break;
    }
    case ErrorDist::slash: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (double& v : e) {
        const double z = normal(rng);
        double u = 0.0;
        while (u == 0.0) u = unif(rng);
        v = z / u;
      }
      break;
    }
  }
  return e;
}

std::vector<double> Scenario::design() const {
  std::vector<double> xs(n);
  for (int i = 1; i <= n; ++i) xs[i - 1] = static_cast<double>(i) / n;
  return xs;
}

double mse(std::span<const double> fitted, const Scenario& scenario) {
  if (static_cast<int>(fitted.size()) != scenario.n) {
    fail(Errc::dimension_mismatch, "fitted values do not match the scenario design");
  }
  const auto xs = scenario.design();
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = fitted[i] - test_function(scenario.f, xs[i]);
    s += d * d;
  }
  return s / static_cast<double>(xs.size());
}

void StudyConfig::validate() const {
  if (scenarios.empty()) fail(Errc::invalid_parameter, "no scenarios requested");
  if (estimators.empty()) fail(Errc::invalid_parameter, "no estimators requested");
  if (reps < 1) fail(Errc::invalid_parameter, "reps must be >= 1");
  for (const auto& s : scenarios) {
    if (s.n < penalty_order + 1) fail(Errc::invalid_parameter, "scenario sample size too small");
    if (!(s.noise_scale >= 0.0)) fail(Errc::invalid_parameter, "noise scale must be >= 0");
  }
  if (penalty_order < 1 || penalty_order >= order) {
    fail(Errc::invalid_parameter, "penalty order q must satisfy 1 <= q < p");
  }
  (void)LossSpec::huber(huber_k);
  (void)LossSpec::tukey(tukey_c);
  (void)grid.lambdas();
}

std::mt19937_64 replication_rng(std::uint64_t seed, std::size_t scenario, std::size_t rep) {
  std::uint64_t state = seed;
  std::uint64_t h = splitmix64(state);
  state ^= 0xd1b54a32d192ed03ULL * (static_cast<std::uint64_t>(scenario) + 1);
  h ^= splitmix64(state);
  state ^= 0x8cb92ba72f3d8dd7ULL * (static_cast<std::uint64_t>(rep) + 1);
  h ^= splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(scenario), static_cast<std::uint32_t>(rep)};
  return std::mt19937_64(seq);
}

std::vector<double> run_replication(const StudyConfig& config, std::size_t scenario_index,
                                    std::size_t rep, std::vector<std::string>* failures) {
  const Scenario& scenario = config.scenarios[scenario_index];
  auto rng = replication_rng(config.seed, scenario_index, rep);
  const auto xs = scenario.design();
  const auto eps = draw_errors(scenario.error, xs.size(), rng);
  std::vector<double> y(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    y[i] = test_function(scenario.f, xs[i]) + scenario.noise_scale * eps[i];
  }

  const PsplineProblem problem(xs, y, config.order, config.interior, config.penalty_order);
  const LossSpec huber = LossSpec::huber(config.huber_k);
  const LossSpec tukey = LossSpec::tukey(config.tukey_c);

  std::vector<double> out(config.estimators.size(), kNaN);
  auto note = [&](Estimator e, const std::exception& ex) {
    if (failures != nullptr) {
      failures->push_back(std::string(to_string(e)) + ": " + ex.what());
    }
  };

  // Chain: LS seeds Huber, the selected Huber fit seeds every Tukey fit.
  std::optional<LambdaSearch> ls_search;
  std::optional<LambdaSearch> huber_search;
  std::optional<double> sigma;
  std::optional<std::string> sigma_error;
  auto robust_sigma = [&]() -> double {
    if (!sigma && !sigma_error) {
      try {
        sigma = m_scale(y).sigma;
      } catch (const Error& ex) {
        sigma_error = ex.what();
      }
    }
    if (sigma_error) throw Error(Errc::degenerate_scale, *sigma_error);
    return *sigma;
  };
  auto need = [&](Estimator e) {
    return std::find(config.estimators.begin(), config.estimators.end(), e) !=
           config.estimators.end();
  };

  try {
    ls_search = select_lambda(problem, LossSpec::least_squares(), 1.0, config.irls, config.grid);
  } catch (const Error& ex) {
    if (need(Estimator::ls)) note(Estimator::ls, ex);
  }
  if (need(Estimator::huber) || need(Estimator::tukey)) {
    try {
      std::span<const double> start;
      if (ls_search) start = ls_search->best.beta;
      huber_search = select_lambda(problem, huber, robust_sigma(), config.irls, config.grid, start);
    } catch (const Error& ex) {
      if (need(Estimator::huber)) note(Estimator::huber, ex);
    }
  }

  for (std::size_t k = 0; k < config.estimators.size(); ++k) {
    const Estimator e = config.estimators[k];
    try {
      switch (e) {
        case Estimator::ls:
          if (ls_search) out[k] = mse(ls_search->best.fitted, scenario);
          break;
        case Estimator::huber:
          if (huber_search) out[k] = mse(huber_search->best.fitted, scenario);
          break;
        case Estimator::tukey: {
          std::span<const double> start;
          if (huber_search) start = huber_search->best.beta;
          const auto search =
              select_lambda(problem, tukey, robust_sigma(), config.irls, config.grid, start, huber);
          out[k] = mse(search.best.fitted, scenario);
          break;
        }
      }
    } catch (const Error& ex) {
      note(e, ex);
    }
  }
  return out;
}

namespace {

SimulationReport aggregate(const StudyConfig& config,
                           const std::vector<std::vector<double>>& results,
                           const std::vector<std::vector<std::string>>& reasons) {
  SimulationReport report;
  report.config = config;
  const std::size_t reps = static_cast<std::size_t>(config.reps);
  for (std::size_t s = 0; s < config.scenarios.size(); ++s) {
    for (std::size_t k = 0; k < config.estimators.size(); ++k) {
      std::vector<double> values(reps);
      ReportRow row;
      row.scenario = config.scenarios[s];
      row.estimator = config.estimators[k];
      const std::string prefix = std::string(to_string(row.estimator)) + ":";
      for (std::size_t r = 0; r < reps; ++r) {
        values[r] = results[s * reps + r][k];
        if (std::isnan(values[r])) {
          ++row.failures;
          for (const auto& why : reasons[s * reps + r]) {
            if (why.rfind(prefix, 0) == 0) row.failure_reasons.push_back(why);
          }
        }
      }
      const RowStats st = summarize(std::move(values));
      row.mean_mse = st.mean;
      row.median_mse = st.median;
      row.mc_se = st.se;
      row.reps = st.count;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace

SimulationReport run_study_serial(const StudyConfig& config) {
  config.validate();
  const std::size_t total = config.scenarios.size() * static_cast<std::size_t>(config.reps);
  std::vector<std::vector<double>> results(total);
  std::vector<std::vector<std::string>> reasons(total);
  for (std::size_t k = 0; k < total; ++k) {
    const std::size_t s = k / config.reps;
    const std::size_t r = k % config.reps;
    results[k] = run_replication(config, s, r, &reasons[k]);
  }
  return aggregate(config, results, reasons);
}

SimulationReport run_study(const StudyConfig& config, int threads) {
  config.validate();
  const std::size_t total = config.scenarios.size() * static_cast<std::size_t>(config.reps);
  std::vector<std::vector<double>> results(total);
  std::vector<std::vector<std::string>> reasons(total);
#ifdef _OPENMP
  const int team = threads > 0 ? threads : omp_get_max_threads();
#else
  (void)threads;
#endif
  const auto count = static_cast<std::ptrdiff_t>(total);
#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const std::size_t s = idx / config.reps;
    const std::size_t r = idx % config.reps;
    try {
      results[idx] = run_replication(config, s, r, &reasons[idx]);
    } catch (const std::exception& ex) {
      results[idx].assign(config.estimators.size(), kNaN);
      reasons[idx].push_back(std::string("all: ") + ex.what());
    }
  }
  return aggregate(config, results, reasons);
}

const ReportRow* SimulationReport::find(TestFunction f, ErrorDist d, Estimator e) const {
  for (const auto& row : rows) {
    if (row.scenario.f == f && row.scenario.error == d && row.estimator == e) return &row;
  }
  return nullptr;
}

void SimulationReport::write_csv(std::ostream& os) const {
  os << "# schema_version=1 reps=" << config.reps << " seed=" << config.seed
     << " p=" << config.order << " K=" << config.interior << " q=" << config.penalty_order
     << " huber_k=" << config.huber_k << " tukey_c=" << config.tukey_c
     << " grid_points=" << config.grid.points << " grid_lo=" << config.grid.lo
     << " grid_hi=" << config.grid.hi << " gcv_redescending="
     << (config.grid.redescending == GcvNumerator::loss ? "loss" : "weights") << '\n';
  os << "f_id,error_dist,estimator,mean_mse,median_mse,mc_se,failures\n";
  os << std::setprecision(10);
  for (const auto& row : rows) {
    os << to_string(row.scenario.f) << ',' << to_string(row.scenario.error) << ','
       << to_string(row.estimator) << ',' << row.mean_mse << ',' << row.median_mse << ','
       << row.mc_se << ',' << row.failures << '\n';
  }
}

void SimulationReport::write_table(std::ostream& os) const {
  std::vector<Estimator> ests = config.estimators;
  os << std::left << std::setw(4) << "f" << std::setw(12) << "error";
  for (Estimator e : ests) {
    os << std::right << std::setw(14) << (std::string(to_string(e)) + " mean") << std::setw(14)
       << (std::string(to_string(e)) + " median");
  }
  os << '\n';
  auto fmt = [](double v) {
    std::ostringstream s;
    if (std::isnan(v)) {
      s << "nan";
    } else if (std::abs(v) >= 100.0) {
      s << std::setprecision(5) << std::defaultfloat << v;
    } else {
      s << std::fixed << std::setprecision(3) << v;
    }
    return s.str();
  };
  for (const auto& scenario : config.scenarios) {
    os << std::left << std::setw(4) << to_string(scenario.f) << std::setw(12)
       << to_string(scenario.error);
    for (Estimator e : ests) {
      const ReportRow* row = find(scenario.f, scenario.error, e);
      os << std::right << std::setw(14) << fmt(row ? row->mean_mse : kNaN) << std::setw(14)
         << fmt(row ? row->median_mse : kNaN);
    }
    os << '\n';
  }
}

}  // namespace pspline::sim
