#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "pspline/basis.hpp"
#include "pspline/loss.hpp"
#include "pspline/penalty.hpp"
#include "pspline/scale.hpp"
#include "pspline/sim.hpp"
#include "pspline/solver.hpp"

namespace pspline::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line, std::string_view column) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    fail(Errc::parse_error, "line " + std::to_string(line) + ": bad " + std::string(column) +
                                " value '" + s + "'");
  }
  return v;
}

struct LossFlags {
  std::string name = "huber";
  std::optional<double> alpha;
  std::optional<double> k;
  std::optional<double> c;
  std::optional<double> exponent;
  std::vector<double> hampel;
};

LossSpec make_loss(const LossFlags& f) {
  const auto kind = parse_loss_kind(f.name);
  if (!kind) fail(Errc::invalid_parameter, "unknown loss '" + f.name + "'");
  switch (*kind) {
    case LossKind::least_squares: return LossSpec::least_squares();
    case LossKind::huber: return LossSpec::huber(f.k.value_or(kDefaultHuberK));
    case LossKind::tukey: return LossSpec::tukey(f.c.value_or(kDefaultTukeyC));
    case LossKind::hampel:
      if (f.hampel.empty()) return LossSpec::hampel();
      if (f.hampel.size() != 3) fail(Errc::invalid_parameter, "--hampel takes a,b,c");
      return LossSpec::hampel(f.hampel[0], f.hampel[1], f.hampel[2]);
    case LossKind::check:
      if (!f.alpha) fail(Errc::invalid_parameter, "check loss needs --alpha");
      return LossSpec::check(*f.alpha);
    case LossKind::expectile:
      if (!f.alpha) fail(Errc::invalid_parameter, "expectile loss needs --alpha");
      return LossSpec::expectile(*f.alpha);
    case LossKind::lq:
      if (!f.exponent) fail(Errc::invalid_parameter, "lq loss needs --exponent");
      return LossSpec::lq(*f.exponent);
    case LossKind::absolute: return LossSpec::absolute();
    case LossKind::log_cosh: return LossSpec::log_cosh();
  }
  fail(Errc::invalid_parameter, "unknown loss");
}

// Losses standardized by a scale estimate when --scale is left at auto.
bool wants_scale(LossKind kind) {
  return kind == LossKind::huber || kind == LossKind::tukey || kind == LossKind::hampel ||
         kind == LossKind::log_cosh;
}

struct ScaleChoice {
  std::string requested;  // auto, none, mscale, fixed:<v>
  std::string resolved;   // none, mscale, fixed
  double sigma = 1.0;
  std::string warning;
};

ScaleChoice choose_scale(const std::string& flag, const LossSpec& loss,
                         std::span<const double> y) {
  ScaleChoice out;
  out.requested = flag;
  std::string mode = flag;
  if (mode == "auto") mode = wants_scale(loss.kind()) ? "mscale" : "none";
  if (mode == "none") {
    out.resolved = "none";
  } else if (mode == "mscale") {
    try {
      out.sigma = m_scale(y).sigma;
      out.resolved = "mscale";
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_scale) throw;
      out.resolved = "none";
      out.sigma = 1.0;
      out.warning = std::string(e.what()) + "; falling back to scale none";
    }
  } else if (mode.rfind("fixed:", 0) == 0) {
    const std::string v = mode.substr(6);
    double s = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
      fail(Errc::parse_error, "bad --scale value '" + flag + "'");
    }
    if (!(s > 0.0) || !std::isfinite(s)) fail(Errc::invalid_parameter, "fixed scale must be > 0");
    out.resolved = "fixed";
    out.sigma = s;
  } else {
    fail(Errc::parse_error, "--scale must be none, mscale, fixed:<v> or auto");
  }
  return out;
}

std::optional<double> parse_lambda(const std::string& flag) {
  if (flag == "auto") return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(flag.data(), flag.data() + flag.size(), v);
  if (flag.empty() || ec != std::errc() || ptr != flag.data() + flag.size()) {
    fail(Errc::parse_error, "--lambda must be a number or auto");
  }
  if (!(v > 0.0) || !std::isfinite(v)) fail(Errc::invalid_parameter, "lambda must be > 0");
  return v;
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("PSPLINE_THREADS")) {
    int v = 0;
    const std::string s = env;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size() && v > 0) return v;
  }
  return 0;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::invalid_parameter, "cannot create output directory " + dir);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) fail(Errc::invalid_parameter, "cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}

KnotLayout parse_layout(const std::string& name) {
  if (name == "uniform") return KnotLayout::uniform;
  if (name == "clamped") return KnotLayout::clamped;
  fail(Errc::invalid_parameter, "--layout must be uniform or clamped");
}

// fit ---------------------------------------------------------------------

struct FitFlags {
  std::string input;
  LossFlags loss;
  int p = 4;
  int K = 40;
  int q = 2;
  std::string lambda = "auto";
  std::string scale = "auto";
  std::string layout = "uniform";
  std::uint64_t seed = 0;
  int max_iter = 100;
  double tol = 1e-8;
  std::string out = ".";
};

int cmd_fit(const FitFlags& flags, std::ostream& out, std::ostream& err) {
  const Dataset data = read_dataset_file(flags.input);
  const LossSpec loss = make_loss(flags.loss);
  const std::optional<double> lambda = parse_lambda(flags.lambda);
  if (static_cast<int>(data.size()) < flags.p + flags.q) {
    fail(Errc::insufficient_data, "need at least p + q rows");
  }
  const ScaleChoice scale = choose_scale(flags.scale, loss, data.y);
  if (!scale.warning.empty()) err << "warning: " << scale.warning << '\n';

  FitConfig config;
  config.loss = loss;
  config.order = flags.p;
  config.interior = flags.K;
  config.penalty_order = flags.q;
  config.layout = parse_layout(flags.layout);
  config.lambda = lambda;
  config.scale = scale.resolved == "none" ? ScaleMode::none() : ScaleMode::fixed(scale.sigma);
  config.irls.max_iter = flags.max_iter;
  config.irls.tol = flags.tol;
  config.validate();

  const std::vector<double> ux = data.unit_x();
  const FitResult result = fit(ux, data.y, config);

  json cfg;
  cfg["input"] = flags.input;
  cfg["loss"] = {{"name", std::string(to_string(loss.kind()))},
                 {"params", {loss.param(0), loss.param(1), loss.param(2)}}};
  cfg["p"] = config.order;
  cfg["K"] = config.interior;
  cfg["q"] = config.penalty_order;
  cfg["knots"] = flags.layout;
  cfg["lambda"] = lambda ? json(*lambda) : json("auto");
  cfg["scale"] = {{"requested", scale.requested}, {"resolved", scale.resolved}};
  cfg["irls"] = {{"max_iter", config.irls.max_iter}, {"tol", config.irls.tol}};
  cfg["grid"] = {{"points", config.grid.points},
                 {"lo", config.grid.lo},
                 {"hi", config.grid.hi},
                 {"refine_tol", config.grid.refine_tol},
                 {"redescending", config.grid.redescending == GcvNumerator::loss ? "loss"
                                                                                  : "weights"}};
  cfg["seed"] = flags.seed;
  cfg["x_rescale"] = {{"min", data.x_min}, {"span", data.x_span}};

  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["config"] = cfg;
  meta["config_hash"] = hex64(fnv1a(cfg.dump()));
  meta["n"] = data.size();
  meta["lambda"] = result.lambda;
  meta["lambda_eff"] = result.lambda_eff;
  meta["sigma"] = result.sigma;
  meta["edf"] = std::isfinite(result.edf) ? json(result.edf) : json(nullptr);
  meta["gcv"] = std::isfinite(result.gcv) ? json(result.gcv) : json(nullptr);
  meta["iterations"] = result.iterations;
  meta["converged"] = result.converged;
  meta["estimating_eq_norm"] = result.estimating_eq_norm;
  meta["beta"] = result.beta;

  ensure_dir(flags.out);
  const fs::path dir(flags.out);
  {
    auto os = open_out(dir / "fitted.csv");
    os << "# schema_version=" << kSchemaVersion << '\n' << "x,y,fitted,residual,weight\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      os << data.x[i] << ',' << data.y[i] << ',' << result.fitted[i] << ','
         << result.residuals[i] << ',' << result.weights[i] << '\n';
    }
  }
  std::vector<double> std_res(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) std_res[i] = result.residuals[i] / result.sigma;
  {
    auto os = open_out(dir / "residuals.csv");
    os << "# schema_version=" << kSchemaVersion << '\n' << "x,residual,standardized\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      os << data.x[i] << ',' << result.residuals[i] << ',' << std_res[i] << '\n';
    }
  }
  {
    std::sort(std_res.begin(), std_res.end());
    const boost::math::normal_distribution<double> normal;
    const double n = static_cast<double>(std_res.size());
    auto os = open_out(dir / "qq.csv");
    os << "# schema_version=" << kSchemaVersion << '\n' << "theoretical,sample\n";
    for (std::size_t i = 0; i < std_res.size(); ++i) {
      const double prob = (static_cast<double>(i) + 0.5) / n;
      os << boost::math::quantile(normal, prob) << ',' << std_res[i] << '\n';
    }
  }
  {
    auto os = open_out(dir / "meta.json");
    os << meta.dump(2) << '\n';
  }
  out << "lambda " << result.lambda << "  edf " << result.edf << "  sigma " << result.sigma
      << "  iterations " << result.iterations << (result.converged ? "" : " (not converged)")
      << '\n';
  return kOk;
}

// scale -------------------------------------------------------------------

int cmd_scale(const std::string& input, std::ostream& out) {
  const Dataset data = read_dataset_file(input, false);
  const ScaleEstimate est = m_scale(data.y);
  out << std::setprecision(12) << est.sigma << '\n';
  return kOk;
}

// simulate ----------------------------------------------------------------

struct SimFlags {
  std::string config;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::vector<std::string> functions;
  std::vector<std::string> errors;
  std::vector<std::string> estimators;
  std::string out = ".";
};

template <typename T, typename Parse>
std::vector<T> parse_list(const std::vector<std::string>& names, Parse parse, std::string_view what) {
  std::vector<T> out;
  for (const auto& n : names) {
    const auto v = parse(n);
    if (!v) fail(Errc::invalid_parameter, "unknown " + std::string(what) + " '" + n + "'");
    out.push_back(*v);
  }
  return out;
}

sim::StudyConfig study_config(const SimFlags& flags) {
  sim::StudyConfig cfg;
  std::vector<std::string> functions{"f1", "f2", "f3"};
  std::vector<std::string> errors{"gaussian", "t3", "skew-t3", "mixture", "slash"};
  std::vector<std::string> estimators{"ls", "huber", "tukey"};
  int n = 60;
  double noise = 0.5;
  if (!flags.config.empty()) {
    std::ifstream in(flags.config);
    if (!in) fail(Errc::parse_error, "cannot read " + flags.config);
    json j;
    try {
      j = json::parse(in);
      if (j.contains("reps")) cfg.reps = j.at("reps").get<int>();
      if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("functions")) functions = j.at("functions").get<std::vector<std::string>>();
      if (j.contains("errors")) errors = j.at("errors").get<std::vector<std::string>>();
      if (j.contains("estimators")) estimators = j.at("estimators").get<std::vector<std::string>>();
      if (j.contains("n")) n = j.at("n").get<int>();
      if (j.contains("noise_scale")) noise = j.at("noise_scale").get<double>();
      if (j.contains("p")) cfg.order = j.at("p").get<int>();
      if (j.contains("K")) cfg.interior = j.at("K").get<int>();
      if (j.contains("q")) cfg.penalty_order = j.at("q").get<int>();
      if (j.contains("huber_k")) cfg.huber_k = j.at("huber_k").get<double>();
      if (j.contains("tukey_c")) cfg.tukey_c = j.at("tukey_c").get<double>();
      if (j.contains("grid")) {
        const auto& g = j.at("grid");
        if (g.contains("points")) cfg.grid.points = g.at("points").get<int>();
        if (g.contains("lo")) cfg.grid.lo = g.at("lo").get<double>();
        if (g.contains("hi")) cfg.grid.hi = g.at("hi").get<double>();
      }
    } catch (const json::exception& e) {
      fail(Errc::parse_error, flags.config + ": " + e.what());
    }
  }
  if (flags.reps) cfg.reps = *flags.reps;
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.functions.empty()) functions = flags.functions;
  if (!flags.errors.empty()) errors = flags.errors;
  if (!flags.estimators.empty()) estimators = flags.estimators;

  const auto fs_ = parse_list<sim::TestFunction>(functions, sim::parse_function, "function");
  const auto es = parse_list<sim::ErrorDist>(errors, sim::parse_error_dist, "error law");
  cfg.estimators = parse_list<sim::Estimator>(estimators, sim::parse_estimator, "estimator");
  cfg.scenarios.clear();
  for (auto f : fs_) {
    for (auto e : es) cfg.scenarios.push_back({f, e, n, noise});
  }
  cfg.validate();
  return cfg;
}

int cmd_simulate(const SimFlags& flags, std::ostream& out) {
  const sim::StudyConfig cfg = study_config(flags);
  const sim::SimulationReport report = sim::run_study(cfg, resolve_threads(flags.threads));
  ensure_dir(flags.out);
  const fs::path dir(flags.out);
  {
    auto os = open_out(dir / "report.csv");
    report.write_csv(os);
  }
  {
    std::ofstream os(dir / "report.txt");
    if (!os) fail(Errc::invalid_parameter, "cannot write report.txt");
    os << "# schema_version=" << kSchemaVersion << " reps=" << cfg.reps << " seed=" << cfg.seed
       << '\n';
    report.write_table(os);
  }
  report.write_table(out);
  int failures = 0;
  for (const auto& row : report.rows) failures += row.failures;
  if (failures > 0) out << failures << " failed fits recorded in report.csv\n";
  return kOk;
}

// verify ------------------------------------------------------------------

struct VerifyFlags {
  int p = 4;
  int q = 2;
  std::vector<int> K{10, 20, 40};
  int trials = 200;
  std::uint64_t seed = 1;
  std::string layout = "uniform";
};

int cmd_verify(const VerifyFlags& flags, std::ostream& out) {
  if (flags.q < 1 || flags.q >= flags.p) {
    fail(Errc::invalid_parameter, "penalty order q must satisfy 1 <= q < p");
  }
  if (flags.K.empty()) fail(Errc::invalid_parameter, "need at least one K");
  if (flags.trials < 1) fail(Errc::invalid_parameter, "trials must be >= 1");
  const KnotLayout layout = parse_layout(flags.layout);

  std::mt19937_64 rng(flags.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  out << std::setprecision(6);
  double worst = 0.0;
  for (int K : flags.K) {
    const BSplineBasis basis = make_basis(flags.p, K, layout);
    std::vector<double> vals(flags.p);
    for (int t = 0; t < 100000; ++t) {
      const double x = unif(rng);
      basis.eval_local(x, vals);
      worst = std::max(worst, std::abs(std::accumulate(vals.begin(), vals.end(), 0.0) - 1.0));
    }
  }
  out << "partition of unity: max error " << worst << '\n';

  double common_lo = 0.0;
  double common_hi = std::numeric_limits<double>::infinity();
  for (int K : flags.K) {
    const RatioBracket b = penalty_ratio_bracket(flags.p, flags.q, K, flags.trials, flags.seed, layout);
    out << "K=" << K << " ratio bracket [" << b.lo << ", " << b.hi << "] from " << b.used
        << " vectors";
    if (b.skipped > 0) out << " (" << b.skipped << " skipped)";
    out << '\n';
    common_lo = std::max(common_lo, b.lo);
    common_hi = std::min(common_hi, b.hi);
  }
  if (common_lo <= common_hi) {
    out << "brackets overlap on [" << common_lo << ", " << common_hi << "]\n";
  } else {
    out << "brackets do not overlap\n";
  }

  // Canned fit: f1 plus Gaussian noise, Huber loss.
  sim::Scenario scenario;
  const auto xs = scenario.design();
  std::mt19937_64 data_rng(flags.seed);
  const auto eps = sim::draw_errors(sim::ErrorDist::gaussian, xs.size(), data_rng);
  std::vector<double> y(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    y[i] = sim::test_function(scenario.f, xs[i]) + scenario.noise_scale * eps[i];
  }
  FitConfig config;
  config.order = flags.p;
  config.penalty_order = flags.q;
  const FitResult result = fit(xs, y, config);
  out << "canned huber fit: lambda " << result.lambda << ", iterations " << result.iterations
      << ", fixed-point residual " << result.estimating_eq_norm << '\n';
  return kOk;
}

}  // namespace

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::parse_error:
      return kParseFailure;
    case Errc::invalid_parameter:
    case Errc::domain_error:
    case Errc::dimension_mismatch:
    case Errc::insufficient_data:
    case Errc::unknown_function:
      return kValidationFailure;
    case Errc::degenerate_scale:
    case Errc::singular_system:
    case Errc::saturated_fit:
      return kNumericalFailure;
  }
  return kNumericalFailure;
}

double Dataset::to_unit(double v) const { return (v - x_min) / x_span; }

double Dataset::from_unit(double u) const { return x_min + u * x_span; }

std::vector<double> Dataset::unit_x() const {
  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = std::clamp(to_unit(x[i]), 0.0, 1.0);
  return u;
}

Dataset read_dataset(std::istream& in, bool require_x) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty() || line[0] == '#') continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) fail(Errc::parse_error, "missing header line");
  std::optional<std::size_t> xcol;
  std::optional<std::size_t> ycol;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "x") xcol = j;
    if (header[j] == "y") ycol = j;
  }
  if (!ycol && header.size() == 1 && !require_x) ycol = 0;
  if (!ycol) fail(Errc::parse_error, "line " + std::to_string(lineno) + ": no 'y' column");
  if (require_x && !xcol) {
    fail(Errc::parse_error, "line " + std::to_string(lineno) + ": no 'x' column");
  }

  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      fail(Errc::parse_error, "line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    const double yv = parse_number(fields[*ycol], lineno, "y");
    const double xv = xcol ? parse_number(fields[*xcol], lineno, "x")
                           : static_cast<double>(rows.size());
    rows.emplace_back(xv, yv);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  Dataset d;
  d.x.reserve(rows.size());
  d.y.reserve(rows.size());
  for (const auto& [xv, yv] : rows) {
    d.x.push_back(xv);
    d.y.push_back(yv);
  }
  if (!d.x.empty()) {
    d.x_min = d.x.front();
    d.x_span = d.x.back() - d.x.front();
  }
  if (require_x && d.x.size() > 1 && !(d.x_span > 0.0)) {
    fail(Errc::invalid_parameter, "all x values are equal");
  }
  if (!(d.x_span > 0.0)) d.x_span = 1.0;
  return d;
}

Dataset read_dataset_file(const std::string& path, bool require_x) {
  std::ifstream in(path);
  if (!in) fail(Errc::parse_error, "cannot open " + path);
  return read_dataset(in, require_x);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust P-spline regression"};
  app.require_subcommand(1);

  auto add_loss = [](CLI::App* sub, LossFlags& f) {
    sub->add_option("--loss", f.name, "ls|huber|tukey|hampel|check|expectile|lq|abs|logcosh");
    sub->add_option("--alpha", f.alpha, "check/expectile level in (0, 1)");
    sub->add_option("--k", f.k, "Huber constant");
    sub->add_option("--c", f.c, "Tukey constant");
    sub->add_option("--exponent", f.exponent, "lq exponent in (1, 2)");
    sub->add_option("--hampel", f.hampel, "Hampel a,b,c")->delimiter(',');
  };

  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "fit a P-spline to an x,y CSV");
  fit_cmd->add_option("input", fit_flags.input, "CSV with header x,y")->required();
  add_loss(fit_cmd, fit_flags.loss);
  fit_cmd->add_option("--p", fit_flags.p, "spline order");
  fit_cmd->add_option("--K", fit_flags.K, "interior knots");
  fit_cmd->add_option("--q", fit_flags.q, "penalty order");
  fit_cmd->add_option("--lambda", fit_flags.lambda, "<float> or auto");
  fit_cmd->add_option("--scale", fit_flags.scale, "none|mscale|fixed:<v>|auto");
  fit_cmd->add_option("--layout", fit_flags.layout, "uniform|clamped");
  fit_cmd->add_option("--seed", fit_flags.seed, "recorded in meta.json");
  fit_cmd->add_option("--max-iter", fit_flags.max_iter);
  fit_cmd->add_option("--tol", fit_flags.tol);
  fit_cmd->add_option("--out", fit_flags.out, "output directory");

  std::string scale_input;
  auto* scale_cmd = app.add_subcommand("scale", "print the M-scale of the y column");
  scale_cmd->add_option("input", scale_input, "CSV with a y column")->required();

  SimFlags sim_flags;
  auto* sim_cmd = app.add_subcommand("simulate", "run the Monte Carlo study");
  sim_cmd->add_option("config", sim_flags.config, "optional config.json");
  sim_cmd->add_option("--reps", sim_flags.reps);
  sim_cmd->add_option("--seed", sim_flags.seed);
  sim_cmd->add_option("--threads", sim_flags.threads, "defaults to PSPLINE_THREADS");
  sim_cmd->add_option("--functions", sim_flags.functions)->delimiter(',');
  sim_cmd->add_option("--errors", sim_flags.errors)->delimiter(',');
  sim_cmd->add_option("--estimators", sim_flags.estimators)->delimiter(',');
  sim_cmd->add_option("--out", sim_flags.out, "output directory");

  VerifyFlags verify_flags;
  auto* verify_cmd = app.add_subcommand("verify", "basis and penalty property checks");
  verify_cmd->add_option("--p", verify_flags.p);
  verify_cmd->add_option("--q", verify_flags.q);
  verify_cmd->add_option("--K", verify_flags.K)->delimiter(',');
  verify_cmd->add_option("--trials", verify_flags.trials);
  verify_cmd->add_option("--seed", verify_flags.seed);
  verify_cmd->add_option("--layout", verify_flags.layout, "uniform|clamped");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParseFailure;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_flags, out, err);
    if (*scale_cmd) return cmd_scale(scale_input, out);
    if (*sim_cmd) return cmd_simulate(sim_flags, out);
    if (*verify_cmd) return cmd_verify(verify_flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kParseFailure;
}

}  // namespace pspline::cli
