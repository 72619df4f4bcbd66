#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "cli.hpp"
#include "json.hpp"

using namespace pspline;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pspline");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("pspline_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  std::string str() const { return path_.string(); }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_xy(const fs::path& p, const std::vector<double>& x, const std::vector<double>& y) {
  std::ofstream os(p);
  os << std::setprecision(17) << "x,y\n";
  for (std::size_t i = 0; i < x.size(); ++i) os << x[i] << ',' << y[i] << '\n';
}

std::vector<std::vector<double>> read_csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

Errc parse_code(const std::string& text) {
  std::istringstream in(text);
  try {
    cli::read_dataset(in);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::unknown_function;
}

std::string parse_message(const std::string& text) {
  std::istringstream in(text);
  try {
    cli::read_dataset(in);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Dataset, ParsesHeaderCommentsAndLineEndings) {
  std::istringstream in("\xEF\xBB\xBF# comment\r\ny,x\r\n2.5,0.3\r\n\r\n1.5,0.1\r\n# tail\n");
  const cli::Dataset d = cli::read_dataset(in);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.x, (std::vector<double>{0.1, 0.3}));
  EXPECT_EQ(d.y, (std::vector<double>{1.5, 2.5}));
  EXPECT_NEAR(d.to_unit(0.3), 1.0, 1e-15);
  EXPECT_NEAR(d.from_unit(0.5), 0.2, 1e-15);
}

TEST(Dataset, StableSortKeepsTiedOrder) {
  std::istringstream in("x,y\n1,10\n0,5\n1,11\n1,12\n");
  const cli::Dataset d = cli::read_dataset(in);
  EXPECT_EQ(d.y, (std::vector<double>{5, 10, 11, 12}));
  EXPECT_EQ(d.unit_x(), (std::vector<double>{0, 1, 1, 1}));
}

TEST(Dataset, ReportsLineNumbers) {
  EXPECT_EQ(parse_code(""), Errc::parse_error);
  EXPECT_EQ(parse_code("a,b\n1,2\n"), Errc::parse_error);
  EXPECT_EQ(parse_code("x,y\n1,2\n3\n"), Errc::parse_error);
  EXPECT_NE(parse_message("x,y\n1,2\n3\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse_message("x,y\n1,2\n# c\n3,abc\n").find("line 4"), std::string::npos);
  EXPECT_EQ(parse_code("x,y\n1,nan\n"), Errc::parse_error);
  EXPECT_EQ(parse_code("x,y\n1,2\n1,3\n"), Errc::invalid_parameter);
  std::istringstream single("y\n1\n2\n");
  const cli::Dataset d = cli::read_dataset(single, false);
  EXPECT_EQ(d.x, (std::vector<double>{0, 1}));
}

TEST(Dataset, FileRoundTrip) {
  TempDir dir;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<double> x(50);
  std::vector<double> y(50);
  for (int i = 0; i < 50; ++i) {
    x[i] = i * 0.37 - 3.0;
    y[i] = normal(rng) * 1e3;
  }
  write_xy(dir / "d.csv", x, y);
  const cli::Dataset d = cli::read_dataset_file((dir / "d.csv").string());
  for (int i = 0; i < 50; ++i) {
    EXPECT_NEAR(d.x[i], x[i], 1e-12);
    EXPECT_NEAR(d.y[i], y[i], 1e-12 * std::abs(y[i]));
  }
  EXPECT_THROW(cli::read_dataset_file((dir / "missing.csv").string()), Error);
}

TEST(Cli, Fnv1aVectors) {
  EXPECT_EQ(cli::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(cli::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(cli::fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli::exit_code_for(Errc::parse_error), 2);
  EXPECT_EQ(cli::exit_code_for(Errc::invalid_parameter), 3);
  EXPECT_EQ(cli::exit_code_for(Errc::insufficient_data), 3);
  EXPECT_EQ(cli::exit_code_for(Errc::domain_error), 3);
  EXPECT_EQ(cli::exit_code_for(Errc::degenerate_scale), 4);
  EXPECT_EQ(cli::exit_code_for(Errc::singular_system), 4);
  EXPECT_EQ(cli::exit_code_for(Errc::saturated_fit), 4);
}

TEST(Cli, FitWritesArtifacts) {
  TempDir dir;
  std::vector<double> x(80);
  std::vector<double> y(80);
  for (int i = 0; i < 80; ++i) {
    x[i] = 1990.0 + 0.25 * i;
    y[i] = std::sin(i / 8.0) + 0.05 * std::cos(7.0 * i);
  }
  write_xy(dir / "in.csv", x, y);
  const auto r = run_cli({"fit", (dir / "in.csv").string(), "--loss", "huber", "--K", "15",
                          "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* name : {"fitted.csv", "residuals.csv", "qq.csv", "meta.json"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / name)) << name;
  }
  const std::string fitted = slurp(dir / "out" / "fitted.csv");
  EXPECT_EQ(fitted.rfind("# schema_version=1\nx,y,fitted,residual,weight\n", 0), 0u);
  const auto rows = read_csv_rows(dir / "out" / "fitted.csv");
  ASSERT_EQ(rows.size(), 80u);
  EXPECT_NEAR(rows[3][0], x[3], 1e-9);
  EXPECT_NEAR(rows[3][3], rows[3][1] - rows[3][2], 1e-9);

  const auto meta = nlohmann::json::parse(slurp(dir / "out" / "meta.json"));
  for (const char* key : {"schema_version", "config", "config_hash", "n", "lambda", "lambda_eff",
                          "sigma", "edf", "gcv", "iterations", "converged",
                          "estimating_eq_norm", "beta"}) {
    EXPECT_TRUE(meta.contains(key)) << key;
  }
  EXPECT_EQ(meta["schema_version"], 1);
  EXPECT_EQ(meta["n"], 80);
  EXPECT_EQ(meta["beta"].size(), 19u);
  EXPECT_TRUE(meta["converged"].get<bool>());
  EXPECT_LT(meta["estimating_eq_norm"].get<double>(), 1e-6);

  const auto qq = read_csv_rows(dir / "out" / "qq.csv");
  ASSERT_EQ(qq.size(), 80u);
  for (std::size_t i = 1; i < qq.size(); ++i) {
    EXPECT_GT(qq[i][0], qq[i - 1][0]);
    EXPECT_GE(qq[i][1], qq[i - 1][1]);
  }

  // Same configuration, same hash.
  const auto again = run_cli({"fit", (dir / "in.csv").string(), "--loss", "huber", "--K", "15",
                              "--out", (dir / "out2").string()});
  ASSERT_EQ(again.code, 0);
  const auto meta2 = nlohmann::json::parse(slurp(dir / "out2" / "meta.json"));
  EXPECT_EQ(meta["config_hash"], meta2["config_hash"]);
  EXPECT_EQ(meta["beta"], meta2["beta"]);
}

TEST(Cli, TukeyRejectsAClusterThatHuberFollows) {
  TempDir dir;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  std::vector<double> x(200);
  std::vector<double> y(200);
  for (int i = 0; i < 200; ++i) {
    x[i] = i / 199.0;
    y[i] = 2.0 * x[i] + 0.1 * normal(rng);
    if (i >= 90 && i < 100) y[i] += 3.0;
  }
  write_xy(dir / "in.csv", x, y);
  for (const char* loss : {"tukey", "huber"}) {
    const auto r = run_cli({"fit", (dir / "in.csv").string(), "--loss", loss, "--K", "20",
                            "--out", (dir / loss).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const auto tukey = read_csv_rows(dir / "tukey" / "fitted.csv");
  const auto huber = read_csv_rows(dir / "huber" / "fitted.csv");
  double tukey_w = 0.0;
  double tukey_dev = 0.0;
  double huber_dev = 0.0;
  for (int i = 90; i < 100; ++i) {
    tukey_w += tukey[i][4] / 10.0;
    tukey_dev = std::max(tukey_dev, std::abs(tukey[i][2] - 2.0 * x[i]));
    huber_dev = std::max(huber_dev, std::abs(huber[i][2] - 2.0 * x[i]));
  }
  EXPECT_LT(tukey_w, 1e-6);
  EXPECT_LT(tukey_dev, 0.2);
  EXPECT_GT(huber_dev, tukey_dev);
}

TEST(Cli, AffineDataIsReproduced) {
  TempDir dir;
  std::vector<double> x(40);
  std::vector<double> y(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = 10.0 + i;
    y[i] = 3.0 - 0.5 * x[i];
  }
  write_xy(dir / "in.csv", x, y);
  const auto r = run_cli({"fit", (dir / "in.csv").string(), "--loss", "ls", "--lambda", "1e8",
                          "--out", dir.str()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& row : read_csv_rows(dir / "fitted.csv")) EXPECT_NEAR(row[2], row[1], 1e-9);
}

TEST(Cli, ConstantResponseFallsBackToNoScale) {
  TempDir dir;
  write_xy(dir / "in.csv", {0, 1, 2, 3, 4, 5, 6, 7}, std::vector<double>(8, 4.0));
  const auto r = run_cli({"fit", (dir / "in.csv").string(), "--K", "3", "--out", dir.str()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  for (const auto& row : read_csv_rows(dir / "fitted.csv")) EXPECT_NEAR(row[2], 4.0, 1e-10);
}

TEST(Cli, FitFailures) {
  TempDir dir;
  write_xy(dir / "one.csv", {1.0}, {2.0});
  EXPECT_EQ(run_cli({"fit", (dir / "one.csv").string(), "--out", dir.str()}).code, 3);
  write_xy(dir / "in.csv", {0, 1, 2, 3, 4, 5}, {1, 3, 2, 5, 4, 6});
  EXPECT_EQ(run_cli({"fit", (dir / "in.csv").string(), "--lambda", "abc"}).code, 2);
  EXPECT_EQ(run_cli({"fit", (dir / "in.csv").string(), "--bogus"}).code, 2);
  EXPECT_EQ(run_cli({"fit", (dir / "in.csv").string(), "--loss", "nope"}).code, 3);
  EXPECT_EQ(run_cli({"fit", (dir / "in.csv").string(), "--loss", "check"}).code, 3);
  EXPECT_EQ(run_cli({"fit", (dir / "in.csv").string(), "--q", "4"}).code, 3);
  EXPECT_EQ(run_cli({"fit", (dir / "nothing.csv").string()}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
}

TEST(Cli, ScaleCommand) {
  TempDir dir;
  {
    std::ofstream os(dir / "y.csv");
    os << "y\n";
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 20000; ++i) os << normal(rng) << '\n';
  }
  const auto r = run_cli({"scale", (dir / "y.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(std::stod(r.out), 1.0, 0.03);
  {
    std::ofstream os(dir / "flat.csv");
    os << "x,y\n";
    for (int i = 0; i < 10; ++i) os << i << ",2\n";
  }
  EXPECT_EQ(run_cli({"scale", (dir / "flat.csv").string()}).code, 4);
}

TEST(Cli, SimulateIsDeterministicAcrossThreads) {
  TempDir dir;
  const std::vector<std::string> common{"--reps",   "3",     "--seed",      "9",
                                        "--functions", "f1,f3", "--errors",   "gaussian,slash"};
  std::vector<std::string> a{"simulate", "--threads", "1", "--out", (dir / "a").string()};
  std::vector<std::string> b{"simulate", "--threads", "3", "--out", (dir / "b").string()};
  a.insert(a.end(), common.begin(), common.end());
  b.insert(b.end(), common.begin(), common.end());
  const auto ra = run_cli(a);
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(run_cli(b).code, 0);
  const std::string csv = slurp(dir / "a" / "report.csv");
  EXPECT_EQ(csv, slurp(dir / "b" / "report.csv"));
  EXPECT_TRUE(fs::exists(dir / "a" / "report.txt"));
  EXPECT_NE(csv.find("f3,slash,tukey,"), std::string::npos);

  EXPECT_EQ(run_cli({"simulate", "--reps", "0"}).code, 3);
  EXPECT_EQ(run_cli({"simulate", "--functions", "f7", "--reps", "1"}).code, 3);
  {
    std::ofstream os(dir / "bad.json");
    os << "{ not json";
  }
  EXPECT_EQ(run_cli({"simulate", (dir / "bad.json").string()}).code, 2);
}

TEST(Cli, Verify) {
  const auto r = run_cli({"verify", "--K", "10,20", "--trials", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("brackets overlap"), std::string::npos);
  EXPECT_NE(r.out.find("fixed-point residual"), std::string::npos);
  EXPECT_EQ(run_cli({"verify", "--p", "2", "--q", "2"}).code, 3);
  EXPECT_EQ(run_cli({"verify", "--layout", "wavy"}).code, 3);
}

TEST(Cli, ExecutableRuns) {
  TempDir dir;
  const std::string cmd = std::string(PSPLINE_CLI_PATH) + " verify --K 10 --trials 20 > " +
                          (dir / "o.txt").string() + " 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(dir / "o.txt").find("partition"), std::string::npos);
  const std::string bad = std::string(PSPLINE_CLI_PATH) + " fit > /dev/null 2>&1";
  const int status = std::system(bad.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 2);
}
