#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "oracles.hpp"
#include "pie/data.hpp"
#include "pie/error.hpp"
#include "pie/experiment.hpp"
#include "pie/oracle.hpp"

using namespace pie;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pie_harness_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json poisson_config(std::size_t n, std::size_t K) {
  return json{{"model", {{"family", "poisson-gamma"}, {"a", 1.0}, {"b", 1.0}}},
              {"data", {{"source", "simulate"}, {"theta0", 3.0}}},
              {"n", n},
              {"K", K},
              {"chain", {{"T_total", 4000}, {"burn_fraction", 0.5}, {"thin", 1}}},
              {"grid_size", 99},
              {"seeds", {11}}};
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a pie::Error");
  return ErrorKind::Numeric;
}

int run_cli(const std::string& args) {
  const char* env = std::getenv("PIE_CLI");
  const std::string cli = env && *env ? env : PIE_CLI_PATH;
  const int status = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("simulate_linear") {
  const auto beta = linear_truth(10);
  CHECK(beta[0] == 1.0);
  CHECK((beta.array() != 0.0).count() == 1);

  const auto data = simulate_linear(100000, 10, 4);
  const auto& X = *data.design();
  CHECK((X.array().abs() == 1.0).all());
  const Vector resid = data.responses() - X * beta;
  const double var = resid.squaredNorm() / static_cast<double>(resid.size());
  CHECK(std::abs(var - 1.0) < 0.05);
  CHECK(simulate_linear(100, 10, 4).responses() == simulate_linear(100, 10, 4).responses());
}

TEST_CASE("simulate_univariate") {
  const auto pois = simulate_univariate(Family::PoissonGamma, 3.0, 10000, 1);
  CHECK(std::abs(pois.responses().mean() - 3.0) < 3.0 * std::sqrt(3.0 / 1e4));
  CHECK((pois.responses().array() == pois.responses().array().floor()).all());
  const auto zeros = simulate_univariate(Family::BernoulliBeta, 0.0, 500, 2);
  CHECK((zeros.responses().array() == 0.0).all());
  const auto expo = simulate_univariate(Family::ExponentialGamma, 2.0, 10000, 3);
  CHECK(std::abs(expo.responses().mean() - 0.5) < 3.0 * 0.5 / 100.0);
  CHECK(kind_of([] { simulate_univariate(Family::NormalLinearNig, 1.0, 10, 1); }) == ErrorKind::Config);
}

TEST_CASE("CSV observations") {
  const auto y = parse_csv("y\n1\n2\n3\n");
  CHECK(y.n() == 3);
  CHECK(y.p() == 0);
  const auto xy = parse_csv("y,x1,x2\n1,0.5,-1\n2,1.5,1\n");
  CHECK(xy.n() == 2);
  CHECK(xy.p() == 2);
  CHECK((*xy.design())(1, 0) == 1.5);
  try {
    parse_csv("y,x1\n1,abc\n");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  const auto dir = scratch_dir("csv");
  write_observations_csv(xy, dir / "obs.csv");
  const auto back = load_csv(dir / "obs.csv");
  CHECK(back.responses() == xy.responses());
  CHECK(*back.design() == *xy.design());
  fs::remove_all(dir);
}

TEST_CASE("config validation") {
  auto j = poisson_config(100, 4);
  CHECK_NOTHROW(ExperimentConfig::from_json(j));
  const auto cfg = ExperimentConfig::from_json(j);
  CHECK(ExperimentConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());

  auto bad = j;
  bad["colour"] = 1;
  CHECK(kind_of([&] { ExperimentConfig::from_json(bad); }) == ErrorKind::Config);
  bad = j;
  bad["K"] = 101;
  CHECK(kind_of([&] { ExperimentConfig::from_json(bad); }) == ErrorKind::Config);
  bad = j;
  bad["chain"]["thin"] = 0;
  CHECK(kind_of([&] { ExperimentConfig::from_json(bad); }) == ErrorKind::Config);
  bad = j;
  bad["data"].erase("theta0");
  CHECK(kind_of([&] { ExperimentConfig::from_json(bad); }) == ErrorKind::Config);
  bad = j;
  bad["mode"] = "median";
  try {
    ExperimentConfig::from_json(bad);
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("mode") != std::string::npos);
  }
}

TEST_CASE("run_experiment produces shard and combined tables") {
  const auto cfg = ExperimentConfig::from_json(poisson_config(400, 4));
  const auto report = run_experiment(cfg);
  REQUIRE(report.cells.size() == 1);
  const auto& cell = report.cells[0];
  CHECK(cell.shards.size() == 4);
  REQUIRE(cell.functionals.size() == 1);
  const auto& f = cell.functionals[0];
  CHECK(f.shard_tables.size() == 4);
  REQUIRE(f.combined.has_value());
  CHECK(f.combined->grid().size() == 99);
  CHECK(f.metrics.w2.has_value());
  CHECK(f.combined_intervals.size() == 1);
  CHECK(f.combined_intervals[0].lower < f.combined_intervals[0].upper);
}

TEST_CASE("full-oracle mode reproduces the closed-form posterior") {
  auto j = poisson_config(200, 2);
  j["mode"] = "full-oracle";
  const auto cfg = ExperimentConfig::from_json(j);
  const auto report = run_experiment(cfg);
  const auto data = experiment_data(cfg, 11);
  const double shape = data.responses().sum() + 1.0;
  const double rate = 200.0 + 1.0;
  const auto& table = *report.cells[0].functionals[0].oracle;
  for (std::size_t k = 0; k < table.grid().size(); ++k) {
    CHECK(table.values()[k] == doctest::Approx(oracle::gamma_quantile(shape, rate, table.grid()[k])).epsilon(1e-9));
  }
}

TEST_CASE("worker count does not change the report files") {
  auto j = poisson_config(300, 6);
  j["seeds"] = {1, 2};
  const auto cfg = ExperimentConfig::from_json(j);
  const auto a = run_experiment(cfg, {1, std::nullopt});
  const auto b = run_experiment(cfg, {8, std::nullopt});
  CHECK(quantiles_csv(a) == quantiles_csv(b));
  CHECK(intervals_csv(a) == intervals_csv(b));
  CHECK(metrics_json(a).dump() == metrics_json(b).dump());
}

TEST_CASE("a shard recomputed alone matches the run") {
  auto j = poisson_config(300, 5);
  j["sampler"] = "metropolis";
  const auto cfg = ExperimentConfig::from_json(j);
  const auto dir = scratch_dir("draws");
  run_experiment(cfg, {3, dir});
  const auto data = experiment_data(cfg, 11);
  const auto plan = partition(data.n(), cfg.K, 11);
  for (std::size_t s = 0; s < cfg.K; ++s) {
    const auto saved = load_draws_csv(dir / ("draws_seed11_shard" + std::to_string(s) + ".csv"));
    CHECK(saved.values() == sample_shard(cfg, data, plan, s, 11).values());
  }
  fs::remove_all(dir);
}

TEST_CASE("a single shard gives the full-data interval") {
  auto j = poisson_config(500, 1);
  j["chain"]["T_total"] = 40000;
  const auto pie_report = run_experiment(ExperimentConfig::from_json(j));
  j["mode"] = "full-oracle";
  const auto full = run_experiment(ExperimentConfig::from_json(j));
  const auto& a = pie_report.cells[0].functionals[0].combined_intervals[0];
  const auto& b = full.cells[0].functionals[0].oracle_intervals[0];
  const double width = b.upper - b.lower;
  CHECK(std::abs(a.lower - b.lower) < 0.05 * width);
  CHECK(std::abs(a.upper - b.upper) < 0.05 * width);
}

TEST_CASE("parallel_for aggregates failures") {
  try {
    parallel_for(6, 3, [](std::size_t i) {
      if (i == 4) throw Error(ErrorKind::EmptyShard, "boom");
      if (i == 1) throw Error(ErrorKind::InvalidData, "bad");
    });
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidData);
    const std::string msg = e.what();
    CHECK(msg.find("shard 1") != std::string::npos);
    CHECK(msg.find("shard 4") != std::string::npos);
  }
}

TEST_CASE("emit_report writes three files and refuses to overwrite") {
  const auto cfg = ExperimentConfig::from_json(poisson_config(200, 3));
  const auto report = run_experiment(cfg);
  const auto dir = scratch_dir("emit");
  emit_report(report, dir);
  for (const auto& name : report_file_names()) CHECK(fs::exists(dir / name));
  CHECK(report_file_names().size() == 3);
  // Header plus G rows per shard and for the combined table.
  CHECK(count_lines(read_text_file(dir / "quantiles.csv")) == 1 + 99 * (3 + 1));
  const auto metrics = json::parse(read_text_file(dir / "metrics.json"));
  CHECK(metrics.contains("config"));
  const auto before = read_text_file(dir / "intervals.csv");
  CHECK(kind_of([&] { emit_report(report, dir); }) == ErrorKind::ExistingFile);
  CHECK(read_text_file(dir / "intervals.csv") == before);
  CHECK_NOTHROW(emit_report(report, dir, true));
  fs::remove_all(dir);
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch_dir("cli");
  {
    std::ofstream(dir / "good.json") << poisson_config(200, 2).dump();
    auto bad = poisson_config(200, 2);
    bad["K"] = 0;
    std::ofstream(dir / "bad.json") << bad.dump();
    std::ofstream(dir / "broken.csv") << "y\n1\nxyz\n";
    auto csv = poisson_config(0, 1);
    csv["n"] = 0;
    csv["data"] = {{"source", "csv"}, {"path", (dir / "broken.csv").string()}};
    std::ofstream(dir / "csv.json") << csv.dump();
  }
  const std::string out = (dir / "out").string();
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("run " + (dir / "good.json").string() + " --out " + out) == 0);
  CHECK(fs::exists(dir / "out" / "metrics.json"));
  CHECK(run_cli("run " + (dir / "good.json").string() + " --out " + out) == 3);
  CHECK(run_cli("run " + (dir / "bad.json").string() + " --out " + out + "2") == 2);
  CHECK(run_cli("run " + (dir / "csv.json").string() + " --out " + out + "3") == 3);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("report " + out) == 0);
  fs::remove_all(dir);
}
