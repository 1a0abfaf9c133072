// Command-line front end: simulate | run | combine | metrics | report.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pie/combiner.hpp"
#include "pie/data.hpp"
#include "pie/error.hpp"
#include "pie/experiment.hpp"
#include "pie/metrics.hpp"

namespace {

using nlohmann::json;

std::string default_output_dir() {
  const char* env = std::getenv("PIE_OUTPUT_DIR");
  return env && *env ? env : "pie-out";
}

struct Overrides {
  std::optional<std::size_t> n;
  std::optional<std::size_t> K;
  std::optional<std::string> mode;
  std::optional<std::string> sampler;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> grid_size;

  void attach(CLI::App* app) {
    app->add_option("--n", n, "override data size");
    app->add_option("--K", K, "override shard count");
    app->add_option("--mode", mode, "pie | consensus | multidim | full-oracle");
    app->add_option("--sampler", sampler, "exact | metropolis");
    app->add_option("--seed", seed, "run a single seed");
    app->add_option("--grid-size", grid_size, "quantile grid points");
  }

  void apply(json& j) const {
    if (n) j["n"] = *n;
    if (K) j["K"] = *K;
    if (mode) j["mode"] = *mode;
    if (sampler) j["sampler"] = *sampler;
    if (seed) j["seeds"] = json::array({*seed});
    if (grid_size) j["grid_size"] = *grid_size;
  }
};

pie::ExperimentConfig read_config(const std::string& path, const Overrides& overrides) {
  json j;
  try {
    j = json::parse(pie::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw pie::Error(pie::ErrorKind::Config, path + ": " + e.what());
  }
  if (!j.is_object()) throw pie::Error(pie::ErrorKind::Config, path + ": expected a JSON object");
  overrides.apply(j);
  return pie::ExperimentConfig::from_json(j);
}

void write_timings(const pie::ExperimentReport& report, const std::filesystem::path& dir) {
  json t = json::object();
  for (const auto& [phase, seconds] : report.timings) t[phase] = seconds;
  pie::write_text_file(dir / "timings.json", t.dump(2) + "\n");
}

std::vector<pie::DrawMatrix> load_draw_files(const std::vector<std::string>& paths) {
  std::vector<pie::DrawMatrix> draws;
  for (const auto& p : paths) draws.push_back(pie::load_draws_csv(p));
  for (const auto& d : draws) {
    if (d.d() != draws.front().d()) {
      throw pie::Error(pie::ErrorKind::Shape, "draw files disagree on the parameter dimension");
    }
  }
  return draws;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Posterior interval estimation by quantile averaging over data shards"};
  app.set_version_flag("--version", std::string(pie::kVersion));
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "write the simulated data set of a config as CSV");
  std::string sim_config;
  std::string sim_out;
  Overrides sim_overrides;
  simulate->add_option("config", sim_config, "experiment config (JSON)")->required();
  simulate->add_option("--out", sim_out, "output CSV path")->required();
  sim_overrides.attach(simulate);

  // run
  auto* run = app.add_subcommand("run", "run an experiment and write its report");
  std::string run_config;
  std::string run_out = default_output_dir();
  std::size_t workers = 1;
  bool overwrite = false;
  bool timings = false;
  bool save_draws = false;
  Overrides run_overrides;
  run->add_option("config", run_config, "experiment config (JSON)")->required();
  run->add_option("--out", run_out, "output directory (default $PIE_OUTPUT_DIR or ./pie-out)");
  run->add_option("--workers", workers, "shard sampling threads")->check(CLI::PositiveNumber);
  run->add_flag("--overwrite", overwrite, "replace existing report files");
  run->add_flag("--timings", timings, "also write timings.json");
  run->add_flag("--save-draws", save_draws, "write shard draws to <out>/draws");
  run_overrides.attach(run);

  // combine
  auto* combine = app.add_subcommand("combine", "combine per-shard draw files by quantile averaging");
  std::vector<std::string> combine_inputs;
  std::string combine_out = default_output_dir();
  std::size_t combine_grid = pie::kDefaultGridSize;
  std::vector<double> combine_alphas{0.05};
  bool combine_overwrite = false;
  combine->add_option("draws", combine_inputs, "shard draw CSV files")->required();
  combine->add_option("--out", combine_out, "output directory");
  combine->add_option("--grid-size", combine_grid, "quantile grid points");
  combine->add_option("--alpha", combine_alphas, "interval levels");
  combine->add_flag("--overwrite", combine_overwrite, "replace existing files");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "compare two draw files coordinate by coordinate");
  std::string metrics_a;
  std::string metrics_b;
  std::size_t metrics_grid = pie::kDefaultGridSize;
  std::vector<double> gap_range{0.05, 0.95};
  metrics->add_option("estimate", metrics_a, "draw CSV of the estimate")->required();
  metrics->add_option("reference", metrics_b, "draw CSV of the reference posterior")->required();
  metrics->add_option("--grid-size", metrics_grid, "quantile grid points");
  metrics->add_option("--gap-range", gap_range, "u1 u2")->expected(2);

  // report
  auto* report_cmd = app.add_subcommand("report", "summarize metrics.json of a finished run");
  std::string report_dir = default_output_dir();
  report_cmd->add_option("dir", report_dir, "report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*simulate) {
    const auto cfg = read_config(sim_config, sim_overrides);
    pie::write_observations_csv(pie::experiment_data(cfg, cfg.seeds.front()), sim_out);
    return 0;
  }

  if (*run) {
    const auto cfg = read_config(run_config, run_overrides);
    const std::filesystem::path out = run_out;
    if (!overwrite) {
      for (const auto& name : pie::report_file_names()) {
        if (std::filesystem::exists(out / name)) {
          throw pie::Error(pie::ErrorKind::ExistingFile,
                           (out / name).string() + " exists; pass --overwrite to replace it");
        }
      }
    }
    pie::RunOptions options{workers, std::nullopt};
    if (save_draws) options.draws_dir = out / "draws";
    const auto report = pie::run_experiment(cfg, options);
    pie::emit_report(report, out, overwrite);
    if (timings) write_timings(report, out);
    std::cout << "wrote report to " << out.string() << '\n';
    return 0;
  }

  if (*combine) {
    const auto draws = load_draw_files(combine_inputs);
    const auto grid = pie::make_grid(combine_grid);
    pie::ExperimentReport report;
    report.config = {{"inputs", combine_inputs}, {"grid_size", combine_grid}, {"alpha_levels", combine_alphas}};
    pie::CellReport cell{0, 0, {}, {}};
    for (std::size_t k = 0; k < draws.front().d(); ++k) {
      pie::FunctionalReport fr;
      fr.name = "theta" + std::to_string(k + 1);
      std::vector<std::vector<double>> columns;
      for (const auto& d : draws) {
        columns.push_back(d.column(k));
        fr.shard_tables.push_back(pie::quantile_table(columns.back(), grid));
      }
      fr.combined = pie::average_quantile_tables(fr.shard_tables);
      for (double alpha : combine_alphas) fr.combined_intervals.push_back(pie::pie_interval(columns, alpha));
      cell.functionals.push_back(std::move(fr));
    }
    report.cells.push_back(std::move(cell));
    pie::emit_report(report, combine_out, combine_overwrite);
    std::cout << "wrote combined tables to " << combine_out << '\n';
    return 0;
  }

  if (*metrics) {
    const auto a = pie::load_draws_csv(metrics_a);
    const auto b = pie::load_draws_csv(metrics_b);
    if (a.d() != b.d()) throw pie::Error(pie::ErrorKind::Shape, "draw files disagree on the parameter dimension");
    const auto grid = pie::make_grid(metrics_grid);
    json out = json::object();
    for (std::size_t k = 0; k < a.d(); ++k) {
      const auto xa = a.column(k);
      const auto xb = b.column(k);
      const auto ta = pie::quantile_table(xa, grid);
      const auto tb = pie::quantile_table(xb, grid);
      out["theta" + std::to_string(k + 1)] = {
          {"w2", pie::w2_from_tables(ta, tb)},
          {"accuracy", pie::accuracy(xa, xb)},
          {"quantile_gap", pie::quantile_gap(ta, tb, gap_range[0], gap_range[1])}};
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }

  const auto path = std::filesystem::path(report_dir) / "metrics.json";
  json m;
  try {
    m = json::parse(pie::read_text_file(path));
  } catch (const json::parse_error& e) {
    throw pie::Error(pie::ErrorKind::Parse, path.string() + ": " + e.what());
  }
  auto show = [](const json& v) { return v.is_null() ? std::string("-") : pie::format_double(v.get<double>()); };
  std::cout << "seed\tfunctional\tw2\taccuracy\tbias\tvariance\tquantile_gap\trate_slope\n";
  for (const auto& cell : m.at("cells")) {
    for (const auto& [name, fm] : cell.at("functionals").items()) {
      std::cout << cell.at("seed").get<std::uint64_t>() << '\t' << name;
      for (const char* key : {"w2", "accuracy", "bias", "variance", "quantile_gap", "rate_slope"}) {
        std::cout << '\t' << show(fm.at(key));
      }
      std::cout << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const pie::Error& e) {
    std::cerr << "error (" << pie::to_string(e.kind()) << "): " << e.what() << '\n';
    return pie::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
