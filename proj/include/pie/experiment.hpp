#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pie/combiner.hpp"
#include "pie/model.hpp"
#include "pie/samplers.hpp"

namespace pie {

inline constexpr const char* kVersion = "0.1.0";

enum class Mode { Pie, Consensus, Multidim, FullOracle };
enum class SamplerKind { Exact, Metropolis };

std::string_view to_string(Mode mode) noexcept;
std::string_view to_string(SamplerKind kind) noexcept;

struct DataSource {
  enum class Kind { Simulate, Csv };
  Kind kind = Kind::Simulate;
  /// Scalar families: true parameter. Ignored for the linear model.
  std::optional<double> theta0;
  /// Linear model: number of coefficients.
  std::size_t p = 0;
  std::filesystem::path path;
};

struct NamedFunctional {
  std::string name;
  LinearFunctional functional;
};

/// Everything that determines a run. Worker count and output location are
/// deliberately not part of it, so they can never change the results.
struct ExperimentConfig {
  ModelSpec model = ModelSpec::poisson_gamma(1.0, 1.0);
  DataSource data;
  std::size_t n = 0;
  std::size_t K = 1;
  SamplerKind sampler = SamplerKind::Exact;
  ChainConfig chain;
  std::vector<NamedFunctional> functionals;
  std::vector<double> alpha_levels;
  std::size_t grid_size = kDefaultGridSize;
  std::vector<std::uint64_t> seeds;
  Mode mode = Mode::Pie;
  double gap_lower = 0.05;
  double gap_upper = 0.95;
  /// When non-empty, W2 to the full posterior is also measured at each of
  /// these data sizes and a log-log rate slope is reported.
  std::vector<std::size_t> rate_sizes;

  /// Parses and validates a config object; missing keys take defaults.
  /// Throws Config with the offending key.
  static ExperimentConfig from_json(const nlohmann::json& j);

  /// Normalized echo with every default filled in.
  nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

struct ShardRecord {
  std::size_t shard_id;
  std::size_t size;
  double temper;
  StreamKey stream;
  std::optional<SamplerDiagnostics> diagnostics;
};

struct FunctionalMetrics {
  std::optional<double> w2;
  std::optional<double> accuracy;
  std::optional<double> bias;
  std::optional<double> variance;
  std::optional<double> quantile_gap;
  std::optional<double> rate_slope;
  std::optional<double> oracle_bias;
  std::optional<double> oracle_variance;
};

struct FunctionalReport {
  std::string name;
  std::optional<double> truth;
  std::vector<QuantileTable> shard_tables;
  std::optional<QuantileTable> combined;
  std::optional<QuantileTable> oracle;
  std::vector<IntervalEstimate> combined_intervals;
  std::vector<IntervalEstimate> oracle_intervals;
  FunctionalMetrics metrics;
};

/// One (seed) cell of an experiment.
struct CellReport {
  std::uint64_t seed;
  std::size_t n;
  std::vector<ShardRecord> shards;
  std::vector<FunctionalReport> functionals;
};

struct RateReport {
  std::string functional;
  std::vector<std::size_t> sizes;
  std::vector<double> median_w2;
  double slope;
};

struct ExperimentReport {
  nlohmann::json config;
  std::vector<CellReport> cells;
  std::vector<RateReport> rates;
  /// Wall-clock seconds per phase (sample, combine, metrics). Not part of
  /// the deterministic report files.
  std::map<std::string, double> timings;
};

struct RunOptions {
  std::size_t workers = 1;
  /// When set, shard draws are written here as draws_seed<s>_shard<j>.csv.
  std::optional<std::filesystem::path> draws_dir;
};

/// Loads or simulates the data set for one seed.
ObservationSet experiment_data(const ExperimentConfig& cfg, std::uint64_t seed);

/// Draws for one shard, keyed by (seed, shard). Recomputing a shard in
/// isolation reproduces it exactly.
DrawMatrix sample_shard(const ExperimentConfig& cfg, const ObservationSet& data,
                        const PartitionPlan& plan, std::size_t shard, std::uint64_t seed);

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Failures are
/// collected and rethrown together, naming each failing index.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn, const char* label = "shard");

ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// File names written by emit_report, in order.
std::vector<std::string> report_file_names();

/// Writes quantiles.csv, intervals.csv and metrics.json. Refuses to replace
/// existing files unless `overwrite`; nothing is written if any check fails.
void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir,
                 bool overwrite = false);

std::string quantiles_csv(const ExperimentReport& report);
std::string intervals_csv(const ExperimentReport& report);
nlohmann::json metrics_json(const ExperimentReport& report);

}  // namespace pie
