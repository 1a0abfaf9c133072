#include "pie/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "pie/data.hpp"
#include "pie/error.hpp"
#include "pie/metrics.hpp"
#include "pie/multidim.hpp"
#include "pie/oracle.hpp"

namespace pie {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ObservationSet data_for(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
  if (cfg.data.kind == DataSource::Kind::Csv) {
    auto data = load_csv(cfg.data.path);
    if (n != 0 && data.n() != n) {
      throw Error(ErrorKind::Config, "config n=" + std::to_string(n) + " but " +
                                         cfg.data.path.string() + " has " +
                                         std::to_string(data.n()) + " rows");
    }
    return data;
  }
  if (cfg.model.family() == Family::NormalLinearNig) return simulate_linear(n, cfg.data.p, seed);
  return simulate_univariate(cfg.model.family(), *cfg.data.theta0, n, seed);
}

// True parameter vector when the data were simulated.
std::optional<Vector> truth_vector(const ExperimentConfig& cfg) {
  if (cfg.data.kind != DataSource::Kind::Simulate) return std::nullopt;
  if (cfg.model.family() == Family::NormalLinearNig) {
    Vector theta(static_cast<Eigen::Index>(cfg.data.p) + 1);
    theta.head(static_cast<Eigen::Index>(cfg.data.p)) = linear_truth(cfg.data.p);
    theta[theta.size() - 1] = 1.0;
    return theta;
  }
  return Vector::Constant(1, *cfg.data.theta0);
}

std::vector<double> sorted_copy(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

IntervalEstimate interval_from_table(const QuantileTable& analytic, double alpha) {
  return {alpha, analytic.values().front(), analytic.values().back()};
}

struct CellOptions {
  bool with_accuracy = true;
};

CellReport run_cell(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed,
                    const RunOptions& options, std::map<std::string, double>& timings,
                    const CellOptions& cell_options) {
  const ObservationSet data = data_for(cfg, n, seed);
  CellReport cell{seed, data.n(), {}, {}};
  const auto grid = make_grid(cfg.grid_size);
  const auto truth = truth_vector(cfg);
  const std::size_t T = cfg.chain.retained();

  // Full posterior: closed form plus exact draws on the oracle stream.
  const ExactPosterior full = exact_posterior(cfg.model, data, 1.0);
  const DrawMatrix oracle_draws = sample_exact(full, T, {seed, StreamPurpose::Oracle, 0});

  std::vector<DrawMatrix> shards;
  if (cfg.mode != Mode::FullOracle) {
    const auto start = Clock::now();
    const PartitionPlan plan = partition(data.n(), cfg.K, seed);
    std::vector<std::optional<DrawMatrix>> slots(cfg.K);
    parallel_for(cfg.K, options.workers, [&](std::size_t j) {
      slots[j] = sample_shard(cfg, data, plan, j, seed);
    });
    for (std::size_t j = 0; j < cfg.K; ++j) {
      shards.push_back(std::move(*slots[j]));
      const double temper =
          cfg.mode == Mode::Consensus ? 1.0 : shard_temper(data.n(), plan.shard_sizes()[j]);
      cell.shards.push_back({j, plan.shard_sizes()[j], temper,
                             {seed, StreamPurpose::Shard, static_cast<std::uint32_t>(j)},
                             shards.back().diagnostics()});
    }
    if (options.draws_dir) {
      for (std::size_t j = 0; j < cfg.K; ++j) {
        write_draws_csv(shards[j], *options.draws_dir / ("draws_seed" + std::to_string(seed) +
                                                         "_shard" + std::to_string(j) + ".csv"));
      }
    }
    timings["sample"] += seconds_since(start);
  }

  // Joint combines act on whole draw matrices, before any functional.
  std::optional<DrawMatrix> joint;
  {
    const auto start = Clock::now();
    if (cfg.mode == Mode::Consensus) joint = consensus_combine(shards);
    if (cfg.mode == Mode::Multidim) joint = combine_multidim(shards, grid, T, seed);
    timings["combine"] += seconds_since(start);
  }

  for (const auto& named : cfg.functionals) {
    FunctionalReport fr;
    fr.name = named.name;
    const auto& f = named.functional;
    if (truth) fr.truth = f.a.dot(*truth) + f.b;

    const auto combine_start = Clock::now();
    std::vector<std::vector<double>> shard_values;
    for (const auto& s : shards) {
      shard_values.push_back(apply_functional(f, s));
      fr.shard_tables.push_back(quantile_table(shard_values.back(), grid));
    }
    // Sorted draws representing the combined posterior of this functional.
    std::vector<double> combined_atoms;
    if (cfg.mode == Mode::Pie) {
      fr.combined = average_quantile_tables(fr.shard_tables);
      combined_atoms = barycenter_draws(shard_values);
      for (double alpha : cfg.alpha_levels) fr.combined_intervals.push_back(pie_interval(shard_values, alpha));
    } else if (joint) {
      combined_atoms = sorted_copy(apply_functional(f, *joint));
      fr.combined = quantile_table(combined_atoms, grid);
      for (double alpha : cfg.alpha_levels) {
        fr.combined_intervals.push_back(interval_from_sorted(combined_atoms, alpha));
      }
    }
    timings["combine"] += seconds_since(combine_start);

    const auto metrics_start = Clock::now();
    const auto oracle_values = sorted_copy(apply_functional(f, oracle_draws));
    fr.oracle = analytic_quantile_table(full, f, grid);
    if (!fr.oracle) fr.oracle = quantile_table(oracle_values, grid);
    for (double alpha : cfg.alpha_levels) {
      const auto ends = analytic_quantile_table(full, f, {alpha / 2.0, 1.0 - alpha / 2.0});
      fr.oracle_intervals.push_back(ends ? interval_from_table(*ends, alpha)
                                         : interval_from_sorted(oracle_values, alpha));
    }
    if (fr.truth) {
      const auto ob = bias_variance_summary(oracle_values, *fr.truth);
      fr.metrics.oracle_bias = ob.bias;
      fr.metrics.oracle_variance = ob.variance;
    }
    if (fr.combined) {
      fr.metrics.w2 = w2_from_tables(*fr.combined, *fr.oracle);
      fr.metrics.quantile_gap = quantile_gap(*fr.combined, *fr.oracle, cfg.gap_lower, cfg.gap_upper);
      const auto bv = bias_variance_summary(combined_atoms, fr.truth.value_or(0.0));
      if (fr.truth) fr.metrics.bias = bv.bias;
      fr.metrics.variance = bv.variance;
      if (cell_options.with_accuracy) {
        try {
          fr.metrics.accuracy = accuracy(combined_atoms, oracle_values);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::DegenerateSample) throw;
        }
      }
    } else {
      fr.metrics.bias = fr.metrics.oracle_bias;
      const auto bv = bias_variance_summary(oracle_values, fr.truth.value_or(0.0));
      fr.metrics.variance = bv.variance;
    }
    timings["metrics"] += seconds_since(metrics_start);
    cell.functionals.push_back(std::move(fr));
  }
  return cell;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

ObservationSet experiment_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  return data_for(cfg, cfg.n, seed);
}

DrawMatrix sample_shard(const ExperimentConfig& cfg, const ObservationSet& data,
                        const PartitionPlan& plan, std::size_t shard, std::uint64_t seed) {
  const auto indices = plan.shard_indices(shard);
  // Weighted averaging expects each shard posterior to carry K times the full
  // posterior covariance, so consensus shards keep the raw likelihood.
  const double temper = cfg.mode == Mode::Consensus ? 1.0 : shard_temper(data.n(), indices.size());
  const TemperedTarget target(cfg.model, data.subset(indices), temper);
  const auto index = static_cast<std::uint32_t>(shard);
  DrawMatrix draws = [&] {
    if (cfg.sampler == SamplerKind::Exact) {
      return sample_conjugate(target, cfg.chain.retained(), {seed, StreamPurpose::Shard, index});
    }
    ChainConfig chain = cfg.chain;
    chain.seed = seed;
    return sample_metropolis(target, default_init(target), chain, index);
  }();
  DrawMatrix out(draws.values(), seed, shard);
  if (draws.diagnostics()) out.set_diagnostics(*draws.diagnostics());
  return out;
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn, const char* label) {
  struct Failure {
    ErrorKind kind;
    std::string message;
  };
  std::vector<std::optional<Failure>> failures(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (const Error& e) {
        failures[i] = Failure{e.kind(), e.what()};
      } catch (const std::exception& e) {
        failures[i] = Failure{ErrorKind::Numeric, e.what()};
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::optional<ErrorKind> first;
  std::ostringstream message;
  for (std::size_t i = 0; i < count; ++i) {
    if (!failures[i]) continue;
    if (!first) {
      first = failures[i]->kind;
    } else {
      message << "; ";
    }
    message << label << ' ' << i << ": " << failures[i]->message;
  }
  if (first) throw Error(*first, message.str());
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  ExperimentReport report;
  report.config = cfg.to_json();
  for (const char* phase : {"sample", "combine", "metrics"}) report.timings[phase] = 0.0;
  if (options.draws_dir) std::filesystem::create_directories(*options.draws_dir);

  for (auto seed : cfg.seeds) {
    report.cells.push_back(run_cell(cfg, cfg.n, seed, options, report.timings, {}));
  }

  if (!cfg.rate_sizes.empty() && cfg.mode != Mode::FullOracle) {
    RunOptions quiet = options;
    quiet.draws_dir.reset();
    // w2[size][functional][seed]
    std::vector<std::vector<std::vector<double>>> w2(
        cfg.rate_sizes.size(), std::vector<std::vector<double>>(cfg.functionals.size()));
    for (std::size_t s = 0; s < cfg.rate_sizes.size(); ++s) {
      for (auto seed : cfg.seeds) {
        const auto cell = run_cell(cfg, cfg.rate_sizes[s], seed, quiet, report.timings,
                                   {.with_accuracy = false});
        for (std::size_t f = 0; f < cfg.functionals.size(); ++f) {
          w2[s][f].push_back(*cell.functionals[f].metrics.w2);
        }
      }
    }
    const auto metrics_start = Clock::now();
    std::vector<double> ns(cfg.rate_sizes.begin(), cfg.rate_sizes.end());
    for (std::size_t f = 0; f < cfg.functionals.size(); ++f) {
      RateReport rate{cfg.functionals[f].name, cfg.rate_sizes, {}, 0.0};
      for (std::size_t s = 0; s < cfg.rate_sizes.size(); ++s) rate.median_w2.push_back(median(w2[s][f]));
      rate.slope = rate_fit(ns, rate.median_w2).slope;
      for (auto& cell : report.cells) cell.functionals[f].metrics.rate_slope = rate.slope;
      report.rates.push_back(std::move(rate));
    }
    report.timings["metrics"] += seconds_since(metrics_start);
  }
  return report;
}

std::vector<std::string> report_file_names() {
  return {"quantiles.csv", "intervals.csv", "metrics.json"};
}

std::string quantiles_csv(const ExperimentReport& report) {
  std::string out = "functional,u,value,source,seed\n";
  auto rows = [&out](const std::string& name, const QuantileTable& table, const std::string& source,
                     std::uint64_t seed) {
    const std::string tail = "," + source + "," + std::to_string(seed) + "\n";
    for (std::size_t k = 0; k < table.size(); ++k) {
      out += name + "," + format_double(table.grid()[k]) + "," + format_double(table.values()[k]) + tail;
    }
  };
  for (const auto& cell : report.cells) {
    for (const auto& fr : cell.functionals) {
      for (std::size_t j = 0; j < fr.shard_tables.size(); ++j) {
        rows(fr.name, fr.shard_tables[j], "shard-" + std::to_string(j), cell.seed);
      }
      if (fr.combined) {
        rows(fr.name, *fr.combined, "combined", cell.seed);
      } else if (fr.oracle) {
        rows(fr.name, *fr.oracle, "full-oracle", cell.seed);
      }
    }
  }
  return out;
}

std::string intervals_csv(const ExperimentReport& report) {
  std::string out = "functional,alpha,lower,upper,source,seed\n";
  auto rows = [&out](const std::string& name, const std::vector<IntervalEstimate>& list,
                     const char* source, std::uint64_t seed) {
    for (const auto& iv : list) {
      out += name + "," + format_double(iv.alpha) + "," + format_double(iv.lower) + "," +
             format_double(iv.upper) + "," + source + "," + std::to_string(seed) + "\n";
    }
  };
  for (const auto& cell : report.cells) {
    for (const auto& fr : cell.functionals) {
      rows(fr.name, fr.combined_intervals, "combined", cell.seed);
      rows(fr.name, fr.oracle_intervals, "full-oracle", cell.seed);
    }
  }
  return out;
}

json metrics_json(const ExperimentReport& report) {
  json cells = json::array();
  for (const auto& cell : report.cells) {
    json shards = json::array();
    for (const auto& s : cell.shards) {
      json record = {{"shard_id", s.shard_id},
                     {"size", s.size},
                     {"temper", s.temper},
                     {"stream", {{"seed", s.stream.seed}, {"purpose", "shard"}, {"index", s.stream.index}}}};
      if (s.diagnostics) {
        record["acceptance_rate"] = s.diagnostics->acceptance_rate;
        record["proposal_scale"] = s.diagnostics->proposal_scale;
      }
      shards.push_back(std::move(record));
    }
    json functionals = json::object();
    for (const auto& fr : cell.functionals) {
      const auto& m = fr.metrics;
      functionals[fr.name] = {{"w2", optional_number(m.w2)},
                              {"accuracy", optional_number(m.accuracy)},
                              {"bias", optional_number(m.bias)},
                              {"variance", optional_number(m.variance)},
                              {"quantile_gap", optional_number(m.quantile_gap)},
                              {"rate_slope", optional_number(m.rate_slope)},
                              {"truth", optional_number(fr.truth)},
                              {"oracle_bias", optional_number(m.oracle_bias)},
                              {"oracle_variance", optional_number(m.oracle_variance)}};
    }
    cells.push_back({{"seed", cell.seed}, {"n", cell.n}, {"shards", shards}, {"functionals", functionals}});
  }
  json rates = json::array();
  for (const auto& r : report.rates) {
    rates.push_back({{"functional", r.functional}, {"sizes", r.sizes}, {"median_w2", r.median_w2}, {"slope", r.slope}});
  }
  return {{"version", kVersion}, {"config", report.config}, {"cells", cells}, {"rates", rates}};
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir, bool overwrite) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  const auto names = report_file_names();
  if (!overwrite) {
    for (const auto& name : names) {
      if (std::filesystem::exists(out_dir / name)) {
        throw Error(ErrorKind::ExistingFile, (out_dir / name).string() + " exists; pass overwrite to replace it");
      }
    }
  }
  // Render everything first so a serialization failure writes nothing.
  const std::vector<std::string> contents = {quantiles_csv(report), intervals_csv(report),
                                             metrics_json(report).dump(2) + "\n"};
  for (std::size_t i = 0; i < names.size(); ++i) write_text_file(out_dir / names[i], contents[i]);
}

}  // namespace pie
