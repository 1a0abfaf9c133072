#include "pie/multidim.hpp"

#include <algorithm>

#include "pie/error.hpp"
#include "pie/linalg.hpp"

namespace pie {

Eigen::MatrixXd PooledTransform::standardize(const Eigen::MatrixXd& rows) const {
  return (rows.rowwise() - mean.transpose()) * cov_inv_sqrt;
}

Eigen::MatrixXd PooledTransform::restore(const Eigen::MatrixXd& rows) const {
  return (rows * cov_sqrt).rowwise() + mean.transpose();
}

StandardizedShards pooled_center_scale(std::span<const DrawMatrix> subset_draws) {
  if (subset_draws.empty()) throw Error(ErrorKind::EmptyDraws, "no shards to combine");
  const auto d = subset_draws.front().d();
  const double K = static_cast<double>(subset_draws.size());

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(d, d);
  for (const auto& draws : subset_draws) {
    if (draws.d() != d) throw Error(ErrorKind::Shape, "shards differ in dimension");
    mean += draws.values().colwise().mean().transpose();
    precision += linalg::ridged_inverse(linalg::sample_covariance(draws.values()),
                                        "shard sample covariance");
  }
  mean /= K;
  precision = linalg::symmetrize(precision / K);

  PooledTransform transform;
  transform.mean = mean;
  transform.cov = linalg::inverse_spd(precision, "pooled covariance");
  // V^1/2 = (V^-1)^-1/2 and V^-1/2 = (V^-1)^1/2, both symmetric.
  transform.cov_sqrt = linalg::inv_sqrt_spd(precision, "pooled covariance");
  transform.cov_inv_sqrt = linalg::sqrt_psd(precision);

  StandardizedShards out{std::move(transform), {}};
  out.shards.reserve(subset_draws.size());
  for (const auto& draws : subset_draws) {
    out.shards.emplace_back(out.transform.standardize(draws.values()), draws.seed_used(),
                            draws.shard_id());
  }
  return out;
}

double sample_quantile_table(const QuantileTable& table, double u) {
  const auto& grid = table.grid();
  const auto& values = table.values();
  if (u <= grid.front()) return values.front();
  if (u >= grid.back()) return values.back();
  const auto upper = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), u) - grid.begin());
  const auto lower = upper - 1;
  const double w = (u - grid[lower]) / (grid[upper] - grid[lower]);
  return values[lower] + w * (values[upper] - values[lower]);
}

DrawMatrix combine_multidim(std::span<const DrawMatrix> subset_draws,
                            const std::vector<double>& grid, std::size_t T_out,
                            std::uint64_t seed) {
  if (grid.size() < 2) throw Error(ErrorKind::Range, "multidim combine needs a grid of at least 2 points");
  if (T_out == 0) throw Error(ErrorKind::Config, "T_out must be positive");
  const auto standardized = pooled_center_scale(subset_draws);
  const auto d = standardized.transform.mean.size();

  Eigen::MatrixXd resampled(static_cast<Eigen::Index>(T_out), d);
  std::vector<QuantileTable> tables;
  tables.reserve(standardized.shards.size());
  for (Eigen::Index coord = 0; coord < d; ++coord) {
    tables.clear();
    for (const auto& shard : standardized.shards) {
      tables.push_back(quantile_table(shard.column(static_cast<std::size_t>(coord)), grid));
    }
    const auto combined = average_quantile_tables(tables);
    PhiloxStream rng({seed, StreamPurpose::Resample, static_cast<std::uint32_t>(coord)});
    for (Eigen::Index t = 0; t < resampled.rows(); ++t) {
      resampled(t, coord) = sample_quantile_table(combined, rng.uniform_open());
    }
  }
  return DrawMatrix(standardized.transform.restore(resampled), seed);
}

}  // namespace pie
