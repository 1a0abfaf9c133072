#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pie/combiner.hpp"
#include "pie/draws.hpp"
#include "pie/rng.hpp"

namespace pie {

/// Pooled centering and scaling across shards: mean = average of shard means,
/// covariance^-1 = average of shard inverse covariances.
struct PooledTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd cov_sqrt;
  Eigen::MatrixXd cov_inv_sqrt;

  /// V^-1/2 (theta - m), row-wise.
  Eigen::MatrixXd standardize(const Eigen::MatrixXd& rows) const;
  /// V^1/2 theta' + m, row-wise.
  Eigen::MatrixXd restore(const Eigen::MatrixXd& rows) const;
};

struct StandardizedShards {
  PooledTransform transform;
  std::vector<DrawMatrix> shards;
};

/// Shard covariances use denominator T - 1 with the consensus ridge fallback.
StandardizedShards pooled_center_scale(std::span<const DrawMatrix> subset_draws);

/// Inverse-CDF draw from a quantile table, interpolating linearly between
/// grid points and holding the end values outside [u_1, u_G].
double sample_quantile_table(const QuantileTable& table, double u);

/// Joint approximation: per standardized coordinate, average the shard
/// quantile tables, resample T_out values independently, then map rows back
/// with V^1/2 theta' + m. Coordinate j draws from stream (seed, Resample, j).
DrawMatrix combine_multidim(std::span<const DrawMatrix> subset_draws,
                            const std::vector<double>& grid, std::size_t T_out,
                            std::uint64_t seed);

}  // namespace pie
