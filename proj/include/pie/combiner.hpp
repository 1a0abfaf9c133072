#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pie/draws.hpp"

namespace pie {

/// Quantile function sampled on a grid of probabilities. The artifact's
/// representation of a one-dimensional distribution.
class QuantileTable {
 public:
  /// Throws Range unless the grid is strictly increasing inside (0, 1) and
  /// the values are nondecreasing with matching length.
  QuantileTable(std::vector<double> grid, std::vector<double> values);

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return grid_.size(); }

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
};

struct IntervalEstimate {
  double alpha;
  double lower;
  double upper;
};

/// Normal approximation N(mean, cov).
struct GaussianApprox {
  /// Symmetrizes `cov` (must be symmetric to 1e-12) and clips eigenvalues in
  /// [-1e-12, 0) to 0. Throws Range for anything more negative.
  GaussianApprox(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline constexpr std::size_t kDefaultGridSize = 999;

/// u_k = k / (size + 1), k = 1..size. The default grid is k / 1000.
std::vector<double> make_grid(std::size_t size = kDefaultGridSize);

/// 1-based order-statistic index floor(T u), clamped to [1, T].
std::size_t order_statistic_index(std::size_t T, double u);

/// Order statistic at index clamp(floor(T u), 1, T).
double empirical_quantile(std::span<const double> draws, double u);

/// empirical_quantile evaluated at every grid point.
QuantileTable quantile_table(std::span<const double> draws, const std::vector<double>& grid);

/// Pointwise mean of tables on a shared grid: the quantile function of their
/// one-dimensional Wasserstein-2 barycenter. Reduction runs in shard order
/// with pairwise summation.
QuantileTable average_quantile_tables(std::span<const QuantileTable> tables);

/// Credible interval [mean_j q_{alpha/2,j}, mean_j q_{1-alpha/2,j}].
IntervalEstimate pie_interval(std::span<const std::vector<double>> subset_draws, double alpha);

/// Interval read off a quantile function by the same order-statistic rule.
IntervalEstimate interval_from_sorted(std::span<const double> sorted, double alpha);

/// Atoms of the barycenter of K empirical distributions with equal T: the
/// k-th atom is the mean of the shards' k-th order statistics. Its
/// quantile table equals the average of the shard tables.
std::vector<double> barycenter_draws(std::span<const std::vector<double>> subset_draws);

/// Pairwise (cascade) sum, used wherever reproducible reductions matter.
double pairwise_sum(std::span<const double> values);

/// Wasserstein-2 barycenter of Gaussians: mean of means, and the covariance
/// solving sum_j (V^1/2 V_j V^1/2)^1/2 = K V by fixed-point iteration
/// started at the average covariance.
GaussianApprox gaussian_barycenter(std::span<const GaussianApprox> approxes);

/// || sum_j (V^1/2 V_j V^1/2)^1/2 - K V ||_F.
double barycenter_residual(std::span<const GaussianApprox> approxes, const Eigen::MatrixXd& v);

/// Consensus Monte Carlo baseline: draw t is (sum_j W_j)^-1 sum_j W_j theta_tj
/// with W_j the inverse sample covariance of shard j.
DrawMatrix consensus_combine(std::span<const DrawMatrix> subset_draws);

}  // namespace pie
