#include "pie/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pie/error.hpp"
#include "pie/linalg.hpp"

namespace pie {
namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kBarycenterTolerance = 1e-10;
constexpr int kBarycenterMaxIterations = 500;

std::vector<double> sorted_copy(std::span<const double> draws) {
  if (draws.empty()) throw Error(ErrorKind::EmptyDraws, "no draws to take quantiles of");
  std::vector<double> out(draws.begin(), draws.end());
  std::sort(out.begin(), out.end());
  return out;
}

void check_level(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream msg;
    msg << "credible level alpha must lie in (0, 1), got " << alpha;
    throw Error(ErrorKind::InvalidLevel, msg.str());
  }
}

void check_probability(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    std::ostringstream msg;
    msg << "probability must lie in (0, 1), got " << u;
    throw Error(ErrorKind::Range, msg.str());
  }
}

}  // namespace

QuantileTable::QuantileTable(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.empty() || grid_.size() != values_.size()) {
    throw Error(ErrorKind::Range, "quantile table needs a nonempty grid matching its values");
  }
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    if (!(grid_[k] > 0.0 && grid_[k] < 1.0)) {
      throw Error(ErrorKind::Range, "quantile grid must lie strictly inside (0, 1)");
    }
    if (k > 0 && !(grid_[k] > grid_[k - 1])) {
      throw Error(ErrorKind::Range, "quantile grid must be strictly increasing");
    }
    if (!std::isfinite(values_[k])) {
      throw Error(ErrorKind::InvalidData, "quantile table value is not finite");
    }
    if (k > 0 && values_[k] < values_[k - 1]) {
      throw Error(ErrorKind::Range, "quantile table values must be nondecreasing");
    }
  }
}

GaussianApprox::GaussianApprox(Eigen::VectorXd mean_in, Eigen::MatrixXd cov_in)
    : mean(std::move(mean_in)), cov(std::move(cov_in)) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size() || mean.size() == 0) {
    throw Error(ErrorKind::Shape, "covariance must be d x d with d = length of mean");
  }
  if (!mean.allFinite() || !cov.allFinite()) {
    throw Error(ErrorKind::InvalidData, "gaussian approximation has non-finite entries");
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::Range, "covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(linalg::symmetrize(cov));
  if (eig.eigenvalues().minCoeff() < -kSymmetryTolerance) {
    throw Error(ErrorKind::Range, "covariance is not positive semidefinite");
  }
  if (eig.eigenvalues().minCoeff() < 0.0) {
    const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    cov = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  }
  cov = linalg::symmetrize(cov);
}

std::vector<double> make_grid(std::size_t size) {
  if (size == 0) throw Error(ErrorKind::Config, "grid size must be positive");
  std::vector<double> grid(size);
  const double denom = static_cast<double>(size + 1);
  for (std::size_t k = 0; k < size; ++k) grid[k] = static_cast<double>(k + 1) / denom;
  return grid;
}

std::size_t order_statistic_index(std::size_t T, double u) {
  if (T == 0) throw Error(ErrorKind::EmptyDraws, "no draws to take quantiles of");
  check_probability(u);
  double x = static_cast<double>(T) * u;
  // T*u that should be an integer can land one ulp below it (e.g. 1000 * 0.003).
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) x = nearest;
  const auto index = static_cast<std::size_t>(std::floor(x));
  return std::clamp<std::size_t>(index, 1, T);
}

double empirical_quantile(std::span<const double> draws, double u) {
  const auto sorted = sorted_copy(draws);
  return sorted[order_statistic_index(sorted.size(), u) - 1];
}

QuantileTable quantile_table(std::span<const double> draws, const std::vector<double>& grid) {
  const auto sorted = sorted_copy(draws);
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    values[k] = sorted[order_statistic_index(sorted.size(), grid[k]) - 1];
  }
  return QuantileTable(grid, std::move(values));
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double total = 0.0;
    for (double v : values) total += v;
    return total;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

QuantileTable average_quantile_tables(std::span<const QuantileTable> tables) {
  if (tables.empty()) throw Error(ErrorKind::EmptyDraws, "no quantile tables to average");
  const auto& grid = tables.front().grid();
  for (const auto& table : tables) {
    if (table.grid() != grid) {
      throw Error(ErrorKind::GridMismatch, "quantile tables are on different grids");
    }
  }
  const double K = static_cast<double>(tables.size());
  std::vector<double> column(tables.size());
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t j = 0; j < tables.size(); ++j) column[j] = tables[j].values()[k];
    values[k] = pairwise_sum(column) / K;
  }
  return QuantileTable(grid, std::move(values));
}

IntervalEstimate interval_from_sorted(std::span<const double> sorted, double alpha) {
  check_level(alpha);
  if (sorted.empty()) throw Error(ErrorKind::EmptyDraws, "no draws to take quantiles of");
  const auto T = sorted.size();
  return {alpha, sorted[order_statistic_index(T, alpha / 2.0) - 1],
          sorted[order_statistic_index(T, 1.0 - alpha / 2.0) - 1]};
}

IntervalEstimate pie_interval(std::span<const std::vector<double>> subset_draws, double alpha) {
  check_level(alpha);
  if (subset_draws.empty()) throw Error(ErrorKind::EmptyDraws, "no shards to combine");
  std::vector<double> lowers(subset_draws.size());
  std::vector<double> uppers(subset_draws.size());
  for (std::size_t j = 0; j < subset_draws.size(); ++j) {
    if (subset_draws[j].size() == 1) {
      std::ostringstream msg;
      msg << "shard " << j << " has a single draw; at least 2 are required";
      throw Error(ErrorKind::InsufficientDraws, msg.str());
    }
    const auto sorted = sorted_copy(subset_draws[j]);
    const auto shard = interval_from_sorted(sorted, alpha);
    lowers[j] = shard.lower;
    uppers[j] = shard.upper;
  }
  const double K = static_cast<double>(subset_draws.size());
  return {alpha, pairwise_sum(lowers) / K, pairwise_sum(uppers) / K};
}

std::vector<double> barycenter_draws(std::span<const std::vector<double>> subset_draws) {
  if (subset_draws.empty()) throw Error(ErrorKind::EmptyDraws, "no shards to combine");
  const auto T = subset_draws.front().size();
  std::vector<std::vector<double>> sorted;
  sorted.reserve(subset_draws.size());
  for (const auto& draws : subset_draws) {
    if (draws.size() != T) {
      throw Error(ErrorKind::Shape, "barycenter atoms need the same draw count in every shard");
    }
    sorted.push_back(sorted_copy(draws));
  }
  const double K = static_cast<double>(subset_draws.size());
  std::vector<double> column(subset_draws.size());
  std::vector<double> atoms(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < sorted.size(); ++j) column[j] = sorted[j][t];
    atoms[t] = pairwise_sum(column) / K;
  }
  return atoms;
}

// ---------------------------------------------------------------------------
// Gaussian barycenter

namespace {

void check_approxes(std::span<const GaussianApprox> approxes) {
  if (approxes.empty()) throw Error(ErrorKind::EmptyDraws, "no gaussian approximations given");
  const auto d = approxes.front().mean.size();
  for (const auto& g : approxes) {
    if (g.mean.size() != d) throw Error(ErrorKind::Shape, "gaussian approximations differ in dimension");
  }
}

Eigen::MatrixXd sum_of_roots(std::span<const GaussianApprox> approxes,
                             const Eigen::MatrixXd& v_half) {
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(v_half.rows(), v_half.cols());
  for (const auto& g : approxes) total += linalg::sqrt_psd(v_half * g.cov * v_half);
  return total;
}

}  // namespace

double barycenter_residual(std::span<const GaussianApprox> approxes, const Eigen::MatrixXd& v) {
  check_approxes(approxes);
  const auto roots = sum_of_roots(approxes, linalg::sqrt_psd(v));
  return (roots - static_cast<double>(approxes.size()) * v).norm();
}

GaussianApprox gaussian_barycenter(std::span<const GaussianApprox> approxes) {
  check_approxes(approxes);
  const auto d = approxes.front().mean.size();
  const double K = static_cast<double>(approxes.size());

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(d, d);
  bool any_definite = false;
  for (const auto& g : approxes) {
    mean += g.mean;
    v += g.cov;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.cov, Eigen::EigenvaluesOnly);
    any_definite = any_definite || eig.eigenvalues().minCoeff() > 0.0;
  }
  if (!any_definite) {
    throw Error(ErrorKind::SingularMatrix, "gaussian barycenter needs at least one positive definite covariance");
  }
  mean /= K;
  v = linalg::symmetrize(v / K);

  // Undamped fixed point V <- V^-1/2 (K^-1 sum_j (V^1/2 V_j V^1/2)^1/2)^2 V^-1/2,
  // whose fixed points are exactly the solutions of the barycenter equation.
  // Once under tolerance, keep iterating while the residual still drops so
  // the result sits at the round-off floor rather than at the threshold.
  double residual = 0.0;
  double best_residual = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best = v;
  for (int iter = 0; iter <= kBarycenterMaxIterations; ++iter) {
    const Eigen::MatrixXd v_half = linalg::sqrt_psd(v);
    const Eigen::MatrixXd roots = sum_of_roots(approxes, v_half);
    residual = (roots - K * v).norm();
    if (residual < best_residual) {
      best_residual = residual;
      best = v;
    } else if (best_residual < kBarycenterTolerance) {
      break;
    }
    if (best_residual < kBarycenterTolerance * 1e-4) break;
    if (iter == kBarycenterMaxIterations) break;
    const Eigen::MatrixXd v_inv_half = linalg::inv_sqrt_spd(v, "barycenter iterate");
    const Eigen::MatrixXd avg = roots / K;
    v = linalg::symmetrize(v_inv_half * avg * avg * v_inv_half);
  }
  if (best_residual < kBarycenterTolerance) return GaussianApprox(mean, best);
  std::ostringstream msg;
  msg << "gaussian barycenter did not converge in " << kBarycenterMaxIterations
      << " iterations; last residual " << residual;
  throw Error(ErrorKind::ConvergenceFailure, msg.str());
}

// ---------------------------------------------------------------------------
// Consensus Monte Carlo

DrawMatrix consensus_combine(std::span<const DrawMatrix> subset_draws) {
  if (subset_draws.empty()) throw Error(ErrorKind::EmptyDraws, "no shards to combine");
  const auto T = subset_draws.front().T();
  const auto d = subset_draws.front().d();
  for (const auto& draws : subset_draws) {
    if (draws.T() != T || draws.d() != d) {
      throw Error(ErrorKind::Shape, "consensus combine needs equal T and d in every shard");
    }
  }
  if (subset_draws.size() == 1) {
    return DrawMatrix(subset_draws.front().values(), subset_draws.front().seed_used());
  }

  std::vector<Eigen::MatrixXd> weights;
  weights.reserve(subset_draws.size());
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(d, d);
  for (const auto& draws : subset_draws) {
    weights.push_back(linalg::ridged_inverse(linalg::sample_covariance(draws.values()),
                                             "shard sample covariance"));
    total += weights.back();
  }
  const Eigen::MatrixXd total_inv = linalg::inverse_spd(total, "combined consensus weight");

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(T, d);
  for (std::size_t j = 0; j < subset_draws.size(); ++j) {
    const Eigen::MatrixXd normalized = total_inv * weights[j];
    out += subset_draws[j].values() * normalized.transpose();
  }
  return DrawMatrix(std::move(out), subset_draws.front().seed_used());
}

}  // namespace pie
