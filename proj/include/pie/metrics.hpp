#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pie/combiner.hpp"

namespace pie {

struct DensityEstimate {
  std::vector<double> grid_x;
  std::vector<double> density;
  double bandwidth;
};

struct RateFit {
  std::vector<double> log_n;
  std::vector<double> log_w2;
  double slope;
  double intercept;
};

struct BiasVariance {
  double bias;
  double variance;
};

inline constexpr std::size_t kKdeGridPoints = 512;
inline constexpr std::size_t kAccuracyGridPoints = 2048;

/// Wasserstein-2 distance between two quantile tables on a shared grid. Each
/// grid point stands for the cell between the midpoints to its neighbours,
/// with the outer cells running to 0 and 1.
double w2_from_tables(const QuantileTable& a, const QuantileTable& b);

/// Silverman's rule 0.9 * min(sd, IQR / 1.34) * T^-1/5 (falls back to sd
/// when the IQR is zero). Throws DegenerateSample for zero spread.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian-kernel density on 512 points spanning the sample range extended
/// by 3 bandwidths, renormalized to unit trapezoid mass. A nullopt
/// bandwidth selects Silverman's rule.
DensityEstimate kde_1d(std::span<const double> samples,
                       std::optional<double> bandwidth = std::nullopt);

/// Kernel density of `samples` with the given bandwidth evaluated at `x`.
std::vector<double> kde_evaluate(std::span<const double> samples, double bandwidth,
                                 std::span<const double> x);

/// 1 - (1/2) * integral |q - pi|, with both densities estimated by Silverman
/// KDEs on a shared grid covering both samples. Clamped to [0, 1].
double accuracy(std::span<const double> q_samples, std::span<const double> pi_samples);

/// Sample mean minus xi0 and sample variance (denominator T - 1).
BiasVariance bias_variance_summary(std::span<const double> draws, double xi0);

/// Largest |A - B| over grid points in [u1, u2].
double quantile_gap(const QuantileTable& a, const QuantileTable& b, double u1, double u2);

/// Least-squares fit of log w2 on log n.
RateFit rate_fit(std::span<const double> ns, std::span<const double> w2s);

}  // namespace pie
