#include "pie/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pie/error.hpp"

namespace pie {
namespace {

constexpr double kKernelCutoff = 8.0;

void check_same_grid(const QuantileTable& a, const QuantileTable& b) {
  if (a.grid() != b.grid()) {
    throw Error(ErrorKind::GridMismatch, "quantile tables are on different grids");
  }
}

// Linear-interpolation quantile of sorted data.
double interpolated_quantile(const std::vector<double>& sorted, double u) {
  const double pos = u * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double mean_of(std::span<const double> x) {
  return pairwise_sum(x) / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x, double mean) {
  std::vector<double> squares(x.size());
  std::transform(x.begin(), x.end(), squares.begin(),
                 [mean](double v) { return (v - mean) * (v - mean); });
  return pairwise_sum(squares) / static_cast<double>(x.size() - 1);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double total = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) total += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return total;
}

std::vector<double> sorted_checked(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw Error(ErrorKind::InsufficientDraws, "density estimation needs at least 2 samples");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.back() > sorted.front())) {
    throw Error(ErrorKind::DegenerateSample, "samples have zero spread");
  }
  return sorted;
}

std::vector<double> kde_sorted(const std::vector<double>& sorted, double h,
                               std::span<const double> x) {
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), x[i] - kKernelCutoff * h);
    const auto last = std::upper_bound(first, sorted.end(), x[i] + kKernelCutoff * h);
    double total = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (x[i] - *it) / h;
      total += std::exp(-0.5 * z * z);
    }
    out[i] = total * norm;
  }
  return out;
}

double bandwidth_of_sorted(const std::vector<double>& sorted) {
  const double mean = mean_of(sorted);
  const double sd = std::sqrt(variance_of(sorted, mean));
  const double iqr = interpolated_quantile(sorted, 0.75) - interpolated_quantile(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(sorted.size()), -0.2);
}

}  // namespace

double w2_from_tables(const QuantileTable& a, const QuantileTable& b) {
  check_same_grid(a, b);
  const auto& grid = a.grid();
  const std::size_t G = grid.size();
  std::vector<double> terms(G);
  for (std::size_t k = 0; k < G; ++k) {
    const double left = k == 0 ? 0.0 : 0.5 * (grid[k - 1] + grid[k]);
    const double right = k + 1 == G ? 1.0 : 0.5 * (grid[k] + grid[k + 1]);
    const double diff = a.values()[k] - b.values()[k];
    terms[k] = diff * diff * (right - left);
  }
  return std::sqrt(pairwise_sum(terms));
}

double silverman_bandwidth(std::span<const double> samples) {
  return bandwidth_of_sorted(sorted_checked(samples));
}

std::vector<double> kde_evaluate(std::span<const double> samples, double bandwidth,
                                 std::span<const double> x) {
  if (!(bandwidth > 0.0)) throw Error(ErrorKind::Config, "bandwidth must be positive");
  return kde_sorted(sorted_checked(samples), bandwidth, x);
}

DensityEstimate kde_1d(std::span<const double> samples, std::optional<double> bandwidth) {
  const auto sorted = sorted_checked(samples);
  if (bandwidth && !(*bandwidth > 0.0)) throw Error(ErrorKind::Config, "bandwidth must be positive");
  const double h = bandwidth ? *bandwidth : bandwidth_of_sorted(sorted);
  DensityEstimate out;
  out.bandwidth = h;
  out.grid_x = linspace(sorted.front() - 3.0 * h, sorted.back() + 3.0 * h, kKdeGridPoints);
  out.density = kde_sorted(sorted, h, out.grid_x);
  const double mass = trapezoid(out.grid_x, out.density);
  for (double& v : out.density) v /= mass;
  return out;
}

double accuracy(std::span<const double> q_samples, std::span<const double> pi_samples) {
  const auto q_sorted = sorted_checked(q_samples);
  const auto pi_sorted = sorted_checked(pi_samples);
  const double hq = bandwidth_of_sorted(q_sorted);
  const double hp = bandwidth_of_sorted(pi_sorted);
  const double lo = std::min(q_sorted.front() - 3.0 * hq, pi_sorted.front() - 3.0 * hp);
  const double hi = std::max(q_sorted.back() + 3.0 * hq, pi_sorted.back() + 3.0 * hp);
  const auto x = linspace(lo, hi, kAccuracyGridPoints);
  const auto q = kde_sorted(q_sorted, hq, x);
  const auto p = kde_sorted(pi_sorted, hp, x);
  std::vector<double> diff(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) diff[i] = std::abs(q[i] - p[i]);
  const double value = 1.0 - 0.5 * trapezoid(x, diff);
  return std::clamp(value, 0.0, 1.0);
}

BiasVariance bias_variance_summary(std::span<const double> draws, double xi0) {
  if (draws.size() < 2) {
    throw Error(ErrorKind::InsufficientDraws, "bias/variance summary needs at least 2 draws");
  }
  const double mean = mean_of(draws);
  return {mean - xi0, variance_of(draws, mean)};
}

double quantile_gap(const QuantileTable& a, const QuantileTable& b, double u1, double u2) {
  check_same_grid(a, b);
  if (!(u1 < u2)) throw Error(ErrorKind::Range, "quantile gap needs u1 < u2");
  double gap = -1.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double u = a.grid()[k];
    if (u < u1 || u > u2) continue;
    gap = std::max(gap, std::abs(a.values()[k] - b.values()[k]));
  }
  if (gap < 0.0) {
    std::ostringstream msg;
    msg << "no grid points inside [" << u1 << ", " << u2 << "]";
    throw Error(ErrorKind::Range, msg.str());
  }
  return gap;
}

RateFit rate_fit(std::span<const double> ns, std::span<const double> w2s) {
  if (ns.size() != w2s.size() || ns.size() < 3) {
    throw Error(ErrorKind::Shape, "rate fit needs at least 3 matching (n, w2) pairs");
  }
  RateFit fit;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(ns[i] > 0.0) || !(w2s[i] > 0.0)) {
      throw Error(ErrorKind::Domain, "rate fit needs strictly positive n and w2");
    }
    fit.log_n.push_back(std::log(ns[i]));
    fit.log_w2.push_back(std::log(w2s[i]));
  }
  const double mx = mean_of(fit.log_n);
  const double my = mean_of(fit.log_w2);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sxx += (fit.log_n[i] - mx) * (fit.log_n[i] - mx);
    sxy += (fit.log_n[i] - mx) * (fit.log_w2[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::Domain, "rate fit needs at least two distinct n");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace pie
