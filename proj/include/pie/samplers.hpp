#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "pie/draws.hpp"
#include "pie/model.hpp"
#include "pie/rng.hpp"

namespace pie {

// ---------------------------------------------------------------------------
// Exact tempered conjugate posteriors

/// Gamma(shape, rate).
struct GammaParams {
  double shape;
  double rate;
  double mean() const noexcept { return shape / rate; }
  double variance() const noexcept { return shape / (rate * rate); }
};

/// Beta(alpha, beta).
struct BetaParams {
  double alpha;
  double beta;
  double mean() const noexcept { return alpha / (alpha + beta); }
  double variance() const noexcept {
    const double s = alpha + beta;
    return alpha * beta / (s * s * (s + 1.0));
  }
};

/// Normal-inverse-gamma posterior of the linear model:
/// sigma2 ~ Inverse-Gamma(shape, scale), beta | sigma2 ~ N(beta_star, sigma2 * precision^-1).
/// Marginally beta is multivariate t with 2*shape degrees of freedom.
struct NigParams {
  Vector beta_star;
  Matrix precision;
  double shape;
  double scale;

  /// Marginal covariance of beta: scale / (shape - 1) * precision^-1.
  Matrix beta_covariance() const;
  /// Marginal t scale matrix: scale / shape * precision^-1.
  Matrix beta_scale_matrix() const;
  double sigma2_mean() const noexcept { return scale / (shape - 1.0); }
  double degrees_of_freedom() const noexcept { return 2.0 * shape; }
};

GammaParams poisson_gamma_posterior(std::span<const double> y, double temper, double a, double b);
GammaParams exponential_gamma_posterior(std::span<const double> y, double temper, double a,
                                        double b);
BetaParams bernoulli_beta_posterior(std::span<const double> y, double temper, double a, double b);
NigParams normal_linear_posterior(const Vector& y, const Matrix& z, double temper,
                                  const Vector& mu, const Matrix& omega, double a, double b);

// ---------------------------------------------------------------------------
// Exact samplers. Output is a pure function of the arguments and the stream key.

DrawMatrix sample_gamma(const GammaParams& params, std::size_t T, const StreamKey& stream);
DrawMatrix sample_beta(const BetaParams& params, std::size_t T, const StreamKey& stream);
/// Columns are (beta_1..beta_p, sigma2).
DrawMatrix sample_nig(const NigParams& params, std::size_t T, const StreamKey& stream);

DrawMatrix sample_poisson_gamma(std::span<const double> shard_y, double temper, double a,
                                double b, std::size_t T, const StreamKey& stream);
DrawMatrix sample_exponential_gamma(std::span<const double> shard_y, double temper, double a,
                                    double b, std::size_t T, const StreamKey& stream);
DrawMatrix sample_bernoulli_beta(std::span<const double> shard_y, double temper, double a,
                                 double b, std::size_t T, const StreamKey& stream);
DrawMatrix sample_normal_linear_nig(const Vector& y, const Matrix& z, double temper,
                                    const Vector& mu, const Matrix& omega, double a, double b,
                                    std::size_t T, const StreamKey& stream);

/// Exact draws from the tempered posterior of any conjugate family.
DrawMatrix sample_conjugate(const TemperedTarget& target, std::size_t T, const StreamKey& stream);

// ---------------------------------------------------------------------------
// Random-walk Metropolis

struct ChainConfig {
  std::size_t total_iterations = 10000;
  double burn_fraction = 0.5;
  std::size_t thin = 5;
  /// Empty means "auto": adapt toward the target acceptance rate first.
  std::optional<double> proposal_scale;
  std::uint64_t seed = 0;

  /// floor(total_iterations * (1 - burn_fraction) / thin).
  std::size_t retained() const noexcept;
  /// Throws Config unless the fields are in range and retained() >= 2.
  void validate() const;
};

inline constexpr double kTargetAcceptance = 0.234;

/// Isotropic Gaussian random-walk Metropolis on the tempered target. With an
/// automatic proposal scale, a separate pre-phase tunes the scale and then
/// freezes it before the recorded chain starts. The stream key is
/// (cfg.seed, Shard, stream_index).
DrawMatrix sample_metropolis(const TemperedTarget& target, const Vector& init,
                             const ChainConfig& cfg, std::uint32_t stream_index = 0);

/// Starting point for a chain on this target: the shard MLE where it is cheap
/// and inside the support, otherwise the prior mean.
Vector default_init(const TemperedTarget& target);

}  // namespace pie
