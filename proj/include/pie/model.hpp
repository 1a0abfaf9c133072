#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pie/draws.hpp"

namespace pie {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Responses plus an optional design matrix. Immutable once built.
class ObservationSet {
 public:
  ObservationSet(Vector responses, std::optional<Matrix> design = std::nullopt,
                 std::string provenance = {});

  std::size_t n() const noexcept { return static_cast<std::size_t>(responses_.size()); }
  /// Number of design columns; 0 for univariate data.
  std::size_t p() const noexcept {
    return design_ ? static_cast<std::size_t>(design_->cols()) : 0;
  }

  const Vector& responses() const noexcept { return responses_; }
  const std::optional<Matrix>& design() const noexcept { return design_; }
  const std::string& provenance() const noexcept { return provenance_; }

  /// Rows selected by `indices`, in the given order.
  ObservationSet subset(std::span<const std::size_t> indices) const;

 private:
  Vector responses_;
  std::optional<Matrix> design_;
  std::string provenance_;
};

/// Disjoint assignment of n observation indices to K shards.
class PartitionPlan {
 public:
  PartitionPlan(std::size_t shard_count, std::vector<std::uint32_t> assignments);

  std::size_t shard_count() const noexcept { return shard_sizes_.size(); }
  std::size_t n() const noexcept { return assignments_.size(); }
  const std::vector<std::uint32_t>& assignments() const noexcept { return assignments_; }
  const std::vector<std::size_t>& shard_sizes() const noexcept { return shard_sizes_; }

  /// Observation indices of one shard, ascending.
  std::vector<std::size_t> shard_indices(std::size_t shard) const;

 private:
  std::vector<std::uint32_t> assignments_;
  std::vector<std::size_t> shard_sizes_;
};

/// Random permutation of 0..n-1 dealt round-robin into K shards, so the first
/// n mod K shards get one extra observation. Pure function of its arguments.
PartitionPlan partition(std::size_t n, std::size_t shard_count, std::uint64_t seed);

enum class Family {
  PoissonGamma,
  ExponentialGamma,
  BernoulliBeta,
  NormalLinearNig,
  Custom,
};

std::string_view to_string(Family family) noexcept;
Family family_from_string(std::string_view name);

/// User-supplied model: shard log-likelihood and log-prior. Either may return
/// -infinity outside the support.
struct CustomLogDensity {
  std::function<double(const Vector& theta, const ObservationSet& shard)> log_likelihood;
  std::function<double(const Vector& theta)> log_prior;
  std::size_t dim = 1;
};

/// Likelihood family plus prior hyperparameters.
///
/// Gamma/Beta families use (a, b): a Gamma(a, b) prior with rate b on the
/// Poisson/exponential rate, or Beta(a, b) on the Bernoulli probability. The
/// normal linear model uses beta | sigma2 ~ N(mu, sigma2 * omega) and
/// sigma2 ~ Inverse-Gamma(a/2, b/2), with parameter vector (beta, sigma2).
class ModelSpec {
 public:
  static ModelSpec poisson_gamma(double a, double b);
  static ModelSpec exponential_gamma(double a, double b);
  static ModelSpec bernoulli_beta(double a, double b);
  static ModelSpec normal_linear_nig(Vector mu, Matrix omega, double a, double b);
  static ModelSpec custom(CustomLogDensity density);

  Family family() const noexcept { return family_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  const Vector& mu() const noexcept { return mu_; }
  const Matrix& omega() const noexcept { return omega_; }
  const Matrix& omega_inverse() const noexcept { return omega_inverse_; }
  const CustomLogDensity& custom_density() const noexcept { return custom_; }

  /// Length of the parameter vector theta.
  std::size_t parameter_dim() const noexcept;
  bool is_conjugate() const noexcept { return family_ != Family::Custom; }

  /// Log prior kernel; -infinity outside the support.
  double log_prior(const Vector& theta) const;

  /// Throws InvalidData when `data` cannot come from this family.
  void check_data(const ObservationSet& data) const;

 private:
  explicit ModelSpec(Family family) : family_(family) {}

  Family family_;
  double a_ = 1.0;
  double b_ = 1.0;
  Vector mu_;
  Matrix omega_;
  Matrix omega_inverse_;
  CustomLogDensity custom_;
};

/// Shard log-posterior with the likelihood raised to the power `temper`.
///
/// Sufficient statistics are computed once at construction, so evaluation is
/// O(1) for the scalar families and O(p^2) for the linear model. Additive
/// constants are fixed per instance but otherwise unspecified; only
/// differences are meaningful.
class TemperedTarget {
 public:
  TemperedTarget(ModelSpec model, ObservationSet shard, double temper);

  const ModelSpec& model() const noexcept { return model_; }
  const ObservationSet& shard() const noexcept { return shard_; }
  double temper() const noexcept { return temper_; }

  double log_likelihood(const Vector& theta) const;
  double log_density(const Vector& theta) const;

 private:
  ModelSpec model_;
  ObservationSet shard_;
  double temper_;

  double sum_y_ = 0.0;
  double sum_log_factorial_ = 0.0;
  // linear model
  Matrix ztz_;
  Vector zty_;
  double yty_ = 0.0;
};

/// temper * shard log-likelihood + log prior, or -infinity outside the support.
double tempered_log_density(const TemperedTarget& target, const Vector& theta);

/// Temper for a shard of size m out of n observations: n / m.
double shard_temper(std::size_t n, std::size_t shard_size);

/// xi = a' theta + b.
struct LinearFunctional {
  LinearFunctional(Vector coefficients, double offset = 0.0);

  /// Coordinate projection e_index.
  static LinearFunctional coordinate(std::size_t dim, std::size_t index);

  Vector a;
  double b;
};

/// Element t is a' theta_t + b.
std::vector<double> apply_functional(const LinearFunctional& f, const DrawMatrix& draws);

}  // namespace pie
