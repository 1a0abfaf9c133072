#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace pie {

/// Chain diagnostics attached to Metropolis output.
struct SamplerDiagnostics {
  double acceptance_rate = 1.0;
  double proposal_scale = 0.0;
};

/// T x d posterior draws for one shard or one combined posterior.
class DrawMatrix {
 public:
  /// Throws EmptyDraws for T == 0 and InvalidData for non-finite entries.
  explicit DrawMatrix(Eigen::MatrixXd values, std::uint64_t seed_used = 0,
                      std::optional<std::size_t> shard_id = std::nullopt);

  std::size_t T() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  std::uint64_t seed_used() const noexcept { return seed_used_; }
  const std::optional<std::size_t>& shard_id() const noexcept { return shard_id_; }

  const std::optional<SamplerDiagnostics>& diagnostics() const noexcept { return diagnostics_; }
  void set_diagnostics(SamplerDiagnostics diag) { diagnostics_ = diag; }

  /// Column j as a std::vector.
  std::vector<double> column(std::size_t j) const;

  friend bool operator==(const DrawMatrix& lhs, const DrawMatrix& rhs);

 private:
  Eigen::MatrixXd values_;
  std::uint64_t seed_used_;
  std::optional<std::size_t> shard_id_;
  std::optional<SamplerDiagnostics> diagnostics_;
};

}  // namespace pie
