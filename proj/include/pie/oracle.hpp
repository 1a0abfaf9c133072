#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "pie/combiner.hpp"
#include "pie/model.hpp"
#include "pie/samplers.hpp"

namespace pie {

/// Closed-form (tempered) posterior of a conjugate family.
struct ExactPosterior {
  Family family;
  std::variant<GammaParams, BetaParams, NigParams> params;
};

/// Posterior of `data` under `model` with likelihood power `temper`; temper 1
/// gives the full-data posterior. Throws Config for custom models.
ExactPosterior exact_posterior(const ModelSpec& model, const ObservationSet& data,
                               double temper = 1.0);

DrawMatrix sample_exact(const ExactPosterior& posterior, std::size_t T, const StreamKey& stream);

/// Quantile table of a' theta + b computed from closed-form quantiles, when
/// the functional's law is available in closed form: any functional of a
/// scalar family, a functional of beta alone (Student t), or of sigma2 alone
/// (inverse gamma) in the linear model. Otherwise nullopt.
std::optional<QuantileTable> analytic_quantile_table(const ExactPosterior& posterior,
                                                     const LinearFunctional& f,
                                                     const std::vector<double>& grid);

/// Mean and variance of a' theta + b under the posterior, when finite and
/// available in closed form.
std::optional<std::pair<double, double>> analytic_moments(const ExactPosterior& posterior,
                                                          const LinearFunctional& f);

}  // namespace pie
