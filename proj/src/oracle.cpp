#include "pie/oracle.hpp"

#include <cmath>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "pie/error.hpp"

namespace pie {
namespace {

template <typename Dist>
QuantileTable scalar_table(const Dist& dist, double slope, double offset,
                           const std::vector<double>& grid) {
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    // A decreasing map reverses the order of quantiles.
    const double q = slope > 0.0 ? boost::math::quantile(dist, grid[k])
                                 : boost::math::quantile(dist, 1.0 - grid[k]);
    values[k] = slope * q + offset;
  }
  return QuantileTable(grid, std::move(values));
}

void check_dim(const LinearFunctional& f, std::size_t d) {
  if (static_cast<std::size_t>(f.a.size()) != d) {
    throw Error(ErrorKind::Shape, "functional dimension does not match the posterior");
  }
}

}  // namespace

ExactPosterior exact_posterior(const ModelSpec& model, const ObservationSet& data, double temper) {
  model.check_data(data);
  const auto& y = data.responses();
  const std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));
  switch (model.family()) {
    case Family::PoissonGamma:
      return {model.family(), poisson_gamma_posterior(ys, temper, model.a(), model.b())};
    case Family::ExponentialGamma:
      return {model.family(), exponential_gamma_posterior(ys, temper, model.a(), model.b())};
    case Family::BernoulliBeta:
      return {model.family(), bernoulli_beta_posterior(ys, temper, model.a(), model.b())};
    case Family::NormalLinearNig:
      return {model.family(), normal_linear_posterior(y, *data.design(), temper, model.mu(),
                                                      model.omega(), model.a(), model.b())};
    case Family::Custom:
      break;
  }
  throw Error(ErrorKind::Config, "custom log-density models have no closed-form posterior");
}

DrawMatrix sample_exact(const ExactPosterior& posterior, std::size_t T, const StreamKey& stream) {
  return std::visit(
      [&](const auto& params) -> DrawMatrix {
        using P = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<P, GammaParams>) return sample_gamma(params, T, stream);
        else if constexpr (std::is_same_v<P, BetaParams>) return sample_beta(params, T, stream);
        else return sample_nig(params, T, stream);
      },
      posterior.params);
}

std::optional<QuantileTable> analytic_quantile_table(const ExactPosterior& posterior,
                                                     const LinearFunctional& f,
                                                     const std::vector<double>& grid) {
  if (const auto* g = std::get_if<GammaParams>(&posterior.params)) {
    check_dim(f, 1);
    return scalar_table(boost::math::gamma_distribution<double>(g->shape, 1.0 / g->rate), f.a[0],
                        f.b, grid);
  }
  if (const auto* be = std::get_if<BetaParams>(&posterior.params)) {
    check_dim(f, 1);
    return scalar_table(boost::math::beta_distribution<double>(be->alpha, be->beta), f.a[0], f.b,
                        grid);
  }
  const auto& nig = std::get<NigParams>(posterior.params);
  const auto p = nig.beta_star.size();
  check_dim(f, static_cast<std::size_t>(p) + 1);
  const double sigma_coef = f.a[p];
  const Vector beta_coef = f.a.head(p);
  if (sigma_coef == 0.0) {
    const double location = beta_coef.dot(nig.beta_star) + f.b;
    const double scale = std::sqrt(beta_coef.dot(nig.beta_scale_matrix() * beta_coef));
    return scalar_table(boost::math::students_t_distribution<double>(nig.degrees_of_freedom()),
                        scale, location, grid);
  }
  if ((beta_coef.array() == 0.0).all()) {
    // sigma2 = scale / G with G ~ Gamma(shape, 1).
    boost::math::gamma_distribution<double> g(nig.shape, 1.0);
    std::vector<double> values(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double u = sigma_coef > 0.0 ? grid[k] : 1.0 - grid[k];
      values[k] = sigma_coef * nig.scale / boost::math::quantile(g, 1.0 - u) + f.b;
    }
    return QuantileTable(grid, std::move(values));
  }
  return std::nullopt;
}

std::optional<std::pair<double, double>> analytic_moments(const ExactPosterior& posterior,
                                                          const LinearFunctional& f) {
  if (const auto* g = std::get_if<GammaParams>(&posterior.params)) {
    check_dim(f, 1);
    return std::pair{f.a[0] * g->mean() + f.b, f.a[0] * f.a[0] * g->variance()};
  }
  if (const auto* be = std::get_if<BetaParams>(&posterior.params)) {
    check_dim(f, 1);
    return std::pair{f.a[0] * be->mean() + f.b, f.a[0] * f.a[0] * be->variance()};
  }
  const auto& nig = std::get<NigParams>(posterior.params);
  const auto p = nig.beta_star.size();
  check_dim(f, static_cast<std::size_t>(p) + 1);
  if (f.a[p] != 0.0 || !(nig.shape > 1.0)) return std::nullopt;
  const Vector coef = f.a.head(p);
  return std::pair{coef.dot(nig.beta_star) + f.b, coef.dot(nig.beta_covariance() * coef)};
}

}  // namespace pie
