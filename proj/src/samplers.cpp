#include "pie/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "pie/error.hpp"

namespace pie {
namespace {

void check_common(std::span<const double> y, double temper, double a, double b) {
  if (y.empty()) throw Error(ErrorKind::EmptyShard, "shard has no observations");
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    std::ostringstream msg;
    msg << "hyperparameters must be positive, got a=" << a << ", b=" << b;
    throw Error(ErrorKind::InvalidHyperparameter, msg.str());
  }
  if (!(temper >= 1.0) || !std::isfinite(temper)) {
    throw Error(ErrorKind::Config, "temper must be a finite real >= 1");
  }
}

double sum_of(std::span<const double> y) { return std::accumulate(y.begin(), y.end(), 0.0); }

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void require_draw_count(std::size_t T) {
  if (T == 0) throw Error(ErrorKind::Config, "requested zero draws");
}

}  // namespace

// ---------------------------------------------------------------------------
// Posterior parameters

Matrix NigParams::beta_covariance() const {
  return (scale / (shape - 1.0)) * precision.llt().solve(Matrix::Identity(precision.rows(), precision.cols()));
}

Matrix NigParams::beta_scale_matrix() const {
  return (scale / shape) * precision.llt().solve(Matrix::Identity(precision.rows(), precision.cols()));
}

GammaParams poisson_gamma_posterior(std::span<const double> y, double temper, double a, double b) {
  check_common(y, temper, a, b);
  return {temper * sum_of(y) + a, temper * static_cast<double>(y.size()) + b};
}

GammaParams exponential_gamma_posterior(std::span<const double> y, double temper, double a,
                                        double b) {
  check_common(y, temper, a, b);
  return {temper * static_cast<double>(y.size()) + a, temper * sum_of(y) + b};
}

BetaParams bernoulli_beta_posterior(std::span<const double> y, double temper, double a, double b) {
  check_common(y, temper, a, b);
  const double ones = sum_of(y);
  return {temper * ones + a, temper * (static_cast<double>(y.size()) - ones) + b};
}

NigParams normal_linear_posterior(const Vector& y, const Matrix& z, double temper,
                                  const Vector& mu, const Matrix& omega, double a, double b) {
  if (y.size() == 0) throw Error(ErrorKind::EmptyShard, "shard has no observations");
  if (z.rows() != y.size() || z.cols() != mu.size() || omega.rows() != mu.size() ||
      omega.cols() != mu.size()) {
    throw Error(ErrorKind::Shape, "normal linear posterior: inconsistent y, Z, mu, omega shapes");
  }
  if (!(a > 4.0) || !(b > 0.0)) {
    throw Error(ErrorKind::InvalidHyperparameter, "normal linear model needs a > 4 and b > 0");
  }
  if (!(temper >= 1.0) || !std::isfinite(temper)) {
    throw Error(ErrorKind::Config, "temper must be a finite real >= 1");
  }
  const auto p = mu.size();
  Eigen::LLT<Matrix> omega_llt(omega);
  if (omega_llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularMatrix, "omega is singular or not positive definite");
  }
  const Matrix omega_inv = omega_llt.solve(Matrix::Identity(p, p));
  const Matrix ztz = z.transpose() * z;
  const Vector zty = z.transpose() * y;

  NigParams out;
  out.precision = temper * ztz + omega_inv;
  out.precision = (0.5 * (out.precision + out.precision.transpose())).eval();
  Eigen::LLT<Matrix> llt(out.precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularMatrix,
                "posterior precision temper*Z'Z + omega^-1 is singular");
  }
  out.beta_star = llt.solve(temper * zty + omega_inv * mu);
  // b* = b + temper*|y - Z beta*|^2 + (beta* - mu)' omega^-1 (beta* - mu), the
  // completed-square form of b + temper*y'y + mu' omega^-1 mu - beta*' P beta*.
  const Vector resid = y - z * out.beta_star;
  const Vector shift = out.beta_star - mu;
  const double b_star = b + temper * resid.squaredNorm() + shift.dot(omega_inv * shift);
  out.shape = 0.5 * (a + temper * static_cast<double>(y.size()));
  out.scale = 0.5 * b_star;
  return out;
}

// ---------------------------------------------------------------------------
// Exact draws

DrawMatrix sample_gamma(const GammaParams& params, std::size_t T, const StreamKey& stream) {
  require_draw_count(T);
  if (!(params.shape > 0.0) || !(params.rate > 0.0)) {
    throw Error(ErrorKind::InvalidHyperparameter, "gamma parameters must be positive");
  }
  PhiloxStream rng(stream);
  boost::random::gamma_distribution<double> gamma(params.shape, 1.0 / params.rate);
  Matrix values(static_cast<Eigen::Index>(T), 1);
  for (Eigen::Index t = 0; t < values.rows(); ++t) values(t, 0) = gamma(rng);
  return DrawMatrix(std::move(values), stream.seed, stream.index);
}

DrawMatrix sample_beta(const BetaParams& params, std::size_t T, const StreamKey& stream) {
  require_draw_count(T);
  if (!(params.alpha > 0.0) || !(params.beta > 0.0)) {
    throw Error(ErrorKind::InvalidHyperparameter, "beta parameters must be positive");
  }
  PhiloxStream rng(stream);
  boost::random::beta_distribution<double> beta(params.alpha, params.beta);
  Matrix values(static_cast<Eigen::Index>(T), 1);
  for (Eigen::Index t = 0; t < values.rows(); ++t) values(t, 0) = beta(rng);
  return DrawMatrix(std::move(values), stream.seed, stream.index);
}

DrawMatrix sample_nig(const NigParams& params, std::size_t T, const StreamKey& stream) {
  require_draw_count(T);
  const auto p = params.beta_star.size();
  Eigen::LLT<Matrix> llt(params.precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularMatrix, "posterior precision is singular");
  }
  PhiloxStream rng(stream);
  boost::random::gamma_distribution<double> gamma(params.shape, 1.0);
  boost::random::normal_distribution<double> normal;
  Matrix values(static_cast<Eigen::Index>(T), p + 1);
  Vector noise(p);
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    const double sigma2 = params.scale / gamma(rng);
    for (Eigen::Index k = 0; k < p; ++k) noise[k] = normal(rng);
    // P = L L', so L'^-1 noise has covariance P^-1.
    const Vector offset = llt.matrixU().solve(noise);
    values.row(t).head(p) = (params.beta_star + std::sqrt(sigma2) * offset).transpose();
    values(t, p) = sigma2;
  }
  return DrawMatrix(std::move(values), stream.seed, stream.index);
}

DrawMatrix sample_poisson_gamma(std::span<const double> shard_y, double temper, double a,
                                double b, std::size_t T, const StreamKey& stream) {
  return sample_gamma(poisson_gamma_posterior(shard_y, temper, a, b), T, stream);
}

DrawMatrix sample_exponential_gamma(std::span<const double> shard_y, double temper, double a,
                                    double b, std::size_t T, const StreamKey& stream) {
  return sample_gamma(exponential_gamma_posterior(shard_y, temper, a, b), T, stream);
}

DrawMatrix sample_bernoulli_beta(std::span<const double> shard_y, double temper, double a,
                                 double b, std::size_t T, const StreamKey& stream) {
  return sample_beta(bernoulli_beta_posterior(shard_y, temper, a, b), T, stream);
}

DrawMatrix sample_normal_linear_nig(const Vector& y, const Matrix& z, double temper,
                                    const Vector& mu, const Matrix& omega, double a, double b,
                                    std::size_t T, const StreamKey& stream) {
  return sample_nig(normal_linear_posterior(y, z, temper, mu, omega, a, b), T, stream);
}

DrawMatrix sample_conjugate(const TemperedTarget& target, std::size_t T, const StreamKey& stream) {
  const auto& model = target.model();
  const auto& y = target.shard().responses();
  switch (model.family()) {
    case Family::PoissonGamma:
      return sample_poisson_gamma(as_span(y), target.temper(), model.a(), model.b(), T, stream);
    case Family::ExponentialGamma:
      return sample_exponential_gamma(as_span(y), target.temper(), model.a(), model.b(), T, stream);
    case Family::BernoulliBeta:
      return sample_bernoulli_beta(as_span(y), target.temper(), model.a(), model.b(), T, stream);
    case Family::NormalLinearNig:
      return sample_normal_linear_nig(y, *target.shard().design(), target.temper(), model.mu(),
                                      model.omega(), model.a(), model.b(), T, stream);
    case Family::Custom:
      break;
  }
  throw Error(ErrorKind::Config, "custom log-density targets have no exact sampler");
}

// ---------------------------------------------------------------------------
// Random-walk Metropolis

std::size_t ChainConfig::retained() const noexcept {
  if (thin == 0 || !(burn_fraction >= 0.0 && burn_fraction < 1.0)) return 0;
  return static_cast<std::size_t>(
      std::floor(static_cast<double>(total_iterations) * (1.0 - burn_fraction) /
                 static_cast<double>(thin)));
}

void ChainConfig::validate() const {
  if (!(burn_fraction >= 0.0 && burn_fraction < 1.0)) {
    throw Error(ErrorKind::Config, "burn_fraction must lie in [0, 1)");
  }
  if (thin == 0) throw Error(ErrorKind::Config, "thin must be at least 1");
  if (proposal_scale && !(*proposal_scale > 0.0 && std::isfinite(*proposal_scale))) {
    throw Error(ErrorKind::Config, "proposal_scale must be positive");
  }
  if (retained() < 2) {
    std::ostringstream msg;
    msg << "chain keeps " << retained() << " draws; at least 2 are required";
    throw Error(ErrorKind::Config, msg.str());
  }
}

namespace {

class RandomWalk {
 public:
  RandomWalk(const TemperedTarget& target, Vector start, PhiloxStream& rng)
      : target_(target), rng_(rng), current_(std::move(start)),
        proposal_(current_.size()) {
    current_lp_ = target_.log_density(current_);
  }

  bool step(double scale) {
    for (Eigen::Index k = 0; k < current_.size(); ++k) {
      proposal_[k] = current_[k] + scale * normal_(rng_);
    }
    const double lp = target_.log_density(proposal_);
    const double log_u = std::log(rng_.uniform_open());
    if (std::isfinite(lp) && log_u < lp - current_lp_) {
      current_.swap(proposal_);
      current_lp_ = lp;
      return true;
    }
    return false;
  }

  const Vector& current() const noexcept { return current_; }

 private:
  const TemperedTarget& target_;
  PhiloxStream& rng_;
  boost::random::normal_distribution<double> normal_;
  Vector current_;
  Vector proposal_;
  double current_lp_;
};

// Batch-wise Robbins-Monro on log(scale); the scale is frozen afterwards.
double adapt_scale(RandomWalk& walk, double scale, std::size_t total_iterations) {
  constexpr std::size_t kBatch = 100;
  const std::size_t batches = std::clamp<std::size_t>(total_iterations / (5 * kBatch), 20, 200);
  double log_scale = std::log(scale);
  std::size_t settled = 0;
  for (std::size_t batch = 0; batch < batches; ++batch) {
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < kBatch; ++i) accepted += walk.step(std::exp(log_scale));
    const double rate = static_cast<double>(accepted) / kBatch;
    if (accepted == 0) {
      log_scale -= 1.5;
    } else if (rate >= 0.9) {
      log_scale += 1.5;
    } else {
      ++settled;
      log_scale += 3.0 / std::sqrt(static_cast<double>(settled)) * (rate - kTargetAcceptance);
    }
  }
  return std::exp(log_scale);
}

}  // namespace

DrawMatrix sample_metropolis(const TemperedTarget& target, const Vector& init,
                             const ChainConfig& cfg, std::uint32_t stream_index) {
  cfg.validate();
  const auto d = target.model().parameter_dim();
  if (static_cast<std::size_t>(init.size()) != d) {
    throw Error(ErrorKind::Shape, "initial point has the wrong dimension");
  }
  if (!init.allFinite() || !std::isfinite(target.log_density(init))) {
    throw Error(ErrorKind::InvalidInit, "target log density is not finite at the initial point");
  }

  PhiloxStream rng({cfg.seed, StreamPurpose::Shard, stream_index});
  RandomWalk walk(target, init, rng);

  double scale = 0.0;
  if (cfg.proposal_scale) {
    scale = *cfg.proposal_scale;
  } else {
    const double magnitude = std::max(1.0, init.cwiseAbs().maxCoeff());
    scale = adapt_scale(walk, 0.1 * magnitude, cfg.total_iterations);
  }

  const std::size_t kept = cfg.retained();
  const std::size_t burn = cfg.total_iterations - kept * cfg.thin;
  Matrix values(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(d));
  std::size_t accepted = 0;
  Eigen::Index row = 0;
  for (std::size_t it = 0; it < cfg.total_iterations; ++it) {
    accepted += walk.step(scale);
    if (it >= burn && (it - burn + 1) % cfg.thin == 0) {
      values.row(row++) = walk.current().transpose();
    }
  }

  DrawMatrix out(std::move(values), cfg.seed, stream_index);
  out.set_diagnostics({static_cast<double>(accepted) / static_cast<double>(cfg.total_iterations),
                       scale});
  return out;
}

Vector default_init(const TemperedTarget& target) {
  const auto& model = target.model();
  const auto& y = target.shard().responses();
  const double mean = y.mean();
  switch (model.family()) {
    case Family::PoissonGamma:
      return Vector::Constant(1, mean > 0.0 ? mean : model.a() / model.b());
    case Family::ExponentialGamma:
      return Vector::Constant(1, 1.0 / mean);
    case Family::BernoulliBeta:
      return Vector::Constant(1, (mean > 0.0 && mean < 1.0) ? mean
                                                           : model.a() / (model.a() + model.b()));
    case Family::NormalLinearNig: {
      const Matrix& z = *target.shard().design();
      const auto p = z.cols();
      Vector theta(p + 1);
      Eigen::LDLT<Matrix> ldlt(z.transpose() * z);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
          (ldlt.vectorD().array() > 1e-12).all()) {
        theta.head(p) = ldlt.solve(z.transpose() * y);
      } else {
        theta.head(p) = model.mu();
      }
      const double rss = (y - z * theta.head(p)).squaredNorm() / static_cast<double>(y.size());
      theta[p] = rss > 0.0 ? rss : model.b() / (model.a() - 2.0);
      return theta;
    }
    case Family::Custom:
      break;
  }
  return Vector::Zero(static_cast<Eigen::Index>(model.parameter_dim()));
}

}  // namespace pie
