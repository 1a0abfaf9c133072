#include "pie/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/random/uniform_int_distribution.hpp>

#include "pie/error.hpp"
#include "pie/rng.hpp"

namespace pie {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream msg;
    msg << "hyperparameter " << name << " must be positive and finite, got " << value;
    throw Error(ErrorKind::InvalidHyperparameter, msg.str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ObservationSet

ObservationSet::ObservationSet(Vector responses, std::optional<Matrix> design,
                               std::string provenance)
    : responses_(std::move(responses)), design_(std::move(design)),
      provenance_(std::move(provenance)) {
  if (responses_.size() == 0) {
    throw Error(ErrorKind::InvalidData, "observation set needs at least one response");
  }
  if (!responses_.allFinite()) {
    throw Error(ErrorKind::InvalidData, "responses contain non-finite entries");
  }
  if (design_) {
    if (design_->rows() != responses_.size()) {
      std::ostringstream msg;
      msg << "design has " << design_->rows() << " rows but there are " << responses_.size()
          << " responses";
      throw Error(ErrorKind::InvalidData, msg.str());
    }
    if (!design_->allFinite()) {
      throw Error(ErrorKind::InvalidData, "design contains non-finite entries");
    }
  }
}

ObservationSet ObservationSet::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw Error(ErrorKind::EmptyShard, "cannot take an empty subset");
  Vector y(static_cast<Eigen::Index>(indices.size()));
  std::optional<Matrix> z;
  if (design_) z.emplace(static_cast<Eigen::Index>(indices.size()), design_->cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(indices[r]);
    if (indices[r] >= n()) throw Error(ErrorKind::Range, "subset index out of range");
    y[static_cast<Eigen::Index>(r)] = responses_[src];
    if (z) z->row(static_cast<Eigen::Index>(r)) = design_->row(src);
  }
  return ObservationSet(std::move(y), std::move(z), provenance_);
}

// ---------------------------------------------------------------------------
// PartitionPlan

PartitionPlan::PartitionPlan(std::size_t shard_count, std::vector<std::uint32_t> assignments)
    : assignments_(std::move(assignments)), shard_sizes_(shard_count, 0) {
  if (shard_count == 0) throw Error(ErrorKind::InvalidPartition, "shard count must be positive");
  for (auto shard : assignments_) {
    if (shard >= shard_count) {
      throw Error(ErrorKind::InvalidPartition, "assignment refers to a shard out of range");
    }
    ++shard_sizes_[shard];
  }
}

std::vector<std::size_t> PartitionPlan::shard_indices(std::size_t shard) const {
  if (shard >= shard_count()) throw Error(ErrorKind::Range, "shard id out of range");
  std::vector<std::size_t> out;
  out.reserve(shard_sizes_[shard]);
  for (std::size_t i = 0; i < assignments_.size(); ++i) {
    if (assignments_[i] == shard) out.push_back(i);
  }
  return out;
}

PartitionPlan partition(std::size_t n, std::size_t shard_count, std::uint64_t seed) {
  if (shard_count == 0 || shard_count > n) {
    std::ostringstream msg;
    msg << "cannot split " << n << " observations into " << shard_count << " shards";
    throw Error(ErrorKind::InvalidPartition, msg.str());
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  PhiloxStream stream({seed, StreamPurpose::Partition, 0});
  for (std::size_t i = n; i > 1; --i) {
    boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(stream)]);
  }
  std::vector<std::uint32_t> assignments(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    assignments[order[pos]] = static_cast<std::uint32_t>(pos % shard_count);
  }
  return PartitionPlan(shard_count, std::move(assignments));
}

// ---------------------------------------------------------------------------
// ModelSpec

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::PoissonGamma: return "poisson-gamma";
    case Family::ExponentialGamma: return "exponential-gamma";
    case Family::BernoulliBeta: return "bernoulli-beta";
    case Family::NormalLinearNig: return "normal-linear-nig";
    case Family::Custom: return "custom-logdensity";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  for (auto f : {Family::PoissonGamma, Family::ExponentialGamma, Family::BernoulliBeta,
                 Family::NormalLinearNig, Family::Custom}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorKind::Config, "unknown model family '" + std::string(name) + "'");
}

ModelSpec ModelSpec::poisson_gamma(double a, double b) {
  require_positive(a, "a");
  require_positive(b, "b");
  ModelSpec spec(Family::PoissonGamma);
  spec.a_ = a;
  spec.b_ = b;
  return spec;
}

ModelSpec ModelSpec::exponential_gamma(double a, double b) {
  ModelSpec spec = poisson_gamma(a, b);
  spec.family_ = Family::ExponentialGamma;
  return spec;
}

ModelSpec ModelSpec::bernoulli_beta(double a, double b) {
  ModelSpec spec = poisson_gamma(a, b);
  spec.family_ = Family::BernoulliBeta;
  return spec;
}

ModelSpec ModelSpec::normal_linear_nig(Vector mu, Matrix omega, double a, double b) {
  if (!(a > 4.0) || !std::isfinite(a)) {
    throw Error(ErrorKind::InvalidHyperparameter,
                "normal linear model needs a > 4 for a finite prior variance of sigma2");
  }
  require_positive(b, "b");
  if (mu.size() == 0 || omega.rows() != mu.size() || omega.cols() != mu.size()) {
    throw Error(ErrorKind::Shape, "omega must be p x p with p = length of mu");
  }
  if (!mu.allFinite() || !omega.allFinite()) {
    throw Error(ErrorKind::InvalidHyperparameter, "mu and omega must be finite");
  }
  if ((omega - omega.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + omega.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::InvalidHyperparameter, "omega must be symmetric");
  }
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularMatrix, "omega is not positive definite");
  }
  ModelSpec spec(Family::NormalLinearNig);
  spec.a_ = a;
  spec.b_ = b;
  spec.omega_inverse_ = llt.solve(Matrix::Identity(omega.rows(), omega.cols()));
  spec.omega_inverse_ = 0.5 * (spec.omega_inverse_ + spec.omega_inverse_.transpose()).eval();
  spec.mu_ = std::move(mu);
  spec.omega_ = std::move(omega);
  return spec;
}

ModelSpec ModelSpec::custom(CustomLogDensity density) {
  if (!density.log_likelihood || !density.log_prior || density.dim == 0) {
    throw Error(ErrorKind::Config, "custom model needs log_likelihood, log_prior and dim > 0");
  }
  ModelSpec spec(Family::Custom);
  spec.custom_ = std::move(density);
  return spec;
}

std::size_t ModelSpec::parameter_dim() const noexcept {
  switch (family_) {
    case Family::NormalLinearNig: return static_cast<std::size_t>(mu_.size()) + 1;
    case Family::Custom: return custom_.dim;
    default: return 1;
  }
}

double ModelSpec::log_prior(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != parameter_dim()) {
    throw Error(ErrorKind::Shape, "parameter vector has the wrong length");
  }
  switch (family_) {
    case Family::PoissonGamma:
    case Family::ExponentialGamma: {
      const double t = theta[0];
      if (!(t > 0.0)) return kNegInf;
      return (a_ - 1.0) * std::log(t) - b_ * t;
    }
    case Family::BernoulliBeta: {
      const double t = theta[0];
      if (!(t > 0.0 && t < 1.0)) return kNegInf;
      return (a_ - 1.0) * std::log(t) + (b_ - 1.0) * std::log1p(-t);
    }
    case Family::NormalLinearNig: {
      const auto p = mu_.size();
      const double sigma2 = theta[p];
      if (!(sigma2 > 0.0)) return kNegInf;
      const Vector diff = theta.head(p) - mu_;
      const double quad = diff.dot(omega_inverse_ * diff);
      return -(0.5 * static_cast<double>(p) + 0.5 * a_ + 1.0) * std::log(sigma2) -
             (quad + b_) / (2.0 * sigma2);
    }
    case Family::Custom:
      return custom_.log_prior(theta);
  }
  return kNegInf;
}

void ModelSpec::check_data(const ObservationSet& data) const {
  const auto& y = data.responses();
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::InvalidData,
                std::string(to_string(family_)) + " data: " + what);
  };
  switch (family_) {
    case Family::PoissonGamma:
      for (double v : y) {
        if (v < 0.0 || v != std::floor(v)) fail("responses must be nonnegative integers");
      }
      break;
    case Family::ExponentialGamma:
      for (double v : y) {
        if (!(v > 0.0)) fail("responses must be positive");
      }
      break;
    case Family::BernoulliBeta:
      for (double v : y) {
        if (v != 0.0 && v != 1.0) fail("responses must be 0 or 1");
      }
      break;
    case Family::NormalLinearNig:
      if (!data.design() || data.p() != static_cast<std::size_t>(mu_.size())) {
        fail("a design matrix with one column per coefficient is required");
      }
      break;
    case Family::Custom:
      break;
  }
}

// ---------------------------------------------------------------------------
// TemperedTarget

TemperedTarget::TemperedTarget(ModelSpec model, ObservationSet shard, double temper)
    : model_(std::move(model)), shard_(std::move(shard)), temper_(temper) {
  if (!(temper_ >= 1.0) || !std::isfinite(temper_)) {
    throw Error(ErrorKind::Config, "temper must be a finite real >= 1");
  }
  model_.check_data(shard_);
  const auto& y = shard_.responses();
  sum_y_ = y.sum();
  if (model_.family() == Family::PoissonGamma) {
    for (double v : y) sum_log_factorial_ += std::lgamma(v + 1.0);
  }
  if (model_.family() == Family::NormalLinearNig) {
    const Matrix& z = *shard_.design();
    ztz_ = z.transpose() * z;
    zty_ = z.transpose() * y;
    yty_ = y.squaredNorm();
  }
}

double TemperedTarget::log_likelihood(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != model_.parameter_dim()) {
    throw Error(ErrorKind::Shape, "parameter vector has the wrong length");
  }
  const double m = static_cast<double>(shard_.n());
  switch (model_.family()) {
    case Family::PoissonGamma: {
      const double t = theta[0];
      if (!(t > 0.0)) return kNegInf;
      return sum_y_ * std::log(t) - m * t - sum_log_factorial_;
    }
    case Family::ExponentialGamma: {
      const double t = theta[0];
      if (!(t > 0.0)) return kNegInf;
      return m * std::log(t) - t * sum_y_;
    }
    case Family::BernoulliBeta: {
      const double t = theta[0];
      if (!(t > 0.0 && t < 1.0)) return kNegInf;
      return sum_y_ * std::log(t) + (m - sum_y_) * std::log1p(-t);
    }
    case Family::NormalLinearNig: {
      const auto p = ztz_.rows();
      const double sigma2 = theta[p];
      if (!(sigma2 > 0.0)) return kNegInf;
      const auto beta = theta.head(p);
      const double rss = yty_ - 2.0 * beta.dot(zty_) + beta.dot(ztz_ * beta);
      return -0.5 * m * (kLog2Pi + std::log(sigma2)) - rss / (2.0 * sigma2);
    }
    case Family::Custom:
      return model_.custom_density().log_likelihood(theta, shard_);
  }
  return kNegInf;
}

double TemperedTarget::log_density(const Vector& theta) const {
  const double prior = model_.log_prior(theta);
  if (std::isnan(prior) || prior == kNegInf) return kNegInf;
  const double loglik = log_likelihood(theta);
  if (std::isnan(loglik) || loglik == kNegInf) return kNegInf;
  return temper_ * loglik + prior;
}

double tempered_log_density(const TemperedTarget& target, const Vector& theta) {
  return target.log_density(theta);
}

double shard_temper(std::size_t n, std::size_t shard_size) {
  if (shard_size == 0) throw Error(ErrorKind::EmptyShard, "shard has no observations");
  if (shard_size > n) throw Error(ErrorKind::InvalidPartition, "shard larger than the data set");
  return static_cast<double>(n) / static_cast<double>(shard_size);
}

// ---------------------------------------------------------------------------
// LinearFunctional

LinearFunctional::LinearFunctional(Vector coefficients, double offset)
    : a(std::move(coefficients)), b(offset) {
  if (a.size() == 0 || (a.array() == 0.0).all()) {
    throw Error(ErrorKind::Config, "linear functional needs at least one nonzero coefficient");
  }
  if (!a.allFinite() || !std::isfinite(b)) {
    throw Error(ErrorKind::Config, "linear functional coefficients must be finite");
  }
}

LinearFunctional LinearFunctional::coordinate(std::size_t dim, std::size_t index) {
  if (index >= dim) throw Error(ErrorKind::Shape, "coordinate index out of range");
  return LinearFunctional(Vector::Unit(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(index)));
}

std::vector<double> apply_functional(const LinearFunctional& f, const DrawMatrix& draws) {
  if (static_cast<std::size_t>(f.a.size()) != draws.d()) {
    std::ostringstream msg;
    msg << "functional has " << f.a.size() << " coefficients but draws have " << draws.d()
        << " columns";
    throw Error(ErrorKind::Shape, msg.str());
  }
  std::vector<double> out(draws.T());
  Eigen::Map<Vector> view(out.data(), static_cast<Eigen::Index>(out.size()));
  view = draws.values() * f.a;
  view.array() += f.b;
  return out;
}

}  // namespace pie
