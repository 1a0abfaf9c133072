#include "pie/linalg.hpp"

#include <string>

#include "pie/error.hpp"

namespace pie::linalg {
namespace {

constexpr double kRidge = 1e-8;
constexpr double kMinReciprocalCondition = 1e-12;

}  // namespace

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return symmetrize(eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose());
}

Eigen::MatrixXd inv_sqrt_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
  const Eigen::VectorXd values = eig.eigenvalues();
  if (!(values.minCoeff() > kMinReciprocalCondition * values.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::SingularMatrix, std::string(what) + " is singular");
  }
  const Eigen::VectorXd inv_roots = values.cwiseSqrt().cwiseInverse();
  return symmetrize(eig.eigenvectors() * inv_roots.asDiagonal() * eig.eigenvectors().transpose());
}

Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(symmetrize(m));
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      !(ldlt.vectorD().minCoeff() > kMinReciprocalCondition * ldlt.vectorD().cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::SingularMatrix, std::string(what) + " is singular");
  }
  return symmetrize(ldlt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols())));
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2) {
    throw Error(ErrorKind::InsufficientDraws, "sample covariance needs at least 2 rows");
  }
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - mean;
  return symmetrize(centered.transpose() * centered / static_cast<double>(rows.rows() - 1));
}

Eigen::MatrixXd ridged_inverse(const Eigen::MatrixXd& cov, const char* what) {
  try {
    return inverse_spd(cov, what);
  } catch (const Error&) {
    const double d = static_cast<double>(cov.rows());
    const double ridge = kRidge * cov.trace() / d;
    Eigen::MatrixXd ridged = cov;
    ridged.diagonal().array() += ridge;
    if (!(ridge > 0.0)) {
      throw Error(ErrorKind::SingularMatrix, std::string(what) + " is singular and has zero trace");
    }
    return inverse_spd(ridged, what);
  }
}

}  // namespace pie::linalg
