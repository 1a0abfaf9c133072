#pragma once

#include <Eigen/Dense>

namespace pie::linalg {

/// Symmetric part (M + M') / 2.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);

/// Principal square root of a symmetric PSD matrix via eigendecomposition;
/// negative eigenvalues are floored at 0.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m);

/// Inverse principal square root of a symmetric positive definite matrix.
/// Throws SingularMatrix when an eigenvalue is not strictly positive.
Eigen::MatrixXd inv_sqrt_spd(const Eigen::MatrixXd& m, const char* what);

/// Inverse of a symmetric positive definite matrix. Throws SingularMatrix.
Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& m, const char* what);

/// Sample covariance (denominator T - 1) of the rows of `rows`.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows);

/// Inverse of a sample covariance, falling back to a ridge of
/// 1e-8 * trace / d on the diagonal when the matrix is not safely invertible.
Eigen::MatrixXd ridged_inverse(const Eigen::MatrixXd& cov, const char* what);

}  // namespace pie::linalg
