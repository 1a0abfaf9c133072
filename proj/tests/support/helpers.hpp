#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

namespace testing_support {

// Test-side sampling uses the standard library engine, never the library's
// own streams, so draws here are independent of the code under test.
inline std::vector<double> normal_draws(std::size_t n, double mean, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(mean, sd);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

inline Eigen::MatrixXd normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = dist(rng);
  }
  return out;
}

inline Eigen::MatrixXd random_spd(int d, std::mt19937_64& rng, double floor = 0.1) {
  std::normal_distribution<double> dist;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a(i, j) = dist(rng);
  }
  return a * a.transpose() + floor * Eigen::MatrixXd::Identity(d, d);
}

}  // namespace testing_support
