// The reference special functions are themselves checked against values
// frozen from an external statistics package.

#include <doctest.h>

#include "oracles.hpp"

TEST_CASE("incomplete gamma matches frozen reference values") {
  CHECK(oracle::gamma_p(1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
  CHECK(oracle::gamma_p(13.0, 10.5) == doctest::Approx(0.25803606672949314).epsilon(1e-12));
  CHECK(oracle::gamma_p(200.5, 180.0) == doctest::Approx(0.06990202737568928).epsilon(1e-10));
}

TEST_CASE("gamma quantiles by bisection") {
  CHECK(oracle::gamma_quantile(13.0, 7.0, 0.05) == doctest::Approx(1.0985111845186946).epsilon(1e-12));
  CHECK(oracle::gamma_quantile(13.0, 7.0, 0.95) == doctest::Approx(2.7775099042735754).epsilon(1e-12));
  CHECK(oracle::gamma_quantile(9.0, 7.0, 0.05) == doctest::Approx(0.6707467914777845).epsilon(1e-12));
  CHECK(oracle::gamma_quantile(9.0, 7.0, 0.95) == doctest::Approx(2.062092816456616).epsilon(1e-12));
}

TEST_CASE("incomplete beta and beta quantiles") {
  CHECK(oracle::beta_i(5.0, 3.0, 0.6) == doctest::Approx(0.419904).epsilon(1e-12));
  CHECK(oracle::beta_quantile(5.0, 3.0, 0.05) == doctest::Approx(0.341261436155336).epsilon(1e-11));
  CHECK(oracle::beta_i(2.0, 2.0, 0.5) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("normal and Student t quantiles") {
  CHECK(oracle::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(oracle::student_t_quantile(7.0, 0.9) == doctest::Approx(1.4149239276488585).epsilon(1e-11));
  CHECK(oracle::student_t_quantile(7.0, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("two-sample KS statistic") {
  CHECK(oracle::ks_statistic({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(oracle::ks_statistic({1, 2}, {3, 4}) == 1.0);
  CHECK(oracle::ks_statistic({1, 3}, {2, 4}) == doctest::Approx(0.5));
}
