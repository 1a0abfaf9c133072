#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "pie/error.hpp"
#include "pie/metrics.hpp"
#include "pie/samplers.hpp"

using namespace pie;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a pie::Error");
  return ErrorKind::Numeric;
}

QuantileTable normal_table(double mean, double sd, const std::vector<double>& grid) {
  std::vector<double> v;
  for (double u : grid) v.push_back(mean + sd * oracle::normal_quantile(u));
  return QuantileTable(grid, v);
}

}  // namespace

TEST_CASE("empirical quantile uses the clamped floor index") {
  const std::vector<double> a{40, 10, 30, 20};
  CHECK(empirical_quantile(a, 0.75) == 30.0);
  const std::vector<double> b{3, 1, 2};
  CHECK(empirical_quantile(b, 0.1) == 1.0);
  const std::vector<double> c{7.5};
  for (double u : {0.01, 0.5, 0.99}) CHECK(empirical_quantile(c, u) == 7.5);
  const std::vector<double> empty;
  CHECK(kind_of([&] { empirical_quantile(empty, 0.5); }) == ErrorKind::EmptyDraws);
  CHECK(order_statistic_index(4, 0.999) == 3);
  CHECK(order_statistic_index(100, 0.29) == 29);  // 100 * 0.29 evaluates to 28.999999999999996
}

TEST_CASE("quantile tables") {
  std::vector<double> ramp(1000);
  std::iota(ramp.begin(), ramp.end(), 1.0);
  const auto grid = make_grid();
  CHECK(grid.size() == 999);
  CHECK(grid.front() == doctest::Approx(0.001));
  const auto table = quantile_table(ramp, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(table.values()[k] - 1000.0 * grid[k]) <= 1.0);

  const std::vector<double> one{0.37};
  const auto draws = testing_support::normal_draws(101, 0, 1, 3);
  CHECK(quantile_table(draws, one).values()[0] == empirical_quantile(draws, 0.37));

  auto shuffled = draws;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
  CHECK(quantile_table(shuffled, grid).values() == quantile_table(draws, grid).values());
}

TEST_CASE("quantile table validation") {
  CHECK(kind_of([] { QuantileTable({0.5, 0.2}, {1, 2}); }) == ErrorKind::Range);
  CHECK(kind_of([] { QuantileTable({0.0, 0.5}, {1, 2}); }) == ErrorKind::Range);
  CHECK(kind_of([] { QuantileTable({0.2, 0.5}, {2, 1}); }) == ErrorKind::Range);
}

TEST_CASE("averaging quantile tables") {
  const auto grid = make_grid(99);
  const auto a = normal_table(0, 1, grid);
  SUBCASE("identical tables") {
    const std::vector<QuantileTable> same{a, a, a};
    const auto avg = average_quantile_tables(same);
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(avg.values()[k] == doctest::Approx(a.values()[k]).epsilon(1e-15));
  }
  SUBCASE("location shift") {
    const std::vector<QuantileTable> t{a, normal_table(2, 1, grid)};
    const auto expected = normal_table(1, 1, grid);
    const auto avg = average_quantile_tables(t);
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(avg.values()[k] - expected.values()[k]) < 1e-12);
  }
  SUBCASE("scale averaging") {
    const std::vector<QuantileTable> t{a, normal_table(0, 3, grid)};
    const auto avg = average_quantile_tables(t);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(std::abs(avg.values()[k] - 2.0 * oracle::normal_quantile(grid[k])) < 1e-12);
    }
  }
  SUBCASE("grid mismatch") {
    const std::vector<QuantileTable> t{a, normal_table(0, 1, make_grid(50))};
    CHECK(kind_of([&] { average_quantile_tables(t); }) == ErrorKind::GridMismatch);
  }
}

TEST_CASE("pie interval averages per-shard order statistics") {
  // 20 draws: the 5% order statistic is the minimum, the 95% one the 19th.
  std::vector<double> s1(20), s2(20);
  for (int i = 0; i < 20; ++i) {
    s1[static_cast<std::size_t>(i)] = i <= 18 ? 10.0 * i / 18.0 : 50.0;
    s2[static_cast<std::size_t>(i)] = i <= 18 ? 2.0 + 12.0 * i / 18.0 : 60.0;
  }
  const std::vector<std::vector<double>> shards{s1, s2};
  const auto iv = pie_interval(shards, 0.1);
  CHECK(iv.alpha == 0.1);
  CHECK(iv.lower == doctest::Approx(1.0));
  CHECK(iv.upper == doctest::Approx(12.0));

  const std::vector<std::vector<double>> same{s1, s1, s1};
  const auto single = interval_from_sorted(s1, 0.1);
  const auto multi = pie_interval(same, 0.1);
  CHECK(multi.lower == single.lower);
  CHECK(multi.upper == single.upper);

  CHECK(kind_of([&] { pie_interval(shards, 0.0); }) == ErrorKind::InvalidLevel);
  CHECK(kind_of([&] { pie_interval(shards, 1.0); }) == ErrorKind::InvalidLevel);
  const std::vector<std::vector<double>> tiny{{1.0}};
  CHECK(kind_of([&] { pie_interval(tiny, 0.1); }) == ErrorKind::InsufficientDraws);
}

TEST_CASE("pie interval from exact Gamma shards matches the averaged exact quantiles") {
  const double lower = 0.5 * (oracle::gamma_quantile(13, 7, 0.05) + oracle::gamma_quantile(9, 7, 0.05));
  const double upper = 0.5 * (oracle::gamma_quantile(13, 7, 0.95) + oracle::gamma_quantile(9, 7, 0.95));
  CHECK(lower == doctest::Approx(0.8846289879982395).epsilon(1e-10));
  CHECK(upper == doctest::Approx(2.4198013603650956).epsilon(1e-10));
  const std::vector<std::vector<double>> shards{
      sample_gamma({13, 7}, 50000, {1, StreamPurpose::Test, 0}).column(0),
      sample_gamma({9, 7}, 50000, {1, StreamPurpose::Test, 1}).column(0)};
  const auto iv = pie_interval(shards, 0.1);
  CHECK(std::abs(iv.lower - lower) < 0.02);
  CHECK(std::abs(iv.upper - upper) < 0.02);
}

TEST_CASE("property: barycenter identity, monotonicity and affine equivariance") {
  std::mt19937_64 rng(21);
  const auto grid = make_grid(199);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t K = 1 + rng() % 6;
    const std::size_t T = 2 + rng() % 400;
    std::vector<std::vector<double>> shards;
    std::vector<QuantileTable> tables;
    for (std::size_t j = 0; j < K; ++j) {
      std::exponential_distribution<double> e(0.5 + (rng() % 10) / 4.0);
      std::vector<double> x(T);
      for (auto& v : x) v = e(rng) + static_cast<double>(j);
      shards.push_back(x);
      tables.push_back(quantile_table(x, grid));
    }
    const auto avg = average_quantile_tables(tables);
    const auto atoms = barycenter_draws(shards);
    const auto bary_table = quantile_table(atoms, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double direct = 0.0;
      // u_k = (k+1)/200, so floor(T u) is exact in integers.
      const std::size_t index = std::max<std::size_t>(1, T * (k + 1) / 200);
      for (std::size_t j = 0; j < K; ++j) {
        auto sorted = shards[j];
        std::sort(sorted.begin(), sorted.end());
        direct += sorted[index - 1];
      }
      direct /= static_cast<double>(K);
      REQUIRE(std::abs(avg.values()[k] - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
      REQUIRE(std::abs(bary_table.values()[k] - avg.values()[k]) <= 1e-12 * std::max(1.0, std::abs(direct)));
      if (k > 0) REQUIRE(avg.values()[k] >= avg.values()[k - 1]);
    }

    // A power-of-two scale commutes with every rounding step, so it is exact.
    const double alpha = 0.01 + (rng() % 50) / 100.0;
    const auto iv = pie_interval(shards, alpha);
    for (const auto& [c, s] : {std::pair{4.0, 0.0}, std::pair{0.7, -3.0}}) {
      std::vector<std::vector<double>> mapped = shards;
      for (auto& x : mapped) {
        for (auto& v : x) v = c * v + s;
      }
      const auto ivm = pie_interval(mapped, alpha);
      if (s == 0.0) {
        REQUIRE(ivm.lower == c * iv.lower);
        REQUIRE(ivm.upper == c * iv.upper);
      } else {
        REQUIRE(ivm.lower == doctest::Approx(c * iv.lower + s).epsilon(1e-13));
        REQUIRE(ivm.upper == doctest::Approx(c * iv.upper + s).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("property: averaged quantiles minimize the summed squared W2 on a 5-point support") {
  std::mt19937_64 rng(12);
  const auto grid = make_grid(99);
  const std::vector<double> support{-2, -1, 0, 1, 3};
  auto discrete_table = [&](const std::vector<double>& w) {
    std::vector<double> cdf(w.size());
    std::partial_sum(w.begin(), w.end(), cdf.begin());
    std::vector<double> v;
    for (double u : grid) {
      std::size_t i = 0;
      while (i + 1 < cdf.size() && cdf[i] < u * cdf.back()) ++i;
      v.push_back(support[i]);
    }
    return QuantileTable(grid, v);
  };
  const std::vector<QuantileTable> inputs{discrete_table({1, 2, 3, 1, 1}), discrete_table({3, 1, 1, 2, 2})};
  const auto bary = average_quantile_tables(inputs);
  auto cost = [&](const QuantileTable& q) {
    double s = 0.0;
    for (const auto& t : inputs) s += std::pow(w2_from_tables(q, t), 2);
    return s;
  };
  const double best = cost(bary);
  std::normal_distribution<double> nd(0.0, 0.05);
  for (int i = 0; i < 200; ++i) {
    auto v = bary.values();
    for (auto& x : v) x += nd(rng);
    std::sort(v.begin(), v.end());
    REQUIRE(cost(QuantileTable(grid, v)) >= best);
  }
}

TEST_CASE("gaussian barycenter examples") {
  Eigen::MatrixXd c(2, 2);
  c << 2.0, 0.3, 0.3, 1.0;
  SUBCASE("identical inputs") {
    const std::vector<GaussianApprox> in{{Eigen::Vector2d(1, 2), c}, {Eigen::Vector2d(1, 2), c}};
    const auto out = gaussian_barycenter(in);
    CHECK((out.cov - c).norm() < 1e-12);
    CHECK((out.mean - Eigen::Vector2d(1, 2)).norm() < 1e-15);
  }
  SUBCASE("1-D standard deviations 1 and 3") {
    const std::vector<GaussianApprox> in{{Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0)},
                                         {Eigen::VectorXd::Constant(1, 4.0), Eigen::MatrixXd::Constant(1, 1, 9.0)}};
    const auto out = gaussian_barycenter(in);
    CHECK(out.cov(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(out.mean[0] == 2.0);
  }
  SUBCASE("diagonal 2-D inputs") {
    const std::vector<GaussianApprox> in{
        {Eigen::Vector2d::Zero(), Eigen::Vector2d(1, 4).asDiagonal().toDenseMatrix()},
        {Eigen::Vector2d::Zero(), Eigen::Vector2d(9, 16).asDiagonal().toDenseMatrix()}};
    const auto out = gaussian_barycenter(in);
    CHECK(std::abs(out.cov(0, 0) - 4.0) < 1e-10);
    CHECK(std::abs(out.cov(1, 1) - 9.0) < 1e-10);
    CHECK(std::abs(out.cov(0, 1)) < 1e-10);
    CHECK(barycenter_residual(in, out.cov) < 1e-10);
  }
}

TEST_CASE("property: 1-D gaussian barycenter is (mean of means, (mean of sds)^2)") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t K = 1 + rng() % 10;
    std::vector<GaussianApprox> in;
    double msum = 0.0, sdsum = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      const double m = u(rng) - 2.5, sd = u(rng);
      msum += m;
      sdsum += sd;
      in.push_back({Eigen::VectorXd::Constant(1, m), Eigen::MatrixXd::Constant(1, 1, sd * sd)});
    }
    const auto out = gaussian_barycenter(in);
    const double sd_bar = sdsum / K;
    REQUIRE(std::abs(out.cov(0, 0) - sd_bar * sd_bar) < 1e-12 * std::max(1.0, sd_bar * sd_bar));
    REQUIRE(std::abs(out.mean[0] - msum / K) < 1e-12);
  }
}

TEST_CASE("gaussian approx validation") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.1, 0.0, 1;
  CHECK(kind_of([&] { GaussianApprox(Eigen::Vector2d::Zero(), asym); }) == ErrorKind::Range);
  Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(2, 2);
  neg(1, 1) = -1e-13;
  CHECK(GaussianApprox(Eigen::Vector2d::Zero(), neg).cov(1, 1) == 0.0);
}

TEST_CASE("consensus combine") {
  const auto x = testing_support::normal_matrix(500, 2, 1);
  SUBCASE("single shard returns its draws") {
    const std::vector<DrawMatrix> one{DrawMatrix(x)};
    CHECK(consensus_combine(one).values() == x);
  }
  SUBCASE("equal covariances give the plain average") {
    const Eigen::MatrixXd y = x.rowwise() + Eigen::RowVector2d(3, -1);
    const std::vector<DrawMatrix> two{DrawMatrix(x), DrawMatrix(y)};
    CHECK((consensus_combine(two).values() - 0.5 * (x + y)).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("variances 1 and 4 give weights 0.8 and 0.2") {
    auto standardize = [](Eigen::VectorXd v) {
      v.array() -= v.mean();
      v /= std::sqrt(v.squaredNorm() / (v.size() - 1.0));
      return v;
    };
    const Eigen::VectorXd a = standardize(x.col(0));
    const Eigen::VectorXd b = 2.0 * standardize(x.col(1));
    const std::vector<DrawMatrix> shards{DrawMatrix(Eigen::MatrixXd(a)), DrawMatrix(Eigen::MatrixXd(b))};
    const Eigen::VectorXd out = consensus_combine(shards).values().col(0);
    CHECK((out - (0.8 * a + 0.2 * b)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("property: consensus combine commutes with a common affine map") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 4);
    const std::size_t K = 1 + rng() % 5;
    Eigen::MatrixXd A = testing_support::random_spd(d, rng, 0.5);
    const Eigen::RowVectorXd shift = testing_support::normal_matrix(1, static_cast<std::size_t>(d), rng());
    std::vector<DrawMatrix> raw, mapped;
    for (std::size_t j = 0; j < K; ++j) {
      const Eigen::MatrixXd x = testing_support::normal_matrix(200, static_cast<std::size_t>(d), rng()) *
                                testing_support::random_spd(d, rng);
      raw.emplace_back(x);
      mapped.emplace_back(Eigen::MatrixXd((x * A.transpose()).rowwise() + shift));
    }
    const Eigen::MatrixXd lhs = consensus_combine(mapped).values();
    const Eigen::MatrixXd rhs = (consensus_combine(raw).values() * A.transpose()).rowwise() + shift;
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("pairwise sum is exact on small integers and order-stable") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}
