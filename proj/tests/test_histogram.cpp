#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "cavity/analysis.hpp"
#include "cavity/errors.hpp"
#include "cavity/histogram.hpp"

using namespace cavity;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("explicit edges count samples with an inclusive right edge", "[histogram]") {
  const std::vector<double> samples{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, -1.0};
  const Histogram h = build_histogram(samples, BinningSpec::with_edges({0.0, 1.0, 2.0}));
  REQUIRE(h.n_bins() == 2);
  CHECK(h.counts == std::vector<std::size_t>{2, 3});
  CHECK(h.total == 7);
  CHECK(h.outside == 2);
  CHECK_THAT(h.density[0], WithinAbs(2.0 / 7.0, 1e-15));
  CHECK_THAT(h.density[1], WithinAbs(3.0 / 7.0, 1e-15));
  CHECK(h.center(1) == 1.5);
  CHECK(h.width(0) == 1.0);
}

TEST_CASE("automatic binning keeps at least 40 bins and integrates to one", "[histogram]") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(2.0, 3.0);
  std::vector<double> samples(5000);
  for (double& x : samples) x = normal(rng);
  const Histogram h = build_histogram(samples, BinningSpec::automatic());
  CHECK(h.n_bins() >= 40);
  CHECK(h.outside == 0);
  CHECK_FALSE(h.degenerate);
  double mass = 0.0;
  for (std::size_t i = 0; i < h.n_bins(); ++i) mass += h.density[i] * h.width(i);
  CHECK_THAT(mass, WithinAbs(1.0, 1e-12));
  for (std::size_t i = 1; i < h.edges.size(); ++i) REQUIRE(h.edges[i] > h.edges[i - 1]);
}

TEST_CASE("identical samples produce one degenerate bin", "[histogram]") {
  const std::vector<double> samples(10, 3.0);
  const Histogram h = build_histogram(samples, BinningSpec::automatic());
  CHECK(h.degenerate);
  REQUIRE(h.n_bins() == 1);
  CHECK(h.counts[0] == 10);
  CHECK(h.edges[0] < 3.0);
  CHECK(h.edges[1] > 3.0);
}

TEST_CASE("invalid histogram input is rejected", "[histogram]") {
  const std::vector<double> none;
  CHECK_THROWS_AS(build_histogram(none, BinningSpec::automatic()), DomainError);
  const std::vector<double> some{1.0};
  CHECK_THROWS_AS(build_histogram(some, BinningSpec::with_edges({1.0, 1.0})), DomainError);
  CHECK_THROWS_AS(build_histogram(some, BinningSpec::with_edges({2.0, 1.0})), DomainError);
}

TEST_CASE("running statistics match a two-pass computation", "[histogram]") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> xs(1000);
  RunningStats stats;
  for (double& x : xs) {
    x = 1e6 + u(rng);
    stats.add(x);
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= 1000.0;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= 999.0;
  CHECK_THAT(stats.mean(), WithinRel(mean, 1e-14));
  CHECK_THAT(stats.variance(), WithinRel(var, 1e-9));
  CHECK(stats.count() == 1000);

  RunningStats single;
  single.add(1.0);
  CHECK(std::isnan(single.variance()));
}

TEST_CASE("KS statistic", "[histogram]") {
  const std::vector<double> half{0.5};
  const auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK_THAT(ks_statistic(half, uniform), WithinAbs(0.5, 1e-15));

  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> samples(20000);
  for (double& x : samples) x = normal(rng);
  const auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  CHECK(ks_statistic(samples, phi) < 0.015);
  const auto shifted = [&](double x) { return phi(x - 0.2); };
  CHECK(ks_statistic(samples, shifted) > 0.06);
  const std::vector<double> none;
  CHECK_THROWS_AS(ks_statistic(none, phi), DomainError);
}
