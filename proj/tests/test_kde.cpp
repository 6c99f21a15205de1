#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "confreg/kde.hpp"
#include "oracles.hpp"

using namespace confreg;

TEST_CASE("density at coincident samples equals 1/(h sqrt(2 pi))") {
  const double h = 0.75;
  const KdeModel kde({4.0, 4.0, 4.0}, h);
  const double peak = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
  CHECK(std::abs(kde.density(4.0) - peak) <= 1e-12 * peak);
  CHECK(kde.density(4.0) == doctest::Approx(0.53192).epsilon(1e-4));
  CHECK(kde.log_density(4.0) == doctest::Approx(-0.63126).epsilon(1e-4));
  CHECK(std::abs(kde.log_density(4.0) - std::log(peak)) <= 1e-12);
}

TEST_CASE("two-sample density matches the hand-worked value") {
  const KdeModel kde({0.0, 1.0}, 0.75);
  const double got = kde.density(0.5);
  CHECK(got == doctest::Approx(0.42593).epsilon(1e-4));
  const double want = oracle::kde_density_direct({0.0, 1.0}, 0.75, 0.5);
  CHECK(std::abs(got - want) <= 1e-12 * want);
}

TEST_CASE("far-tail density underflows toward zero while the log stays finite") {
  const KdeModel kde({0.0}, 0.75);
  CHECK(kde.density(1000.0) < 1e-300);
  CHECK(std::isfinite(kde.log_density(1000.0)));
  CHECK(kde.log_density(1000.0) < -1e5);
}

TEST_CASE("density equals the direct-summation oracle on random inputs") {
  std::mt19937_64 rng(314159);
  std::normal_distribution<double> gauss(0.0, 4.0);
  std::uniform_real_distribution<double> bandwidth(0.05, 3.0);
  for (int iter = 0; iter < 300; ++iter) {
    const std::size_t k = 1 + rng() % 60;
    std::vector<double> samples(k);
    for (double& s : samples) s = gauss(rng);
    const double h = bandwidth(rng);
    const double point = gauss(rng) * 1.5;

    const KdeModel kde(samples, h);
    const double got = kde.density(point);
    const double want = oracle::kde_density_direct(samples, h, point);
    if (want > 0.0) {
      CHECK(std::abs(got - want) <= 1e-10 * want);
    }
    // exp(log_density) must reproduce density wherever it is representable.
    CHECK(std::exp(kde.log_density(point)) == got);
  }
}

TEST_CASE("density integrates to one") {
  std::mt19937_64 rng(2718);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (int iter = 0; iter < 5; ++iter) {
    const std::size_t k = 1 + rng() % 20;
    std::vector<double> samples(k);
    for (double& s : samples) s = gauss(rng);
    const double h = 0.2 + 0.8 * static_cast<double>(rng() % 100) / 100.0;
    const KdeModel kde(samples, h);

    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it - 10.0 * h;
    const double hi = *hi_it + 10.0 * h;
    const double mass = oracle::integrate_simpson(
        [&](double z) { return kde.density(z); }, lo, hi, 20000);
    CHECK(std::abs(mass - 1.0) <= 1e-6);
  }
}

TEST_CASE("density is symmetric for samples symmetric about their mean") {
  const std::vector<double> samples{-2.0, -1.0, 1.0, 2.0};  // mean 0
  const KdeModel kde(samples, 0.6);
  for (double t : {0.1, 0.5, 1.0, 2.5, 4.0}) {
    const double right = kde.density(t);
    const double left = kde.density(-t);
    CHECK(std::abs(right - left) <= 1e-12 * std::max(right, left));
  }
}

TEST_CASE("density decreases strictly beyond the largest sample") {
  const KdeModel kde({-1.0, 0.5, 2.0}, 0.75);
  double previous = kde.density(2.0 + 0.1);
  for (int step = 2; step <= 60; ++step) {
    const double z = 2.0 + 0.1 * static_cast<double>(step);
    const double current = kde.density(z);
    CHECK(current < previous);
    previous = current;
  }
}

TEST_CASE("kde preconditions") {
  CHECK_THROWS_AS(KdeModel({}, 0.75), std::invalid_argument);
  CHECK_THROWS_AS(KdeModel({1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(KdeModel({1.0}, -1.0), std::invalid_argument);
  CHECK_NOTHROW(KdeModel({5.0}, 0.75));
  const KdeModel kde({1.0}, 0.75);
  CHECK_THROWS_AS(kde.log_density(std::numeric_limits<double>::quiet_NaN()),
                  std::invalid_argument);
}
