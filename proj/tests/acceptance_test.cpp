// Acceptance suite: one test case per release criterion, each printing a
// single [PASS]/[FAIL] line. Run via ctest (confreg_acceptance) or directly.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "confreg/evalbench.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace confreg;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(int criterion, const char* label, bool pass) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, label);
  std::fflush(stdout);
}

constexpr std::uint64_t kSplitSalt = 0x9e3779b97f4a7c15ull;

}  // namespace

TEST_CASE("criterion 1: coverage validity across estimators and modes") {
  const auto start = Clock::now();

  const DifficultyKind estimators[] = {
      DifficultyKind::StdDev, DifficultyKind::Variance, DifficultyKind::Residual,
      DifficultyKind::TargetStrangeness};
  const ConformalMode modes[] = {ConformalMode::Plain, ConformalMode::Normalized,
                                 ConformalMode::Mondrian};

  bool all_within = true;
  for (DifficultyKind estimator : estimators) {
    for (ConformalMode mode : modes) {
      ExperimentConfig config;
      config.synthetic = SyntheticSpec{SyntheticKind::Heteroscedastic, 4000, 1.0};
      config.split_fractions = {0.5, 0.25, 0.25};  // 2000 / 1000 / 1000
      config.estimator = estimator;
      config.mode = mode;
      config.confidences = {0.9};
      config.k_grid = {25};
      config.bin_grid = {10};
      config.seeds.clear();
      for (std::uint64_t s = 1; s <= 20; ++s) config.seeds.push_back(s);
      config.threads = 2;

      const auto rows = run_experiment(config);
      double mean_error = 0.0;
      for (const ResultRow& r : rows) mean_error += r.error;
      mean_error /= static_cast<double>(rows.size());
      const double coverage = 1.0 - mean_error;

      const bool within = coverage >= 0.88 && coverage <= 0.92;
      std::printf("  %-9s %-8s mean coverage %.4f%s\n", to_string(estimator),
                  to_string(mode), coverage, within ? "" : "  <-- out of range");
      all_within = all_within && within;
      CHECK(within);
    }
  }

  const double elapsed = seconds_since(start);
  std::printf("  elapsed %.1f s (budget 60 s)\n", elapsed);
  const bool in_time = elapsed < 60.0;
  CHECK(in_time);
  report(1, "coverage within [0.88, 0.92] for every estimator x mode, < 60 s",
         all_within && in_time);
}

TEST_CASE("criterion 2: target strangeness beats std normalization directionally") {
  int ts_wins = 0;
  double coverage_ts = 0.0;
  double coverage_std = 0.0;
  const int n_seeds = 10;

  for (std::uint64_t seed = 1; seed <= n_seeds; ++seed) {
    Dataset data = fixtures::make_housing_like(6000, seed);
    data = split(data, {0.4, 0.35, 0.25}, seed ^ kSplitSalt);
    fixtures::attach_least_squares_predictions(data);

    CellParams params;
    params.mode = ConformalMode::Normalized;
    params.k = 25;
    params.confidences = {0.9};

    params.estimator = DifficultyKind::TargetStrangeness;
    const CellResult ts = run_cell(data, params);
    params.estimator = DifficultyKind::StdDev;
    const CellResult sd = run_cell(data, params);

    const double w_ts = *ts.per_confidence[0].eval.eff_mean;
    const double w_sd = *sd.per_confidence[0].eval.eff_mean;
    if (w_ts <= w_sd) ++ts_wins;
    coverage_ts += 1.0 - ts.per_confidence[0].eval.error;
    coverage_std += 1.0 - sd.per_confidence[0].eval.error;
  }
  coverage_ts /= n_seeds;
  coverage_std /= n_seeds;

  std::printf("  targ-strg narrower in %d/%d seeds; coverage ts=%.4f std=%.4f\n",
              ts_wins, n_seeds, coverage_ts, coverage_std);
  const bool directional = ts_wins >= 7;
  const bool valid = coverage_ts >= 0.88 && coverage_ts <= 0.92 &&
                     coverage_std >= 0.88 && coverage_std <= 0.92;
  CHECK(directional);
  CHECK(valid);
  report(2, "norm targ-strg eff_mean <= norm std in >= 7/10 seeds at valid coverage",
         directional && valid);
}

TEST_CASE("criterion 3: crps is identical across confidence levels") {
  ExperimentConfig config;
  config.synthetic = SyntheticSpec{SyntheticKind::Heteroscedastic, 2000, 1.0};
  config.estimator = DifficultyKind::TargetStrangeness;
  config.mode = ConformalMode::Normalized;
  config.confidences = {0.9, 0.95, 0.99};
  config.k_grid = {25};
  config.seeds = {1};

  const auto rows = run_experiment(config);
  REQUIRE(rows.size() == 3);
  const bool identical = rows[0].crps == rows[1].crps && rows[1].crps == rows[2].crps;
  std::printf("  crps at 0.9/0.95/0.99: %.10f %.10f %.10f\n", rows[0].crps,
              rows[1].crps, rows[2].crps);
  CHECK(identical);
  report(3, "one CPS reports the same CRPS at 0.9, 0.95 and 0.99, exactly",
         identical);
}

TEST_CASE("criterion 4: kde matches the direct-summation oracle") {
  std::mt19937_64 rng(40401);
  std::normal_distribution<double> gauss(0.0, 4.0);
  std::uniform_real_distribution<double> bandwidth(0.05, 3.0);

  bool all_match = true;
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t k = 1 + rng() % 80;
    std::vector<double> samples(k);
    for (double& s : samples) s = gauss(rng);
    const double h = bandwidth(rng);
    const double point = 1.5 * gauss(rng);

    const KdeModel kde(samples, h);
    const double got = kde.density(point);
    const double want = oracle::kde_density_direct(samples, h, point);
    if (want > 0.0 && std::abs(got - want) > 1e-10 * want) all_match = false;
  }
  CHECK(all_match);

  const double h = 0.75;
  const KdeModel coincident({1.5, 1.5, 1.5, 1.5}, h);
  const double peak = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
  const bool peak_exact = std::abs(coincident.density(1.5) - peak) <= 1e-12 * peak;
  CHECK(peak_exact);

  report(4, "kde density within 1e-10 of the oracle; coincident peak to 1e-12",
         all_match && peak_exact);
}

TEST_CASE("criterion 5: crps matches the integration oracle") {
  std::mt19937_64 rng(50502);
  std::normal_distribution<double> gauss(0.0, 3.0);

  bool all_match = true;
  for (int iter = 0; iter < 500; ++iter) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<double> support(n);
    for (double& s : support) s = gauss(rng);
    std::sort(support.begin(), support.end());
    const double y = 1.5 * gauss(rng);

    const double got = crps(PredictiveDistribution(support), y);
    const double want = oracle::crps_by_integration(support, y);
    if (std::abs(got - want) > 1e-6) all_match = false;
  }
  CHECK(all_match);

  const bool point_mass_exact =
      crps(PredictiveDistribution({3.0}), 5.0) == 2.0 &&
      crps(PredictiveDistribution({-1.25}), -1.25) == 0.0;
  CHECK(point_mass_exact);

  report(5, "crps within 1e-6 of step-CDF integration; point mass exact",
         all_match && point_mass_exact);
}

TEST_CASE("criterion 6: target strangeness bounds on fuzzed neighborhoods") {
  std::mt19937_64 rng(60603);
  std::normal_distribution<double> gauss(0.0, 5.0);
  const double lower = 1.0 - 1.0 / (0.75 * std::sqrt(2.0 * std::numbers::pi));

  bool all_within = true;
  for (int iter = 0; iter < 10000; ++iter) {
    const std::size_t k = 1 + rng() % 50;
    Matrix features(k, 1);
    std::vector<double> targets(k);
    for (std::size_t i = 0; i < k; ++i) {
      features(i, 0) = gauss(rng);
      targets[i] = gauss(rng);
    }
    const NeighborModel model(std::move(features), std::move(targets),
                              std::nullopt, k);
    Matrix query(1, 1);
    query(0, 0) = gauss(rng);
    const auto sigmas = estimate_target_strangeness(
        model, query, std::vector<double>{gauss(rng)}, 0.75, 0.0);
    if (sigmas[0] < lower - 1e-12 || sigmas[0] > 1.0) all_within = false;
  }
  std::printf("  bound [%.5f, 1] checked on 10000 neighborhoods\n", lower);
  CHECK(all_within);
  report(6, "all sigmas in [0.46808, 1] with h=0.75, beta=0", all_within);
}

TEST_CASE("criterion 7: mondrian per-bin validity") {
  constexpr std::size_t kBins = 5;
  std::array<std::size_t, kBins> covered{};
  std::array<std::size_t, kBins> total{};

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Dataset data = make_synthetic(SyntheticKind::Heteroscedastic, 4000, 1.0, seed);
    data = split(data, {0.5, 0.25, 0.25}, seed ^ kSplitSalt);  // cal = 1000
    const ScalingSpec scaling = fit_scaling(data);
    const Dataset scaled = apply_scaling(data, scaling);
    const Dataset train = scaled.subset(Split::Train);
    const Dataset cal = scaled.subset(Split::Calibration);
    const Dataset test = scaled.subset(Split::Test);

    const DifficultyEstimator estimator(DifficultyKind::StdDev, {25, 0.01, 0.75},
                                        train.features, train.targets);
    const std::vector<double> sigma_cal = estimator.estimate(cal.features);
    std::vector<double> abs_res(cal.size());
    for (std::size_t i = 0; i < cal.size(); ++i) {
      abs_res[i] = std::abs(cal.targets[i] - (*cal.predictions)[i]);
    }
    const auto regressor =
        ConformalRegressor::calibrate(abs_res, nullptr, kBins, &sigma_cal);
    REQUIRE(regressor.effective_bins() == kBins);

    const std::vector<double> sigma_test = estimator.estimate(test.features);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const std::size_t bin = regressor.bin_of(sigma_test[i]);
      const PredictionInterval iv = regressor.interval(
          (*test.predictions)[i], 0.9, std::nullopt, sigma_test[i]);
      ++total[bin];
      if (iv.contains(test.targets[i])) ++covered[bin];
    }
  }

  bool all_within = true;
  for (std::size_t b = 0; b < kBins; ++b) {
    const double coverage =
        static_cast<double>(covered[b]) / static_cast<double>(total[b]);
    std::printf("  bin %zu: coverage %.4f over %zu points\n", b, coverage,
                total[b]);
    if (coverage < 0.85 || coverage > 0.95) all_within = false;
  }
  CHECK(all_within);
  report(7, "per-bin coverage within [0.85, 0.95] with >= 200 cal points per bin",
         all_within);
}

TEST_CASE("criterion 8: determinism across runs and parallelism levels") {
  ExperimentConfig config;
  config.synthetic = SyntheticSpec{SyntheticKind::Heteroscedastic, 1200, 1.0};
  config.estimator = DifficultyKind::TargetStrangeness;
  config.mode = ConformalMode::Mondrian;
  config.confidences = {0.9, 0.95};
  config.k_grid = {10, 30};
  config.bin_grid = {4, 8};
  config.seeds = {1, 2, 3};
  config.threads = 1;

  const auto first = run_experiment(config);
  const auto second = run_experiment(config);
  config.threads = 4;
  const auto threaded = run_experiment(config);

  const auto equal_ignoring_time = [](const std::vector<ResultRow>& a,
                                      const std::vector<ResultRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].config_id != b[i].config_id || a[i].confidence != b[i].confidence ||
          a[i].seed != b[i].seed || a[i].error != b[i].error ||
          a[i].eff_mean != b[i].eff_mean || a[i].eff_med != b[i].eff_med ||
          a[i].crps != b[i].crps ||
          a[i].unbounded_fraction != b[i].unbounded_fraction) {
        return false;
      }
    }
    return true;
  };

  const bool stable = equal_ignoring_time(first, second);
  const bool thread_stable = equal_ignoring_time(first, threaded);
  CHECK(stable);
  CHECK(thread_stable);
  report(8, "identical metric rows across repeat runs and thread counts",
         stable && thread_stable);
}

TEST_CASE("criterion 9: full grid search completes and selects a unique optimum") {
  const auto start = Clock::now();

  ExperimentConfig config;
  config.synthetic = SyntheticSpec{SyntheticKind::Heteroscedastic, 5000, 1.0};
  config.split_fractions = {0.5, 0.25, 0.25};  // 2500 / 1250 / 1250
  config.estimator = DifficultyKind::TargetStrangeness;
  config.mode = ConformalMode::Mondrian;
  config.confidences = {0.9, 0.95};
  config.k_grid.clear();
  config.bin_grid.clear();
  for (std::size_t v = 10; v <= 100; v += 10) {
    config.k_grid.push_back(v);
    config.bin_grid.push_back(v);
  }
  config.seeds = {1, 2, 3, 4, 5};
  config.threads = 2;

  const auto rows = run_experiment(config);
  CHECK(rows.size() == 10 * 10 * 5 * 2);

  const Selection best = select_best(rows, 0.9, 0.01);
  const double elapsed = seconds_since(start);
  std::printf("  %zu rows in %.1f s (budget 600 s)\n", rows.size(), elapsed);
  if (best.found) {
    std::printf("  best: %s @%.2f coverage %.4f width %.5f (+/- %.5f)\n",
                best.config_id.c_str(), best.confidence, best.mean_coverage,
                best.mean_width, best.std_width);
  } else {
    std::printf("  no config within tolerance: %s\n", best.diagnostic.c_str());
  }

  const bool in_time = elapsed < 600.0;
  CHECK(in_time);
  CHECK(best.found);
  CHECK(best.unique);
  report(9, "10x10 grid over 5 seeds in < 10 min with a unique narrowest config",
         in_time && best.found && best.unique);
}
