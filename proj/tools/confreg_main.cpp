// confreg — split conformal regression benchmark CLI.
//
// Subcommands:
//   run       execute an experiment grid and write results.csv
//   report    re-render a results.csv as csv / markdown / plot data
//   selftest  run the built-in invariant checks
//
// Exit codes: 0 success, 1 usage error, 2 data/runtime error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "confreg/conformal.hpp"
#include "confreg/cps.hpp"
#include "confreg/dataset.hpp"
#include "confreg/difficulty.hpp"
#include "confreg/evalbench.hpp"
#include "confreg/kde.hpp"

namespace {

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::stringstream ss(text);
  while (std::getline(ss, part, sep)) parts.push_back(part);
  return parts;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& part : split_on(text, ',')) out.push_back(std::stod(part));
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const std::string& part : split_on(text, ',')) out.push_back(std::stoull(part));
  return out;
}

// Grids accept either "10,20,30" or an inclusive range "10:100:10".
std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.find(':') != std::string::npos) {
    const auto parts = split_on(text, ':');
    if (parts.size() != 3) {
      throw CLI::ValidationError("grid", "range must be start:stop:step");
    }
    const std::size_t start = std::stoull(parts[0]);
    const std::size_t stop = std::stoull(parts[1]);
    const std::size_t step = std::stoull(parts[2]);
    if (step == 0) throw CLI::ValidationError("grid", "step must be positive");
    for (std::size_t v = start; v <= stop; v += step) out.push_back(v);
  } else {
    for (const std::string& part : split_on(text, ',')) out.push_back(std::stoull(part));
  }
  return out;
}

confreg::DifficultyKind parse_estimator(const std::string& name) {
  if (name == "std") return confreg::DifficultyKind::StdDev;
  if (name == "var") return confreg::DifficultyKind::Variance;
  if (name == "res") return confreg::DifficultyKind::Residual;
  if (name == "targ-strg") return confreg::DifficultyKind::TargetStrangeness;
  throw CLI::ValidationError("--estimator", "expected std|var|res|targ-strg");
}

confreg::ConformalMode parse_mode(const std::string& name) {
  if (name == "plain") return confreg::ConformalMode::Plain;
  if (name == "norm") return confreg::ConformalMode::Normalized;
  if (name == "mondrian") return confreg::ConformalMode::Mondrian;
  throw CLI::ValidationError("--mode", "expected plain|norm|mondrian");
}

confreg::SyntheticSpec parse_synthetic(const std::string& text) {
  const auto parts = split_on(text, ',');
  confreg::SyntheticSpec spec;
  if (parts.empty() || parts[0].empty()) {
    throw CLI::ValidationError("--synthetic", "expected kind[,n[,noise_scale]]");
  }
  if (parts[0] == "heteroscedastic") {
    spec.kind = confreg::SyntheticKind::Heteroscedastic;
  } else if (parts[0] == "homoscedastic") {
    spec.kind = confreg::SyntheticKind::Homoscedastic;
  } else {
    throw CLI::ValidationError("--synthetic",
                               "kind must be heteroscedastic|homoscedastic");
  }
  if (parts.size() > 1) spec.n = std::stoull(parts[1]);
  if (parts.size() > 2) spec.noise_scale = std::stod(parts[2]);
  if (parts.size() > 3) {
    throw CLI::ValidationError("--synthetic", "too many fields");
  }
  return spec;
}

int run_command(const std::string& synthetic, const std::string& train,
                const std::string& cal, const std::string& test,
                const std::string& target_column, const std::string& prediction_column,
                const std::string& estimator, const std::string& mode,
                const std::string& k_grid, const std::string& bin_grid,
                const std::string& confidences, const std::string& seeds,
                const std::string& fractions, double beta, double bandwidth,
                unsigned threads, const std::string& out_dir, double select_at,
                double select_tol) {
  confreg::ExperimentConfig config;
  if (!synthetic.empty()) {
    config.synthetic = parse_synthetic(synthetic);
  }
  if (!train.empty() || !cal.empty() || !test.empty()) {
    if (train.empty() || cal.empty() || test.empty()) {
      std::cerr << "error: --train/--cal/--test must be given together\n";
      return 1;
    }
    confreg::CsvSpec csv;
    csv.train_path = train;
    csv.calibration_path = cal;
    csv.test_path = test;
    csv.target_column = target_column;
    csv.prediction_column = prediction_column;
    config.csv = csv;

    confreg::LoadReport report;
    for (const std::string& path : {train, cal, test}) {
      confreg::load_csv(path, target_column, prediction_column, &report);
      confreg::print_load_report(report, std::cerr);
    }
  }
  if (config.synthetic.has_value() == config.csv.has_value()) {
    std::cerr << "error: give either --synthetic or --train/--cal/--test\n";
    return 1;
  }

  config.estimator = parse_estimator(estimator);
  config.mode = parse_mode(mode);
  config.k_grid = parse_grid(k_grid);
  config.bin_grid = parse_grid(bin_grid);
  config.confidences = parse_double_list(confidences);
  config.seeds = parse_seed_list(seeds);
  config.beta = beta;
  config.bandwidth = bandwidth;
  config.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                : threads;
  const auto f = parse_double_list(fractions);
  if (f.size() != 3) {
    std::cerr << "error: --split needs three fractions\n";
    return 1;
  }
  config.split_fractions = {f[0], f[1], f[2]};

  const auto rows = confreg::run_experiment(config);
  const auto paths = confreg::emit_report(rows, confreg::ReportFormat::Csv, out_dir);
  std::cout << "rows=" << rows.size() << "\n";
  for (const std::string& p : paths) std::cout << "wrote=" << p << "\n";

  if (select_at > 0.0) {
    const auto best = confreg::select_best(rows, select_at, select_tol);
    if (best.found) {
      std::cout << "selected.config=" << best.config_id << "\n"
                << "selected.confidence=" << best.confidence << "\n"
                << "selected.coverage=" << best.mean_coverage << "\n"
                << "selected.eff_mean=" << best.mean_width << "\n"
                << "selected.eff_std=" << best.std_width << "\n"
                << "selected.unique=" << (best.unique ? "yes" : "no") << "\n";
    } else {
      std::cout << "selected.none=" << best.diagnostic << "\n";
    }
  }
  return 0;
}

int report_command(const std::string& in_path, const std::string& format,
                   const std::string& out_dir) {
  confreg::ReportFormat fmt;
  if (format == "csv") {
    fmt = confreg::ReportFormat::Csv;
  } else if (format == "markdown") {
    fmt = confreg::ReportFormat::MarkdownTable;
  } else if (format == "plot-data") {
    fmt = confreg::ReportFormat::PlotData;
  } else {
    std::cerr << "error: --format must be csv|markdown|plot-data\n";
    return 1;
  }
  const auto rows = confreg::load_result_rows(in_path);
  for (const std::string& p : confreg::emit_report(rows, fmt, out_dir)) {
    std::cout << "wrote=" << p << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// selftest: small, fast re-checks of the library's core invariants against
// independent oracles. Not a replacement for the test suite.

double kde_density_direct(const std::vector<double>& samples, double h, double p) {
  double sum = 0.0;
  for (double y : samples) {
    const double u = (p - y) / h;
    sum += std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  }
  return sum / (static_cast<double>(samples.size()) * h);
}

double crps_by_segments(const std::vector<double>& support_sorted, double y) {
  std::vector<double> breaks = support_sorted;
  breaks.push_back(y);
  std::sort(breaks.begin(), breaks.end());
  const double n = static_cast<double>(support_sorted.size());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (b <= a) continue;
    const double mid = 0.5 * (a + b);
    const double cdf =
        static_cast<double>(std::upper_bound(support_sorted.begin(),
                                             support_sorted.end(), mid) -
                            support_sorted.begin()) /
        n;
    const double indicator = mid >= y ? 1.0 : 0.0;
    total += (cdf - indicator) * (cdf - indicator) * (b - a);
  }
  return total;
}

bool check(const char* name, bool ok) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
  return ok;
}

int selftest_command() {
  std::mt19937_64 rng(20240901);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool all_ok = true;

  {
    bool ok = true;
    for (int iter = 0; iter < 200 && ok; ++iter) {
      const std::size_t k = 1 + static_cast<std::size_t>(rng() % 50);
      std::vector<double> samples(k);
      for (double& s : samples) s = 10.0 * gauss(rng);
      const double h = 0.05 + 2.0 * unit(rng);
      const double p = 12.0 * gauss(rng);
      const confreg::KdeModel kde(samples, h);
      const double got = kde.density(p);
      const double want = kde_density_direct(samples, h, p);
      if (want > 0.0 && std::abs(got - want) > 1e-10 * want) ok = false;
    }
    const confreg::KdeModel kde({2.0, 2.0, 2.0}, 0.75);
    const double peak = 1.0 / (0.75 * std::sqrt(2.0 * std::numbers::pi));
    ok = ok && std::abs(kde.density(2.0) - peak) <= 1e-12 * peak;
    all_ok &= check("kde density matches direct-summation oracle", ok);
  }

  {
    bool ok = true;
    for (int iter = 0; iter < 100 && ok; ++iter) {
      const std::size_t n = 1 + static_cast<std::size_t>(rng() % 40);
      std::vector<double> support(n);
      for (double& s : support) s = 5.0 * gauss(rng);
      std::sort(support.begin(), support.end());
      const double y = 6.0 * gauss(rng);
      const confreg::PredictiveDistribution dist(support);
      if (std::abs(confreg::crps(dist, y) - crps_by_segments(support, y)) > 1e-6) {
        ok = false;
      }
    }
    all_ok &= check("crps matches step-function integration oracle", ok);
  }

  {
    bool ok = true;
    const double lower_bound =
        1.0 - 1.0 / (0.75 * std::sqrt(2.0 * std::numbers::pi));
    for (int iter = 0; iter < 1000 && ok; ++iter) {
      const std::size_t k = 1 + static_cast<std::size_t>(rng() % 30);
      std::vector<std::vector<double>> rows(k, std::vector<double>(1));
      std::vector<double> targets(k);
      for (std::size_t i = 0; i < k; ++i) {
        rows[i][0] = 10.0 * gauss(rng);
        targets[i] = 10.0 * gauss(rng);
      }
      const confreg::NeighborModel model(confreg::Matrix::from_rows(rows), targets,
                                         std::nullopt, k);
      confreg::Matrix query(1, 1);
      query(0, 0) = 10.0 * gauss(rng);
      const auto sigmas = confreg::estimate_target_strangeness(
          model, query, std::vector<double>{10.0 * gauss(rng)}, 0.75, 0.0);
      if (sigmas[0] < lower_bound - 1e-12 || sigmas[0] > 1.0) ok = false;
    }
    all_ok &= check("target strangeness stays within its bandwidth bounds", ok);
  }

  {
    std::vector<double> residuals(40);
    for (double& r : residuals) r = std::abs(gauss(rng));
    const auto plain = confreg::ConformalRegressor::calibrate(residuals);
    const std::vector<double> ones(residuals.size(), 1.0);
    const auto normalized = confreg::ConformalRegressor::calibrate(residuals, &ones);
    bool ok = true;
    for (double c : {0.5, 0.8, 0.9, 0.95}) {
      const auto a = plain.interval(0.0, c);
      const auto b = normalized.interval(0.0, c, 1.0);
      if (a.lower != b.lower || a.upper != b.upper) ok = false;
    }
    for (int iter = 0; iter < 50 && ok; ++iter) {
      const double c1 = 0.05 + 0.9 * unit(rng);
      const double c2 = c1 + (1.0 - c1) * 0.9 * unit(rng);
      const auto narrow = plain.interval(1.0, c1);
      const auto wide = plain.interval(1.0, c2);
      if (narrow.lower < wide.lower || narrow.upper > wide.upper) ok = false;
    }
    all_ok &= check("conformal intervals are nested and plain==norm(sigma=1)", ok);
  }

  {
    auto data = confreg::make_synthetic(confreg::SyntheticKind::Heteroscedastic, 500,
                                        1.0, 77);
    data = confreg::split(data, {0.5, 0.25, 0.25}, 77);
    bool ok = data.count(confreg::Split::Train) == 250 &&
              data.count(confreg::Split::Calibration) == 125 &&
              data.count(confreg::Split::Test) == 125;
    const auto spec = confreg::fit_scaling(data);
    const auto scaled = confreg::apply_scaling(data, spec);
    const auto restored = confreg::invert_scaling(scaled, spec);
    for (std::size_t i = 0; i < data.size() && ok; ++i) {
      if (std::abs(restored.targets[i] - data.targets[i]) >
          1e-12 * std::max(1.0, std::abs(data.targets[i]))) {
        ok = false;
      }
    }
    all_ok &= check("split partition and scaling round-trip", ok);
  }

  return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"split conformal regression with difficulty estimators"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment grid");
  std::string synthetic, train, cal, test;
  std::string target_column = "y";
  std::string prediction_column = "prediction";
  std::string estimator = "std";
  std::string mode = "norm";
  std::string k_grid = "25";
  std::string bin_grid = "10";
  std::string confidences = "0.9,0.95,0.99";
  std::string seeds = "1,2,3,4,5";
  std::string fractions = "0.5,0.25,0.25";
  double beta = 0.01;
  double bandwidth = 0.75;
  unsigned threads = 0;
  std::string out_dir = "out";
  double select_at = -1.0;
  double select_tol = 0.01;

  run->add_option("--synthetic", synthetic,
                  "synthetic dataset: kind[,n[,noise_scale]]");
  run->add_option("--train", train, "training-split CSV path");
  run->add_option("--cal", cal, "calibration-split CSV path");
  run->add_option("--test", test, "test-split CSV path");
  run->add_option("--target-column", target_column, "target column name");
  run->add_option("--prediction-column", prediction_column,
                  "point-model prediction column name");
  run->add_option("--estimator", estimator, "std|var|res|targ-strg");
  run->add_option("--mode", mode, "plain|norm|mondrian");
  run->add_option("--k-grid", k_grid, "k values: list or start:stop:step");
  run->add_option("--bin-grid", bin_grid, "mondrian bin counts: list or range");
  run->add_option("--confidence", confidences, "confidence levels, comma separated");
  run->add_option("--seeds", seeds, "seeds, comma separated");
  run->add_option("--split", fractions, "train,cal,test fractions (synthetic)");
  run->add_option("--beta", beta, "additive sigma floor");
  run->add_option("--bandwidth", bandwidth, "KDE bandwidth for targ-strg");
  run->add_option("--threads", threads, "worker threads (0 = hardware)");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--select-at", select_at,
                  "report the narrowest config at this coverage");
  run->add_option("--select-tol", select_tol, "coverage tolerance for selection");
  run->set_config("--config");

  auto* report = app.add_subcommand("report", "re-render a results.csv");
  std::string in_path;
  std::string format = "markdown";
  std::string report_out = "out";
  report->add_option("--in", in_path, "results.csv produced by run")->required();
  report->add_option("--format", format, "csv|markdown|plot-data");
  report->add_option("--out", report_out, "output directory");

  auto* selftest = app.add_subcommand("selftest", "run built-in invariant checks");
  (void)selftest;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) {
      return run_command(synthetic, train, cal, test, target_column,
                         prediction_column, estimator, mode, k_grid, bin_grid,
                         confidences, seeds, fractions, beta, bandwidth, threads,
                         out_dir, select_at, select_tol);
    }
    if (report->parsed()) return report_command(in_path, format, report_out);
    return selftest_command();
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
