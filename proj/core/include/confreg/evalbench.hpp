#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "confreg/conformal.hpp"
#include "confreg/cps.hpp"
#include "confreg/dataset.hpp"
#include "confreg/difficulty.hpp"

namespace confreg {

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::Heteroscedastic;
  std::size_t n = 4000;
  double noise_scale = 1.0;
};

struct CsvSpec {
  std::string train_path;
  std::string calibration_path;
  std::string test_path;
  std::string target_column = "y";
  std::string prediction_column = "prediction";
};

/// One experiment grid: a data source, an estimator/mode pair, and the
/// (k, bins, seed, confidence) axes.
struct ExperimentConfig {
  std::optional<SyntheticSpec> synthetic;
  std::optional<CsvSpec> csv;
  DifficultyKind estimator = DifficultyKind::StdDev;
  ConformalMode mode = ConformalMode::Normalized;
  std::vector<double> confidences{0.9, 0.95, 0.99};
  std::vector<std::size_t> k_grid{25};
  std::vector<std::size_t> bin_grid{10};  // mondrian mode only
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double beta = 0.01;
  double bandwidth = 0.75;
  std::array<double, 3> split_fractions{0.5, 0.25, 0.25};  // synthetic source only
  unsigned threads = 1;
};

/// One (config, confidence, seed) measurement. Times are wall-clock seconds
/// and excluded from determinism comparisons.
struct ResultRow {
  std::string config_id;
  double confidence = 0.0;
  std::uint64_t seed = 0;
  double error = 0.0;  // 1 - empirical coverage
  std::optional<double> eff_mean;
  std::optional<double> eff_med;
  double crps = 0.0;
  double time_fit = 0.0;
  double time_evaluate = 0.0;
  double unbounded_fraction = 0.0;
};

struct EvalSummary {
  double error = 0.0;
  std::optional<double> eff_mean;
  std::optional<double> eff_med;
  double unbounded_fraction = 0.0;
};

/// Coverage error and width statistics for a batch of intervals. Unbounded
/// intervals never count as misses; their widths are excluded from
/// eff_mean/eff_med and surfaced via unbounded_fraction. Width statistics are
/// computed over sorted widths, so they are invariant to test-row order.
EvalSummary evaluate(const std::vector<PredictionInterval>& intervals,
                     std::span<const double> y_true);

/// Parameters of a single grid cell run on a pre-split dataset.
struct CellParams {
  DifficultyKind estimator = DifficultyKind::StdDev;
  ConformalMode mode = ConformalMode::Normalized;
  std::size_t k = 25;
  std::size_t bins = 10;
  double beta = 0.01;
  double bandwidth = 0.75;
  std::vector<double> confidences{0.9};
};

struct ConfidenceMetrics {
  double confidence = 0.0;
  EvalSummary eval;
};

struct CellResult {
  std::vector<ConfidenceMetrics> per_confidence;
  double crps = 0.0;  // mean over the test set; confidence-independent
  double time_fit = 0.0;
  double time_evaluate = 0.0;
};

/// Full split-CP pipeline on one tagged dataset: scale on train rows, fit the
/// difficulty estimator on the proper training set, calibrate on the
/// calibration set, evaluate intervals and CRPS on the test set.
CellResult run_cell(const Dataset& tagged, const CellParams& params);

/// Runs every (k, bins, seed) cell of the grid; one ResultRow per confidence
/// per cell. Cells are independent and may run on config.threads workers;
/// output order and values are identical at any thread count.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

struct Selection {
  bool found = false;
  bool unique = true;
  std::string config_id;
  double confidence = 0.0;
  double mean_coverage = 0.0;
  double mean_width = 0.0;
  double std_width = 0.0;  // across seeds
  std::size_t rows = 0;
  std::string diagnostic;
};

/// Among (config, confidence) groups whose mean coverage across seeds lies
/// within target +/- tolerance, picks the one with the smallest mean eff_mean.
Selection select_best(const std::vector<ResultRow>& rows, double target_coverage,
                      double tolerance);

enum class ReportFormat { Csv, MarkdownTable, PlotData };

/// Writes the requested report into out_dir and returns the file paths.
std::vector<std::string> emit_report(const std::vector<ResultRow>& rows,
                                     ReportFormat format, const std::string& out_dir);

/// Parses a results.csv produced by emit_report back into rows.
std::vector<ResultRow> load_result_rows(const std::string& csv_path);

}  // namespace confreg
