#include "confreg/evalbench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace confreg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SplitView {
  Matrix features;
  std::vector<double> targets;
  std::vector<double> predictions;

  std::size_t size() const { return targets.size(); }
};

SplitView extract(const Dataset& dataset, Split tag) {
  if (!dataset.predictions) {
    throw std::invalid_argument(
        "run_cell: dataset must carry predictions for all splits");
  }
  const auto rows = dataset.indices_of(tag);
  SplitView view;
  view.features = Matrix(rows.size(), dataset.features.cols());
  view.targets.reserve(rows.size());
  view.predictions.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < dataset.features.cols(); ++c) {
      view.features(r, c) = dataset.features(rows[r], c);
    }
    view.targets.push_back(dataset.targets[rows[r]]);
    view.predictions.push_back((*dataset.predictions)[rows[r]]);
  }
  return view;
}

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double median_of_sorted(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) {
    const double dev = v - mean;
    ss += dev * dev;
  }
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::string make_config_id(DifficultyKind estimator, ConformalMode mode,
                           std::size_t k, std::size_t bins) {
  std::ostringstream id;
  id << to_string(estimator) << '/' << to_string(mode) << "/k=" << k;
  if (mode == ConformalMode::Mondrian) id << "/bins=" << bins;
  return id.str();
}

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void run_cells_parallel(std::size_t cell_count, unsigned threads,
                        const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::max(
      1u, std::min<unsigned>(threads, static_cast<unsigned>(cell_count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < cell_count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cell_count) return;
        try {
          body(i);
        } catch (...) {
          std::scoped_lock lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

EvalSummary evaluate(const std::vector<PredictionInterval>& intervals,
                     std::span<const double> y_true) {
  if (intervals.empty()) throw std::invalid_argument("evaluate: empty input");
  if (intervals.size() != y_true.size()) {
    throw std::invalid_argument("evaluate: length mismatch");
  }

  std::size_t outside = 0;
  std::size_t unbounded = 0;
  std::vector<double> widths;
  widths.reserve(intervals.size());
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (!intervals[i].contains(y_true[i])) ++outside;
    if (intervals[i].bounded()) {
      widths.push_back(intervals[i].width());
    } else {
      ++unbounded;
    }
  }

  EvalSummary out;
  const double n = static_cast<double>(intervals.size());
  out.error = static_cast<double>(outside) / n;
  out.unbounded_fraction = static_cast<double>(unbounded) / n;
  if (!widths.empty()) {
    std::sort(widths.begin(), widths.end());
    out.eff_mean = mean_of(widths);
    out.eff_med = median_of_sorted(widths);
  }
  return out;
}

CellResult run_cell(const Dataset& tagged, const CellParams& params) {
  if (params.confidences.empty()) {
    throw std::invalid_argument("run_cell: no confidence levels");
  }

  const ScalingSpec scaling = fit_scaling(tagged);
  const Dataset scaled = apply_scaling(tagged, scaling);
  const SplitView train = extract(scaled, Split::Train);
  const SplitView cal = extract(scaled, Split::Calibration);
  const SplitView test = extract(scaled, Split::Test);
  if (cal.size() == 0 || test.size() == 0) {
    throw std::invalid_argument("run_cell: empty calibration or test split");
  }
  if (params.k > train.size()) {
    throw std::invalid_argument("run_cell: k exceeds proper training size");
  }
  if (params.mode == ConformalMode::Mondrian && params.bins > cal.size()) {
    throw std::invalid_argument("run_cell: bins exceed calibration size");
  }

  CellResult out;
  auto start = Clock::now();

  std::vector<double> train_residuals(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    train_residuals[i] = std::abs(train.targets[i] - train.predictions[i]);
  }
  const DifficultyEstimator estimator(
      params.estimator, {params.k, params.beta, params.bandwidth},
      train.features, train.targets, &train_residuals);

  const std::vector<double> sigma_cal =
      estimator.estimate(cal.features, &cal.predictions);

  std::vector<double> abs_res_cal(cal.size());
  std::vector<double> signed_res_cal(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    signed_res_cal[i] = cal.targets[i] - cal.predictions[i];
    abs_res_cal[i] = std::abs(signed_res_cal[i]);
  }

  ConformalRegressor regressor = [&] {
    switch (params.mode) {
      case ConformalMode::Plain:
        return ConformalRegressor::calibrate(abs_res_cal);
      case ConformalMode::Normalized:
        return ConformalRegressor::calibrate(abs_res_cal, &sigma_cal);
      case ConformalMode::Mondrian:
        return ConformalRegressor::calibrate(abs_res_cal, nullptr, params.bins,
                                             &sigma_cal);
    }
    throw std::logic_error("run_cell: unknown mode");
  }();

  // The CPS matches the interval normalization; mondrian bins shape intervals
  // only, so mondrian rows use the unnormalized CPS.
  const ConformalPredictiveSystem cps =
      params.mode == ConformalMode::Normalized
          ? ConformalPredictiveSystem::calibrate(signed_res_cal, sigma_cal)
          : ConformalPredictiveSystem::calibrate(signed_res_cal);

  out.time_fit = seconds_since(start);

  start = Clock::now();
  const std::vector<double> sigma_test =
      estimator.estimate(test.features, &test.predictions);

  const std::span<const double> sigma_span =
      params.mode == ConformalMode::Normalized ? std::span<const double>(sigma_test)
                                               : std::span<const double>();
  const std::span<const double> difficulty_span =
      params.mode == ConformalMode::Mondrian ? std::span<const double>(sigma_test)
                                             : std::span<const double>();

  for (double confidence : params.confidences) {
    const auto intervals = regressor.interval_batch(test.predictions, confidence,
                                                    sigma_span, difficulty_span);
    out.per_confidence.push_back({confidence, evaluate(intervals, test.targets)});
  }

  // CRPS is a property of the predictive distribution, so it is computed once
  // and shared by every confidence row. Sorting before the mean keeps the
  // value independent of test-row order.
  std::vector<double> crps_values;
  crps_values.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto dist = cps.distribution(
        test.predictions[i], cps.normalized()
                                 ? std::optional<double>(sigma_test[i])
                                 : std::optional<double>());
    crps_values.push_back(crps(dist, test.targets[i]));
  }
  std::sort(crps_values.begin(), crps_values.end());
  out.crps = mean_of(crps_values);

  out.time_evaluate = seconds_since(start);
  return out;
}

namespace {

void validate_config(const ExperimentConfig& config) {
  if (config.synthetic.has_value() == config.csv.has_value()) {
    throw std::invalid_argument(
        "run_experiment: exactly one data source (synthetic or csv) required");
  }
  if (config.confidences.empty() || config.k_grid.empty() || config.seeds.empty()) {
    throw std::invalid_argument("run_experiment: grids must be non-empty");
  }
  if (config.mode == ConformalMode::Mondrian && config.bin_grid.empty()) {
    throw std::invalid_argument("run_experiment: mondrian mode needs a bin grid");
  }
  for (double c : config.confidences) {
    if (!(c > 0.0 && c < 1.0)) {
      throw std::invalid_argument("run_experiment: confidences must be in (0,1)");
    }
  }
  std::vector<std::uint64_t> seeds = config.seeds;
  std::sort(seeds.begin(), seeds.end());
  if (std::adjacent_find(seeds.begin(), seeds.end()) != seeds.end()) {
    throw std::invalid_argument("run_experiment: seeds must be distinct");
  }
  if (config.beta < 0.0) {
    throw std::invalid_argument("run_experiment: beta must be >= 0");
  }
  if (!(config.bandwidth > 0.0)) {
    throw std::invalid_argument("run_experiment: bandwidth must be positive");
  }
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  validate_config(config);

  // Per-seed datasets are prepared up front so grid cells can run in any
  // order on any number of threads.
  std::vector<Dataset> datasets;
  datasets.reserve(config.seeds.size());
  if (config.synthetic) {
    const SyntheticSpec& spec = *config.synthetic;
    for (std::uint64_t seed : config.seeds) {
      Dataset raw = make_synthetic(spec.kind, spec.n, spec.noise_scale, seed);
      datasets.push_back(
          split(raw, config.split_fractions, seed ^ 0x9e3779b97f4a7c15ull));
    }
  } else {
    const CsvSpec& spec = *config.csv;
    const Dataset train =
        load_csv(spec.train_path, spec.target_column, spec.prediction_column);
    const Dataset cal = load_csv(spec.calibration_path, spec.target_column,
                                 spec.prediction_column);
    const Dataset test =
        load_csv(spec.test_path, spec.target_column, spec.prediction_column);
    const Dataset merged = merge_splits(train, cal, test);
    for (std::size_t i = 0; i < config.seeds.size(); ++i) datasets.push_back(merged);
  }

  const std::vector<std::size_t> bin_axis =
      config.mode == ConformalMode::Mondrian ? config.bin_grid
                                             : std::vector<std::size_t>{0};

  struct Cell {
    std::size_t seed_index;
    std::size_t k;
    std::size_t bins;
  };
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < config.seeds.size(); ++s) {
    for (std::size_t k : config.k_grid) {
      for (std::size_t bins : bin_axis) cells.push_back({s, k, bins});
    }
  }

  std::vector<CellResult> results(cells.size());
  run_cells_parallel(cells.size(), config.threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    CellParams params;
    params.estimator = config.estimator;
    params.mode = config.mode;
    params.k = cell.k;
    params.bins = cell.bins;
    params.beta = config.beta;
    params.bandwidth = config.bandwidth;
    params.confidences = config.confidences;
    results[i] = run_cell(datasets[cell.seed_index], params);
  });

  std::vector<ResultRow> rows;
  rows.reserve(cells.size() * config.confidences.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    const CellResult& result = results[i];
    for (const ConfidenceMetrics& cm : result.per_confidence) {
      ResultRow row;
      row.config_id =
          make_config_id(config.estimator, config.mode, cell.k, cell.bins);
      row.confidence = cm.confidence;
      row.seed = config.seeds[cell.seed_index];
      row.error = cm.eval.error;
      row.eff_mean = cm.eval.eff_mean;
      row.eff_med = cm.eval.eff_med;
      row.crps = result.crps;
      row.time_fit = result.time_fit;
      row.time_evaluate = result.time_evaluate;
      row.unbounded_fraction = cm.eval.unbounded_fraction;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

Selection select_best(const std::vector<ResultRow>& rows, double target_coverage,
                      double tolerance) {
  if (rows.empty()) throw std::invalid_argument("select_best: no rows");

  struct Group {
    std::vector<double> errors;
    std::vector<double> widths;
    bool width_missing = false;
  };
  std::map<std::pair<std::string, double>, Group> groups;
  for (const ResultRow& row : rows) {
    Group& g = groups[{row.config_id, row.confidence}];
    g.errors.push_back(row.error);
    if (row.eff_mean) {
      g.widths.push_back(*row.eff_mean);
    } else {
      g.width_missing = true;
    }
  }

  Selection best;
  best.found = false;
  double closest_gap = std::numeric_limits<double>::infinity();
  std::ostringstream diag;
  for (const auto& [key, group] : groups) {
    const double coverage = 1.0 - mean_of(group.errors);
    const double gap = std::abs(coverage - target_coverage);
    closest_gap = std::min(closest_gap, gap);
    if (gap > tolerance + 1e-12) continue;
    if (group.width_missing || group.widths.empty()) {
      diag << "skipped " << key.first << "@" << key.second
           << " (unbounded widths); ";
      continue;
    }
    const double mean_width = mean_of(group.widths);
    if (!best.found || mean_width < best.mean_width) {
      best.found = true;
      best.unique = true;
      best.config_id = key.first;
      best.confidence = key.second;
      best.mean_coverage = coverage;
      best.mean_width = mean_width;
      best.std_width = sample_std(group.widths);
      best.rows = group.errors.size();
    } else if (mean_width == best.mean_width) {
      best.unique = false;
    }
  }
  if (!best.found) {
    diag << "no configuration within " << target_coverage << " +/- " << tolerance
         << "; closest coverage gap " << closest_gap;
  }
  best.diagnostic = diag.str();
  return best;
}

namespace {

std::string csv_field(const std::optional<double>& v) {
  return v ? format_full(*v) : std::string();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::vector<std::string> emit_report(const std::vector<ResultRow>& rows,
                                     ReportFormat format, const std::string& out_dir) {
  if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
  std::filesystem::create_directories(out_dir);

  const auto open_out = [&](const std::string& name) {
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_report: cannot write " + path);
    return std::pair<std::ofstream, std::string>(std::move(out), path);
  };

  if (format == ReportFormat::Csv) {
    auto [out, path] = open_out("results.csv");
    out << "config,confidence,seed,error,eff_mean,eff_med,crps,time_fit,"
           "time_evaluate,unbounded_fraction\n";
    for (const ResultRow& r : rows) {
      out << r.config_id << ',' << format_full(r.confidence) << ',' << r.seed << ','
          << format_full(r.error) << ',' << csv_field(r.eff_mean) << ','
          << csv_field(r.eff_med) << ',' << format_full(r.crps) << ','
          << format_full(r.time_fit) << ',' << format_full(r.time_evaluate) << ','
          << format_full(r.unbounded_fraction) << '\n';
    }
    return {path};
  }

  if (format == ReportFormat::MarkdownTable) {
    // One table per config: metrics as rows, confidence levels as columns,
    // means across seeds in the cells.
    std::map<std::string, std::map<double, std::vector<const ResultRow*>>> configs;
    for (const ResultRow& r : rows) configs[r.config_id][r.confidence].push_back(&r);

    auto [out, path] = open_out("report.md");
    for (const auto& [config_id, by_confidence] : configs) {
      out << "### " << config_id << "\n\n";
      out << "| metric |";
      for (const auto& [confidence, _] : by_confidence) {
        out << ' ' << format_full(confidence) << " |";
      }
      out << "\n|---|";
      for (std::size_t i = 0; i < by_confidence.size(); ++i) out << "---|";
      out << '\n';

      const auto metric_row =
          [&](const std::string& name,
              const std::function<std::optional<double>(const ResultRow&)>& get) {
            out << "| " << name << " |";
            for (const auto& [confidence, group] : by_confidence) {
              std::vector<double> values;
              for (const ResultRow* r : group) {
                if (auto v = get(*r)) values.push_back(*v);
              }
              out << ' '
                  << (values.empty() ? std::string("-") : format_fixed(mean_of(values)))
                  << " |";
            }
            out << '\n';
          };
      metric_row("error", [](const ResultRow& r) { return std::optional(r.error); });
      metric_row("eff_mean", [](const ResultRow& r) { return r.eff_mean; });
      metric_row("eff_med", [](const ResultRow& r) { return r.eff_med; });
      metric_row("CRPS", [](const ResultRow& r) { return std::optional(r.crps); });
      metric_row("time_fit",
                 [](const ResultRow& r) { return std::optional(r.time_fit); });
      metric_row("time_evaluate",
                 [](const ResultRow& r) { return std::optional(r.time_evaluate); });
      out << '\n';
    }
    return {path};
  }

  // Plot data: one (coverage, width, width std, label) point per config,
  // aggregated across seeds and confidence levels.
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> configs;
  for (const ResultRow& r : rows) {
    auto& [errors, widths] = configs[r.config_id];
    errors.push_back(r.error);
    if (r.eff_mean) widths.push_back(*r.eff_mean);
  }
  auto [out, path] = open_out("plot_data.csv");
  out << "label,effective_coverage,mean_width,std_width\n";
  for (const auto& [config_id, data] : configs) {
    const auto& [errors, widths] = data;
    out << config_id << ',' << format_full(1.0 - mean_of(errors)) << ',';
    if (!widths.empty()) {
      out << format_full(mean_of(widths)) << ',' << format_full(sample_std(widths));
    } else {
      out << ',';
    }
    out << '\n';
  }
  return {path};
}

std::vector<ResultRow> load_result_rows(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("load_result_rows: cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_result_rows: empty file " + csv_path);
  }

  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 10) {
      throw std::runtime_error("load_result_rows: malformed line: " + line);
    }
    ResultRow r;
    r.config_id = cells[0];
    r.confidence = std::stod(cells[1]);
    r.seed = std::stoull(cells[2]);
    r.error = std::stod(cells[3]);
    if (!cells[4].empty()) r.eff_mean = std::stod(cells[4]);
    if (!cells[5].empty()) r.eff_med = std::stod(cells[5]);
    r.crps = std::stod(cells[6]);
    r.time_fit = std::stod(cells[7]);
    r.time_evaluate = std::stod(cells[8]);
    r.unbounded_fraction = std::stod(cells[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace confreg
