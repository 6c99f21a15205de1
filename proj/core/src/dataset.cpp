#include "confreg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace confreg {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_cell(const std::string& cell, double* out) {
  if (cell.empty()) return false;
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end != begin + cell.size()) return false;
  if (!std::isfinite(value)) return false;
  *out = value;
  return true;
}

}  // namespace

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Calibration: return "calibration";
    case Split::Test: return "test";
  }
  return "?";
}

void print_load_report(const LoadReport& report, std::ostream& out) {
  out << "load.path=" << report.path << '\n'
      << "load.file_rows=" << report.file_rows << '\n'
      << "load.accepted=" << report.accepted << '\n'
      << "load.rejected=" << report.rejected << '\n';
}

std::size_t Dataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count(split_tags.begin(), split_tags.end(), s));
}

std::vector<std::size_t> Dataset::indices_of(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split_tags.size(); ++i) {
    if (split_tags[i] == s) out.push_back(i);
  }
  return out;
}

Dataset Dataset::subset(Split s) const {
  const auto rows = indices_of(s);
  Dataset out;
  out.features = Matrix(rows.size(), features.cols());
  out.targets.reserve(rows.size());
  out.split_tags.assign(rows.size(), s);
  out.feature_names = feature_names;
  if (predictions) out.predictions.emplace();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t src = rows[r];
    for (std::size_t c = 0; c < features.cols(); ++c) {
      out.features(r, c) = features(src, c);
    }
    out.targets.push_back(targets[src]);
    if (predictions) out.predictions->push_back((*predictions)[src]);
  }
  return out;
}

Dataset load_csv(const std::string& path, const std::string& target_column,
                 const std::optional<std::string>& prediction_column,
                 LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_csv: missing header row: " + path);
  }
  const std::vector<std::string> header = split_line(line);

  std::ptrdiff_t target_idx = -1;
  std::ptrdiff_t prediction_idx = -1;
  std::vector<std::size_t> feature_idx;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == target_column && target_idx < 0) {
      target_idx = static_cast<std::ptrdiff_t>(c);
    } else if (prediction_column && header[c] == *prediction_column &&
               prediction_idx < 0) {
      prediction_idx = static_cast<std::ptrdiff_t>(c);
    } else {
      feature_idx.push_back(c);
      feature_names.push_back(header[c]);
    }
  }
  if (target_idx < 0) {
    throw std::runtime_error("load_csv: target column '" + target_column +
                             "' not found in " + path);
  }
  if (prediction_column && prediction_idx < 0) {
    throw std::runtime_error("load_csv: prediction column '" +
                             *prediction_column + "' not found in " + path);
  }

  LoadReport local;
  local.path = path;
  std::vector<std::vector<double>> feature_rows;
  std::vector<double> targets;
  std::vector<double> predictions;

  while (std::getline(in, line)) {
    ++local.file_rows;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      ++local.rejected;
      continue;
    }
    std::vector<double> row(feature_idx.size());
    double target = 0.0;
    double prediction = 0.0;
    bool ok = parse_cell(cells[static_cast<std::size_t>(target_idx)], &target);
    if (ok && prediction_idx >= 0) {
      ok = parse_cell(cells[static_cast<std::size_t>(prediction_idx)], &prediction);
    }
    for (std::size_t f = 0; ok && f < feature_idx.size(); ++f) {
      ok = parse_cell(cells[feature_idx[f]], &row[f]);
    }
    if (!ok) {
      ++local.rejected;
      continue;
    }
    ++local.accepted;
    feature_rows.push_back(std::move(row));
    targets.push_back(target);
    if (prediction_idx >= 0) predictions.push_back(prediction);
  }

  if (report) *report = local;
  if (targets.empty()) {
    throw std::runtime_error("load_csv: zero valid rows in " + path);
  }

  Dataset out;
  out.features = feature_rows.front().empty()
                     ? Matrix(feature_rows.size(), 0)
                     : Matrix::from_rows(feature_rows);
  out.targets = std::move(targets);
  if (prediction_idx >= 0) out.predictions = std::move(predictions);
  out.split_tags.assign(out.targets.size(), Split::Train);
  out.feature_names = std::move(feature_names);
  return out;
}

Dataset split(const Dataset& dataset, const std::array<double, 3>& fractions,
              std::uint64_t seed) {
  double sum = 0.0;
  for (double f : fractions) {
    if (f <= 0.0) throw std::invalid_argument("split: fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions must sum to 1");
  }

  const std::size_t n = dataset.size();
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(quota));
    remainders[i] = quota - std::floor(quota);
    assigned += counts[i];
  }
  // Largest-remainder rounding; ties go to the earlier split.
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t i = 0; assigned < n; ++i) {
    ++counts[order[i % 3]];
    ++assigned;
  }
  for (std::size_t c : counts) {
    if (c == 0) {
      throw std::invalid_argument("split: a split would receive zero rows");
    }
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  Dataset out = dataset;
  for (std::size_t i = 0; i < n; ++i) {
    Split tag = Split::Test;
    if (i < counts[0]) {
      tag = Split::Train;
    } else if (i < counts[0] + counts[1]) {
      tag = Split::Calibration;
    }
    out.split_tags[perm[i]] = tag;
  }
  return out;
}

ScalingSpec fit_scaling(const Dataset& dataset) {
  const auto train_rows = dataset.indices_of(Split::Train);
  if (train_rows.size() < 2) {
    throw std::invalid_argument("fit_scaling: need at least 2 train rows");
  }

  const std::size_t d = dataset.features.cols();
  ScalingSpec spec;
  spec.feature_mean.assign(d, 0.0);
  spec.feature_std.assign(d, 1.0);
  spec.degenerate_feature.assign(d, 0);

  const double n = static_cast<double>(train_rows.size());
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r : train_rows) mean += dataset.features(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r : train_rows) {
      const double dev = dataset.features(r, c) - mean;
      var += dev * dev;
    }
    var /= n;  // population variance
    spec.feature_mean[c] = mean;
    if (var > 0.0) {
      spec.feature_std[c] = std::sqrt(var);
    } else {
      spec.feature_std[c] = 1.0;
      spec.degenerate_feature[c] = 1;
    }
  }

  double lo = dataset.targets[train_rows.front()];
  double hi = lo;
  for (std::size_t r : train_rows) {
    lo = std::min(lo, dataset.targets[r]);
    hi = std::max(hi, dataset.targets[r]);
  }
  if (lo == hi) {
    throw std::invalid_argument("fit_scaling: constant target on train rows");
  }
  spec.target_min = lo;
  spec.target_max = hi;
  return spec;
}

namespace {

void check_spec(const Dataset& dataset, const ScalingSpec& spec) {
  if (spec.feature_mean.size() != dataset.features.cols()) {
    throw std::invalid_argument("scaling: spec dimension mismatch");
  }
  if (spec.target_max == spec.target_min) {
    throw std::invalid_argument("scaling: degenerate target range");
  }
}

}  // namespace

Dataset apply_scaling(const Dataset& dataset, const ScalingSpec& spec) {
  check_spec(dataset, spec);
  Dataset out = dataset;
  const double range = spec.target_max - spec.target_min;
  for (std::size_t r = 0; r < out.features.rows(); ++r) {
    for (std::size_t c = 0; c < out.features.cols(); ++c) {
      out.features(r, c) = (out.features(r, c) - spec.feature_mean[c]) /
                           spec.feature_std[c];
    }
  }
  for (double& y : out.targets) y = (y - spec.target_min) / range;
  if (out.predictions) {
    for (double& p : *out.predictions) p = (p - spec.target_min) / range;
  }
  return out;
}

Dataset invert_scaling(const Dataset& dataset, const ScalingSpec& spec) {
  check_spec(dataset, spec);
  Dataset out = dataset;
  const double range = spec.target_max - spec.target_min;
  for (std::size_t r = 0; r < out.features.rows(); ++r) {
    for (std::size_t c = 0; c < out.features.cols(); ++c) {
      out.features(r, c) = out.features(r, c) * spec.feature_std[c] +
                           spec.feature_mean[c];
    }
  }
  for (double& y : out.targets) y = y * range + spec.target_min;
  if (out.predictions) {
    for (double& p : *out.predictions) p = p * range + spec.target_min;
  }
  return out;
}

Dataset make_synthetic(SyntheticKind kind, std::size_t n, double noise_scale,
                       std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("make_synthetic: n must be >= 10");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 10.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset out;
  out.features = Matrix(n, 2);
  out.targets.resize(n);
  out.predictions.emplace(n);
  out.split_tags.assign(n, Split::Train);
  out.feature_names = {"x1", "x2"};

  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = coord(rng);
    const double x2 = coord(rng);
    const double mean = x1 * std::sin(x1);
    const double eps = gauss(rng);
    const double scale = kind == SyntheticKind::Heteroscedastic
                             ? noise_scale * (0.1 + 0.2 * x1)
                             : noise_scale;
    out.features(i, 0) = x1;
    out.features(i, 1) = x2;
    out.targets[i] = mean + scale * eps;
    (*out.predictions)[i] = mean;
  }
  return out;
}

Dataset merge_splits(const Dataset& train, const Dataset& calibration,
                     const Dataset& test) {
  const Dataset* parts[3] = {&train, &calibration, &test};
  const Split tags[3] = {Split::Train, Split::Calibration, Split::Test};

  const std::size_t d = train.features.cols();
  const bool with_predictions = train.predictions.has_value();
  std::size_t total = 0;
  for (const Dataset* p : parts) {
    if (p->features.cols() != d) {
      throw std::invalid_argument("merge_splits: feature dimension mismatch");
    }
    if (p->predictions.has_value() != with_predictions) {
      throw std::invalid_argument("merge_splits: inconsistent prediction columns");
    }
    total += p->size();
  }

  Dataset out;
  out.features = Matrix(total, d);
  out.targets.reserve(total);
  out.split_tags.reserve(total);
  out.feature_names = train.feature_names;
  if (with_predictions) out.predictions.emplace();

  std::size_t row = 0;
  for (std::size_t part = 0; part < 3; ++part) {
    const Dataset& p = *parts[part];
    for (std::size_t i = 0; i < p.size(); ++i, ++row) {
      for (std::size_t c = 0; c < d; ++c) out.features(row, c) = p.features(i, c);
      out.targets.push_back(p.targets[i]);
      out.split_tags.push_back(tags[part]);
      if (with_predictions) out.predictions->push_back((*p.predictions)[i]);
    }
  }
  return out;
}

}  // namespace confreg
