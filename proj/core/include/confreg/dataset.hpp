#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "confreg/matrix.hpp"

namespace confreg {

enum class Split { Train, Calibration, Test };

const char* to_string(Split s);

/// Row accounting for one CSV ingestion. accepted + rejected == file_rows.
struct LoadReport {
  std::string path;
  std::size_t file_rows = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Emits the report as key=value lines (the CLI routes this to stderr).
void print_load_report(const LoadReport& report, std::ostream& out);

/// Feature matrix + targets (+ optional point-model predictions), with one
/// split tag per row. Immutable by convention once an experiment starts.
struct Dataset {
  Matrix features;
  std::vector<double> targets;
  std::optional<std::vector<double>> predictions;
  std::vector<Split> split_tags;
  std::vector<std::string> feature_names;

  std::size_t size() const { return targets.size(); }
  std::size_t count(Split s) const;
  std::vector<std::size_t> indices_of(Split s) const;

  /// Copies the rows tagged `s` into a standalone dataset (tags preserved).
  Dataset subset(Split s) const;
};

/// Loads a comma-separated file (UTF-8, header row, '.' decimal). Rows with
/// missing, non-numeric or non-finite cells are dropped and counted. All
/// accepted rows are tagged Train.
Dataset load_csv(const std::string& path, const std::string& target_column,
                 const std::optional<std::string>& prediction_column = {},
                 LoadReport* report = nullptr);

/// Retags rows by a seeded uniform permutation. Split sizes follow largest-
/// remainder rounding of the fractions; every split must get at least one row.
Dataset split(const Dataset& dataset, const std::array<double, 3>& fractions,
              std::uint64_t seed);

/// z-score parameters per feature and min-max range for targets, fitted on
/// Train rows only.
struct ScalingSpec {
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
  std::vector<std::uint8_t> degenerate_feature;  // train std was zero; std forced to 1
  double target_min = 0.0;
  double target_max = 1.0;
};

ScalingSpec fit_scaling(const Dataset& dataset);
Dataset apply_scaling(const Dataset& dataset, const ScalingSpec& spec);
Dataset invert_scaling(const Dataset& dataset, const ScalingSpec& spec);

enum class SyntheticKind { Heteroscedastic, Homoscedastic };

/// Two-feature test-fixture generator on [0,10]^2. The target is
/// y = x1*sin(x1) + noise, with the noise scale constant (homoscedastic) or
/// growing in x1 (heteroscedastic). The predictions column is the noiseless
/// mean, i.e. a perfectly fit point model.
Dataset make_synthetic(SyntheticKind kind, std::size_t n, double noise_scale,
                       std::uint64_t seed);

/// Concatenates three pre-split datasets into one tagged dataset.
Dataset merge_splits(const Dataset& train, const Dataset& calibration,
                     const Dataset& test);

}  // namespace confreg
