#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace confreg {

enum class ConformalMode { Plain, Normalized, Mondrian };

const char* to_string(ConformalMode mode);

struct PredictionInterval {
  double lower = 0.0;
  double upper = 0.0;
  double confidence = 0.0;

  bool bounded() const { return std::isfinite(lower) && std::isfinite(upper); }
  double width() const { return upper - lower; }
  bool contains(double y) const { return y >= lower && y <= upper; }
};

/// Split conformal regressor over calibration nonconformity scores.
///
/// Plain mode stores the sorted absolute residuals; normalized mode stores
/// residual/sigma; Mondrian mode cuts the difficulty range into
/// equal-frequency bins and keeps sorted raw residuals per bin. Intervals use
/// the rank ceil((n+1)*confidence) over the applicable score vector and are
/// unbounded when that rank exceeds n.
class ConformalRegressor {
 public:
  /// Mode is inferred from the optionals: sigmas -> normalized,
  /// mondrian_bins + difficulty -> mondrian, neither -> plain.
  static ConformalRegressor calibrate(std::vector<double> residuals,
                                      const std::vector<double>* sigmas = nullptr,
                                      std::optional<std::size_t> mondrian_bins = {},
                                      const std::vector<double>* difficulty = nullptr);

  PredictionInterval interval(double y_hat, double confidence,
                              std::optional<double> sigma = {},
                              std::optional<double> difficulty = {}) const;

  /// Elementwise interval(); sigmas/difficulties may be empty for modes that
  /// do not need them.
  std::vector<PredictionInterval> interval_batch(
      std::span<const double> y_hats, double confidence,
      std::span<const double> sigmas = {},
      std::span<const double> difficulties = {}) const;

  ConformalMode mode() const { return mode_; }
  std::size_t calibration_size() const;
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& bin_edges() const { return bin_edges_; }
  const std::vector<std::vector<double>>& bin_alphas() const { return bin_alphas_; }
  std::size_t effective_bins() const { return bin_alphas_.size(); }

  /// Bin lookup for a difficulty value; boundary values go to the lower bin.
  std::size_t bin_of(double difficulty) const;

 private:
  ConformalRegressor() = default;

  ConformalMode mode_ = ConformalMode::Plain;
  std::vector<double> alphas_;
  std::vector<double> bin_edges_;
  std::vector<std::vector<double>> bin_alphas_;
};

/// Rank ceil((n+1)*confidence) with protection against floating-point wobble
/// when (n+1)*confidence lands on an integer.
std::size_t quantile_rank(std::size_t n, double confidence);

}  // namespace confreg
