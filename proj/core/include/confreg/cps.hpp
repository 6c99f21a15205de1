#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace confreg {

/// Empirical step-function CDF over candidate target values for one test
/// instance. Support points are y_hat + s_(i) * sigma with s the sorted
/// signed calibration scores.
class PredictiveDistribution {
 public:
  explicit PredictiveDistribution(std::vector<double> support_sorted);

  const std::vector<double>& support() const { return support_; }
  std::size_t size() const { return support_.size(); }

  /// P(X <= z); 0 below the first support point, 1 above the last.
  double cdf(double z) const;

 private:
  std::vector<double> support_;
};

/// Split conformal predictive system over signed (optionally normalized)
/// calibration residuals.
class ConformalPredictiveSystem {
 public:
  static ConformalPredictiveSystem calibrate(std::span<const double> signed_residuals,
                                             std::span<const double> sigmas = {});

  PredictiveDistribution distribution(double y_hat,
                                      std::optional<double> sigma = {}) const;

  bool normalized() const { return normalized_; }
  const std::vector<double>& scores() const { return scores_; }

 private:
  ConformalPredictiveSystem() = default;

  std::vector<double> scores_;  // sorted ascending
  bool normalized_ = false;
};

/// Exact CRPS of an empirical distribution via the probability-weighted-moment
/// identity: mean|x_i - y| - (1/(2 n^2)) sum_ij |x_i - x_j|.
double crps(const PredictiveDistribution& distribution, double y_true);

}  // namespace confreg
