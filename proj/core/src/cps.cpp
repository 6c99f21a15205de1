#include "confreg/cps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace confreg {

PredictiveDistribution::PredictiveDistribution(std::vector<double> support_sorted)
    : support_(std::move(support_sorted)) {
  if (support_.empty()) {
    throw std::invalid_argument("PredictiveDistribution: empty support");
  }
  if (!std::is_sorted(support_.begin(), support_.end())) {
    throw std::invalid_argument("PredictiveDistribution: support must be sorted");
  }
}

double PredictiveDistribution::cdf(double z) const {
  const auto it = std::upper_bound(support_.begin(), support_.end(), z);
  return static_cast<double>(it - support_.begin()) /
         static_cast<double>(support_.size());
}

ConformalPredictiveSystem ConformalPredictiveSystem::calibrate(
    std::span<const double> signed_residuals, std::span<const double> sigmas) {
  if (signed_residuals.empty()) {
    throw std::invalid_argument("cps_calibrate: residuals must be non-empty");
  }
  ConformalPredictiveSystem out;
  out.scores_.reserve(signed_residuals.size());
  if (!sigmas.empty()) {
    if (sigmas.size() != signed_residuals.size()) {
      throw std::invalid_argument("cps_calibrate: sigmas length mismatch");
    }
    for (std::size_t i = 0; i < signed_residuals.size(); ++i) {
      if (!(sigmas[i] > 0.0)) {
        throw std::invalid_argument("cps_calibrate: sigmas must be positive");
      }
      out.scores_.push_back(signed_residuals[i] / sigmas[i]);
    }
    out.normalized_ = true;
  } else {
    out.scores_.assign(signed_residuals.begin(), signed_residuals.end());
  }
  std::sort(out.scores_.begin(), out.scores_.end());
  return out;
}

PredictiveDistribution ConformalPredictiveSystem::distribution(
    double y_hat, std::optional<double> sigma) const {
  double scale = 1.0;
  if (normalized_) {
    if (!sigma || !(*sigma > 0.0)) {
      throw std::invalid_argument(
          "cps_distribution: normalized system requires sigma > 0");
    }
    scale = *sigma;
  }
  std::vector<double> support;
  support.reserve(scores_.size());
  for (double s : scores_) support.push_back(y_hat + s * scale);
  return PredictiveDistribution(std::move(support));
}

double crps(const PredictiveDistribution& distribution, double y_true) {
  const std::vector<double>& x = distribution.support();
  const double n = static_cast<double>(x.size());

  double abs_term = 0.0;
  for (double xi : x) abs_term += std::abs(xi - y_true);
  abs_term /= n;

  // For sorted support, sum_ij |x_i - x_j| == 2 * sum_k (2k - n - 1) x_(k)
  // with k 1-indexed, so the pairwise term costs O(n).
  double spread = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    spread += (2.0 * static_cast<double>(k + 1) - n - 1.0) * x[k];
  }
  return std::max(abs_term - spread / (n * n), 0.0);
}

}  // namespace confreg
