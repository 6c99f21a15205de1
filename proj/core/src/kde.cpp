#include "confreg/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace confreg {

KdeModel::KdeModel(std::vector<double> samples, double bandwidth)
    : samples_(std::move(samples)), bandwidth_(bandwidth) {
  if (samples_.empty()) throw std::invalid_argument("KdeModel: empty samples");
  if (!(bandwidth_ > 0.0)) {
    throw std::invalid_argument("KdeModel: bandwidth must be positive");
  }
}

double KdeModel::log_density(double point) const {
  if (!std::isfinite(point)) {
    throw std::invalid_argument("KdeModel::log_density: non-finite point");
  }

  // log f(p) = -log(k h sqrt(2 pi)) + m + log(sum exp(e_i - m)),
  // e_i = -(p - y_i)^2 / (2 h^2), m = max e_i.
  const double inv_two_h_sq = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  double max_exponent = -std::numeric_limits<double>::infinity();
  for (double y : samples_) {
    const double diff = point - y;
    max_exponent = std::max(max_exponent, -(diff * diff) * inv_two_h_sq);
  }
  if (!std::isfinite(max_exponent)) {
    // Every squared distance overflowed; the density is an exact 0 here.
    return -std::numeric_limits<double>::infinity();
  }

  double shifted_sum = 0.0;
  for (double y : samples_) {
    const double diff = point - y;
    shifted_sum += std::exp(-(diff * diff) * inv_two_h_sq - max_exponent);
  }

  const double log_norm =
      std::log(static_cast<double>(samples_.size()) * bandwidth_ *
               std::sqrt(2.0 * std::numbers::pi));
  return max_exponent + std::log(shifted_sum) - log_norm;
}

double KdeModel::density(double point) const { return std::exp(log_density(point)); }

}  // namespace confreg
