#pragma once

#include <vector>

namespace confreg {

/// Gaussian kernel density estimate over a small sample of target values.
///
/// density(p) = (1/(k*h)) * sum_i phi((p - y_i)/h), with phi the standard
/// normal density, so the estimate integrates to 1 and its maximum possible
/// value is 1/(h*sqrt(2*pi)). Evaluation goes through log_density, which uses
/// a max-shifted log-sum-exp so far-tail queries stay finite.
class KdeModel {
 public:
  KdeModel(std::vector<double> samples, double bandwidth);

  double log_density(double point) const;
  double density(double point) const;

  const std::vector<double>& samples() const { return samples_; }
  double bandwidth() const { return bandwidth_; }

 private:
  std::vector<double> samples_;
  double bandwidth_ = 0.0;
};

}  // namespace confreg
