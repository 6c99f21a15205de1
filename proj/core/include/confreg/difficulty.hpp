#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "confreg/matrix.hpp"
#include "confreg/neighbors.hpp"

namespace confreg {

enum class DifficultyKind { StdDev, Variance, Residual, TargetStrangeness };

const char* to_string(DifficultyKind kind);

/// Hard lower clamp applied after the beta floor, so sigma can never reach
/// zero (or go negative for TargetStrangeness with small bandwidths).
inline constexpr double kSigmaFloor = 1e-6;

struct DifficultyParams {
  std::size_t k = 25;
  double beta = 0.01;       // additive floor, >= 0
  double bandwidth = 0.75;  // TargetStrangeness only
};

// Per-query sigma from the k nearest reference rows. Every entry is
// raw + beta, clamped to kSigmaFloor.

/// Population standard deviation of the neighbors' targets.
std::vector<double> estimate_std(const NeighborModel& model, const Matrix& queries,
                                 double beta);

/// Population variance of the neighbors' targets.
std::vector<double> estimate_variance(const NeighborModel& model,
                                      const Matrix& queries, double beta);

/// Mean absolute residual of the neighbors (model must carry residuals).
std::vector<double> estimate_residual(const NeighborModel& model,
                                      const Matrix& queries, double beta);

/// Target Strangeness: sigma = 1 - f(y_hat), where f is the Gaussian KDE of
/// the neighbors' targets evaluated at the prediction. Lower density means a
/// stranger prediction and a larger sigma.
std::vector<double> estimate_target_strangeness(const NeighborModel& model,
                                                const Matrix& queries,
                                                std::span<const double> y_hats,
                                                double bandwidth, double beta);

/// Fitted estimator handle: owns the neighbor index over proper-training rows
/// and dispatches to the matching estimate_* on query.
class DifficultyEstimator {
 public:
  DifficultyEstimator(DifficultyKind kind, const DifficultyParams& params,
                      const Matrix& train_features,
                      const std::vector<double>& train_targets,
                      const std::vector<double>* train_residuals = nullptr);

  /// y_hats is mandatory for TargetStrangeness and ignored by other kinds.
  std::vector<double> estimate(const Matrix& queries,
                               const std::vector<double>* y_hats = nullptr) const;

  DifficultyKind kind() const { return kind_; }
  const DifficultyParams& params() const { return params_; }

 private:
  DifficultyKind kind_;
  DifficultyParams params_;
  NeighborModel model_;
};

}  // namespace confreg
