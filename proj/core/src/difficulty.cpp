#include "confreg/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "confreg/kde.hpp"

namespace confreg {

namespace {

double finalize_sigma(double raw, double beta) {
  return std::max(raw + beta, kSigmaFloor);
}

std::vector<double> gather_targets(const NeighborModel& model,
                                   const NeighborSet& neighbors) {
  std::vector<double> values;
  values.reserve(neighbors.indices.size());
  for (std::size_t idx : neighbors.indices) {
    values.push_back(model.targets()[idx]);
  }
  return values;
}

double population_variance(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) {
    const double dev = v - mean;
    var += dev * dev;
  }
  return var / n;
}

void check_beta(double beta) {
  if (beta < 0.0) throw std::invalid_argument("difficulty: beta must be >= 0");
}

}  // namespace

const char* to_string(DifficultyKind kind) {
  switch (kind) {
    case DifficultyKind::StdDev: return "std";
    case DifficultyKind::Variance: return "var";
    case DifficultyKind::Residual: return "res";
    case DifficultyKind::TargetStrangeness: return "targ-strg";
  }
  return "?";
}

std::vector<double> estimate_std(const NeighborModel& model, const Matrix& queries,
                                 double beta) {
  check_beta(beta);
  std::vector<double> sigmas;
  sigmas.reserve(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    const auto targets = gather_targets(model, model.query(queries.row(i)));
    sigmas.push_back(finalize_sigma(std::sqrt(population_variance(targets)), beta));
  }
  return sigmas;
}

std::vector<double> estimate_variance(const NeighborModel& model,
                                      const Matrix& queries, double beta) {
  check_beta(beta);
  std::vector<double> sigmas;
  sigmas.reserve(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    const auto targets = gather_targets(model, model.query(queries.row(i)));
    sigmas.push_back(finalize_sigma(population_variance(targets), beta));
  }
  return sigmas;
}

std::vector<double> estimate_residual(const NeighborModel& model,
                                      const Matrix& queries, double beta) {
  check_beta(beta);
  if (!model.residuals()) {
    throw std::invalid_argument("estimate_residual: model has no residuals");
  }
  const std::vector<double>& residuals = *model.residuals();
  std::vector<double> sigmas;
  sigmas.reserve(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    const NeighborSet neighbors = model.query(queries.row(i));
    double sum = 0.0;
    for (std::size_t idx : neighbors.indices) sum += std::abs(residuals[idx]);
    const double mean = sum / static_cast<double>(neighbors.indices.size());
    sigmas.push_back(finalize_sigma(mean, beta));
  }
  return sigmas;
}

std::vector<double> estimate_target_strangeness(const NeighborModel& model,
                                                const Matrix& queries,
                                                std::span<const double> y_hats,
                                                double bandwidth, double beta) {
  check_beta(beta);
  if (y_hats.size() != queries.rows()) {
    throw std::invalid_argument(
        "estimate_target_strangeness: y_hats length must match query count");
  }
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument(
        "estimate_target_strangeness: bandwidth must be positive");
  }
  std::vector<double> sigmas;
  sigmas.reserve(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    auto targets = gather_targets(model, model.query(queries.row(i)));
    const KdeModel kde(std::move(targets), bandwidth);
    // Bigger is stranger: low density at the prediction means high sigma.
    const double density = std::exp(kde.log_density(y_hats[i]));
    sigmas.push_back(finalize_sigma(1.0 - density, beta));
  }
  return sigmas;
}

DifficultyEstimator::DifficultyEstimator(DifficultyKind kind,
                                         const DifficultyParams& params,
                                         const Matrix& train_features,
                                         const std::vector<double>& train_targets,
                                         const std::vector<double>* train_residuals)
    : kind_(kind),
      params_(params),
      model_(train_features, train_targets,
             train_residuals ? std::optional(*train_residuals) : std::nullopt,
             params.k) {
  check_beta(params_.beta);
  if (kind_ == DifficultyKind::Residual && !train_residuals) {
    throw std::invalid_argument(
        "DifficultyEstimator: Residual kind requires training residuals");
  }
  if (kind_ == DifficultyKind::TargetStrangeness && !(params_.bandwidth > 0.0)) {
    throw std::invalid_argument(
        "DifficultyEstimator: TargetStrangeness requires a positive bandwidth");
  }
}

std::vector<double> DifficultyEstimator::estimate(
    const Matrix& queries, const std::vector<double>* y_hats) const {
  switch (kind_) {
    case DifficultyKind::StdDev:
      return estimate_std(model_, queries, params_.beta);
    case DifficultyKind::Variance:
      return estimate_variance(model_, queries, params_.beta);
    case DifficultyKind::Residual:
      return estimate_residual(model_, queries, params_.beta);
    case DifficultyKind::TargetStrangeness:
      if (!y_hats) {
        throw std::invalid_argument(
            "DifficultyEstimator: TargetStrangeness requires y_hats");
      }
      return estimate_target_strangeness(model_, queries, *y_hats,
                                         params_.bandwidth, params_.beta);
  }
  throw std::logic_error("DifficultyEstimator: unknown kind");
}

}  // namespace confreg
