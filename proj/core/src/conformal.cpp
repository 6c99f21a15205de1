#include "confreg/conformal.hpp"

#include <algorithm>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace confreg {

const char* to_string(ConformalMode mode) {
  switch (mode) {
    case ConformalMode::Plain: return "plain";
    case ConformalMode::Normalized: return "norm";
    case ConformalMode::Mondrian: return "mondrian";
  }
  return "?";
}

std::size_t quantile_rank(std::size_t n, double confidence) {
  const double q = (static_cast<double>(n) + 1.0) * confidence;
  const double nearest = std::round(q);
  const double eps = 1e-9 * (static_cast<double>(n) + 1.0);
  const double adjusted = std::abs(q - nearest) <= eps ? nearest : std::ceil(q);
  return static_cast<std::size_t>(adjusted);
}

ConformalRegressor ConformalRegressor::calibrate(
    std::vector<double> residuals, const std::vector<double>* sigmas,
    std::optional<std::size_t> mondrian_bins, const std::vector<double>* difficulty) {
  if (residuals.empty()) {
    throw std::invalid_argument("calibrate: residuals must be non-empty");
  }
  for (double& r : residuals) r = std::abs(r);

  if (sigmas && mondrian_bins) {
    throw std::invalid_argument(
        "calibrate: choose normalized (sigmas) or mondrian (bins), not both");
  }
  if (difficulty && !mondrian_bins) {
    throw std::invalid_argument("calibrate: difficulty given without bin count");
  }

  ConformalRegressor out;
  const std::size_t n = residuals.size();

  if (sigmas) {
    if (sigmas->size() != n) {
      throw std::invalid_argument("calibrate: sigmas length mismatch");
    }
    out.mode_ = ConformalMode::Normalized;
    out.alphas_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!((*sigmas)[i] > 0.0)) {
        throw std::invalid_argument("calibrate: sigmas must be positive");
      }
      out.alphas_.push_back(residuals[i] / (*sigmas)[i]);
    }
    std::sort(out.alphas_.begin(), out.alphas_.end());
    return out;
  }

  if (mondrian_bins) {
    if (!difficulty) {
      throw std::invalid_argument("calibrate: mondrian requires a difficulty vector");
    }
    if (difficulty->size() != n) {
      throw std::invalid_argument("calibrate: difficulty length mismatch");
    }
    const std::size_t bins = *mondrian_bins;
    if (bins == 0) throw std::invalid_argument("calibrate: bins must be >= 1");
    if (bins > n) {
      throw std::invalid_argument("calibrate: more bins than calibration points");
    }

    out.mode_ = ConformalMode::Mondrian;

    // Equal-frequency edges at the j/bins quantiles of the difficulty values.
    std::vector<double> sorted_difficulty = *difficulty;
    std::sort(sorted_difficulty.begin(), sorted_difficulty.end());
    std::vector<double> edges;
    for (std::size_t j = 1; j < bins; ++j) {
      edges.push_back(sorted_difficulty[n * j / bins - 1]);
    }
    // Duplicate values can produce duplicate edges, and an edge equal to the
    // overall maximum would leave its upper bin empty; both shrink the
    // effective bin count.
    std::erase_if(edges, [&](double e) { return e >= sorted_difficulty.back(); });
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    if (edges.size() + 1 < bins) {
      std::cerr << "calibrate: duplicate difficulty values reduced mondrian bins from "
                << bins << " to " << edges.size() + 1 << "\n";
    }
    out.bin_edges_ = std::move(edges);
    out.bin_alphas_.assign(out.bin_edges_.size() + 1, {});
    for (std::size_t i = 0; i < n; ++i) {
      out.bin_alphas_[out.bin_of((*difficulty)[i])].push_back(residuals[i]);
    }
    for (auto& bin : out.bin_alphas_) std::sort(bin.begin(), bin.end());
    return out;
  }

  out.mode_ = ConformalMode::Plain;
  out.alphas_ = std::move(residuals);
  std::sort(out.alphas_.begin(), out.alphas_.end());
  return out;
}

std::size_t ConformalRegressor::calibration_size() const {
  if (mode_ != ConformalMode::Mondrian) return alphas_.size();
  std::size_t n = 0;
  for (const auto& bin : bin_alphas_) n += bin.size();
  return n;
}

std::size_t ConformalRegressor::bin_of(double difficulty) const {
  // Intervals are left-open/right-closed, so a value equal to an edge lands
  // in the lower bin.
  const auto it = std::lower_bound(bin_edges_.begin(), bin_edges_.end(), difficulty);
  return static_cast<std::size_t>(it - bin_edges_.begin());
}

PredictionInterval ConformalRegressor::interval(double y_hat, double confidence,
                                                std::optional<double> sigma,
                                                std::optional<double> difficulty) const {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("interval: confidence must be in (0,1)");
  }

  const std::vector<double>* scores = &alphas_;
  double scale = 1.0;
  if (mode_ == ConformalMode::Normalized) {
    if (!sigma || !(*sigma > 0.0)) {
      throw std::invalid_argument("interval: normalized mode requires sigma > 0");
    }
    scale = *sigma;
  } else if (mode_ == ConformalMode::Mondrian) {
    if (!difficulty) {
      throw std::invalid_argument("interval: mondrian mode requires a difficulty");
    }
    scores = &bin_alphas_[bin_of(*difficulty)];
  }

  const std::size_t n = scores->size();
  const std::size_t rank = quantile_rank(n, confidence);
  if (rank > n) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {-inf, inf, confidence};
  }
  const double half_width = (*scores)[rank - 1] * scale;
  return {y_hat - half_width, y_hat + half_width, confidence};
}

std::vector<PredictionInterval> ConformalRegressor::interval_batch(
    std::span<const double> y_hats, double confidence,
    std::span<const double> sigmas, std::span<const double> difficulties) const {
  if (mode_ == ConformalMode::Normalized && sigmas.size() != y_hats.size()) {
    throw std::invalid_argument("interval_batch: sigmas length mismatch");
  }
  if (mode_ == ConformalMode::Mondrian && difficulties.size() != y_hats.size()) {
    throw std::invalid_argument("interval_batch: difficulties length mismatch");
  }
  std::vector<PredictionInterval> out;
  out.reserve(y_hats.size());
  for (std::size_t i = 0; i < y_hats.size(); ++i) {
    out.push_back(interval(
        y_hats[i], confidence,
        sigmas.empty() ? std::optional<double>{} : std::optional<double>{sigmas[i]},
        difficulties.empty() ? std::optional<double>{}
                             : std::optional<double>{difficulties[i]}));
  }
  return out;
}

}  // namespace confreg
