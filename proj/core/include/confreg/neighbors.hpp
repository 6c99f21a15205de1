#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "confreg/matrix.hpp"

namespace confreg {

/// k reference-row indices with their Euclidean distances, ascending.
struct NeighborSet {
  std::vector<std::size_t> indices;
  std::vector<double> distances;
};

/// Exact brute-force k-nearest-neighbor index over proper-training features.
/// Distances are Euclidean on the (already scaled) feature rows; ties are
/// broken by lower row index so results are reproducible.
class NeighborModel {
 public:
  NeighborModel(Matrix features, std::vector<double> targets,
                std::optional<std::vector<double>> residuals, std::size_t k);

  NeighborSet query(std::span<const double> point) const;
  std::vector<NeighborSet> query_batch(const Matrix& points) const;

  std::size_t k() const { return k_; }
  std::size_t size() const { return targets_.size(); }
  std::size_t dim() const { return features_.cols(); }
  const std::vector<double>& targets() const { return targets_; }
  const std::optional<std::vector<double>>& residuals() const { return residuals_; }

 private:
  Matrix features_;
  std::vector<double> targets_;
  std::optional<std::vector<double>> residuals_;
  std::size_t k_ = 0;
};

}  // namespace confreg
