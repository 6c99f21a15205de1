#include "confreg/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace confreg {

NeighborModel::NeighborModel(Matrix features, std::vector<double> targets,
                             std::optional<std::vector<double>> residuals,
                             std::size_t k)
    : features_(std::move(features)),
      targets_(std::move(targets)),
      residuals_(std::move(residuals)),
      k_(k) {
  if (targets_.empty()) {
    throw std::invalid_argument("NeighborModel: empty reference set");
  }
  if (features_.rows() != targets_.size()) {
    throw std::invalid_argument("NeighborModel: features/targets length mismatch");
  }
  if (features_.cols() == 0) {
    throw std::invalid_argument("NeighborModel: need at least one feature");
  }
  if (residuals_ && residuals_->size() != targets_.size()) {
    throw std::invalid_argument("NeighborModel: residuals length mismatch");
  }
  if (k_ == 0 || k_ > targets_.size()) {
    throw std::invalid_argument("NeighborModel: k must be in [1, n_ref]");
  }
}

NeighborSet NeighborModel::query(std::span<const double> point) const {
  const std::size_t d = features_.cols();
  if (point.size() != d) {
    throw std::invalid_argument("NeighborModel::query: dimension mismatch");
  }

  const std::size_t n = features_.rows();
  // (squared distance, row index); pair ordering breaks ties by lower index.
  std::vector<std::pair<double, std::size_t>> candidates(n);
  const double* ref = features_.data().data();
  for (std::size_t i = 0; i < n; ++i, ref += d) {
    double sq = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = point[c] - ref[c];
      sq += diff * diff;
    }
    candidates[i] = {sq, i};
  }
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k_),
                    candidates.end());

  NeighborSet out;
  out.indices.reserve(k_);
  out.distances.reserve(k_);
  for (std::size_t i = 0; i < k_; ++i) {
    out.indices.push_back(candidates[i].second);
    out.distances.push_back(std::sqrt(candidates[i].first));
  }
  return out;
}

std::vector<NeighborSet> NeighborModel::query_batch(const Matrix& points) const {
  if (!points.empty() && points.cols() != features_.cols()) {
    throw std::invalid_argument("NeighborModel::query_batch: dimension mismatch");
  }
  std::vector<NeighborSet> out;
  out.reserve(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out.push_back(query(points.row(i)));
  }
  return out;
}

}  // namespace confreg
