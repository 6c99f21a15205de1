// Shared test fixtures: a housing-style regression dataset and a small
// least-squares point model that supplies the predictions column.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "confreg/dataset.hpp"
#include "confreg/matrix.hpp"

namespace fixtures {

// Six tabular features with a nonlinear price surface and mildly
// heteroscedastic noise. The signal has strong smooth gradients, so the
// spread of nearby targets mostly reflects the surface slope rather than the
// local noise level.
inline confreg::Dataset make_housing_like(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  confreg::Dataset data;
  data.features = confreg::Matrix(n, 6);
  data.targets.resize(n);
  data.split_tags.assign(n, confreg::Split::Train);
  data.feature_names = {"income", "rooms", "lot", "dist", "age", "quality"};

  for (std::size_t i = 0; i < n; ++i) {
    const double income = 10.0 * unit(rng);
    const double rooms = 1.0 + 8.0 * unit(rng);
    const double lot = 50.0 * unit(rng);
    const double dist = 10.0 * unit(rng);
    const double age = 10.0 * unit(rng);
    const double quality = 3.0 * unit(rng);

    data.features(i, 0) = income;
    data.features(i, 1) = rooms;
    data.features(i, 2) = lot;
    data.features(i, 3) = dist;
    data.features(i, 4) = age;
    data.features(i, 5) = quality;

    const double signal = 8.0 * income + 6.0 * std::sin(rooms) +
                          3.0 * std::log1p(lot) + 0.15 * dist * age +
                          2.0 * quality * quality;
    const double noise_sd = 0.5 * (1.0 + 0.1 * dist);
    data.targets[i] = signal + noise_sd * gauss(rng);
  }
  return data;
}

// The engineered basis the price surface lives in.
inline std::vector<double> housing_basis(std::span<const double> x) {
  return {1.0,           x[0], std::sin(x[1]), std::log1p(x[2]),
          x[3] * x[4], x[5] * x[5]};
}

// Ordinary least squares on the housing basis, fit on Train rows only, then
// predicted for every row. Solves the normal equations by Gaussian
// elimination with partial pivoting.
inline void attach_least_squares_predictions(confreg::Dataset& data) {
  const std::size_t p = housing_basis(data.features.row(0)).size();
  std::vector<std::vector<double>> ata(p, std::vector<double>(p, 0.0));
  std::vector<double> aty(p, 0.0);

  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.split_tags[i] != confreg::Split::Train) continue;
    const auto phi = housing_basis(data.features.row(i));
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < p; ++b) ata[a][b] += phi[a] * phi[b];
      aty[a] += phi[a] * data.targets[i];
    }
  }

  for (std::size_t col = 0; col < p; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::abs(ata[r][col]) > std::abs(ata[pivot][col])) pivot = r;
    }
    std::swap(ata[col], ata[pivot]);
    std::swap(aty[col], aty[pivot]);
    if (ata[col][col] == 0.0) {
      throw std::runtime_error("attach_least_squares_predictions: singular basis");
    }
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double factor = ata[r][col] / ata[col][col];
      for (std::size_t c = col; c < p; ++c) ata[r][c] -= factor * ata[col][c];
      aty[r] -= factor * aty[col];
    }
  }
  std::vector<double> coef(p);
  for (std::size_t a = 0; a < p; ++a) coef[a] = aty[a] / ata[a][a];

  data.predictions.emplace(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto phi = housing_basis(data.features.row(i));
    double value = 0.0;
    for (std::size_t a = 0; a < p; ++a) value += coef[a] * phi[a];
    (*data.predictions)[i] = value;
  }
}

}  // namespace fixtures
