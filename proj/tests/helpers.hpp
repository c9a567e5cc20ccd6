#pragma once

#include "knnim/experiment.hpp"
#include "knnim/model.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <random>

namespace knnim::testing {

inline DistanceMatrix distances_from(Index n, const std::function<double(Index, Index)>& f) {
  MatrixXd d(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) d(i, j) = i == j ? 0.0 : f(i, j);
  }
  return DistanceMatrix(std::move(d));
}

/// d(i, j) = |i - j|: a line of units.
inline DistanceMatrix line(Index n) {
  return distances_from(n, [](Index i, Index j) { return static_cast<double>(i > j ? i - j : j - i); });
}

/// Units 2m and 2m+1 are each other's only close neighbor.
inline DistanceMatrix pairs(Index n) {
  return distances_from(n, [](Index i, Index j) { return i / 2 == j / 2 ? 1.0 : 10.0 + static_cast<double>(i + j); });
}

inline Assignment random_assignment(Index n, int treated, std::mt19937_64& rng) {
  std::vector<std::uint8_t> w(static_cast<std::size_t>(n), 0);
  std::fill(w.begin(), w.begin() + treated, 1);
  std::shuffle(w.begin(), w.end(), rng);
  return Assignment(std::move(w));
}

inline VectorXd random_responses(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) y(i) = 2.0 + normal(rng);
  return y;
}

inline std::shared_ptr<const InterferenceDesign> make_structure(const DistanceMatrix& d, int k,
                                                                Design design) {
  return std::make_shared<const InterferenceDesign>(build_k_neighborhoods(d, k), std::move(design));
}

}  // namespace knnim::testing
