#include "knnim/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace knnim {

DistanceMatrix::DistanceMatrix(MatrixXd d) : d_(std::move(d)) {
  if (d_.rows() != d_.cols()) {
    throw InputError("distance matrix must be square");
  }
  if (d_.rows() < 2) {
    throw InputError("distance matrix needs at least two units");
  }
  for (Index i = 0; i < d_.rows(); ++i) {
    for (Index j = 0; j < d_.cols(); ++j) {
      if (i == j) continue;
      const double v = d_(i, j);
      if (std::isnan(v) || v < 0.0) {
        throw InputError("distance (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") is negative or NaN");
      }
    }
  }
}

KNeighborhoods::KNeighborhoods(int k, std::vector<int> flat_lists)
    : k_(k), lists_(std::move(flat_lists)) {
  if (k_ < 1 || k_ > kMaxNeighbors) {
    throw InputError("neighborhood size out of range");
  }
  if (lists_.size() % static_cast<std::size_t>(k_) != 0) {
    throw InputError("neighbor lists are ragged");
  }
  const Index n = size();
  for (Index i = 0; i < n; ++i) {
    auto nb = neighbors(i);
    for (std::size_t a = 0; a < nb.size(); ++a) {
      if (nb[a] < 0 || nb[a] >= n || nb[a] == i) {
        throw InputError("invalid neighbor index for unit " + std::to_string(i));
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (nb[a] == nb[b]) throw InputError("duplicate neighbor for unit " + std::to_string(i));
      }
    }
  }
}

int KNeighborhoods::closed_position(Index i, Index unit) const {
  if (unit == i) return 0;
  auto nb = neighbors(i);
  for (int l = 0; l < k_; ++l) {
    if (nb[static_cast<std::size_t>(l)] == unit) return l + 1;
  }
  return -1;
}

Exposure::Exposure(bool treated, std::uint32_t pattern, int k)
    : treated_(treated), pattern_(pattern), k_(k) {
  if (k_ < 1 || k_ > kMaxNeighbors) {
    throw InputError("exposure neighborhood size out of range");
  }
  if (pattern_ >> k_) {
    throw InputError("exposure pattern has bits beyond K");
  }
}

Exposure Exposure::from_index(int index, int k) {
  if (index < 0 || index >= count(k)) throw InputError("exposure index out of range");
  return Exposure((index >> k) & 1, static_cast<std::uint32_t>(index) & ((1u << k) - 1u), k);
}

Exposure Exposure::all_treated(bool own, int k) { return first_treated(own, k, k); }

Exposure Exposure::all_control(bool own, int k) { return first_treated(own, 0, k); }

Exposure Exposure::first_treated(bool own, int ell, int k) {
  if (ell < 0 || ell > k) throw InputError("neighbor rank out of range");
  return Exposure(own, (1u << ell) - 1u, k);
}

int Exposure::treated_count() const {
  return static_cast<int>(treated_) + std::popcount(pattern_);
}

std::string Exposure::pattern_string() const {
  std::string s = "(";
  for (int l = 0; l < k_; ++l) {
    if (l) s += ',';
    s += neighbor(l) ? '1' : '0';
  }
  return s + ")";
}

std::string Exposure::to_string() const {
  return std::string("(") + (treated_ ? "1" : "0") + "," + pattern_string() + ")";
}

Assignment::Assignment(std::vector<std::uint8_t> w) : w_(std::move(w)) {
  for (auto b : w_) {
    if (b > 1) throw InputError("treatment indicators must be 0 or 1");
  }
}

int Assignment::treated_count() const {
  return static_cast<int>(std::count(w_.begin(), w_.end(), std::uint8_t{1}));
}

KNeighborhoods build_k_neighborhoods(const DistanceMatrix& d, int k) {
  const Index n = d.size();
  if (k < 1 || k > n - 1) {
    throw InputError("K must lie in [1, n-1]; got K=" + std::to_string(k) +
                     " for n=" + std::to_string(n));
  }
  if (k > kMaxNeighbors) throw InputError("K exceeds the supported maximum");

  std::vector<int> flat;
  flat.reserve(static_cast<std::size_t>(n * k));
  std::vector<int> order(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t pos = 0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) order[pos++] = static_cast<int>(j);
    }
    auto closer = [&](int a, int b) {
      const double da = d(i, a), db = d(i, b);
      return da < db || (da == db && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), closer);
    for (int l = 0; l < k; ++l) {
      const int j = order[static_cast<std::size_t>(l)];
      if (!std::isfinite(d(i, j))) {
        throw InputError("unit " + std::to_string(i) + " has fewer than K=" + std::to_string(k) +
                         " units at finite distance");
      }
      flat.push_back(j);
    }
  }
  return KNeighborhoods(k, std::move(flat));
}

Exposure classify_exposure(const KNeighborhoods& nbr, const Assignment& w, Index i) {
  if (w.size() != nbr.size()) throw InputError("assignment length does not match population");
  if (i < 0 || i >= nbr.size()) throw InputError("unit index out of range");
  std::uint32_t pattern = 0;
  auto nb = nbr.neighbors(i);
  for (int l = 0; l < nbr.k(); ++l) {
    if (w[nb[static_cast<std::size_t>(l)]]) pattern |= 1u << l;
  }
  return Exposure(w[i], pattern, nbr.k());
}

std::vector<int> classify_all(const KNeighborhoods& nbr, const Assignment& w) {
  if (w.size() != nbr.size()) throw InputError("assignment length does not match population");
  std::vector<int> codes(static_cast<std::size_t>(nbr.size()));
  const int k = nbr.k();
  for (Index i = 0; i < nbr.size(); ++i) {
    int code = w[i] ? (1 << k) : 0;
    auto nb = nbr.neighbors(i);
    for (int l = 0; l < k; ++l) {
      if (w[nb[static_cast<std::size_t>(l)]]) code |= 1 << l;
    }
    codes[static_cast<std::size_t>(i)] = code;
  }
  return codes;
}

Exposure canonical_exposure(CanonicalKind kind, bool own, int k, int ell) {
  switch (kind) {
    case CanonicalKind::all_ones:
      return Exposure::all_treated(own, k);
    case CanonicalKind::all_zeros:
      return Exposure::all_control(own, k);
    case CanonicalKind::w_star:
      return Exposure::first_treated(own, ell, k);
  }
  throw InputError("unknown canonical exposure");
}

ExposureCounts exposure_counts(const KNeighborhoods& nbr, const Assignment& w) {
  ExposureCounts out;
  out.k = nbr.k();
  out.cells.setZero(2, Index{1} << nbr.k());
  for (int code : classify_all(nbr, w)) {
    const Exposure e = Exposure::from_index(code, nbr.k());
    out.cells(e.treated() ? 1 : 0, e.pattern()) += 1;
  }
  return out;
}

std::vector<std::uint32_t> display_pattern_order(int k) {
  std::vector<std::uint32_t> order;
  const std::uint32_t total = 1u << k;
  order.reserve(total);
  for (std::uint32_t rank = 0; rank < total; ++rank) {
    // Reverse the bit order so the first neighbor is the leading digit.
    std::uint32_t pattern = 0;
    for (int l = 0; l < k; ++l) {
      if ((rank >> (k - 1 - l)) & 1u) pattern |= 1u << l;
    }
    order.push_back(pattern);
  }
  return order;
}

}  // namespace knnim
