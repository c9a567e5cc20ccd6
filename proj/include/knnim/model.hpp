#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace knnim {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Raised for malformed inputs: sizes, ranges, non-finite values.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Largest neighborhood size supported by the packed exposure encoding.
inline constexpr int kMaxNeighbors = 20;

/// Pairwise interaction distances d(i, j). Smaller means stronger interaction.
///
/// Row i holds unit i's view of the others, so the matrix may be asymmetric.
/// The diagonal is ignored. +infinity marks "no recorded interaction"; such a
/// unit can never be selected as a neighbor.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(MatrixXd d);

  Index size() const { return d_.rows(); }
  double operator()(Index i, Index j) const { return d_(i, j); }
  const MatrixXd& matrix() const { return d_; }

 private:
  MatrixXd d_;
};

/// Ordered K nearest neighbors of every unit (ascending distance, ties by index).
class KNeighborhoods {
 public:
  KNeighborhoods(int k, std::vector<int> flat_lists);

  int k() const { return k_; }
  Index size() const { return static_cast<Index>(lists_.size()) / k_; }

  /// neighbors(i)[l] is the (l+1)-th nearest neighbor of unit i.
  std::span<const int> neighbors(Index i) const {
    return {lists_.data() + i * k_, static_cast<std::size_t>(k_)};
  }

  /// Position of `unit` within the closed neighborhood of `i`: 0 for i itself,
  /// l for the l-th nearest neighbor, -1 when absent.
  int closed_position(Index i, Index unit) const;

  bool operator==(const KNeighborhoods&) const = default;

 private:
  int k_;
  std::vector<int> lists_;
};

/// Treatment pattern on a closed K-neighborhood: own bit plus K ordered
/// neighbor bits. Bit (l-1) of `pattern` is the l-th nearest neighbor.
class Exposure {
 public:
  Exposure(bool treated, std::uint32_t pattern, int k);

  /// Decodes a dense index in [0, 2^(K+1)).
  static Exposure from_index(int index, int k);
  static Exposure all_treated(bool own, int k);
  static Exposure all_control(bool own, int k);
  /// First `ell` nearest neighbors treated, the rest control.
  static Exposure first_treated(bool own, int ell, int k);

  bool treated() const { return treated_; }
  std::uint32_t pattern() const { return pattern_; }
  int k() const { return k_; }
  bool neighbor(int l) const { return (pattern_ >> l) & 1u; }
  int treated_count() const;

  /// Dense index: own bit above the K neighbor bits.
  int index() const { return (static_cast<int>(treated_) << k_) | static_cast<int>(pattern_); }
  static int count(int k) { return 1 << (k + 1); }

  /// "(1,(0,1))" style rendering.
  std::string to_string() const;
  /// Neighbor bits only, "(0,1)".
  std::string pattern_string() const;

  bool operator==(const Exposure&) const = default;

 private:
  bool treated_;
  std::uint32_t pattern_;
  int k_;
};

/// Realized treatment vector W.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::vector<std::uint8_t> w);

  Index size() const { return static_cast<Index>(w_.size()); }
  bool operator[](Index i) const { return w_[static_cast<std::size_t>(i)] != 0; }
  int treated_count() const;
  const std::vector<std::uint8_t>& bits() const { return w_; }

 private:
  std::vector<std::uint8_t> w_;
};

KNeighborhoods build_k_neighborhoods(const DistanceMatrix& d, int k);

Exposure classify_exposure(const KNeighborhoods& nbr, const Assignment& w, Index i);

/// Dense exposure index of every unit.
std::vector<int> classify_all(const KNeighborhoods& nbr, const Assignment& w);

enum class CanonicalKind { all_ones, all_zeros, w_star };

Exposure canonical_exposure(CanonicalKind kind, bool own, int k, int ell = 0);

/// Observed unit counts per exposure, split by own treatment.
struct ExposureCounts {
  int k = 0;
  // Row 0 is control, row 1 treated; column is the neighbor pattern.
  Eigen::Matrix<long, 2, Eigen::Dynamic> cells;

  long at(const Exposure& e) const { return cells(e.treated() ? 1 : 0, e.pattern()); }
  long total() const { return cells.sum(); }
};

ExposureCounts exposure_counts(const KNeighborhoods& nbr, const Assignment& w);

/// Neighbor patterns in display order: first neighbor most significant, so
/// K = 2 yields (0,0), (0,1), (1,0), (1,1).
std::vector<std::uint32_t> display_pattern_order(int k);

}  // namespace knnim
