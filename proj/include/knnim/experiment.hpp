#pragma once

#include "knnim/design.hpp"
#include "knnim/model.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

namespace knnim {

/// For one ordered exposure pair (e1, e2): how many ordered unit pairs (i, j)
/// with zero joint probability each unit takes part in, as i (`as_first`) and
/// as j (`as_second`). Same-exposure pairs skip i == j; distinct-exposure
/// pairs count the diagonal, which is always zero.
struct ZeroJointCounts {
  std::vector<int> as_first;
  std::vector<int> as_second;
};

/// Neighborhoods plus design: everything about an experiment that does not
/// depend on the realized assignment. Shared across replications.
class InterferenceDesign {
 public:
  InterferenceDesign(KNeighborhoods nbr, Design design);

  const KNeighborhoods& neighborhoods() const { return nbr_; }
  const Design& design() const { return design_; }
  Index size() const { return nbr_.size(); }
  int k() const { return nbr_.k(); }

  double marginal(Index i, const Exposure& e) const {
    return marginal_probability(design_, nbr_, i, e);
  }
  double joint(Index i, const Exposure& ei, Index j, const Exposure& ej) const {
    return joint_probability(design_, nbr_, i, ei, j, ej);
  }

  /// Memoized; safe to call concurrently.
  const ZeroJointCounts& zero_joint_counts(const Exposure& e1, const Exposure& e2) const;

 private:
  ZeroJointCounts count_zero_joints(const Exposure& e1, const Exposure& e2) const;

  KNeighborhoods nbr_;
  Design design_;
  // units whose closed neighborhood contains u
  std::vector<std::vector<int>> members_;
  mutable std::mutex memo_mutex_;
  mutable std::map<std::pair<int, int>, std::unique_ptr<ZeroJointCounts>> memo_;
};

/// A realized experiment: structure, assignment and observed responses.
class ExperimentData {
 public:
  ExperimentData(std::shared_ptr<const InterferenceDesign> structure, Assignment w, VectorXd y);
  ExperimentData(KNeighborhoods nbr, Design design, Assignment w, VectorXd y);

  Index size() const { return structure_->size(); }
  int k() const { return structure_->k(); }
  const InterferenceDesign& structure() const { return *structure_; }
  const std::shared_ptr<const InterferenceDesign>& shared_structure() const { return structure_; }
  const Assignment& assignment() const { return w_; }
  const VectorXd& responses() const { return y_; }

  int exposure_code(Index i) const { return codes_[static_cast<std::size_t>(i)]; }
  bool exhibits(Index i, const Exposure& e) const { return exposure_code(i) == e.index(); }
  /// Units whose realized exposure is e, ascending.
  const std::vector<int>& units_with(const Exposure& e) const {
    return by_code_[static_cast<std::size_t>(e.index())];
  }
  double marginal(Index i, const Exposure& e) const { return structure_->marginal(i, e); }

 private:
  std::shared_ptr<const InterferenceDesign> structure_;
  Assignment w_;
  VectorXd y_;
  std::vector<int> codes_;
  std::vector<std::vector<int>> by_code_;
};

}  // namespace knnim
