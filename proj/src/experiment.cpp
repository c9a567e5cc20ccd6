#include "knnim/experiment.hpp"

#include <cmath>

namespace knnim {

InterferenceDesign::InterferenceDesign(KNeighborhoods nbr, Design design)
    : nbr_(std::move(nbr)), design_(design) {
  if (design_.population() != nbr_.size()) {
    throw InputError("design population (" + std::to_string(design_.population()) +
                     ") does not match the number of units (" + std::to_string(nbr_.size()) + ")");
  }
  members_.resize(static_cast<std::size_t>(nbr_.size()));
  for (Index i = 0; i < nbr_.size(); ++i) {
    members_[static_cast<std::size_t>(i)].push_back(static_cast<int>(i));
    for (int u : nbr_.neighbors(i)) members_[static_cast<std::size_t>(u)].push_back(static_cast<int>(i));
  }
}

const ZeroJointCounts& InterferenceDesign::zero_joint_counts(const Exposure& e1,
                                                             const Exposure& e2) const {
  if (e1.k() != k() || e2.k() != k()) throw InputError("exposure K does not match neighborhoods");
  const auto key = std::make_pair(e1.index(), e2.index());
  {
    std::lock_guard lock(memo_mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return *it->second;
  }
  auto fresh = std::make_unique<ZeroJointCounts>(count_zero_joints(e1, e2));
  std::lock_guard lock(memo_mutex_);
  auto [it, inserted] = memo_.try_emplace(key, std::move(fresh));
  return *it->second;
}

ZeroJointCounts InterferenceDesign::count_zero_joints(const Exposure& e1, const Exposure& e2) const {
  const Index n = size();
  const bool same = e1 == e2;
  ZeroJointCounts out;
  out.as_first.assign(static_cast<std::size_t>(n), 0);
  out.as_second.assign(static_cast<std::size_t>(n), 0);

  // Pairs with disjoint closed neighborhoods share one joint value.
  const int disjoint_treated = e1.treated_count() + e2.treated_count();
  const bool disjoint_zero = design_.pattern_probability(2 * (k() + 1), disjoint_treated) == 0.0;

  std::vector<Index> mark(static_cast<std::size_t>(n), -1);
  std::vector<int> overlapping;
  for (Index i = 0; i < n; ++i) {
    overlapping.clear();
    mark[static_cast<std::size_t>(i)] = i;
    auto visit = [&](int u) {
      for (int j : members_[static_cast<std::size_t>(u)]) {
        if (mark[static_cast<std::size_t>(j)] != i) {
          mark[static_cast<std::size_t>(j)] = i;
          overlapping.push_back(j);
        }
      }
    };
    visit(static_cast<int>(i));
    for (int u : nbr_.neighbors(i)) visit(u);

    for (int j : overlapping) {
      if (joint(i, e1, j, e2) == 0.0) {
        ++out.as_first[static_cast<std::size_t>(i)];
        ++out.as_second[static_cast<std::size_t>(j)];
      }
    }
    if (disjoint_zero) {
      for (Index j = 0; j < n; ++j) {
        if (mark[static_cast<std::size_t>(j)] != i) {
          ++out.as_first[static_cast<std::size_t>(i)];
          ++out.as_second[static_cast<std::size_t>(j)];
        }
      }
    }
    if (!same) {
      ++out.as_first[static_cast<std::size_t>(i)];
      ++out.as_second[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

ExperimentData::ExperimentData(std::shared_ptr<const InterferenceDesign> structure, Assignment w,
                               VectorXd y)
    : structure_(std::move(structure)), w_(std::move(w)), y_(std::move(y)) {
  if (!structure_) throw InputError("experiment needs a design structure");
  const Index n = structure_->size();
  if (w_.size() != n) throw InputError("assignment length does not match population");
  if (y_.size() != n) throw InputError("response length does not match population");
  if (!y_.allFinite()) throw InputError("responses must be finite");
  const Design& design = structure_->design();
  if (design.is_crd() && w_.treated_count() != design.crd_treated()) {
    throw DesignError("assignment treats " + std::to_string(w_.treated_count()) +
                      " units but the design fixes N_t=" + std::to_string(design.crd_treated()));
  }

  codes_ = classify_all(structure_->neighborhoods(), w_);
  by_code_.resize(static_cast<std::size_t>(Exposure::count(k())));
  for (Index i = 0; i < n; ++i) {
    const int code = codes_[static_cast<std::size_t>(i)];
    by_code_[static_cast<std::size_t>(code)].push_back(static_cast<int>(i));
    if (marginal(i, Exposure::from_index(code, k())) <= 0.0) {
      throw DesignError("unit " + std::to_string(i) +
                        " shows an exposure with zero probability under the design");
    }
  }
}

ExperimentData::ExperimentData(KNeighborhoods nbr, Design design, Assignment w, VectorXd y)
    : ExperimentData(std::make_shared<const InterferenceDesign>(std::move(nbr), design), std::move(w),
                     std::move(y)) {}

}  // namespace knnim
