#pragma once

#include "knnim/contrast.hpp"
#include "knnim/experiment.hpp"
#include "knnim/variance.hpp"

#include <vector>

namespace knnim {

/// Raised when an estimator needs an exposure that some unit can never show.
class PositivityError : public DesignError {
 public:
  PositivityError(const std::string& what, std::vector<int> units)
      : DesignError(what), units_(std::move(units)) {}
  const std::vector<int>& units() const { return units_; }

 private:
  std::vector<int> units_;
};

struct EffectEstimate {
  Effect effect;
  Assumption assumption = Assumption::a1;
  double estimate = 0.0;
  double variance = 0.0;  // conservative, floored at 0
  double se = 0.0;
  bool variance_floored = false;
};

/// Horvitz-Thompson mean (1/N) sum_i I_i(e) Y_i / pi_i(e). Zero when no unit shows e.
double ht_mean(const ExperimentData& data, const Exposure& e);

/// Evaluates a contrast of HT means.
double ht_contrast(const ExperimentData& data, const Contrast& contrast);

/// Throws PositivityError listing every unit with pi_i(e) = 0 for some
/// exposure in the contrast.
void require_positivity(const InterferenceDesign& structure, const Contrast& contrast);

EffectEstimate estimate_a1(const ExperimentData& data, const Effect& effect);

/// Pooled estimators. The total effect has no pooled form and is delegated
/// to estimate_a1.
EffectEstimate estimate_a2(const ExperimentData& data, const Effect& effect,
                           const Weights& weights = {});

/// Report rows in table order: total, direct A1, direct A2, indirect A1,
/// indirect A2, then nn(l) A1, nn(l) A2 for l = 1..K.
std::vector<std::pair<Effect, Assumption>> standard_rows(int k);

std::vector<EffectEstimate> estimate_all(const ExperimentData& data, const Weights& weights = {});

/// Largest absolute violation of the four decomposition identities
/// (total = direct + indirect and indirect = sum of nn, each under A1 and A2)
/// across a row set produced by estimate_all. Requires default weights.
double decomposition_residual(const std::vector<EffectEstimate>& rows, int k,
                              const Weights& weights = {});

struct LowCountWarning {
  Exposure exposure;
  long count;
};

/// Estimator-relevant exposures observed fewer than `threshold` times.
std::vector<LowCountWarning> low_count_exposures(const ExperimentData& data, long threshold = 30);

}  // namespace knnim
