#pragma once

#include "knnim/model.hpp"

#include <string>
#include <vector>

namespace knnim {

enum class EffectKind { total, direct, indirect, nearest };

/// Which effect an estimator targets; `ell` is the neighbor rank for `nearest`.
struct Effect {
  EffectKind kind = EffectKind::total;
  int ell = 0;

  static Effect total() { return {EffectKind::total, 0}; }
  static Effect direct() { return {EffectKind::direct, 0}; }
  static Effect indirect() { return {EffectKind::indirect, 0}; }
  static Effect nearest(int ell) { return {EffectKind::nearest, ell}; }

  /// "total", "direct", "indirect", "nn1", ...
  std::string name() const;
  static Effect parse(const std::string& name);

  bool operator==(const Effect&) const = default;
};

/// A1: neighborhood interference only. A2: additionally no weak interaction
/// between direct and indirect effects, which licenses the pooled estimators.
enum class Assumption { a1, a2 };

std::string to_string(Assumption a);
Assumption parse_assumption(const std::string& s);

/// Pooling weights for the A2 estimators.
struct Weights {
  double c1 = 0.5;
  double c2 = 0.5;

  Weights() = default;
  Weights(double c1, double c2);

  bool is_default() const { return c1 == 0.5 && c2 == 0.5; }
};

struct ContrastTerm {
  Exposure exposure;
  double coef;
};

/// Linear combination of exposure means, sum_e coef_e * Ybar(e).
using Contrast = std::vector<ContrastTerm>;

/// Merges repeated exposures and drops zero coefficients.
Contrast simplify(const Contrast& c);

/// The HT contrast behind an effect estimator. The total effect is the same
/// under both assumptions.
Contrast contrast_for(const Effect& effect, Assumption assumption, int k,
                      const Weights& weights = {});

/// Every exposure any standard estimator needs: (w, W*_l) for w in {0,1} and
/// l in [0, K].
std::vector<Exposure> canonical_exposures(int k);

}  // namespace knnim
