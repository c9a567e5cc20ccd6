#pragma once

#include "knnim/contrast.hpp"
#include "knnim/design.hpp"
#include "knnim/experiment.hpp"
#include "knnim/model.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace knnim::oracle {

// Ground truth by brute force over the whole randomization distribution.
// Nothing here uses the closed-form probability formulas: CRD assignment
// weights are 1 / (number of enumerated subsets) and Bernoulli weights are
// products of per-unit coin probabilities.

class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kMaxAssignments = 1'000'000;

/// Number of assignments the design's sample space holds (saturating).
std::uint64_t sample_space_size(const Design& design);

/// Calls visit(w, probability) for every assignment with positive probability.
void enumerate_assignments(const Design& design,
                           const std::function<void(const Assignment&, double)>& visit,
                           std::uint64_t guard = kMaxAssignments);

/// Exact marginals (N x 2^(K+1)) and pairwise joints from one enumeration pass.
class ProbabilityTables {
 public:
  ProbabilityTables(const Design& design, const KNeighborhoods& nbr,
                    std::uint64_t guard = kMaxAssignments);

  double marginal(Index i, const Exposure& e) const { return marginals_(i, e.index()); }
  double joint(Index i, const Exposure& ei, Index j, const Exposure& ej) const;
  const MatrixXd& marginals() const { return marginals_; }
  int k() const { return k_; }
  Index size() const { return marginals_.rows(); }

 private:
  int k_;
  int exposures_;
  MatrixXd marginals_;
  // (i * N + j) -> exposures x exposures block, stacked vertically
  MatrixXd joints_;
};

double exact_exposure_probability(const Design& design, const KNeighborhoods& nbr, Index i,
                                  const Exposure& e);

double exact_joint(const Design& design, const KNeighborhoods& nbr, Index i, const Exposure& ei,
                   Index j, const Exposure& ej);

/// y_i(e) for every unit and every exposure; column = Exposure::index().
class PotentialOutcomeTable {
 public:
  PotentialOutcomeTable(int k, MatrixXd table);

  /// Constant outcome c everywhere.
  static PotentialOutcomeTable constant(Index n, int k, double c);
  /// y_i(w, n) = base_i + direct * w + sum_l neighbor_effects[l] * n_l.
  static PotentialOutcomeTable additive(const VectorXd& base, double direct,
                                        const std::vector<double>& neighbor_effects);
  /// Random table satisfying no weak interaction on average: the unit-level
  /// direct effect varies with the neighbor pattern, but its population mean
  /// does not.
  static PotentialOutcomeTable random_no_weak_interaction(Index n, int k, std::mt19937_64& rng);

  int k() const { return k_; }
  Index size() const { return table_.rows(); }
  const MatrixXd& table() const { return table_; }
  double operator()(Index i, const Exposure& e) const { return table_(i, e.index()); }

  /// Observed responses Y_i = y_i(exposure of i under w).
  VectorXd observe(const KNeighborhoods& nbr, const Assignment& w) const;

  /// Population mean of y(e).
  double mean(const Exposure& e) const { return table_.col(e.index()).mean(); }
  /// True value sum_e c_e ybar(e).
  double estimand(const Contrast& contrast) const;

 private:
  int k_;
  MatrixXd table_;
};

struct EstimatorSpec {
  Effect effect;
  Assumption assumption = Assumption::a1;
  Weights weights;

  Contrast contrast(int k) const { return contrast_for(effect, assumption, k, weights); }
  std::string name() const { return effect.name() + "/" + to_string(assumption); }
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact mean and variance of the HT estimator over the design.
Moments exact_estimator_moments(const Design& design, const KNeighborhoods& nbr,
                                const PotentialOutcomeTable& pot, const EstimatorSpec& spec);

struct ConservativeReport {
  double exact_var = 0.0;
  double expected_var_estimate = 0.0;
  double slack = 0.0;  // expected_var_estimate - exact_var
};

/// Averages the conservative variance estimator over all assignments and
/// compares with the exact variance of the point estimator.
ConservativeReport verify_conservative(const Design& design, const KNeighborhoods& nbr,
                                       const PotentialOutcomeTable& pot, const EstimatorSpec& spec);

/// Everything one enumeration pass can say about one instance and a set of
/// estimators, so that large batteries visit each assignment once.
struct EstimatorAudit {
  EstimatorSpec spec;
  double estimand = 0.0;
  Moments moments;
  double closed_form_variance = 0.0;  // from exact pi / pi_ij and the table
  double expected_var_estimate = 0.0;
  double expected_var_estimate_unfloored = 0.0;
};

struct InstanceAudit {
  std::vector<EstimatorAudit> estimators;
  double max_decomposition_residual = 0.0;  // over all assignments
  std::uint64_t assignments = 0;
};

InstanceAudit audit_instance(const Design& design, const KNeighborhoods& nbr,
                             const PotentialOutcomeTable& pot, const std::vector<EstimatorSpec>& specs);

/// Every A1 and A2 estimator for neighborhood size K (default weights).
std::vector<EstimatorSpec> standard_specs(int k);

/// Uniform random distances; ties have probability zero.
DistanceMatrix random_distances(Index n, std::mt19937_64& rng);

// ----------------------------------------------------------------------------
// Verification battery

struct BatteryOptions {
  std::uint64_t seed = 20240611;
  int probability_instances = 50;
  int outcome_tables = 20;
  int max_n = 12;
  int max_k = 3;
  int estimator_n = 8;
  std::uint64_t guard = kMaxAssignments;
};

struct CheckResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;       // largest error (or most negative slack)
  double tolerance = 0.0;
  int cases = 0;
  std::string detail;
};

struct BatteryReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

/// Probability closed forms, unbiasedness, variance identities,
/// conservativeness and decomposition identities on seeded random instances.
BatteryReport run_battery(const BatteryOptions& options);

/// Seed of the i-th random instance derived from a battery seed.
std::uint64_t instance_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace knnim::oracle
