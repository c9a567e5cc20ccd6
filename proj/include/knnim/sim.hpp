#pragma once

#include "knnim/contrast.hpp"
#include "knnim/estimators.hpp"
#include "knnim/model.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace knnim::sim {

/// Additive response model: neighbor_effects[l] is the (l+1)-th nearest
/// neighbor's indirect effect, direct the own-treatment effect.
struct InterferenceModel {
  std::vector<double> neighbor_effects;
  double direct = 0.0;

  int k() const { return static_cast<int>(neighbor_effects.size()); }
};

/// The nine K = 3 presets (no / weak / moderate interference, each with
/// direct effect 0, 1, 4).
InterferenceModel preset_model(int id);

struct TruthTable {
  double total = 0.0;
  double direct = 0.0;
  double indirect = 0.0;
  std::vector<double> nearest;  // nearest[l-1]

  double value(const Effect& e) const;
};

TruthTable truth(const InterferenceModel& model);

struct Population {
  MatrixXd covariates;  // n x 3, iid standard normal
  DistanceMatrix distances;
};

/// Covariates from a seeded generator; d(i, j) is squared Euclidean distance.
Population generate_population(Index n, std::uint64_t seed);

/// Y_i = sum_p X_ip + sum_l delta_l W_{i,l} + delta_t W_i.
VectorXd respond(const InterferenceModel& model, const MatrixXd& covariates,
                 const KNeighborhoods& nbr, const Assignment& w);

enum class DesignKind { crd_half, bernoulli_half };

std::string to_string(DesignKind d);
DesignKind parse_design_kind(const std::string& s);

struct SimConfig {
  int model_id = 1;
  DesignKind design = DesignKind::crd_half;
  int n = 256;
  int reps = 1000;
  std::uint64_t seed = 1;
  bool redraw_population = false;
  int threads = 1;
};

struct SimRow {
  Effect effect;
  Assumption assumption = Assumption::a1;
  double truth = 0.0;
  double emp_ev = 0.0;
  double emp_var = 0.0;  // n - 1 denominator
  double emp_sd = 0.0;
  double mean_var_est = 0.0;
};

struct SimSummary {
  SimConfig config;
  std::vector<SimRow> rows;
  double max_decomposition_residual = 0.0;
  int floored_variances = 0;

  const SimRow& row(const Effect& e, Assumption a) const;
};

/// Draws one assignment from the design.
Assignment draw_assignment(DesignKind kind, Index n, std::mt19937_64& rng);

/// Independent per-replication generator seeded from (seed, rep).
std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t rep);

SimSummary run_simulation(const SimConfig& config);

}  // namespace knnim::sim
