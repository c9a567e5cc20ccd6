#include "knnim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <thread>

namespace knnim::sim {

InterferenceModel preset_model(int id) {
  // delta_1, delta_2, delta_3 and delta_t for models 1..9.
  static constexpr double kTable[9][4] = {
      {0, 0, 0, 0},   {0, 0, 0, 1},   {0, 0, 0, 4},  //
      {2, 1, 0.5, 0}, {2, 1, 0.5, 1}, {2, 1, 0.5, 4},  //
      {3, 2, 1, 0},   {3, 2, 1, 1},   {3, 2, 1, 4},
  };
  if (id < 1 || id > 9) throw InputError("model id must be in 1..9, got " + std::to_string(id));
  const auto& r = kTable[id - 1];
  return {{r[0], r[1], r[2]}, r[3]};
}

double TruthTable::value(const Effect& e) const {
  switch (e.kind) {
    case EffectKind::total:
      return total;
    case EffectKind::direct:
      return direct;
    case EffectKind::indirect:
      return indirect;
    case EffectKind::nearest:
      if (e.ell < 1 || e.ell > static_cast<int>(nearest.size())) {
        throw InputError("neighbor rank out of range");
      }
      return nearest[static_cast<std::size_t>(e.ell - 1)];
  }
  return 0.0;
}

TruthTable truth(const InterferenceModel& model) {
  TruthTable t;
  t.direct = model.direct;
  t.nearest = model.neighbor_effects;
  for (double d : model.neighbor_effects) t.indirect += d;
  t.total = t.direct + t.indirect;
  return t;
}

Population generate_population(Index n, std::uint64_t seed) {
  if (n < 2) throw InputError("population needs at least two units");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd x(n, 3);
  for (Index i = 0; i < n; ++i) {
    for (Index p = 0; p < 3; ++p) x(i, p) = normal(rng);
  }
  MatrixXd d(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) d(i, j) = (x.row(i) - x.row(j)).squaredNorm();
  }
  return {std::move(x), DistanceMatrix(std::move(d))};
}

VectorXd respond(const InterferenceModel& model, const MatrixXd& covariates, const KNeighborhoods& nbr,
                 const Assignment& w) {
  if (model.k() != nbr.k()) throw InputError("model has a different number of neighbor effects than K");
  if (covariates.rows() != nbr.size() || w.size() != nbr.size()) {
    throw InputError("covariates, assignment and neighborhoods disagree on population size");
  }
  VectorXd y = covariates.rowwise().sum();
  for (Index i = 0; i < nbr.size(); ++i) {
    if (w[i]) y(i) += model.direct;
    auto nb = nbr.neighbors(i);
    for (int l = 0; l < nbr.k(); ++l) {
      if (w[nb[static_cast<std::size_t>(l)]]) y(i) += model.neighbor_effects[static_cast<std::size_t>(l)];
    }
  }
  return y;
}

std::string to_string(DesignKind d) { return d == DesignKind::crd_half ? "crd" : "bernoulli"; }

DesignKind parse_design_kind(const std::string& s) {
  if (s == "crd" || s == "CRD") return DesignKind::crd_half;
  if (s == "bernoulli" || s == "brd" || s == "BRD") return DesignKind::bernoulli_half;
  throw InputError("unknown design '" + s + "' (expected crd or bernoulli)");
}

const SimRow& SimSummary::row(const Effect& e, Assumption a) const {
  for (const auto& r : rows) {
    if (r.effect == e && (r.assumption == a || e.kind == EffectKind::total)) return r;
  }
  throw InputError("no simulation row " + e.name() + " " + knnim::to_string(a));
}

Assignment draw_assignment(DesignKind kind, Index n, std::mt19937_64& rng) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 0);
  if (kind == DesignKind::crd_half) {
    std::fill(bits.begin(), bits.begin() + n / 2, 1);
    std::shuffle(bits.begin(), bits.end(), rng);
  } else {
    std::bernoulli_distribution coin(0.5);
    for (auto& b : bits) b = coin(rng);
  }
  return Assignment(std::move(bits));
}

std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32),
                    0x6b6e6eu};
  return std::mt19937_64(seq);
}

namespace {

struct Replicate {
  std::vector<double> estimates;
  std::vector<double> variances;
  double residual = 0.0;
  int floored = 0;
};

constexpr int kNeighbors = 3;

Design make_design(DesignKind kind, int n) {
  return kind == DesignKind::crd_half ? Design::completely_randomized(n, n / 2)
                                      : Design::bernoulli(n, 0.5);
}

struct Scenario {
  std::shared_ptr<const InterferenceDesign> structure;
  MatrixXd covariates;
};

Scenario make_scenario(const SimConfig& cfg, std::uint64_t population_seed) {
  Population pop = generate_population(cfg.n, population_seed);
  KNeighborhoods nbr = build_k_neighborhoods(pop.distances, kNeighbors);
  return {std::make_shared<const InterferenceDesign>(std::move(nbr), make_design(cfg.design, cfg.n)),
          std::move(pop.covariates)};
}

Replicate run_one(const SimConfig& cfg, const InterferenceModel& model, const Scenario& scenario,
                  std::uint64_t rep) {
  std::mt19937_64 rng = replication_rng(cfg.seed, rep);
  const Assignment w = draw_assignment(cfg.design, cfg.n, rng);
  VectorXd y = respond(model, scenario.covariates, scenario.structure->neighborhoods(), w);
  const ExperimentData data(scenario.structure, w, std::move(y));
  const auto rows = estimate_all(data);
  Replicate out;
  for (const auto& r : rows) {
    out.estimates.push_back(r.estimate);
    out.variances.push_back(r.variance);
    out.floored += r.variance_floored ? 1 : 0;
  }
  out.residual = decomposition_residual(rows, data.k());
  return out;
}

}  // namespace

SimSummary run_simulation(const SimConfig& cfg) {
  const InterferenceModel model = preset_model(cfg.model_id);
  if (cfg.n < kNeighbors + 2) throw InputError("simulation needs n >= K + 2");
  if (cfg.design == DesignKind::crd_half && cfg.n % 2 != 0) {
    throw InputError("half-treated complete randomization needs an even n");
  }
  if (cfg.reps < 2) throw InputError("simulation needs at least two replications");

  std::optional<Scenario> fixed;
  if (!cfg.redraw_population) fixed = make_scenario(cfg, cfg.seed);

  std::vector<Replicate> results(static_cast<std::size_t>(cfg.reps));
  auto work = [&](int begin, int end) {
    for (int rep = begin; rep < end; ++rep) {
      const auto r = static_cast<std::uint64_t>(rep);
      if (fixed) {
        results[static_cast<std::size_t>(rep)] = run_one(cfg, model, *fixed, r);
      } else {
        const Scenario s = make_scenario(cfg, replication_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull, r)());
        results[static_cast<std::size_t>(rep)] = run_one(cfg, model, s, r);
      }
    }
  };
  const int threads = std::clamp(cfg.threads, 1, cfg.reps);
  if (threads == 1) {
    work(0, cfg.reps);
  } else {
    std::vector<std::jthread> pool;
    const int chunk = (cfg.reps + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int b = t * chunk, e = std::min(cfg.reps, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }

  const TruthTable tt = truth(model);
  SimSummary summary;
  summary.config = cfg;
  const auto layout = standard_rows(kNeighbors);
  const double reps = static_cast<double>(cfg.reps);
  for (std::size_t r = 0; r < layout.size(); ++r) {
    SimRow row;
    row.effect = layout[r].first;
    row.assumption = layout[r].second;
    row.truth = tt.value(row.effect);
    double sum = 0.0, var_sum = 0.0;
    for (const auto& rep : results) {
      sum += rep.estimates[r];
      var_sum += rep.variances[r];
    }
    row.emp_ev = sum / reps;
    double ss = 0.0;
    for (const auto& rep : results) {
      const double d = rep.estimates[r] - row.emp_ev;
      ss += d * d;
    }
    row.emp_var = ss / (reps - 1.0);
    row.emp_sd = std::sqrt(row.emp_var);
    row.mean_var_est = var_sum / reps;
    summary.rows.push_back(row);
  }
  for (const auto& rep : results) {
    summary.max_decomposition_residual = std::max(summary.max_decomposition_residual, rep.residual);
    summary.floored_variances += rep.floored;
  }
  return summary;
}

}  // namespace knnim::sim
