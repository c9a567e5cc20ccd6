#include "knnim/oracle.hpp"

#include "knnim/estimators.hpp"
#include "knnim/variance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace knnim::oracle {

std::uint64_t sample_space_size(const Design& design) {
  const int n = design.population();
  if (design.is_crd()) {
    const double c = binomial(n, design.crd_treated());
    return c > 1e18 ? UINT64_MAX : static_cast<std::uint64_t>(std::llround(c));
  }
  return n >= 63 ? UINT64_MAX : (std::uint64_t{1} << n);
}

void enumerate_assignments(const Design& design,
                           const std::function<void(const Assignment&, double)>& visit,
                           std::uint64_t guard) {
  const std::uint64_t size = sample_space_size(design);
  if (size > guard) {
    throw GuardError("sample space of " + design.to_string() + " has " +
                     (size == UINT64_MAX ? std::string("too many") : std::to_string(size)) +
                     " assignments, above the enumeration guard of " + std::to_string(guard));
  }
  const int n = design.population();
  if (design.is_crd()) {
    // All N_t-subsets in lexicographic order, each with equal weight.
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n), 0);
    std::fill(bits.end() - design.crd_treated(), bits.end(), 1);
    std::vector<Assignment> all;
    do {
      all.emplace_back(bits);
    } while (std::next_permutation(bits.begin(), bits.end()));
    const double p = 1.0 / static_cast<double>(all.size());
    for (const auto& w : all) visit(w, p);
    return;
  }
  const double p = design.bernoulli_p();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
  for (std::uint64_t mask = 0; mask < size; ++mask) {
    double prob = 1.0;
    for (int u = 0; u < n; ++u) {
      const bool t = (mask >> u) & 1u;
      bits[static_cast<std::size_t>(u)] = t;
      prob *= t ? p : 1.0 - p;
    }
    visit(Assignment(bits), prob);
  }
}

ProbabilityTables::ProbabilityTables(const Design& design, const KNeighborhoods& nbr,
                                     std::uint64_t guard)
    : k_(nbr.k()), exposures_(Exposure::count(nbr.k())) {
  const Index n = nbr.size();
  if (design.population() != n) throw InputError("design population does not match neighborhoods");
  marginals_.setZero(n, exposures_);
  joints_.setZero(n * n * exposures_, exposures_);
  enumerate_assignments(
      design,
      [&](const Assignment& w, double p) {
        const std::vector<int> codes = classify_all(nbr, w);
        for (Index i = 0; i < n; ++i) {
          const int ci = codes[static_cast<std::size_t>(i)];
          marginals_(i, ci) += p;
          for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            joints_((i * n + j) * exposures_ + ci, codes[static_cast<std::size_t>(j)]) += p;
          }
        }
      },
      guard);
}

double ProbabilityTables::joint(Index i, const Exposure& ei, Index j, const Exposure& ej) const {
  if (i == j) throw InputError("joint probability needs two distinct units");
  const Index n = size();
  return joints_((i * n + j) * exposures_ + ei.index(), ej.index());
}

double exact_exposure_probability(const Design& design, const KNeighborhoods& nbr, Index i,
                                  const Exposure& e) {
  double total = 0.0;
  enumerate_assignments(design, [&](const Assignment& w, double p) {
    if (classify_exposure(nbr, w, i) == e) total += p;
  });
  return total;
}

double exact_joint(const Design& design, const KNeighborhoods& nbr, Index i, const Exposure& ei,
                   Index j, const Exposure& ej) {
  if (i == j) throw InputError("joint probability needs two distinct units");
  double total = 0.0;
  enumerate_assignments(design, [&](const Assignment& w, double p) {
    if (classify_exposure(nbr, w, i) == ei && classify_exposure(nbr, w, j) == ej) total += p;
  });
  return total;
}

PotentialOutcomeTable::PotentialOutcomeTable(int k, MatrixXd table) : k_(k), table_(std::move(table)) {
  if (table_.cols() != Exposure::count(k_)) {
    throw InputError("potential-outcome table needs 2^(K+1) columns");
  }
  if (!table_.allFinite()) throw InputError("potential outcomes must be finite");
}

PotentialOutcomeTable PotentialOutcomeTable::constant(Index n, int k, double c) {
  return PotentialOutcomeTable(k, MatrixXd::Constant(n, Exposure::count(k), c));
}

PotentialOutcomeTable PotentialOutcomeTable::additive(const VectorXd& base, double direct,
                                                      const std::vector<double>& neighbor_effects) {
  const int k = static_cast<int>(neighbor_effects.size());
  MatrixXd t(base.size(), Exposure::count(k));
  for (int code = 0; code < Exposure::count(k); ++code) {
    const Exposure e = Exposure::from_index(code, k);
    double shift = e.treated() ? direct : 0.0;
    for (int l = 0; l < k; ++l) {
      if (e.neighbor(l)) shift += neighbor_effects[static_cast<std::size_t>(l)];
    }
    t.col(code) = base.array() + shift;
  }
  return PotentialOutcomeTable(k, std::move(t));
}

PotentialOutcomeTable PotentialOutcomeTable::random_no_weak_interaction(Index n, int k,
                                                                        std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int patterns = 1 << k;
  const double common_direct = normal(rng);
  MatrixXd t(n, Exposure::count(k));
  for (int pat = 0; pat < patterns; ++pat) {
    VectorXd base(n), effect(n);
    for (Index i = 0; i < n; ++i) {
      base(i) = 2.0 * normal(rng);
      effect(i) = 1.0 + normal(rng);
    }
    effect.array() += common_direct - effect.mean();
    t.col(Exposure(false, static_cast<std::uint32_t>(pat), k).index()) = base;
    t.col(Exposure(true, static_cast<std::uint32_t>(pat), k).index()) = base + effect;
  }
  return PotentialOutcomeTable(k, std::move(t));
}

VectorXd PotentialOutcomeTable::observe(const KNeighborhoods& nbr, const Assignment& w) const {
  if (nbr.k() != k_ || nbr.size() != size()) throw InputError("table does not match neighborhoods");
  const std::vector<int> codes = classify_all(nbr, w);
  VectorXd y(size());
  for (Index i = 0; i < size(); ++i) y(i) = table_(i, codes[static_cast<std::size_t>(i)]);
  return y;
}

double PotentialOutcomeTable::estimand(const Contrast& contrast) const {
  double s = 0.0;
  for (const auto& t : contrast) s += t.coef * mean(t.exposure);
  return s;
}

std::vector<EstimatorSpec> standard_specs(int k) {
  std::vector<EstimatorSpec> out;
  for (const auto& [effect, assumption] : standard_rows(k)) out.push_back({effect, assumption, {}});
  return out;
}

InstanceAudit audit_instance(const Design& design, const KNeighborhoods& nbr,
                             const PotentialOutcomeTable& pot, const std::vector<EstimatorSpec>& specs) {
  const int k = nbr.k();
  auto structure = std::make_shared<const InterferenceDesign>(nbr, design);

  std::vector<Contrast> contrasts;
  for (const auto& s : specs) {
    contrasts.push_back(s.contrast(k));
    require_positivity(*structure, contrasts.back());
  }
  const auto rows = standard_rows(k);
  std::vector<Contrast> row_contrasts;
  for (const auto& [effect, assumption] : rows) {
    row_contrasts.push_back(contrast_for(effect, assumption, k));
  }

  InstanceAudit out;
  std::vector<double> probs;
  std::vector<std::vector<double>> estimates(specs.size());
  std::vector<double> var_sum(specs.size(), 0.0), var_raw_sum(specs.size(), 0.0);

  enumerate_assignments(design, [&](const Assignment& w, double p) {
    const ExperimentData data(structure, w, pot.observe(nbr, w));
    VarianceCache cache(data);
    probs.push_back(p);
    for (std::size_t s = 0; s < specs.size(); ++s) {
      estimates[s].push_back(ht_contrast(data, contrasts[s]));
      const VarianceEstimate v = cache.conservative_variance(contrasts[s]);
      var_sum[s] += p * v.value;
      var_raw_sum[s] += p * v.raw;
    }
    std::vector<EffectEstimate> row_values;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      EffectEstimate e;
      e.effect = rows[r].first;
      e.assumption = rows[r].second;
      e.estimate = ht_contrast(data, row_contrasts[r]);
      row_values.push_back(e);
    }
    out.max_decomposition_residual =
        std::max(out.max_decomposition_residual, decomposition_residual(row_values, k));
    ++out.assignments;
  });

  for (std::size_t s = 0; s < specs.size(); ++s) {
    EstimatorAudit a;
    a.spec = specs[s];
    a.estimand = pot.estimand(contrast_for(specs[s].effect, Assumption::a1, k));
    double mean = 0.0;
    for (std::size_t r = 0; r < probs.size(); ++r) mean += probs[r] * estimates[s][r];
    double var = 0.0;
    for (std::size_t r = 0; r < probs.size(); ++r) {
      const double d = estimates[s][r] - mean;
      var += probs[r] * d * d;
    }
    a.moments = {mean, var};
    a.closed_form_variance = population_contrast_variance(*structure, pot.table(), contrasts[s]);
    a.expected_var_estimate = var_sum[s];
    a.expected_var_estimate_unfloored = var_raw_sum[s];
    out.estimators.push_back(a);
  }
  return out;
}

Moments exact_estimator_moments(const Design& design, const KNeighborhoods& nbr,
                                const PotentialOutcomeTable& pot, const EstimatorSpec& spec) {
  return audit_instance(design, nbr, pot, {spec}).estimators.front().moments;
}

ConservativeReport verify_conservative(const Design& design, const KNeighborhoods& nbr,
                                       const PotentialOutcomeTable& pot, const EstimatorSpec& spec) {
  const EstimatorAudit a = audit_instance(design, nbr, pot, {spec}).estimators.front();
  return {a.moments.variance, a.expected_var_estimate, a.expected_var_estimate - a.moments.variance};
}

DistanceMatrix random_distances(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd d(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) d(i, j) = i == j ? 0.0 : u(rng);
  }
  return DistanceMatrix(std::move(d));
}

std::uint64_t instance_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

bool BatteryReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

namespace {

std::string describe(const Design& d, const KNeighborhoods& nbr, std::uint64_t seed) {
  std::ostringstream os;
  os << d.to_string() << " K=" << nbr.k() << " seed=" << seed;
  return os.str();
}

}  // namespace

BatteryReport run_battery(const BatteryOptions& opt) {
  if (opt.max_n < 4 || opt.max_k < 1) throw InputError("battery caps too small");
  BatteryReport report;

  // Closed-form marginal and joint probabilities against enumeration.
  {
    CheckResult c{"probabilities match enumeration", true, 0.0, 1e-12, 0, ""};
    std::vector<int> sizes;
    for (int n : {6, 8, 10, 12}) {
      if (n <= opt.max_n) sizes.push_back(n);
    }
    if (sizes.empty()) sizes.push_back(opt.max_n);
    for (int idx = 0; idx < opt.probability_instances; ++idx) {
      const std::uint64_t seed = instance_seed(opt.seed, static_cast<std::uint64_t>(idx));
      std::mt19937_64 rng(seed);
      const int n = sizes[static_cast<std::size_t>(idx) % sizes.size()];
      const int k = 1 + (idx / static_cast<int>(sizes.size())) % std::min(opt.max_k, n - 2);
      const bool crd = idx % 2 == 0;
      const Design design = crd ? Design::completely_randomized(
                                      n, std::uniform_int_distribution<int>(1, n - 1)(rng))
                                : Design::bernoulli(n, std::uniform_real_distribution<double>(0.1, 0.9)(rng));
      const KNeighborhoods nbr = build_k_neighborhoods(random_distances(n, rng), k);
      const ProbabilityTables exact(design, nbr, opt.guard);
      const int ne = Exposure::count(k);
      double worst = 0.0;
      for (Index i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (int a = 0; a < ne; ++a) {
          const Exposure ea = Exposure::from_index(a, k);
          const double m = marginal_probability(design, nbr, i, ea);
          row_sum += m;
          worst = std::max(worst, std::abs(m - exact.marginal(i, ea)));
          for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            for (int b = 0; b < ne; ++b) {
              const Exposure eb = Exposure::from_index(b, k);
              worst = std::max(worst, std::abs(joint_probability(design, nbr, i, ea, j, eb) -
                                               exact.joint(i, ea, j, eb)));
            }
          }
        }
        worst = std::max(worst, std::abs(row_sum - 1.0));
      }
      ++c.cases;
      if (worst > c.worst) {
        c.worst = worst;
        c.detail = describe(design, nbr, seed);
      }
    }
    c.passed = c.worst <= c.tolerance;
    report.checks.push_back(c);
  }

  // Estimator moments on random potential-outcome tables.
  CheckResult unbiased{"estimators unbiased", true, 0.0, 1e-10, 0, ""};
  CheckResult identity{"closed-form variance equals enumerated variance", true, 0.0, 1e-10, 0, ""};
  CheckResult conservative{"conservative variance expectation >= variance", true,
                           std::numeric_limits<double>::infinity(), -1e-10, 0, ""};
  CheckResult decomposition{"decomposition identities per assignment", true, 0.0, 1e-12, 0, ""};
  const int n = opt.estimator_n;
  std::uint64_t counter = 1'000'000;
  for (int k = 1; k <= std::min(2, opt.max_k); ++k) {
    for (bool crd : {true, false}) {
      const Design design = crd ? Design::completely_randomized(n, n / 2) : Design::bernoulli(n, 0.5);
      for (int t = 0; t < opt.outcome_tables; ++t) {
        const std::uint64_t seed = instance_seed(opt.seed, counter++);
        std::mt19937_64 rng(seed);
        const KNeighborhoods nbr = build_k_neighborhoods(random_distances(n, rng), k);
        const auto pot = PotentialOutcomeTable::random_no_weak_interaction(n, k, rng);
        const InstanceAudit audit = audit_instance(design, nbr, pot, standard_specs(k));
        const std::string where = describe(design, nbr, seed);
        for (const auto& a : audit.estimators) {
          const double bias = std::abs(a.moments.mean - a.estimand);
          if (bias > unbiased.worst) {
            unbiased.worst = bias;
            unbiased.detail = a.spec.name() + " " + where;
          }
          const double gap = std::abs(a.closed_form_variance - a.moments.variance);
          if (gap > identity.worst) {
            identity.worst = gap;
            identity.detail = a.spec.name() + " " + where;
          }
          const double slack = a.expected_var_estimate - a.moments.variance;
          if (slack < conservative.worst) {
            conservative.worst = slack;
            conservative.detail = a.spec.name() + " " + where;
          }
          ++unbiased.cases;
          ++identity.cases;
          ++conservative.cases;
        }
        if (audit.max_decomposition_residual > decomposition.worst) {
          decomposition.worst = audit.max_decomposition_residual;
          decomposition.detail = where;
        }
        decomposition.cases += static_cast<int>(audit.assignments);
      }
    }
  }
  unbiased.passed = unbiased.worst <= unbiased.tolerance;
  identity.passed = identity.worst <= identity.tolerance;
  conservative.passed = conservative.worst >= conservative.tolerance;
  decomposition.passed = decomposition.worst <= decomposition.tolerance;
  report.checks.push_back(unbiased);
  report.checks.push_back(identity);
  report.checks.push_back(conservative);
  report.checks.push_back(decomposition);
  return report;
}

}  // namespace knnim::oracle
