#include "knnim/variance.hpp"

#include <cmath>

namespace knnim {

namespace {

double inv_n2(const ExperimentData& data) {
  const double n = static_cast<double>(data.size());
  return 1.0 / (n * n);
}

void require_distinct(const Exposure& e1, const Exposure& e2) {
  if (e1 == e2) throw InputError("covariance terms need two distinct exposures");
}

void require_k(const ExperimentData& data, const Exposure& e) {
  if (e.k() != data.k()) throw InputError("exposure K does not match the experiment");
}

/// sum_{i in S} Y_i^2 / (2 pi_i) * counts[i]
double young_half(const ExperimentData& data, const Exposure& e, const std::vector<int>& counts) {
  const VectorXd& y = data.responses();
  double s = 0.0;
  for (int i : data.units_with(e)) {
    const auto c = counts[static_cast<std::size_t>(i)];
    if (c == 0) continue;
    s += c * y(i) * y(i) / (2.0 * data.marginal(i, e));
  }
  return s;
}

VarianceEstimate floor_at_zero(double raw) {
  VarianceEstimate out;
  out.raw = raw;
  out.floored = raw < 0.0;
  out.value = out.floored ? 0.0 : raw;
  return out;
}

template <typename VarFn, typename CovFn>
VarianceEstimate combine(const Contrast& contrast, VarFn&& var_of, CovFn&& cov_of) {
  const Contrast c = simplify(contrast);
  double total = 0.0;
  for (std::size_t a = 0; a < c.size(); ++a) {
    total += c[a].coef * c[a].coef * var_of(c[a].exposure);
    for (std::size_t b = a + 1; b < c.size(); ++b) {
      const double w = 2.0 * c[a].coef * c[b].coef;
      const CovBounds& cb = cov_of(c[a].exposure, c[b].exposure);
      total += w * (w > 0.0 ? cb.upper : cb.lower);
    }
  }
  return floor_at_zero(total);
}

}  // namespace

double var_ht_hat(const ExperimentData& data, const Exposure& e) {
  require_k(data, e);
  const VectorXd& y = data.responses();
  const auto& units = data.units_with(e);
  const InterferenceDesign& s = data.structure();

  double diag = 0.0;
  double cross = 0.0;
  for (int i : units) {
    const double pi_i = data.marginal(i, e);
    const double zi = y(i) / pi_i;
    diag += (1.0 - pi_i) * zi * zi;
    for (int j : units) {
      if (j == i) continue;
      const double pij = s.joint(i, e, j, e);
      if (pij <= 0.0) continue;
      const double pi_j = data.marginal(j, e);
      cross += (pij - pi_i * pi_j) / pij * zi * (y(j) / pi_j);
    }
  }
  return (diag + cross) * inv_n2(data);
}

double a_var_hat(const ExperimentData& data, const Exposure& e) {
  require_k(data, e);
  const ZeroJointCounts& z = data.structure().zero_joint_counts(e, e);
  return (young_half(data, e, z.as_first) + young_half(data, e, z.as_second)) * inv_n2(data);
}

double var_a(const ExperimentData& data, const Exposure& e) {
  return var_ht_hat(data, e) + a_var_hat(data, e);
}

double cov_ht_hat(const ExperimentData& data, const Exposure& e1, const Exposure& e2) {
  require_k(data, e1);
  require_k(data, e2);
  require_distinct(e1, e2);
  const VectorXd& y = data.responses();
  const InterferenceDesign& s = data.structure();
  double sum = 0.0;
  for (int i : data.units_with(e1)) {
    const double pi_i = data.marginal(i, e1);
    const double zi = y(i) / pi_i;
    for (int j : data.units_with(e2)) {
      // i == j is impossible here: one unit shows one exposure.
      const double pij = s.joint(i, e1, j, e2);
      if (pij <= 0.0) continue;
      const double pi_j = data.marginal(j, e2);
      sum += (pij - pi_i * pi_j) / pij * zi * (y(j) / pi_j);
    }
  }
  return sum * inv_n2(data);
}

CovBounds cov_bounds(const ExperimentData& data, const Exposure& e1, const Exposure& e2) {
  CovBounds out;
  out.cov_ht = cov_ht_hat(data, e1, e2);
  const ZeroJointCounts& z = data.structure().zero_joint_counts(e1, e2);
  out.correction = (young_half(data, e1, z.as_first) + young_half(data, e2, z.as_second)) * inv_n2(data);
  out.lower = out.cov_ht - out.correction;
  out.upper = out.cov_ht + out.correction;
  return out;
}

VarianceEstimate conservative_variance(const ExperimentData& data, const Contrast& contrast) {
  VarianceCache cache(data);
  return cache.conservative_variance(contrast);
}

VarianceEstimate var_difference_hat(const ExperimentData& data, const Exposure& e1,
                                    const Exposure& e2) {
  require_distinct(e1, e2);
  return conservative_variance(data, {{e1, 1.0}, {e2, -1.0}});
}

VarianceEstimate var_halfsum_hat(const ExperimentData& data, const Exposure& e, const Exposure& e_prime,
                                 const Exposure& e_star, const Exposure& e_star_prime,
                                 const Weights& weights) {
  const Exposure* all[] = {&e, &e_prime, &e_star, &e_star_prime};
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      if (*all[a] == *all[b]) throw InputError("pooled variance needs four distinct exposures");
    }
  }
  return conservative_variance(data, {{e, weights.c1},
                                      {e_prime, -weights.c1},
                                      {e_star, weights.c2},
                                      {e_star_prime, -weights.c2}});
}

double VarianceCache::var_a(const Exposure& e) {
  if (auto it = var_.find(e.index()); it != var_.end()) return it->second;
  const double v = knnim::var_a(data_, e);
  var_.emplace(e.index(), v);
  return v;
}

const CovBounds& VarianceCache::cov(const Exposure& e1, const Exposure& e2) {
  const auto key = std::make_pair(e1.index(), e2.index());
  if (auto it = cov_.find(key); it != cov_.end()) return it->second;
  return cov_.emplace(key, cov_bounds(data_, e1, e2)).first->second;
}

VarianceEstimate VarianceCache::conservative_variance(const Contrast& contrast) {
  return combine(
      contrast, [this](const Exposure& e) { return var_a(e); },
      [this](const Exposure& a, const Exposure& b) -> const CovBounds& { return cov(a, b); });
}

double population_variance(const InterferenceDesign& structure, const MatrixXd& outcomes,
                           const Exposure& e) {
  return population_covariance(structure, outcomes, e, e);
}

double population_covariance(const InterferenceDesign& structure, const MatrixXd& outcomes,
                             const Exposure& e1, const Exposure& e2) {
  const Index n = structure.size();
  if (outcomes.rows() != n || outcomes.cols() != Exposure::count(structure.k())) {
    throw InputError("potential-outcome table has the wrong shape");
  }
  const int c1 = e1.index(), c2 = e2.index();
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double pi_i = structure.marginal(i, e1);
    if (pi_i <= 0.0) throw DesignError("exposure " + e1.to_string() + " has zero probability");
    const double zi = outcomes(i, c1) / pi_i;
    if (e1 == e2) {
      sum += pi_i * (1.0 - pi_i) * zi * zi;
    } else {
      sum -= outcomes(i, c1) * outcomes(i, c2);
    }
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double pi_j = structure.marginal(j, e2);
      if (pi_j <= 0.0) throw DesignError("exposure " + e2.to_string() + " has zero probability");
      const double pij = structure.joint(i, e1, j, e2);
      sum += (pij - pi_i * pi_j) * zi * (outcomes(j, c2) / pi_j);
    }
  }
  const double nn = static_cast<double>(n);
  return sum / (nn * nn);
}

double population_contrast_variance(const InterferenceDesign& structure, const MatrixXd& outcomes,
                                    const Contrast& contrast) {
  const Contrast c = simplify(contrast);
  double total = 0.0;
  for (std::size_t a = 0; a < c.size(); ++a) {
    total += c[a].coef * c[a].coef * population_variance(structure, outcomes, c[a].exposure);
    for (std::size_t b = a + 1; b < c.size(); ++b) {
      total += 2.0 * c[a].coef * c[b].coef *
               population_covariance(structure, outcomes, c[a].exposure, c[b].exposure);
    }
  }
  return total;
}

}  // namespace knnim
