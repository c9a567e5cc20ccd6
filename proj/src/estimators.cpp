#include "knnim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace knnim {

double ht_mean(const ExperimentData& data, const Exposure& e) {
  if (e.k() != data.k()) throw InputError("exposure K does not match the experiment");
  const VectorXd& y = data.responses();
  double sum = 0.0;
  for (int i : data.units_with(e)) {
    const double pi = data.marginal(i, e);
    if (pi <= 0.0) {
      throw std::logic_error("unit " + std::to_string(i) + " shows an exposure of probability 0");
    }
    sum += y(i) / pi;
  }
  return sum / static_cast<double>(data.size());
}

double ht_contrast(const ExperimentData& data, const Contrast& contrast) {
  double s = 0.0;
  for (const auto& t : contrast) s += t.coef * ht_mean(data, t.exposure);
  return s;
}

void require_positivity(const InterferenceDesign& structure, const Contrast& contrast) {
  std::vector<int> bad;
  std::string exposures;
  for (const auto& t : contrast) {
    bool any = false;
    for (Index i = 0; i < structure.size(); ++i) {
      if (structure.marginal(i, t.exposure) <= 0.0) {
        bad.push_back(static_cast<int>(i));
        any = true;
      }
    }
    if (any) exposures += (exposures.empty() ? "" : ", ") + t.exposure.to_string();
  }
  if (bad.empty()) return;
  std::sort(bad.begin(), bad.end());
  bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
  std::string msg = "exposure(s) " + exposures + " impossible under " +
                    structure.design().to_string() + " for units";
  for (std::size_t a = 0; a < bad.size() && a < 20; ++a) msg += " " + std::to_string(bad[a]);
  if (bad.size() > 20) msg += " ... (" + std::to_string(bad.size()) + " units)";
  throw PositivityError(msg, std::move(bad));
}

namespace {

EffectEstimate evaluate(const ExperimentData& data, VarianceCache& cache, const Effect& effect,
                        Assumption assumption, const Weights& weights) {
  const Contrast c = contrast_for(effect, assumption, data.k(), weights);
  require_positivity(data.structure(), c);
  EffectEstimate out;
  out.effect = effect;
  out.assumption = effect.kind == EffectKind::total ? Assumption::a1 : assumption;
  out.estimate = ht_contrast(data, c);
  const VarianceEstimate v = cache.conservative_variance(c);
  out.variance = v.value;
  out.variance_floored = v.floored;
  out.se = std::sqrt(out.variance);
  return out;
}

}  // namespace

EffectEstimate estimate_a1(const ExperimentData& data, const Effect& effect) {
  VarianceCache cache(data);
  return evaluate(data, cache, effect, Assumption::a1, {});
}

EffectEstimate estimate_a2(const ExperimentData& data, const Effect& effect, const Weights& weights) {
  if (effect.kind == EffectKind::total) return estimate_a1(data, effect);
  VarianceCache cache(data);
  return evaluate(data, cache, effect, Assumption::a2, weights);
}

std::vector<std::pair<Effect, Assumption>> standard_rows(int k) {
  std::vector<std::pair<Effect, Assumption>> rows = {
      {Effect::total(), Assumption::a1},    {Effect::direct(), Assumption::a1},
      {Effect::direct(), Assumption::a2},   {Effect::indirect(), Assumption::a1},
      {Effect::indirect(), Assumption::a2},
  };
  for (int l = 1; l <= k; ++l) {
    rows.emplace_back(Effect::nearest(l), Assumption::a1);
    rows.emplace_back(Effect::nearest(l), Assumption::a2);
  }
  return rows;
}

std::vector<EffectEstimate> estimate_all(const ExperimentData& data, const Weights& weights) {
  VarianceCache cache(data);
  std::vector<EffectEstimate> out;
  for (const auto& [effect, assumption] : standard_rows(data.k())) {
    out.push_back(evaluate(data, cache, effect, assumption, weights));
  }
  return out;
}

double decomposition_residual(const std::vector<EffectEstimate>& rows, int k, const Weights& weights) {
  if (!weights.is_default()) {
    throw std::logic_error("decomposition identities hold only for c1 = c2 = 1/2");
  }
  auto find = [&](const Effect& e, Assumption a) {
    for (const auto& r : rows) {
      if (r.effect == e && (r.assumption == a || e.kind == EffectKind::total)) return r.estimate;
    }
    throw InputError("row " + e.name() + " " + to_string(a) + " missing");
  };
  const double total = find(Effect::total(), Assumption::a1);
  double worst = 0.0;
  for (Assumption a : {Assumption::a1, Assumption::a2}) {
    const double ind = find(Effect::indirect(), a);
    worst = std::max(worst, std::abs(total - find(Effect::direct(), a) - ind));
    double nn = 0.0;
    for (int l = 1; l <= k; ++l) nn += find(Effect::nearest(l), a);
    worst = std::max(worst, std::abs(ind - nn));
  }
  return worst;
}

std::vector<LowCountWarning> low_count_exposures(const ExperimentData& data, long threshold) {
  std::vector<LowCountWarning> out;
  for (const Exposure& e : canonical_exposures(data.k())) {
    const long c = static_cast<long>(data.units_with(e).size());
    if (c < threshold) out.push_back({e, c});
  }
  return out;
}

}  // namespace knnim
