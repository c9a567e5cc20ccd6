#include "knnim/contrast.hpp"

#include <cmath>

namespace knnim {

std::string Effect::name() const {
  switch (kind) {
    case EffectKind::total:
      return "total";
    case EffectKind::direct:
      return "direct";
    case EffectKind::indirect:
      return "indirect";
    case EffectKind::nearest:
      return "nn" + std::to_string(ell);
  }
  return "?";
}

Effect Effect::parse(const std::string& name) {
  if (name == "total") return total();
  if (name == "direct") return direct();
  if (name == "indirect") return indirect();
  if (name.size() > 2 && name.rfind("nn", 0) == 0) {
    try {
      std::size_t used = 0;
      const int ell = std::stoi(name.substr(2), &used);
      if (used == name.size() - 2 && ell >= 1) return nearest(ell);
    } catch (const std::exception&) {
    }
  }
  throw InputError("unknown effect '" + name + "'");
}

std::string to_string(Assumption a) { return a == Assumption::a1 ? "A1" : "A2"; }

Assumption parse_assumption(const std::string& s) {
  if (s == "A1" || s == "a1") return Assumption::a1;
  if (s == "A2" || s == "a2") return Assumption::a2;
  throw InputError("unknown assumption '" + s + "'");
}

Weights::Weights(double c1_, double c2_) : c1(c1_), c2(c2_) {
  if (!std::isfinite(c1) || !std::isfinite(c2) || std::abs(c1 + c2 - 1.0) > 1e-12) {
    throw InputError("pooling weights must be finite and sum to 1");
  }
}

Contrast simplify(const Contrast& c) {
  Contrast out;
  for (const auto& term : c) {
    bool merged = false;
    for (auto& existing : out) {
      if (existing.exposure == term.exposure) {
        existing.coef += term.coef;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(term);
  }
  std::erase_if(out, [](const ContrastTerm& t) { return t.coef == 0.0; });
  return out;
}

Contrast contrast_for(const Effect& effect, Assumption assumption, int k, const Weights& w) {
  if (effect.kind == EffectKind::nearest && (effect.ell < 1 || effect.ell > k)) {
    throw InputError("nearest-neighbor effect rank must lie in [1, K]");
  }
  const auto ones = [k](bool own) { return Exposure::all_treated(own, k); };
  const auto zeros = [k](bool own) { return Exposure::all_control(own, k); };
  const auto star = [k](bool own, int ell) { return Exposure::first_treated(own, ell, k); };

  switch (effect.kind) {
    case EffectKind::total:
      return {{ones(true), 1.0}, {zeros(false), -1.0}};
    case EffectKind::direct:
      if (assumption == Assumption::a1) return {{ones(true), 1.0}, {ones(false), -1.0}};
      return {{ones(true), w.c1}, {ones(false), -w.c1}, {zeros(true), w.c2}, {zeros(false), -w.c2}};
    case EffectKind::indirect:
      if (assumption == Assumption::a1) return {{ones(false), 1.0}, {zeros(false), -1.0}};
      return {{ones(true), w.c1}, {zeros(true), -w.c1}, {ones(false), w.c2}, {zeros(false), -w.c2}};
    case EffectKind::nearest: {
      const int l = effect.ell;
      if (assumption == Assumption::a1) return {{star(false, l), 1.0}, {star(false, l - 1), -1.0}};
      return {{star(true, l), w.c1},
              {star(true, l - 1), -w.c1},
              {star(false, l), w.c2},
              {star(false, l - 1), -w.c2}};
    }
  }
  throw InputError("unknown effect");
}

std::vector<Exposure> canonical_exposures(int k) {
  std::vector<Exposure> out;
  for (int own = 1; own >= 0; --own) {
    for (int l = k; l >= 0; --l) out.push_back(Exposure::first_treated(own == 1, l, k));
  }
  return out;
}

}  // namespace knnim
