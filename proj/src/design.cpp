#include "knnim/design.hpp"

#include <cmath>
#include <sstream>

namespace knnim {

Design Design::completely_randomized(int n, int treated) {
  if (n < 2) throw InputError("design population must be at least 2");
  if (treated <= 0 || treated >= n) {
    throw DesignError("completely randomized design needs 0 < N_t < N");
  }
  return Design(n, CompletelyRandomized{treated});
}

Design Design::bernoulli(int n, double p) {
  if (n < 2) throw InputError("design population must be at least 2");
  if (!(p > 0.0 && p < 1.0)) throw DesignError("Bernoulli design needs 0 < p < 1");
  return Design(n, BernoulliTrials{p});
}

double Design::pattern_probability(int set_size, int treated) const {
  const int control = set_size - treated;
  if (treated < 0 || control < 0 || set_size > n_) return 0.0;
  if (const auto* crd = std::get_if<CompletelyRandomized>(&scheme_)) {
    const int nt = crd->treated;
    const int nc = n_ - nt;
    if (treated > nt || control > nc) return 0.0;
    double prob = 1.0;
    int step = 0;
    for (int a = 0; a < treated; ++a, ++step) {
      prob *= static_cast<double>(nt - a) / static_cast<double>(n_ - step);
    }
    for (int b = 0; b < control; ++b, ++step) {
      prob *= static_cast<double>(nc - b) / static_cast<double>(n_ - step);
    }
    return prob;
  }
  const double p = std::get<BernoulliTrials>(scheme_).p;
  return std::pow(p, treated) * std::pow(1.0 - p, control);
}

std::string Design::to_string() const {
  std::ostringstream os;
  if (is_crd()) {
    os << "crd(N=" << n_ << ", N_t=" << crd_treated() << ")";
  } else {
    os << "bernoulli(N=" << n_ << ", p=" << bernoulli_p() << ")";
  }
  return os.str();
}

namespace {

bool closed_bit(const Exposure& e, int position) {
  return position == 0 ? e.treated() : e.neighbor(position - 1);
}

void require_matching(const KNeighborhoods& nbr, Index i, const Exposure& e) {
  if (i < 0 || i >= nbr.size()) throw InputError("unit index out of range");
  if (e.k() != nbr.k()) throw InputError("exposure K does not match neighborhoods");
}

}  // namespace

PairOverlap check_compatibility(const KNeighborhoods& nbr, Index i, const Exposure& ei, Index j,
                                const Exposure& ej) {
  require_matching(nbr, i, ei);
  require_matching(nbr, j, ej);
  if (i == j) throw InputError("compatibility is defined for two distinct units");

  const int k = nbr.k();
  PairOverlap out;
  out.first_treated = ei.treated_count();
  out.first_control = k + 1 - out.first_treated;

  auto nj = nbr.neighbors(j);
  for (int pos = 0; pos <= k; ++pos) {
    const Index unit = pos == 0 ? j : nj[static_cast<std::size_t>(pos - 1)];
    const bool bit_j = closed_bit(ej, pos);
    const int in_i = nbr.closed_position(i, unit);
    if (in_i >= 0) {
      ++out.shared;
      if (closed_bit(ei, in_i) != bit_j) out.compatible = false;
    } else if (bit_j) {
      ++out.second_extra_treated;
    } else {
      ++out.second_extra_control;
    }
  }
  return out;
}

double marginal_probability(const Design& design, const KNeighborhoods& nbr, Index i,
                            const Exposure& e) {
  require_matching(nbr, i, e);
  if (design.population() != nbr.size()) {
    throw InputError("design population does not match the neighborhoods");
  }
  return design.pattern_probability(nbr.k() + 1, e.treated_count());
}

double joint_probability(const Design& design, const KNeighborhoods& nbr, Index i,
                         const Exposure& ei, Index j, const Exposure& ej) {
  if (design.population() != nbr.size()) {
    throw InputError("design population does not match the neighborhoods");
  }
  const PairOverlap o = check_compatibility(nbr, i, ei, j, ej);
  if (!o.compatible) return 0.0;
  const int union_size = nbr.k() + 1 + o.second_extra_treated + o.second_extra_control;
  return design.pattern_probability(union_size, o.first_treated + o.second_extra_treated);
}

std::vector<double> all_marginals(const Design& design, const KNeighborhoods& nbr, Index i) {
  const int k = nbr.k();
  std::vector<double> out(static_cast<std::size_t>(Exposure::count(k)));
  for (int code = 0; code < Exposure::count(k); ++code) {
    out[static_cast<std::size_t>(code)] =
        marginal_probability(design, nbr, i, Exposure::from_index(code, k));
  }
  return out;
}

double binomial(long n, long k) {
  if (n < 0 || k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (long a = 1; a <= k; ++a) {
    r = r * static_cast<double>(n - k + a) / static_cast<double>(a);
  }
  return r;
}

}  // namespace knnim
