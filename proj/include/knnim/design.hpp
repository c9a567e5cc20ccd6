#pragma once

#include "knnim/model.hpp"

#include <variant>
#include <vector>

namespace knnim {

/// Raised when a design cannot support the requested computation, e.g. an
/// exposure that no assignment can produce.
class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CompletelyRandomized {
  int treated;
};

struct BernoulliTrials {
  double p;
};

/// Randomization scheme over a population of fixed size.
class Design {
 public:
  static Design completely_randomized(int n, int treated);
  static Design bernoulli(int n, double p);

  int population() const { return n_; }
  bool is_crd() const { return std::holds_alternative<CompletelyRandomized>(scheme_); }
  int crd_treated() const { return std::get<CompletelyRandomized>(scheme_).treated; }
  double bernoulli_p() const { return std::get<BernoulliTrials>(scheme_).p; }
  const std::variant<CompletelyRandomized, BernoulliTrials>& scheme() const { return scheme_; }

  /// Probability that a fixed set of `set_size` distinct units receives one
  /// particular treatment pattern with `treated` of them treated.
  ///
  /// Under complete randomization this is C(N - s, N_t - t) / C(N, N_t),
  /// evaluated as falling factorials
  ///   (N_t)_t (N - N_t)_(s-t) / (N)_s
  /// so nothing overflows; infeasible patterns give exactly 0.
  double pattern_probability(int set_size, int treated) const;

  std::string to_string() const;

 private:
  Design(int n, std::variant<CompletelyRandomized, BernoulliTrials> s) : n_(n), scheme_(s) {}

  int n_;
  std::variant<CompletelyRandomized, BernoulliTrials> scheme_;
};

/// Overlay of two exposures on two closed neighborhoods.
struct PairOverlap {
  int shared = 0;          // units common to both closed neighborhoods
  bool compatible = true;  // both exposures agree on every shared unit
  int first_treated = 0;   // treated units in i's closed neighborhood
  int first_control = 0;
  int second_extra_treated = 0;  // treated units of j's closed neighborhood outside i's
  int second_extra_control = 0;
};

PairOverlap check_compatibility(const KNeighborhoods& nbr, Index i, const Exposure& ei, Index j,
                                const Exposure& ej);

double marginal_probability(const Design& design, const KNeighborhoods& nbr, Index i,
                            const Exposure& e);

double joint_probability(const Design& design, const KNeighborhoods& nbr, Index i,
                         const Exposure& ei, Index j, const Exposure& ej);

/// Marginals of every exposure for unit i, indexed by Exposure::index().
std::vector<double> all_marginals(const Design& design, const KNeighborhoods& nbr, Index i);

/// Binomial coefficient in floating point; 0 outside 0 <= k <= n.
double binomial(long n, long k);

}  // namespace knnim
