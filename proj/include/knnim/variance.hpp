#pragma once

#include "knnim/contrast.hpp"
#include "knnim/experiment.hpp"

#include <map>
#include <utility>

namespace knnim {

// Conservative variance estimation for Horvitz-Thompson exposure means.
//
// Pairs of units whose exposures cannot co-occur have zero joint probability
// and are invisible to the plain HT variance/covariance estimators. The
// corrections below bound the missing cross terms with y_i y_j <= (y_i^2 +
// y_j^2) / 2, estimated unbiasedly by I_i Y_i^2 / (2 pi_i) + I_j Y_j^2 / (2 pi_j).
// All sums run over ordered pairs and are scaled by 1 / N^2.

/// HT estimate of Var(Ybar_HT(e)); pairs with zero joint probability are skipped.
double var_ht_hat(const ExperimentData& data, const Exposure& e);

/// Correction for the zero-joint pairs of a single exposure (i != j). Always >= 0.
double a_var_hat(const ExperimentData& data, const Exposure& e);

/// var_ht_hat + a_var_hat: upward-biased for Var(Ybar_HT(e)).
double var_a(const ExperimentData& data, const Exposure& e);

/// HT estimate of Cov(Ybar_HT(e1), Ybar_HT(e2)) for distinct exposures.
double cov_ht_hat(const ExperimentData& data, const Exposure& e1, const Exposure& e2);

struct CovBounds {
  double cov_ht = 0.0;
  double correction = 0.0;  // >= 0; includes the i == j pairs
  double lower = 0.0;       // cov_ht - correction, expectation <= Cov
  double upper = 0.0;       // cov_ht + correction, expectation >= Cov
};

CovBounds cov_bounds(const ExperimentData& data, const Exposure& e1, const Exposure& e2);

struct VarianceEstimate {
  double value = 0.0;  // floored at zero
  double raw = 0.0;    // before flooring
  bool floored = false;
};

/// Conservative variance of an arbitrary contrast. Each covariance enters
/// through the bound that makes its term larger in expectation: the upper
/// bound for positive coefficient products, the lower bound for negative.
VarianceEstimate conservative_variance(const ExperimentData& data, const Contrast& contrast);

/// Conservative variance of Ybar(e1) - Ybar(e2).
VarianceEstimate var_difference_hat(const ExperimentData& data, const Exposure& e1,
                                    const Exposure& e2);

/// Conservative variance of c1 (Ybar(e) - Ybar(e')) + c2 (Ybar(e*) - Ybar(e*')).
/// With c1 = c2 = 1/2 the covariance pairs (e,e*) and (e',e*') take the upper
/// bound and the other four take the lower bound.
VarianceEstimate var_halfsum_hat(const ExperimentData& data, const Exposure& e, const Exposure& e_prime,
                                 const Exposure& e_star, const Exposure& e_star_prime,
                                 const Weights& weights = {});

/// Memoizes per-exposure and per-pair pieces so that a batch of estimators
/// sharing exposures evaluates each sum once. Not thread-safe.
class VarianceCache {
 public:
  explicit VarianceCache(const ExperimentData& data) : data_(data) {}

  double var_a(const Exposure& e);
  const CovBounds& cov(const Exposure& e1, const Exposure& e2);
  VarianceEstimate conservative_variance(const Contrast& contrast);

 private:
  const ExperimentData& data_;
  std::map<int, double> var_;
  std::map<std::pair<int, int>, CovBounds> cov_;
};

// Design-based moments computed from the full potential-outcome table
// (rows = units, columns = Exposure::index()) and the exact marginal and
// joint probabilities.

double population_variance(const InterferenceDesign& structure, const MatrixXd& outcomes,
                           const Exposure& e);

double population_covariance(const InterferenceDesign& structure, const MatrixXd& outcomes,
                             const Exposure& e1, const Exposure& e2);

/// Var(sum_e c_e Ybar_HT(e)) as the quadratic form over the exposure
/// covariance matrix; the difference and pooled-difference variances are the
/// two- and four-term special cases.
double population_contrast_variance(const InterferenceDesign& structure, const MatrixXd& outcomes,
                                    const Contrast& contrast);

}  // namespace knnim
