#include "helpers.hpp"
#include "knnim/oracle.hpp"
#include "knnim/variance.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace knnim;
using namespace knnim::oracle;

namespace {

std::vector<double> probabilities(const Design& d) {
  std::vector<double> out;
  enumerate_assignments(d, [&](const Assignment&, double p) { out.push_back(p); });
  return out;
}

}  // namespace

TEST(Enumerate, CrdFourChooseTwo) {
  const auto p = probabilities(Design::completely_randomized(4, 2));
  ASSERT_EQ(p.size(), 6u);
  for (double x : p) EXPECT_DOUBLE_EQ(x, 1.0 / 6);
}

TEST(Enumerate, FairBernoulli) {
  const auto p = probabilities(Design::bernoulli(3, 0.5));
  ASSERT_EQ(p.size(), 8u);
  for (double x : p) EXPECT_DOUBLE_EQ(x, 0.125);
}

TEST(Enumerate, BiasedBernoulli) {
  std::vector<std::pair<std::vector<std::uint8_t>, double>> seen;
  enumerate_assignments(Design::bernoulli(2, 0.3),
                        [&](const Assignment& w, double p) { seen.emplace_back(w.bits(), p); });
  ASSERT_EQ(seen.size(), 4u);
  double total = 0.0;
  for (const auto& [bits, p] : seen) {
    const int t = bits[0] + bits[1];
    EXPECT_NEAR(p, t == 0 ? 0.49 : t == 1 ? 0.21 : 0.09, 1e-15);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST(Enumerate, GuardStopsLargeInstances) {
  EXPECT_THROW(enumerate_assignments(Design::completely_randomized(30, 15), [](const Assignment&, double) {}),
               GuardError);
  EXPECT_THROW(enumerate_assignments(Design::bernoulli(25, 0.5), [](const Assignment&, double) {}), GuardError);
  EXPECT_THROW(enumerate_assignments(Design::bernoulli(6, 0.5), [](const Assignment&, double) {}, 10), GuardError);
}

TEST(ExactProbabilities, AgreeWithClosedForms) {
  std::mt19937_64 rng(17);
  const auto nbr = build_k_neighborhoods(random_distances(8, rng), 2);
  const auto d = Design::completely_randomized(8, 4);
  const ProbabilityTables tables(d, nbr);
  for (Index i = 0; i < 8; ++i) {
    double sum = 0.0;
    for (int a = 0; a < 8; ++a) {
      const auto e = Exposure::from_index(a, 2);
      EXPECT_NEAR(tables.marginal(i, e), marginal_probability(d, nbr, i, e), 1e-12);
      sum += tables.marginal(i, e);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_NEAR(exact_exposure_probability(d, nbr, 3, Exposure(true, 2, 2)),
              marginal_probability(d, nbr, 3, Exposure(true, 2, 2)), 1e-12);
  const int j = nbr.neighbors(0)[0];
  EXPECT_EQ(exact_joint(d, nbr, 0, Exposure::all_treated(true, 2), j, Exposure::all_control(false, 2)), 0.0);
}

TEST(ExactMoments, ConstantTableGivesZeroMeans) {
  std::mt19937_64 rng(2);
  const auto nbr = build_k_neighborhoods(random_distances(8, rng), 2);
  const auto pot = PotentialOutcomeTable::constant(8, 2, 3.5);
  for (const auto& spec : standard_specs(2)) {
    EXPECT_NEAR(exact_estimator_moments(Design::completely_randomized(8, 4), nbr, pot, spec).mean, 0.0, 1e-12);
  }
}

TEST(ExactMoments, AdditiveTableRecoversEffects) {
  std::mt19937_64 rng(3);
  const auto nbr = build_k_neighborhoods(random_distances(8, rng), 2);
  VectorXd base(8);
  for (Index i = 0; i < 8; ++i) base(i) = static_cast<double>(i) - 2.0;
  const auto pot = PotentialOutcomeTable::additive(base, 1.5, {2.0, 0.75});
  const auto d = Design::bernoulli(8, 0.5);
  const EstimatorSpec indirect{Effect::indirect(), Assumption::a1, {}};
  EXPECT_NEAR(exact_estimator_moments(d, nbr, pot, indirect).mean, 2.75, 1e-10);
  const EstimatorSpec nn2{Effect::nearest(2), Assumption::a2, {}};
  EXPECT_NEAR(exact_estimator_moments(d, nbr, pot, nn2).mean, 0.75, 1e-10);
}

TEST(ExactMoments, ClosedFormVarianceMatches) {
  std::mt19937_64 rng(4);
  const auto nbr = build_k_neighborhoods(random_distances(8, rng), 1);
  const auto pot = PotentialOutcomeTable::random_no_weak_interaction(8, 1, rng);
  const auto d = Design::completely_randomized(8, 4);
  const InterferenceDesign structure(nbr, d);
  for (const auto& spec : standard_specs(1)) {
    const auto m = exact_estimator_moments(d, nbr, pot, spec);
    EXPECT_NEAR(population_contrast_variance(structure, pot.table(), spec.contrast(1)), m.variance, 1e-10)
        << spec.name();
  }
}

TEST(Conservative, ZeroTableHasNoSlack) {
  std::mt19937_64 rng(5);
  const auto nbr = build_k_neighborhoods(random_distances(8, rng), 1);
  const auto pot = PotentialOutcomeTable::constant(8, 1, 0.0);
  const auto r = verify_conservative(Design::completely_randomized(8, 4), nbr, pot,
                                     {Effect::direct(), Assumption::a1, {}});
  EXPECT_EQ(r.slack, 0.0);
}

TEST(Conservative, RandomTablesBothDesigns) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 3; ++rep) {
    const auto nbr = build_k_neighborhoods(random_distances(8, rng), 1);
    const auto pot = PotentialOutcomeTable::random_no_weak_interaction(8, 1, rng);
    for (const auto& d : {Design::completely_randomized(8, 4), Design::bernoulli(8, 0.5)}) {
      for (const auto& spec : standard_specs(1)) {
        EXPECT_GE(verify_conservative(d, nbr, pot, spec).slack, -1e-10) << spec.name();
      }
    }
  }
}

TEST(Conservative, CovarianceBoundsBracketTruth) {
  std::mt19937_64 rng(7);
  const auto nbr = build_k_neighborhoods(random_distances(8, rng), 1);
  const auto pot = PotentialOutcomeTable::random_no_weak_interaction(8, 1, rng);
  for (const auto& d : {Design::completely_randomized(8, 4), Design::bernoulli(8, 0.5)}) {
    auto structure = std::make_shared<const InterferenceDesign>(nbr, d);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        if (a == b) continue;
        const auto ea = Exposure::from_index(a, 1), eb = Exposure::from_index(b, 1);
        double lower = 0.0, upper = 0.0;
        enumerate_assignments(d, [&](const Assignment& w, double p) {
          const ExperimentData data(structure, w, pot.observe(nbr, w));
          const auto c = cov_bounds(data, ea, eb);
          lower += p * c.lower;
          upper += p * c.upper;
        });
        const double truth = population_covariance(*structure, pot.table(), ea, eb);
        EXPECT_LE(lower, truth + 1e-10);
        EXPECT_GE(upper, truth - 1e-10);
      }
    }
  }
}

TEST(RandomTables, DirectEffectMeanDoesNotDependOnNeighbors) {
  std::mt19937_64 rng(8);
  const auto pot = PotentialOutcomeTable::random_no_weak_interaction(9, 2, rng);
  const double first = pot.mean(Exposure(true, 0, 2)) - pot.mean(Exposure(false, 0, 2));
  for (std::uint32_t p = 1; p < 4; ++p) {
    EXPECT_NEAR(pot.mean(Exposure(true, p, 2)) - pot.mean(Exposure(false, p, 2)), first, 1e-12);
  }
}

TEST(Battery, SmallRunPassesAndIsReproducible) {
  BatteryOptions opt;
  opt.probability_instances = 6;
  opt.outcome_tables = 2;
  opt.max_n = 8;
  const auto a = run_battery(opt);
  const auto b = run_battery(opt);
  EXPECT_TRUE(a.passed());
  ASSERT_EQ(a.checks.size(), b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    EXPECT_EQ(a.checks[i].worst, b.checks[i].worst);
    EXPECT_EQ(a.checks[i].detail, b.checks[i].detail);
  }
}

TEST(Battery, SeedsDiffer) {
  EXPECT_NE(instance_seed(1, 0), instance_seed(1, 1));
  EXPECT_NE(instance_seed(1, 0), instance_seed(2, 0));
}
