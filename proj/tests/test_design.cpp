#include "helpers.hpp"
#include "knnim/design.hpp"
#include "knnim/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace knnim;
using knnim::testing::line;
using knnim::testing::pairs;

TEST(Design, Invariants) {
  EXPECT_THROW(Design::completely_randomized(4, 0), DesignError);
  EXPECT_THROW(Design::completely_randomized(4, 4), DesignError);
  EXPECT_THROW(Design::bernoulli(4, 0.0), DesignError);
  EXPECT_THROW(Design::bernoulli(4, 1.0), DesignError);
  EXPECT_NO_THROW(Design::bernoulli(4, 0.3));
}

TEST(Binomial, OutOfRangeIsZero) {
  EXPECT_EQ(binomial(5, -1), 0.0);
  EXPECT_EQ(binomial(5, 6), 0.0);
  EXPECT_EQ(binomial(-1, 0), 0.0);
  EXPECT_DOUBLE_EQ(binomial(6, 3), 20.0);
  EXPECT_DOUBLE_EQ(binomial(4, 0), 1.0);
}

TEST(Compatibility, NearestNeighborConflict) {
  const auto nbr = build_k_neighborhoods(line(5), 2);
  const int j = nbr.neighbors(2)[0];
  const auto o = check_compatibility(nbr, 2, Exposure::all_treated(true, 2), j, Exposure::all_control(false, 2));
  EXPECT_FALSE(o.compatible);
}

TEST(Compatibility, DisjointAlwaysCompatible) {
  const auto nbr = build_k_neighborhoods(pairs(6), 1);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const auto o = check_compatibility(nbr, 0, Exposure::from_index(a, 1), 2, Exposure::from_index(b, 1));
      EXPECT_TRUE(o.compatible);
      EXPECT_EQ(o.shared, 0);
    }
  }
}

TEST(Compatibility, SharedNeighborCounts) {
  // 0 -> [1] and 2 -> [1]; closed neighborhoods share unit 1.
  const auto nbr = build_k_neighborhoods(line(4), 1);
  ASSERT_EQ(nbr.neighbors(0)[0], 1);
  ASSERT_EQ(nbr.neighbors(2)[0], 1);
  const auto o = check_compatibility(nbr, 0, Exposure(true, 1, 1), 2, Exposure(false, 1, 1));
  EXPECT_TRUE(o.compatible);
  EXPECT_EQ(o.shared, 1);
  EXPECT_EQ(o.first_treated, 2);
  EXPECT_EQ(o.first_control, 0);
  EXPECT_EQ(o.second_extra_treated, 0);
  EXPECT_EQ(o.second_extra_control, 1);
  EXPECT_EQ(o.first_treated + o.first_control, 2);
  EXPECT_EQ(o.second_extra_treated + o.second_extra_control, 2 - o.shared);
}

TEST(Compatibility, MutualNeighborsCheckOwnBits) {
  // 0 -> [1] and 1 -> [0].
  const auto nbr = build_k_neighborhoods(line(4), 1);
  EXPECT_TRUE(check_compatibility(nbr, 0, Exposure(true, 0, 1), 1, Exposure(false, 1, 1)).compatible);
  EXPECT_FALSE(check_compatibility(nbr, 0, Exposure(true, 0, 1), 1, Exposure(true, 1, 1)).compatible);
  EXPECT_FALSE(check_compatibility(nbr, 0, Exposure(true, 0, 1), 1, Exposure(false, 0, 1)).compatible);
}

TEST(Compatibility, SameUnitRejected) {
  const auto nbr = build_k_neighborhoods(line(4), 1);
  EXPECT_THROW(check_compatibility(nbr, 1, Exposure(true, 0, 1), 1, Exposure(true, 0, 1)), InputError);
  EXPECT_THROW(joint_probability(Design::bernoulli(4, 0.5), nbr, 1, Exposure(true, 0, 1), 1,
                                 Exposure(true, 0, 1)),
               InputError);
}

TEST(Marginal, CrdFourUnits) {
  const auto nbr = build_k_neighborhoods(line(4), 1);
  const auto d = Design::completely_randomized(4, 2);
  EXPECT_NEAR(marginal_probability(d, nbr, 0, Exposure(true, 1, 1)), 1.0 / 6, 1e-15);
  EXPECT_NEAR(marginal_probability(d, nbr, 0, Exposure(true, 0, 1)), 1.0 / 3, 1e-15);
  EXPECT_NEAR(marginal_probability(d, nbr, 0, Exposure(false, 1, 1)), 1.0 / 3, 1e-15);
  EXPECT_NEAR(marginal_probability(d, nbr, 0, Exposure(false, 0, 1)), 1.0 / 6, 1e-15);
}

TEST(Marginal, BernoulliFairCoins) {
  const auto nbr = build_k_neighborhoods(line(5), 2);
  EXPECT_DOUBLE_EQ(marginal_probability(Design::bernoulli(5, 0.5), nbr, 2, Exposure(true, 0b10, 2)), 0.125);
  for (double p : all_marginals(Design::bernoulli(5, 0.5), build_k_neighborhoods(line(5), 1), 0)) {
    EXPECT_DOUBLE_EQ(p, 0.25);
  }
}

TEST(Marginal, ImpossibleExposureIsZero) {
  const auto nbr = build_k_neighborhoods(line(10), 1);
  EXPECT_EQ(marginal_probability(Design::completely_randomized(10, 1), nbr, 3, Exposure(true, 1, 1)), 0.0);
}

TEST(Marginal, PopulationMismatch) {
  const auto nbr = build_k_neighborhoods(line(4), 1);
  EXPECT_THROW(marginal_probability(Design::bernoulli(5, 0.5), nbr, 0, Exposure(true, 1, 1)), InputError);
}

TEST(Marginal, LargePopulationAccuracy) {
  const int n = 2000, nt = 861, k = 3;
  const auto nbr = build_k_neighborhoods(line(n), k);
  const auto d = Design::completely_randomized(n, nt);
  for (int t = 0; t <= k + 1; ++t) {
    const std::uint32_t pattern = (1u << (t > 0 ? t - 1 : 0)) - 1u;
    const Exposure e(t > 0, pattern, k);
    const int s = e.treated_count();
    // C(N - 4, N_t - s) / C(N, N_t) through log-gamma.
    const double ref = std::exp(std::lgamma(n - 3.0) - std::lgamma(nt - s + 1.0) - std::lgamma(n - 4.0 - nt + s + 1.0) -
                                std::lgamma(n + 1.0) + std::lgamma(nt + 1.0) + std::lgamma(n - nt + 1.0));
    EXPECT_NEAR(marginal_probability(d, nbr, 50, e) / ref, 1.0, 1e-9);
  }
}

TEST(Joint, CrdDisjointPairs) {
  const auto nbr = build_k_neighborhoods(pairs(6), 1);
  const auto d = Design::completely_randomized(6, 3);
  EXPECT_NEAR(joint_probability(d, nbr, 0, Exposure(true, 1, 1), 2, Exposure(false, 0, 1)), 0.1, 1e-15);
}

TEST(Joint, IncompatibleIsZero) {
  const auto nbr = build_k_neighborhoods(line(5), 2);
  const int j = nbr.neighbors(0)[0];
  for (const auto& d : {Design::completely_randomized(5, 2), Design::bernoulli(5, 0.4)}) {
    EXPECT_EQ(joint_probability(d, nbr, 0, Exposure::all_treated(true, 2), j, Exposure::all_control(false, 2)),
              0.0);
  }
}

TEST(Joint, BernoulliDisjointFactorizes) {
  const auto nbr = build_k_neighborhoods(pairs(8), 1);
  const auto d = Design::bernoulli(8, 0.3);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const auto ea = Exposure::from_index(a, 1), eb = Exposure::from_index(b, 1);
      EXPECT_NEAR(joint_probability(d, nbr, 0, ea, 4, eb),
                  marginal_probability(d, nbr, 0, ea) * marginal_probability(d, nbr, 4, eb), 1e-15);
    }
  }
}

TEST(Joint, SymmetricBoundedAndNormalized) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 9, k = 1 + rep % 3;
    const auto nbr = build_k_neighborhoods(oracle::random_distances(n, rng), k);
    for (const auto& d : {Design::completely_randomized(n, 4), Design::bernoulli(n, 0.35)}) {
      for (Index i = 0; i < n; ++i) {
        double total = 0.0;
        for (double p : all_marginals(d, nbr, i)) total += p;
        EXPECT_NEAR(total, 1.0, 1e-12);
        for (Index j = 0; j < n; ++j) {
          if (i == j) continue;
          double joint_total = 0.0;
          for (int a = 0; a < Exposure::count(k); ++a) {
            for (int b = 0; b < Exposure::count(k); ++b) {
              const auto ea = Exposure::from_index(a, k), eb = Exposure::from_index(b, k);
              const double p = joint_probability(d, nbr, i, ea, j, eb);
              joint_total += p;
              EXPECT_NEAR(p, joint_probability(d, nbr, j, eb, i, ea), 1e-15);
              EXPECT_LE(p, std::min(marginal_probability(d, nbr, i, ea), marginal_probability(d, nbr, j, eb)) +
                               1e-12);
            }
          }
          EXPECT_NEAR(joint_total, 1.0, 1e-12);
        }
      }
    }
  }
}
