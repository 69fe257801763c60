#include <gtest/gtest.h>

#include "affsieve/heuristics.hpp"
#include "oracles.hpp"

using namespace affsieve;

namespace {

unsigned oracle_omega_odd(const Integer& n) {
  unsigned k = 0;
  for (const auto& [p, e] : oracle::factor(n))
    if (p != 2) ++k;
  return k;
}

}  // namespace

TEST(Heuristics, HilbertSchmidt) {
  EXPECT_EQ(hilbert_schmidt(MatrixQ::identity(2)), 2);
  EXPECT_EQ(hilbert_schmidt(MatrixQ{{2, 0}, {0, Rational(1, 2)}}), Rational(17, 4));
  EXPECT_EQ(hilbert_schmidt(MatrixQ{{1, 2}, {0, 1}}), 6);
  MatrixQ g{{3, 1}, {Rational(-2, 3), 5}};
  EXPECT_EQ(hilbert_schmidt(g), (g.transpose() * g).trace());
}

TEST(Heuristics, ShiftedProduct) {
  EXPECT_EQ(shifted_product(MatrixQ::identity(2), 2), 12);
  EXPECT_EQ(shifted_product(MatrixQ::identity(2), 0), 1);
  EXPECT_EQ(shifted_product(MatrixQ{{2, 0}, {0, Rational(1, 2)}}, 1), Rational(21, 4));
}

TEST(Heuristics, NormGrowthRankOne) {
  TorusSpec spec{{MatrixQ{{2, 0}, {0, Rational(1, 2)}}}, 10};
  auto g = norm_growth_check(spec);
  EXPECT_NEAR(g.A1_fit, 4.0, 0.05);
  EXPECT_NEAR(g.A2_fit, 4.0, 0.05);
  EXPECT_FALSE(g.degenerate);
  EXPECT_TRUE(g.envelope_verified);
  EXPECT_LE(g.K, 2);
  EXPECT_EQ(g.points, 21u);
}

TEST(Heuristics, NormGrowthRankTwo) {
  TorusSpec spec{{MatrixQ{{2, 0, 0}, {0, Rational(1, 2), 0}, {0, 0, 1}},
                  MatrixQ{{1, 0, 0}, {0, 3, 0}, {0, 0, Rational(1, 3)}}},
                 8};
  auto g = norm_growth_check(spec);
  EXPECT_FALSE(g.degenerate);
  EXPECT_GT(g.A2_fit, 1.0);
  EXPECT_GE(g.A1_fit, g.A2_fit);
  EXPECT_TRUE(g.envelope_verified);
  // Exhaustive check of the envelope by an independent loop.
  for (long a = -8; a <= 8; ++a)
    for (long b = -8 + std::labs(a); b <= 8 - std::labs(a); ++b) {
      Rational x = pow(Rational(2), std::labs(a)), y = pow(Rational(3), std::labs(b));
      if (a < 0) x = 1 / x;
      if (b < 0) y = 1 / y;
      Rational F = x * x + (y / x) * (y / x) + 1 / (y * y);
      unsigned k = static_cast<unsigned>(std::labs(a) + std::labs(b));
      EXPECT_LE(F, Rational(g.K) * pow(g.A1, k));
      EXPECT_LE(pow(g.A2, k), Rational(g.K) * F);
    }
}

TEST(Heuristics, NormGrowthDegenerateAndInvalid) {
  auto g = norm_growth_check(TorusSpec{{MatrixQ::identity(2)}, 5});
  EXPECT_TRUE(g.degenerate);
  EXPECT_FALSE(g.note.empty());
  EXPECT_THROW(norm_growth_check(TorusSpec{{MatrixQ::identity(2)}, 2}), InvalidInput);
  EXPECT_THROW(norm_growth_check(TorusSpec{{MatrixQ{{1, 1}, {0, 1}}, MatrixQ{{1, 0}, {1, 1}}}, 5}), InvalidInput);
  EXPECT_THROW(norm_growth_check(TorusSpec{{MatrixQ{{1, 1}, {1, 1}}}, 5}), InvalidInput);
}

TEST(Heuristics, PowersOfTwoTrend) {
  TorusSpec spec{{MatrixQ{{2}}}, 40};
  auto f = parse_poly("(x11 - 1)*(x11 - 2)", {"x11"});
  auto t = prime_factor_trend(spec, f, PrimeSet{2});
  ASSERT_EQ(t.rows.size(), 40u);
  EXPECT_EQ(*t.rows[4].omega_distinct, 3u);  // m = 5: 31 * 30
  EXPECT_EQ(*t.rows[1].omega_distinct, 1u);  // m = 2: 3 * 2
  EXPECT_TRUE(t.rows[0].zero);               // m = 1
  for (const auto& r : t.rows) {
    if (r.zero) continue;
    Integer v = r.value.get_num();
    EXPECT_EQ(*r.omega_distinct, oracle_omega_odd(v)) << "m=" << r.m[0];
  }
  ASSERT_FALSE(t.dyadic_minimum.empty());
  EXPECT_EQ(t.dyadic_minimum[0].first, 1u);
}

TEST(Heuristics, TrendWithAbsorbingS) {
  std::vector<std::pair<std::vector<long>, Rational>> values{{{1}, 6}, {{2}, 12}, {{3}, Rational(-18)}};
  auto t = prime_factor_trend(values, PrimeSet{2, 3});
  for (const auto& r : t.rows) {
    EXPECT_EQ(*r.omega_distinct, 0u);
    EXPECT_EQ(*r.omega_total, 0u);
  }
  FactorBudget tiny;
  tiny.trial_bound = 100;
  tiny.rho_iterations = 0;
  std::vector<std::pair<std::vector<long>, Rational>> hard{{{1}, Rational(Integer("1000000007") * Integer("1000000009"))}};
  auto h = prime_factor_trend(hard, {}, tiny);
  EXPECT_FALSE(h.rows[0].omega_distinct.has_value());
}

TEST(Heuristics, BorelCantelli) {
  auto bc = borel_cantelli_sum(1, 2, 1, {10, 100, 1000, 10000, 100000, 1000000});
  long double inc = bc.checkpoints[5].second - bc.checkpoints[4].second;
  EXPECT_LT(inc, 2e-5L);
  EXPECT_GT(inc, 1.7e-5L);
  EXPECT_TRUE(bc.increments_decreasing);
  EXPECT_TRUE(bc.bounded);
  // Direct sum: 1 + 2 sum_{k>=1} 1/(k+1)^2 = 1 + 2(pi^2/6 - 1).
  long double full = 1 + 2 * (M_PI * M_PI / 6 - 1);
  EXPECT_NEAR(static_cast<double>(bc.checkpoints[5].second), static_cast<double>(full), 3e-6);
  EXPECT_GE(bc.tail_bound, full);
  EXPECT_THROW(borel_cantelli_sum(2, 2, 1, {10}), InvalidInput);
  auto logs = borel_cantelli_sum(2, 4, 3, {10, 100, 1000, 10000});
  EXPECT_TRUE(logs.bounded);
  EXPECT_TRUE(logs.increments_decreasing);
}

TEST(Heuristics, ShellCountsMatchEnumeration) {
  for (unsigned t = 1; t <= 3; ++t)
    for (unsigned k = 0; k <= 6; ++k) {
      std::size_t n = 0;
      for (const auto& m : detail::exponent_box(t, k, false)) n += detail::l1(m) == k;
      EXPECT_EQ(static_cast<long double>(n), detail::shell_count(t, k));
    }
}
