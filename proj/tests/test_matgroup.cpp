#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "affsieve/matgroup.hpp"

using namespace affsieve;

namespace {

GeneratorSet free_pair() { return GeneratorSet({MatrixQ{{1, 2}, {0, 1}}, MatrixQ{{1, 0}, {2, 1}}}, true); }

MatrixQ random_matrix(std::mt19937_64& rng, std::size_t n) {
  MatrixQ m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = make_rational(Integer(static_cast<long>(rng() % 11) - 5), Integer(static_cast<long>(rng() % 4) + 1));
  return m;
}

}  // namespace

TEST(Matrix, ParseAndPrint) {
  auto m = parse_matrix("[[1, 2/4],[0,-3]]");
  EXPECT_EQ(m.to_string(), "[[1,1/2],[0,-3]]");
  EXPECT_THROW(parse_matrix("[[1,2],[3]]"), InvalidInput);
  EXPECT_EQ(m.det(), -3);
  EXPECT_EQ(m * m.inverse(), MatrixQ::identity(2));
}

TEST(AffineEmbed, Examples) {
  EXPECT_EQ(affine_embed(MatrixQ::identity(2), {0, 0}), MatrixQ::identity(3));
  EXPECT_EQ(affine_embed(MatrixQ::identity(2), {1, 2}), (MatrixQ{{1, 0, 1}, {0, 1, 2}, {0, 0, 1}}));
  EXPECT_THROW(affine_embed(MatrixQ::identity(2), {1}), InvalidInput);
}

TEST(AffineEmbed, CompositionMatchesMotions) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    MatrixQ A1 = random_matrix(rng, 2), A2 = random_matrix(rng, 2);
    if (A1.det() == 0 || A2.det() == 0) continue;
    VectorQ b1{Rational(static_cast<long>(rng() % 7)), Rational(1, 3)};
    VectorQ b2{Rational(-2), Rational(static_cast<long>(rng() % 5), 2)};
    VectorQ A1b2 = A1 * b2;
    VectorQ b{A1b2[0] + b1[0], A1b2[1] + b1[1]};
    EXPECT_EQ(affine_embed(A1, b1) * affine_embed(A2, b2), affine_embed(A1 * A2, b));
  }
}

TEST(Ball, Radius0AndCyclic) {
  auto b0 = ball(free_pair(), 0);
  EXPECT_EQ(b0.size(), 1u);
  EXPECT_TRUE(b0.elements[0].is_identity());
  GeneratorSet cyc({MatrixQ{{1, 1}, {0, 1}}}, true);
  auto b = ball(cyc, 5);
  EXPECT_EQ(b.size(), 11u);
  std::set<long> shifts;
  for (const auto& m : b.elements) shifts.insert(m(0, 1).get_num().get_si());
  EXPECT_EQ(*shifts.begin(), -5);
  EXPECT_EQ(*shifts.rbegin(), 5);
}

TEST(Ball, FreePairSizes) {
  for (unsigned L = 0; L <= 6; ++L) {
    EXPECT_EQ(ball(free_pair(), L).size(), 2 * static_cast<std::size_t>(std::pow(3, L)) - 1) << L;
  }
  EXPECT_EQ(ball(free_pair(), 3).size(), 53u);
}

TEST(Ball, NestingAndLengthMetric) {
  auto gens = free_pair();
  auto b3 = ball(gens, 3), b4 = ball(gens, 4);
  for (std::size_t i = 0; i < b3.size(); ++i) EXPECT_EQ(b4.length_of(b3.elements[i]), b3.lengths[i]);
  // l(g^-1) = l(g) and l(gh) <= l(g) + l(h) on the radius-2 ball.
  auto b2 = ball(gens, 2);
  for (std::size_t i = 0; i < b2.size(); ++i) {
    EXPECT_EQ(b4.length_of(b2.elements[i].inverse()), b2.lengths[i]);
    for (std::size_t j = 0; j < b2.size(); ++j) {
      auto l = b4.length_of(b2.elements[i] * b2.elements[j]);
      ASSERT_TRUE(l.has_value());
      EXPECT_LE(*l, b2.lengths[i] + b2.lengths[j]);
    }
  }
}

TEST(Ball, Deterministic) {
  auto a = ball(free_pair(), 5), b = ball(free_pair(), 5, {5'000'000, 4});
  EXPECT_EQ(a.elements, b.elements);
  EXPECT_EQ(a.lengths, b.lengths);
}

TEST(Ball, CapReportsRadius) {
  try {
    ball(free_pair(), 10, {200, 1});
    FAIL();
  } catch (const ResourceExhausted& e) {
    // 161 elements fit at radius 4; radius 5 would hold 485.
    EXPECT_EQ(e.reached(), 4);
  }
}

TEST(Ball, FiniteGroupTerminates) {
  GeneratorSet rot({MatrixQ{{0, -1}, {1, 0}}}, true);
  auto b = ball(rot, 10);
  EXPECT_EQ(b.size(), 4u);
}

TEST(Orbit, Examples) {
  GeneratorSet fixing({MatrixQ{{1, 2}, {0, 1}}}, true);
  auto o = orbit(fixing, {1, 0}, 4);
  EXPECT_EQ(o.points.size(), 1u);

  GeneratorSet shift({affine_embed(MatrixQ::identity(1), {1})}, true);
  auto s = orbit(shift, {0}, 4);
  EXPECT_EQ(s.points.size(), 9u);

  auto gens = free_pair();
  auto free_orbit = orbit(gens, {1, 0}, 3);
  auto b = ball(gens, 3);
  std::map<VectorQ, unsigned, decltype(&vector_less)> direct(vector_less);
  for (std::size_t i = 0; i < b.size(); ++i) {
    VectorQ w = b.elements[i] * VectorQ{1, 0};
    auto it = direct.find(w);
    if (it == direct.end() || it->second > b.lengths[i]) direct[w] = b.lengths[i];
  }
  ASSERT_EQ(free_orbit.points.size(), direct.size());
  for (std::size_t i = 0; i < free_orbit.points.size(); ++i) {
    EXPECT_EQ(direct.at(free_orbit.points[i]), free_orbit.lengths[i]);
  }
  EXPECT_THROW(orbit(gens, {1, 0, 0, 0}, 1), InvalidInput);
}

TEST(SNorm, Examples) {
  EXPECT_EQ(s_norm(MatrixQ::identity(2), {}), 2);
  EXPECT_EQ(s_norm(MatrixQ{{1, 2}, {0, 1}}, PrimeSet{2}), 4);
  EXPECT_EQ(s_norm(MatrixQ{{8, 0}, {0, Rational(1, 8)}}, PrimeSet{2}), 16);
  EXPECT_EQ(s_norm(MatrixQ{{1, 0}, {0, Rational(1, 64)}}, PrimeSet{2}), 64);
}

TEST(SNorm, Submultiplicative) {
  auto b = ball(free_pair(), 2);
  PrimeSet S{2, 3};
  for (const auto& x : b.elements)
    for (const auto& y : b.elements) EXPECT_LE(s_norm(x * y, S), 2 * s_norm(x, S) * s_norm(y, S));
}

TEST(DerivedGenerators, Examples) {
  auto gens = free_pair();
  EXPECT_EQ(derived_generators(gens, 0).generators(), gens.generators());
  GeneratorSet diag({MatrixQ{{2, 0}, {0, Rational(1, 2)}}, MatrixQ{{3, 0}, {0, Rational(1, 3)}}}, true);
  EXPECT_TRUE(derived_generators(diag, 1).empty());
  MatrixQ x{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}}, y{{1, 0, 0}, {0, 1, 1}, {0, 0, 1}};
  auto d = derived_generators(GeneratorSet({x, y}, false), 1);
  MatrixQ z = x.inverse() * y.inverse() * x * y;
  EXPECT_EQ(z, (MatrixQ{{1, 0, 1}, {0, 1, 0}, {0, 0, 1}}));
  EXPECT_NE(std::find(d.generators().begin(), d.generators().end(), z), d.generators().end());
}
