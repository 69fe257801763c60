#include <gtest/gtest.h>

#include <random>

#include "affsieve/polyalg.hpp"

using namespace affsieve;

namespace {

const std::vector<std::string> X1{"x"};

MultiPoly P(const std::string& s) { return parse_poly(s, X1); }

Integer gcd_of_values(const std::vector<MultiPoly>& ps, long n) {
  Integer g = 0;
  for (const auto& p : ps) g = gcd(g, Integer(p.eval(VectorQ{n}).get_num()));
  return g;
}

}  // namespace

TEST(GcdCertificate, Examples) {
  auto c = gcd_certificate({P("x"), P("x+2")});
  EXPECT_EQ(c.m, 2);
  EXPECT_EQ(c.cofactors[0], P("-1"));
  EXPECT_EQ(c.cofactors[1], P("1"));

  auto d = gcd_certificate({P("x^2"), P("x+1")});
  EXPECT_EQ(d.m, 1);
  EXPECT_EQ(d.cofactors[0], P("1"));
  EXPECT_EQ(d.cofactors[1], P("1-x"));

  auto e = gcd_certificate({P("2x"), P("2x+2")});
  EXPECT_EQ(e.m, 2);

  EXPECT_THROW(gcd_certificate({P("x^2-1"), P("x+1")}), InvalidInput);
}

TEST(GcdCertificate, ValuesDivideM) {
  std::vector<std::vector<MultiPoly>> families{
      {P("x^2+1"), P("x+3")}, {P("6x+4"), P("4x^2+2")}, {P("x^3-x+5"), P("x^2+7"), P("12")}};
  for (const auto& fam : families) {
    auto c = gcd_certificate(fam);
    for (long n = -200; n <= 200; ++n) {
      Integer g = gcd_of_values(fam, n);
      ASSERT_TRUE(mpz_divisible_p(c.m.get_mpz_t(), g.get_mpz_t())) << n;
    }
  }
}

TEST(BadPrimeBound, Examples) {
  EXPECT_EQ(bad_prime_bound(P("x^2+x+2")).primes, (PrimeSet{2}));
  EXPECT_TRUE(bad_prime_bound(P("x^2+1")).primes.empty());
  auto b = bad_prime_bound(P("6x+3"));
  EXPECT_EQ(b.primes, (PrimeSet{3}));
  EXPECT_EQ(b.content_primes, (PrimeSet{3}));
  auto w = bad_prime_bound(P("x^3-x"));  // always divisible by 6
  EXPECT_EQ(w.primes, (PrimeSet{2, 3}));
  EXPECT_EQ(w.degree_window, (PrimeSet{2, 3}));
  EXPECT_TRUE(w.content_primes.empty());
}

TEST(BadPrimeBound, SoundOnRandomIntegers) {
  std::mt19937_64 rng(1);
  std::vector<MultiPoly> polys{P("x^2+x+2"), P("x^5-x"), P("3x^2+9x+6"), P("x^4+4"), P("2x^3+x+7")};
  for (const auto& p : polys) {
    auto bad = bad_prime_bound(p).primes;
    Integer g = 0;
    for (int i = 0; i < 10000; ++i) {
      long n = static_cast<long>(rng() % 2000001) - 1000000;
      g = gcd(g, Integer(p.eval(VectorQ{n}).get_num()));
    }
    // Every prime of the gcd of observed values must be in the bound, and
    // conversely the bound's primes divide all those values.
    for (const auto& q : prime_support(g)) EXPECT_TRUE(bad.contains(q)) << p.to_string();
    for (const auto& q : bad) EXPECT_TRUE(mpz_divisible_p(g.get_mpz_t(), q.get_mpz_t())) << p.to_string();
  }
}

TEST(Progression, Examples) {
  auto pr = progression_avoiding(2, {P("x"), P("x+2")});
  EXPECT_EQ(pr.a, 2);
  EXPECT_EQ(pr.b, 1);
  auto one = progression_avoiding(1, {P("x")});
  EXPECT_EQ(one.a, 1);
  EXPECT_EQ(one.b, 0);
  auto q = progression_avoiding(15, {P("x^2+1")});
  EXPECT_EQ(q.a, 15);
  for (long j = 0; j < 15; ++j) {
    Integer v = Integer((q.a * j + q.b) * (q.a * j + q.b) + 1);
    EXPECT_EQ(gcd(v, Integer(15)), 1);
  }
  // x(x+1) is always even, so 2 is exempt and a residue need not exist.
  auto ex = progression_avoiding(6, {P("x^2+x")});
  EXPECT_TRUE(ex.exempt.contains(Integer(2)));
  EXPECT_THROW(progression_avoiding(2, {P("x"), P("x+1")}), InvalidInput);
}

TEST(Progression, GuaranteeOverAFullWindow) {
  std::vector<MultiPoly> polys{P("x^2+x+2"), P("3x+1"), P("x^3+2")};
  Integer M = Integer(2 * 3 * 5 * 7 * 11 * 13) * 17 * 19;
  auto pr = progression_avoiding(M, polys);
  for (long j = 0; j < 2000; ++j) {
    Integer x = pr.a * j + pr.b;
    for (const auto& p : polys) {
      Integer g = gcd(Integer(p.eval(VectorQ{Rational(x)}).get_num()), M);
      for (const auto& q : prime_support(g)) EXPECT_TRUE(pr.exempt.contains(q));
    }
  }
}

TEST(MultiGcd, Basics) {
  std::vector<std::string> v{"x", "y"};
  auto g = poly_gcd(parse_poly("(x+y)*(x-1)", v), parse_poly("(x+y)*(y+2)", v));
  EXPECT_EQ(g, parse_poly("x+y", v));
  EXPECT_EQ(poly_gcd(parse_poly("2x", v), parse_poly("2y", v)), parse_poly("1", v));
  EXPECT_EQ(poly_gcd(parse_poly("6*x*y^2 + 3*y", v), parse_poly("4*y^3", v)), parse_poly("y", v));
  auto s = split_content(parse_poly("6*x*y^2 + 3*x*y + 9*x", v), 1);
  EXPECT_EQ(s.H, parse_poly("3x", v));
  ASSERT_EQ(s.coefficients.size(), 3u);
  EXPECT_EQ(s.coefficients[2], parse_poly("2", v));
}

TEST(Resultant, MatchesClosedForms) {
  std::vector<std::string> v{"x", "y"};
  // Res_y(y - x, y^2 - 2) = x^2 - 2
  EXPECT_EQ(resultant(parse_poly("y - x", v), parse_poly("y^2 - 2", v), 1), parse_poly("x^2 - 2", v));
  // Common root gives zero.
  EXPECT_TRUE(resultant(parse_poly("(y-x)*(y+1)", v), parse_poly("y-x", v), 1).is_zero());
  // Univariate: Res(x^2+1, x-3) = 10 (in x).
  EXPECT_EQ(resultant(parse_poly("x^2+1", v), parse_poly("x-3", v), 0), parse_poly("10", v));
}

TEST(NilpotentExpLog, Examples) {
  EXPECT_EQ(nilpotent_log(MatrixQ::identity(3)), MatrixQ(3));
  EXPECT_EQ(nilpotent_exp(MatrixQ{{0, 1}, {0, 0}}), (MatrixQ{{1, 1}, {0, 1}}));
  MatrixQ u{{1, 1, Rational(1, 2)}, {0, 1, 1}, {0, 0, 1}};
  EXPECT_EQ(nilpotent_log(u), (MatrixQ{{0, 1, 0}, {0, 0, 1}, {0, 0, 0}}));
  EXPECT_THROW(nilpotent_log(MatrixQ{{2, 0}, {0, 1}}), InvalidInput);
  EXPECT_THROW(nilpotent_exp(MatrixQ{{1, 0}, {0, 0}}), InvalidInput);
}

TEST(NilpotentExpLog, RoundTrip) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    MatrixQ u = MatrixQ::identity(4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j)
        u(i, j) = make_rational(Integer(static_cast<long>(rng() % 2000001) - 1000000),
                                Integer(static_cast<long>(rng() % 1000) + 1));
    EXPECT_EQ(nilpotent_exp(nilpotent_log(u)), u);
  }
}

TEST(Malcev, Examples) {
  auto one = malcev_lattice({MatrixQ{{1, 1}, {0, 1}}});
  ASSERT_EQ(one.basis.size(), 1u);
  EXPECT_EQ(one.basis[0], (MatrixQ{{0, 1}, {0, 0}}));
  EXPECT_EQ(one.scale, 1);

  MatrixQ x{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}}, y{{1, 0, 0}, {0, 1, 1}, {0, 0, 1}};
  auto h = malcev_lattice({x, y});
  EXPECT_EQ(h.lie_dimension, 3u);
  ASSERT_EQ(h.basis.size(), 3u);
  EXPECT_EQ(h.basis[0], (MatrixQ{{0, 1, 0}, {0, 0, 0}, {0, 0, 0}}));
  EXPECT_EQ(h.basis[1], (MatrixQ{{0, 0, Rational(1, 2)}, {0, 0, 0}, {0, 0, 0}}));
  EXPECT_EQ(h.basis[2], (MatrixQ{{0, 0, 0}, {0, 0, 1}, {0, 0, 0}}));
  EXPECT_EQ(h.scale, 2);
  EXPECT_EQ(h.N, 1);
  // exp(2 * Lambda_0) is integral on a box.
  for (long a = -3; a <= 3; ++a)
    for (long b = -3; b <= 3; ++b)
      for (long c = -3; c <= 3; ++c) {
        auto g = h.element({a, b, c});
        for (const auto& e : g.entries()) EXPECT_EQ(e.get_den(), 1);
      }

  MatrixQ z{{1, Rational(1, 2), 0}, {0, 1, 0}, {0, 0, 1}};
  auto half = malcev_lattice({z, y});
  EXPECT_EQ(half.N, 2);
  EXPECT_THROW(malcev_lattice({MatrixQ{{1, 0}, {1, 1}}}), InvalidInput);
}

TEST(DensityTest, Examples) {
  std::vector<VectorQ> pts{{0, 0}, {1, 1}, {2, 4}};
  EXPECT_TRUE(zariski_density_test(pts, 1, {}).dense);
  auto two = zariski_density_test(pts, 2, {});
  EXPECT_FALSE(two.dense);
  EXPECT_TRUE(two.underdetermined);
  auto single = zariski_density_test({{3, 5}}, 1, {});
  EXPECT_FALSE(single.dense);
  EXPECT_EQ(single.points_needed, 2u);
}

TEST(DensityTest, AmbientFiltering) {
  // Points of SL_2 satisfy det - 1; that vanishing is ambient and must not
  // count against density.
  std::vector<VectorQ> pts;
  for (long a = -3; a <= 3; ++a)
    for (long b = -3; b <= 3; ++b) pts.push_back({1, Rational(a), Rational(b), Rational(1 + a * b)});
  auto det = parse_matrix_poly("det - 1", 2);
  auto v = zariski_density_test(pts, 2, {det});
  EXPECT_FALSE(v.dense);  // x11 = 1 on all points
  // (x11 - 1)(x21 + 1) still vanishes on both slices.
  for (long a = -3; a <= 3; ++a)
    for (long b = 1; b <= 3; ++b) pts.push_back({Rational(b), Rational(a), Rational(-1), Rational(1 - a, b)});
  EXPECT_FALSE(zariski_density_test(pts, 2, {det}).dense);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    Rational a(static_cast<long>(rng() % 9) + 1), b(static_cast<long>(rng() % 13) - 6), c(static_cast<long>(rng() % 7));
    pts.push_back({a, b, c, (1 + b * c) / a});
  }
  auto w = zariski_density_test(pts, 2, {det});
  EXPECT_EQ(w.ambient_dimension, 1u);
  EXPECT_TRUE(w.dense) << (w.vanishing.empty() ? "" : w.vanishing[0].to_string());
}

TEST(DensityTest, MonotoneInDegree) {
  std::vector<VectorQ> pts;
  for (long a = 0; a < 6; ++a)
    for (long b = 0; b < 6; ++b) pts.push_back({Rational(a), Rational(b * b - a)});
  bool prev = true;
  for (unsigned D = 1; D <= 4; ++D) {
    bool now = zariski_density_test(pts, D, {}).dense;
    if (!prev) {
      EXPECT_FALSE(now);
    }
    prev = now;
  }
}
