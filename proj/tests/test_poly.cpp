#include <gtest/gtest.h>

#include "affsieve/poly.hpp"

using namespace affsieve;

TEST(Poly, EvalExamples) {
  auto v1 = indexed_variables(1);
  EXPECT_EQ(parse_poly("x1^2 + 1", v1).eval(VectorQ{2}), 5);
  EXPECT_EQ(MultiPoly(v1).eval(VectorQ{7}), 0);
  std::vector<std::string> xyz{"x", "y", "z"};
  EXPECT_EQ(parse_poly("x*y - z", xyz).eval(VectorQ{2, 3, 6}), 0);
  EXPECT_EQ(parse_poly("x/2 + 3/4*y", xyz).eval(VectorQ{1, 1, 0}), Rational(5, 4));
}

TEST(Poly, SubscriptSpellingsAgree) {
  auto a = parse_matrix_poly("x_{11}^2 + 1", 2);
  auto b = parse_matrix_poly("x11^2+1", 2);
  auto c = parse_matrix_poly("x_11 * x_{1,1} + 1", 2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Poly, MatrixMacros) {
  MatrixQ g{{1, 2}, {3, 7}};
  EXPECT_EQ(parse_matrix_poly("tr - 2", 2).eval(g), 6);
  EXPECT_EQ(parse_matrix_poly("det", 2).eval(g), 1);
  EXPECT_EQ(parse_matrix_poly("det() - 1", 2).eval(g), 0);
  MatrixQ h{{2, 1, 0}, {0, 1, 5}, {1, 0, 1}};
  EXPECT_EQ(generic_determinant(3).eval(h), h.det());
}

TEST(Poly, ParserRejectsGarbage) {
  auto v = indexed_variables(2);
  EXPECT_THROW(parse_poly("x1 + y", v), InvalidInput);
  EXPECT_THROW(parse_poly("x1 / x2", v), InvalidInput);
  EXPECT_THROW(parse_poly("(x1 + 1", v), InvalidInput);
  EXPECT_THROW(parse_poly("x1 +", v), InvalidInput);
  EXPECT_THROW(parse_poly("x1 ^ -1", v), InvalidInput);
}

TEST(Poly, ImplicitMultiplicationAndPrinting) {
  auto v = indexed_variables(2);
  auto p = parse_poly("2x1(x2 - 1) - 3", v);
  EXPECT_EQ(p, parse_poly("2*x1*x2 - 2*x1 - 3", v));
  EXPECT_EQ(parse_poly(p.to_string(), v), p);
}

TEST(Poly, ComposeAndCoefficients) {
  auto v = indexed_variables(2);
  auto p = parse_poly("x1^2*x2 + 3*x2 - x1", v);
  EXPECT_EQ(p.degree(), 3u);
  EXPECT_EQ(p.degree_in(0), 2u);
  EXPECT_EQ(p.coefficient(0, 2), parse_poly("x2", v));
  EXPECT_EQ(p.coefficient(0, 0), parse_poly("3*x2", v));
  auto q = p.compose({parse_poly("x1 + x2", v), parse_poly("x1", v)});
  EXPECT_EQ(q, parse_poly("(x1+x2)^2*x1 + 3*x1 - x1 - x2", v));
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b) EXPECT_EQ(q.eval(VectorQ{a, b}), p.eval(VectorQ{a + b, a}));
}

TEST(Poly, ContentAndRename) {
  auto v = indexed_variables(2);
  EXPECT_EQ(parse_poly("6*x1 + 9/2", v).content(), Rational(3, 2));
  auto r = parse_poly("x2 + 1", v).rename({"x2", "x3"});
  EXPECT_EQ(r.eval(VectorQ{4, 0}), 5);
  EXPECT_THROW(parse_poly("x1", v).rename({"x2"}), InvalidInput);
}
