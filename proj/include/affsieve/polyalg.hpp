#pragma once

/**
 * @file polyalg.hpp
 * @brief Polynomial algorithms: gcd certificates, bad primes, progressions
 * avoiding prime factors, multivariate gcd and resultants, nilpotent exp/log,
 * lattices in unipotent Lie algebras, and a bounded-degree density test.
 */

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "affsieve/arith.hpp"
#include "affsieve/linalg.hpp"
#include "affsieve/matgroup.hpp"
#include "affsieve/poly.hpp"

namespace affsieve {

// ---------------------------------------------------------------------------
// Dense univariate polynomials over Q, used for Euclid.

class UPolyQ {
 public:
  UPolyQ() = default;
  explicit UPolyQ(std::vector<Rational> c) : c_(std::move(c)) { trim(); }

  static UPolyQ monomial(const Rational& a, std::size_t k) {
    std::vector<Rational> c(k + 1);
    c[k] = a;
    return UPolyQ(std::move(c));
  }

  /// From a MultiPoly that depends on at most the variable `var`.
  static UPolyQ from_multi(const MultiPoly& p, std::size_t var) {
    std::vector<Rational> c(p.degree_in(var) + 1);
    for (const auto& [m, a] : p.terms()) {
      for (std::size_t i = 0; i < m.size(); ++i)
        if (i != var && m[i] != 0) throw InvalidInput("polynomial " + p.to_string() + " is not univariate");
      c[m[var]] += a;
    }
    return UPolyQ(std::move(c));
  }

  MultiPoly to_multi(const std::vector<std::string>& vars, std::size_t var) const {
    MultiPoly out(vars);
    for (std::size_t k = 0; k < c_.size(); ++k) {
      Monomial m(vars.size(), 0);
      m[var] = static_cast<unsigned>(k);
      out.add_term(m, c_[k]);
    }
    return out;
  }

  bool is_zero() const { return c_.empty(); }
  long degree() const { return static_cast<long>(c_.size()) - 1; }
  const Rational& lead() const { return c_.back(); }
  const std::vector<Rational>& coeffs() const { return c_; }

  Rational eval(const Rational& x) const {
    Rational s = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) s = s * x + *it;
    return s;
  }

  friend UPolyQ operator+(const UPolyQ& a, const UPolyQ& b) {
    std::vector<Rational> c(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < a.c_.size(); ++i) c[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) c[i] += b.c_[i];
    return UPolyQ(std::move(c));
  }

  friend UPolyQ operator-(const UPolyQ& a, const UPolyQ& b) {
    std::vector<Rational> c(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < a.c_.size(); ++i) c[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) c[i] -= b.c_[i];
    return UPolyQ(std::move(c));
  }

  friend UPolyQ operator*(const UPolyQ& a, const UPolyQ& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Rational> c(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return UPolyQ(std::move(c));
  }

  friend UPolyQ operator*(const Rational& s, const UPolyQ& a) {
    std::vector<Rational> c = a.c_;
    for (auto& x : c) x *= s;
    return UPolyQ(std::move(c));
  }

  /// (quotient, remainder)
  static std::pair<UPolyQ, UPolyQ> divmod(const UPolyQ& a, const UPolyQ& b) {
    if (b.is_zero()) throw InvalidInput("polynomial division by zero");
    UPolyQ q, r = a;
    while (!r.is_zero() && r.degree() >= b.degree()) {
      UPolyQ t = monomial(r.lead() / b.lead(), static_cast<std::size_t>(r.degree() - b.degree()));
      q = q + t;
      r = r - t * b;
    }
    return {q, r};
  }

  friend bool operator==(const UPolyQ& a, const UPolyQ& b) { return a.c_ == b.c_; }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }
  std::vector<Rational> c_;
};

namespace detail {

// The single variable a family depends on (0 if all are constant).
inline std::size_t common_variable(const std::vector<MultiPoly>& polys) {
  std::optional<std::size_t> var;
  for (const auto& p : polys) {
    for (std::size_t i = 0; i < p.nvars(); ++i) {
      if (!p.depends_on(i)) continue;
      if (var && *var != i) throw InvalidInput("polynomials are not univariate in a common variable");
      var = i;
    }
  }
  return var.value_or(0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// gcd certificates

/// sum_j cofactors[j] * P_j == m identically, with integer cofactors.
struct GcdCertificate {
  std::vector<MultiPoly> cofactors;
  Integer m;
};

/// Extended Euclid over Q[x] with denominators cleared afterwards. Throws
/// InvalidInput naming the common factor when the P_j are not coprime.
inline GcdCertificate gcd_certificate(const std::vector<MultiPoly>& P) {
  if (P.empty()) throw InvalidInput("gcd_certificate: empty family");
  for (const auto& p : P) {
    if (!p.has_integer_coefficients()) throw InvalidInput("gcd_certificate: " + p.to_string() + " is not integral");
  }
  const auto& vars = P.front().vars();
  std::size_t var = detail::common_variable(P);
  std::vector<UPolyQ> u;
  for (const auto& p : P) u.push_back(UPolyQ::from_multi(p, var));

  // Invariant: g == sum_j cof[j] * u[j].
  UPolyQ g;
  std::vector<UPolyQ> cof(P.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k].is_zero()) continue;
    if (g.is_zero()) {
      g = u[k];
      cof[k] = UPolyQ({Rational(1)});
      continue;
    }
    // Extended Euclid on (g, u[k]): s*g + t*u[k] = h.
    UPolyQ r0 = g, r1 = u[k], s0({Rational(1)}), s1, t0, t1({Rational(1)});
    while (!r1.is_zero()) {
      auto [q, r] = UPolyQ::divmod(r0, r1);
      UPolyQ s2 = s0 - q * s1, t2 = t0 - q * t1;
      r0 = r1;
      r1 = r;
      s0 = s1;
      s1 = s2;
      t0 = t1;
      t1 = t2;
    }
    for (std::size_t j = 0; j < k; ++j) cof[j] = s0 * cof[j];
    cof[k] = t0;
    g = r0;
  }
  if (g.is_zero() || g.degree() > 0) {
    std::string common = g.is_zero() ? "0" : g.to_multi(vars, var).to_string();
    throw InvalidInput("gcd_certificate: family is not coprime; common factor " + common);
  }
  // Normalize to sum = 1, then clear denominators.
  Rational inv = 1 / g.lead();
  Integer m = 1;
  for (auto& c : cof) {
    c = inv * c;
    for (const auto& a : c.coeffs()) m = lcm(m, Integer(a.get_den()));
  }
  Integer content = m;
  for (auto& c : cof) {
    c = Rational(m) * c;
    for (const auto& a : c.coeffs()) content = gcd(content, Integer(a.get_num()));
  }
  GcdCertificate out;
  out.m = m / content;
  for (auto& c : cof) out.cofactors.push_back((Rational(1, 1) / Rational(content)) * c.to_multi(vars, var));
  MultiPoly check = MultiPoly::constant(vars, 0);
  for (std::size_t j = 0; j < P.size(); ++j) check = check + out.cofactors[j] * P[j];
  if (check != MultiPoly::constant(vars, out.m)) throw std::logic_error("gcd certificate failed to verify");
  return out;
}

// ---------------------------------------------------------------------------
// Bad primes of a univariate integer polynomial

struct BadPrimeBound {
  PrimeSet primes;                 // exactly the primes of gcd_{m in Z} P(m)
  Integer value_gcd;               // gcd of P(0), ..., P(deg P)
  PrimeSet degree_window;          // members that are <= deg P
  PrimeSet content_primes;         // members dividing the coefficient gcd
};

/// gcd over all integers of P(m) equals the gcd of P(0..deg P), because every
/// integer-valued polynomial is an integer combination of binomials C(x,k),
/// k <= deg P, whose coefficients are the finite differences at 0.
inline BadPrimeBound bad_prime_bound(const MultiPoly& P, const FactorBudget& budget = {}) {
  if (P.is_zero()) throw InvalidInput("bad_prime_bound: zero polynomial");
  if (!P.has_integer_coefficients()) throw InvalidInput("bad_prime_bound: " + P.to_string() + " is not integral");
  std::size_t var = detail::common_variable({P});
  UPolyQ u = UPolyQ::from_multi(P, var);
  Integer g = 0;
  for (long k = 0; k <= u.degree(); ++k) g = gcd(g, Integer(u.eval(Rational(k)).get_num()));
  BadPrimeBound out;
  out.value_gcd = g;
  out.primes = prime_support(g, budget);
  Integer content = Integer(P.content().get_num());
  std::vector<Integer> window, cont;
  for (const auto& p : out.primes) {
    if (p <= u.degree()) window.push_back(p);
    if (mpz_divisible_p(content.get_mpz_t(), p.get_mpz_t())) cont.push_back(p);
  }
  out.degree_window = PrimeSet(window);
  out.content_primes = PrimeSet(cont);
  return out;
}

// ---------------------------------------------------------------------------
// Progressions avoiding prime factors

struct Progression {
  Integer a = 1, b = 0;
  std::map<Integer, Integer> residues;  // p -> b mod p for each avoided prime
  PrimeSet exempt;                      // union of the polynomials' bad primes
};

/// For M != 0: a, b with every prime of gcd(P_i(a j + b), M) inside the
/// union of the P_i's bad primes, for all j and i. Residues are chosen so all
/// P_i are simultaneously nonzero mod p; pass the product polynomial when only
/// one of them needs to avoid p.
inline Progression progression_avoiding(const Integer& M, const std::vector<MultiPoly>& polys,
                                        const FactorBudget& budget = {}) {
  if (M == 0) throw InvalidInput("progression_avoiding: M must be nonzero");
  Progression out;
  for (const auto& P : polys) out.exempt = out.exempt.unite(bad_prime_bound(P, budget).primes);
  if (abs(Rational(M)) == 1) return out;
  PrimeSet primes_of_M = prime_support(M, budget);
  std::vector<UPolyQ> u;
  for (const auto& P : polys) u.push_back(UPolyQ::from_multi(P, detail::common_variable({P})));
  for (const auto& p : primes_of_M) {
    if (out.exempt.contains(p)) continue;
    std::optional<Integer> found;
    // At most sum(deg) residues are roots, so this loop is short even for large p.
    for (Integer r = 0; r < p; ++r) {
      bool ok = true;
      for (const auto& q : u) {
        Integer v = Integer(q.eval(Rational(r)).get_num());
        if (mpz_divisible_p(v.get_mpz_t(), p.get_mpz_t())) {
          ok = false;
          break;
        }
      }
      if (ok) {
        found = r;
        break;
      }
    }
    if (!found) {
      throw InvalidInput("progression_avoiding: every residue mod " + p.get_str() +
                         " is a root of some polynomial; the prime is not exempt");
    }
    out.residues[p] = *found;
  }
  // Chinese remainder theorem.
  for (const auto& [p, r] : out.residues) {
    Integer t = (r - out.b) % p;
    if (t < 0) t += p;
    Integer inv;
    Integer amod = out.a % p;
    mpz_invert(inv.get_mpz_t(), amod.get_mpz_t(), p.get_mpz_t());
    t = (t * inv) % p;
    out.b += out.a * t;
    out.a *= p;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multivariate gcd, content, pseudo-remainder, resultant

/// Scales p to integer coefficients with content 1 and a positive leading term.
inline MultiPoly integer_primitive(const MultiPoly& p) {
  if (p.is_zero()) return p;
  Rational c = p.content();
  if (p.leading_term().second < 0) c = -c;
  return (1 / c) * p;
}

/// Exact quotient a / b, or nullopt when b does not divide a.
inline std::optional<MultiPoly> exact_divide(const MultiPoly& a, const MultiPoly& b) {
  if (b.is_zero()) throw InvalidInput("exact_divide: division by zero");
  MultiPoly q(a.vars()), r = a;
  auto [lb, cb] = b.leading_term();
  while (!r.is_zero()) {
    auto [lr, cr] = r.leading_term();
    Monomial m(lr.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (lr[i] < lb[i]) return std::nullopt;
      m[i] = lr[i] - lb[i];
    }
    MultiPoly t(a.vars());
    t.add_term(m, cr / cb);
    q = q + t;
    r = r - t * b;
  }
  return q;
}

namespace detail {

inline std::optional<std::size_t> main_variable(const MultiPoly& a, const MultiPoly& b) {
  for (std::size_t i = a.nvars(); i-- > 0;)
    if (a.depends_on(i) || b.depends_on(i)) return i;
  return std::nullopt;
}

inline MultiPoly var_power(const std::vector<std::string>& vars, std::size_t var, unsigned k) {
  Monomial m(vars.size(), 0);
  m[var] = k;
  MultiPoly out(vars);
  out.add_term(m, 1);
  return out;
}

}  // namespace detail

MultiPoly poly_gcd(const MultiPoly& a, const MultiPoly& b);

/// Pseudo-remainder of a by b with respect to `var`.
inline MultiPoly pseudo_remainder(const MultiPoly& a, const MultiPoly& b, std::size_t var) {
  unsigned db = b.degree_in(var);
  MultiPoly lc = b.coefficient(var, db), r = a;
  while (!r.is_zero() && r.degree_in(var) >= db) {
    unsigned dr = r.degree_in(var);
    MultiPoly lr = r.coefficient(var, dr);
    r = lc * r - lr * detail::var_power(a.vars(), var, dr - db) * b;
  }
  return r;
}

/// gcd over Q of the coefficients of p viewed as a polynomial in `var`,
/// normalized by integer_primitive.
inline MultiPoly content_in(const MultiPoly& p, std::size_t var) {
  MultiPoly g(p.vars());
  for (unsigned k = 0; k <= p.degree_in(var); ++k) {
    MultiPoly c = p.coefficient(var, k);
    if (c.is_zero()) continue;
    g = poly_gcd(g, c);
    if (g.is_constant()) break;
  }
  return integer_primitive(g);
}

/// gcd over Q[x], normalized by integer_primitive; gcd(0, 0) = 0.
inline MultiPoly poly_gcd(const MultiPoly& a, const MultiPoly& b) {
  if (a.is_zero()) return integer_primitive(b);
  if (b.is_zero()) return integer_primitive(a);
  auto var = detail::main_variable(a, b);
  if (!var) return MultiPoly::constant(a.vars(), 1);
  if (!a.depends_on(*var)) return poly_gcd(a, content_in(b, *var));
  if (!b.depends_on(*var)) return poly_gcd(content_in(a, *var), b);
  MultiPoly ca = content_in(a, *var), cb = content_in(b, *var);
  MultiPoly c = poly_gcd(ca, cb);
  MultiPoly x = *exact_divide(a, ca), y = *exact_divide(b, cb);
  if (x.degree_in(*var) < y.degree_in(*var)) std::swap(x, y);
  while (!y.is_zero() && y.depends_on(*var)) {
    MultiPoly r = pseudo_remainder(x, y, *var);
    x = y;
    if (r.is_zero()) {
      y = r;
      break;
    }
    y = *exact_divide(r, content_in(r, *var));
  }
  // A nonzero remainder free of var means the primitive parts are coprime.
  if (!y.is_zero()) return integer_primitive(c);
  MultiPoly px = *exact_divide(x, content_in(x, *var));
  return integer_primitive(c * px);
}

/// p = H * sum_i H_i var^i with the H_i integral and jointly coprime.
struct ContentSplit {
  MultiPoly H;
  std::vector<MultiPoly> coefficients;  // H_i, i = 0..deg; zero entries kept
};

inline ContentSplit split_content(const MultiPoly& p, std::size_t var) {
  if (p.is_zero()) throw InvalidInput("split_content: zero polynomial");
  ContentSplit out;
  if (!p.depends_on(var)) {
    out.H = p;
    out.coefficients = {MultiPoly::constant(p.vars(), 1)};
    return out;
  }
  MultiPoly c = content_in(p, var);
  MultiPoly q = *exact_divide(p, c);
  Rational k = q.content();
  out.H = k * c;
  q = (1 / k) * q;
  for (unsigned i = 0; i <= q.degree_in(var); ++i) out.coefficients.push_back(q.coefficient(var, i));
  return out;
}

/// Res_var(a, b) as the determinant of the Sylvester matrix (fraction-free
/// Bareiss elimination over the polynomial ring).
inline MultiPoly resultant(const MultiPoly& a, const MultiPoly& b, std::size_t var) {
  const auto& vars = a.vars();
  unsigned m = a.degree_in(var), n = b.degree_in(var);
  if (a.is_zero() || b.is_zero()) return MultiPoly(vars);
  if (m == 0 && n == 0) return MultiPoly::constant(vars, 1);
  if (m == 0) return a.coefficient(var, 0).pow(n);
  if (n == 0) return b.coefficient(var, 0).pow(m);
  const std::size_t size = m + n;
  std::vector<std::vector<MultiPoly>> s(size, std::vector<MultiPoly>(size, MultiPoly(vars)));
  for (unsigned i = 0; i < n; ++i)
    for (unsigned k = 0; k <= m; ++k) s[i][i + k] = a.coefficient(var, m - k);
  for (unsigned i = 0; i < m; ++i)
    for (unsigned k = 0; k <= n; ++k) s[n + i][i + k] = b.coefficient(var, n - k);
  MultiPoly prev = MultiPoly::constant(vars, 1);
  int sign = 1;
  for (std::size_t k = 0; k + 1 < size; ++k) {
    std::size_t piv = k;
    while (piv < size && s[piv][k].is_zero()) ++piv;
    if (piv == size) return MultiPoly(vars);
    if (piv != k) {
      std::swap(s[piv], s[k]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < size; ++i) {
      for (std::size_t j = k + 1; j < size; ++j) {
        MultiPoly num = s[k][k] * s[i][j] - s[i][k] * s[k][j];
        auto q = exact_divide(num, prev);
        if (!q) throw std::logic_error("Bareiss step was not exact");
        s[i][j] = *q;
      }
      s[i][k] = MultiPoly(vars);
    }
    prev = s[k][k];
  }
  MultiPoly det = s[size - 1][size - 1];
  return sign < 0 ? -det : det;
}

// ---------------------------------------------------------------------------
// Nilpotent exponential and unipotent logarithm

inline bool is_strictly_upper(const MatrixQ& x) {
  for (std::size_t i = 0; i < x.dim(); ++i)
    for (std::size_t j = 0; j <= i; ++j)
      if (x(i, j) != 0) return false;
  return true;
}

inline bool is_unipotent_upper(const MatrixQ& u) {
  for (std::size_t i = 0; i < u.dim(); ++i) {
    if (u(i, i) != 1) return false;
    for (std::size_t j = 0; j < i; ++j)
      if (u(i, j) != 0) return false;
  }
  return true;
}

inline MatrixQ nilpotent_exp(const MatrixQ& N) {
  if (!is_strictly_upper(N)) throw InvalidInput("nilpotent_exp: matrix is not strictly upper triangular");
  const std::size_t n = N.dim();
  MatrixQ out = MatrixQ::identity(n), power = MatrixQ::identity(n);
  Integer fact = 1;
  for (std::size_t k = 1; k < n; ++k) {
    power = power * N;
    fact *= static_cast<unsigned long>(k);
    out = out + Rational(Integer(1), fact) * power;
  }
  return out;
}

inline MatrixQ nilpotent_log(const MatrixQ& u) {
  if (!is_unipotent_upper(u)) throw InvalidInput("nilpotent_log: matrix is not unipotent upper triangular");
  const std::size_t n = u.dim();
  MatrixQ X = u - MatrixQ::identity(n), power = MatrixQ::identity(n), out(n);
  for (std::size_t k = 1; k < n; ++k) {
    power = power * X;
    Rational c(k % 2 == 1 ? 1 : -1, static_cast<long>(k));
    out = out + c * power;
  }
  return out;
}

// Strictly-upper coordinates in the order (1,2), (1,3), ..., (1,n), (2,3), ...
inline RowQ upper_coordinates(const MatrixQ& x) {
  RowQ out;
  for (std::size_t i = 0; i < x.dim(); ++i)
    for (std::size_t j = i + 1; j < x.dim(); ++j) out.push_back(x(i, j));
  return out;
}

inline MatrixQ from_upper_coordinates(const RowQ& c, std::size_t n) {
  MatrixQ x(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) x(i, j) = c.at(k++);
  return x;
}

inline std::vector<std::string> upper_coordinate_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = i + 1; j <= n; ++j) out.push_back("x" + std::to_string(i) + std::to_string(j));
  return out;
}

/// A lattice Lambda_0 in the Lie algebra containing the generators' logs,
/// and a scale m with exp(m * Lambda_0) inside the integral form
/// U_N = { u : u_ij * N^(j-i) integral }, which contains the generators.
struct MalcevLattice {
  std::size_t n = 0;
  Integer N = 1;
  std::vector<MatrixQ> logs;
  std::vector<MatrixQ> basis;
  Integer scale = 1;
  std::size_t lie_dimension = 0;
  std::size_t points_checked = 0;
  // exp(scale * Lambda_0) is certified inside U_N, not inside the group itself.
  bool group_containment_certified = false;

  MatrixQ element(const std::vector<Integer>& c) const {
    MatrixQ X(n);
    for (std::size_t i = 0; i < basis.size(); ++i) X = X + Rational(c.at(i) * scale) * basis[i];
    return nilpotent_exp(X);
  }
};

namespace detail {

inline bool in_integral_form(const MatrixQ& g, const Integer& N) {
  for (std::size_t i = 0; i < g.dim(); ++i)
    for (std::size_t j = i + 1; j < g.dim(); ++j) {
      Rational v = g(i, j) * Rational(pow(N, j - i));
      if (v.get_den() != 1) return false;
    }
  return true;
}

// All c in Z_{>=0}^k with sum <= D, in lexicographic order.
inline void simplex_points(std::size_t k, unsigned D, std::vector<std::vector<Integer>>& out) {
  std::vector<Integer> c(k, 0);
  std::function<void(std::size_t, unsigned)> rec = [&](std::size_t i, unsigned left) {
    if (i == k) {
      out.push_back(c);
      return;
    }
    for (unsigned v = 0; v <= left; ++v) {
      c[i] = v;
      rec(i + 1, left - v);
    }
    c[i] = 0;
  };
  rec(0, D);
}

}  // namespace detail

inline MalcevLattice malcev_lattice(const std::vector<MatrixQ>& gens) {
  if (gens.empty()) throw InvalidInput("malcev_lattice: no generators");
  MalcevLattice out;
  out.n = gens.front().dim();
  const std::size_t n = out.n;
  for (const auto& g : gens) {
    if (g.dim() != n || !is_unipotent_upper(g)) {
      throw InvalidInput("malcev_lattice: generator " + g.to_string() +
                         " is not unipotent upper triangular in the declared basis");
    }
  }
  // N: smallest integer with every generator in U_N.
  std::map<Integer, unsigned long> need;
  for (const auto& g : gens)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        Integer den = g(i, j).get_den();
        if (den == 1) continue;
        for (const auto& [p, e] : factorize(den).factors) {
          unsigned long k = (e + (j - i) - 1) / (j - i);
          need[p] = std::max(need[p], k);
        }
      }
  for (const auto& [p, k] : need) out.N *= pow(p, k);

  for (const auto& g : gens) out.logs.push_back(nilpotent_log(g));
  // Lie closure over Q.
  const std::size_t dim_u = n * (n - 1) / 2;
  IncrementalEchelon span(dim_u);
  std::vector<MatrixQ> closure;
  for (const auto& l : out.logs)
    if (span.add(upper_coordinates(l))) closure.push_back(l);
  for (std::size_t i = 0; i < closure.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      MatrixQ br = closure[i] * closure[j] - closure[j] * closure[i];
      if (span.add(upper_coordinates(br))) closure.push_back(br);
    }
  out.lie_dimension = span.rank();

  // Lattice generators: logs, logs of pairwise products, iterated brackets.
  MatQ lattice_gens;
  for (const auto& l : out.logs) lattice_gens.push_back(upper_coordinates(l));
  for (std::size_t i = 0; i < gens.size(); ++i)
    for (std::size_t j = 0; j < gens.size(); ++j)
      if (i != j) lattice_gens.push_back(upper_coordinates(nilpotent_log(gens[i] * gens[j])));
  std::vector<MatrixQ> layer = out.logs;
  for (std::size_t depth = 1; depth + 1 < n; ++depth) {
    std::vector<MatrixQ> next;
    for (const auto& a : out.logs)
      for (const auto& b : layer) {
        MatrixQ br = a * b - b * a;
        if (br == MatrixQ(n)) continue;
        lattice_gens.push_back(upper_coordinates(br));
        next.push_back(br);
      }
    layer = std::move(next);
  }
  MatQ basis = lattice_basis(lattice_gens);
  if (basis.size() != out.lie_dimension) {
    throw std::logic_error("malcev_lattice: lattice rank does not match the Lie closure dimension");
  }
  for (const auto& row : basis) out.basis.push_back(from_upper_coordinates(row, n));

  // Entries of exp(m * sum c_i b_i) are polynomials of total degree <= n-1
  // in c; such a polynomial is integer valued on Z^k iff it is on the simplex
  // { c >= 0, sum c <= n-1 } (binomial-basis expansion).
  std::vector<std::vector<Integer>> pts;
  detail::simplex_points(out.basis.size(), static_cast<unsigned>(n - 1), pts);
  Integer bound = 1;
  for (unsigned long k = 1; k < n; ++k) bound = lcm(bound, Integer(k));
  bound = pow(bound, n);
  for (Integer m = 1; m <= bound; ++m) {
    out.scale = m;
    bool ok = true;
    for (const auto& c : pts) {
      if (!detail::in_integral_form(out.element(c), out.N)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.points_checked = pts.size();
      return out;
    }
  }
  throw std::logic_error("malcev_lattice: no scale up to the BCH bound works");
}

// ---------------------------------------------------------------------------
// Bounded-degree Zariski density test

struct DensityVerdict {
  bool dense = false;
  bool underdetermined = false;  // fewer points than the test can separate
  std::size_t points_needed = 0;
  std::size_t monomials = 0;
  std::size_t rank = 0;
  std::size_t ambient_dimension = 0;  // dim of the degree-<=D ambient span
  std::vector<MultiPoly> vanishing;   // basis of vanishing polys outside the ambient span (up to 8)
};

inline std::vector<Monomial> monomials_up_to(std::size_t k, unsigned D) {
  std::vector<std::vector<Integer>> pts;
  detail::simplex_points(k, D, pts);
  std::vector<Monomial> out;
  for (const auto& p : pts) {
    Monomial m(k);
    for (std::size_t i = 0; i < k; ++i) m[i] = static_cast<unsigned>(p[i].get_ui());
    out.push_back(m);
  }
  std::sort(out.begin(), out.end(), [](const Monomial& a, const Monomial& b) {
    unsigned da = std::accumulate(a.begin(), a.end(), 0u), db = std::accumulate(b.begin(), b.end(), 0u);
    if (da != db) return da < db;
    return a > b;
  });
  return out;
}

/// True iff every polynomial of degree <= D vanishing on the points lies in
/// the span of { g * monomial : g in ambient, deg <= D }.
inline DensityVerdict zariski_density_test(const std::vector<VectorQ>& points, unsigned D,
                                           const std::vector<MultiPoly>& ambient) {
  if (points.empty()) throw InvalidInput("zariski_density_test: no points");
  const std::size_t k = points.front().size();
  auto monos = monomials_up_to(k, D);
  std::map<Monomial, std::size_t> column;
  for (std::size_t i = 0; i < monos.size(); ++i) column[monos[i]] = i;
  DensityVerdict out;
  out.monomials = monos.size();

  IncrementalEchelon ambient_span(monos.size());
  for (const auto& g : ambient) {
    if (g.nvars() != k) throw InvalidInput("zariski_density_test: ambient polynomial has wrong arity");
    if (g.is_zero() || g.degree() > D) continue;
    for (const auto& m : monomials_up_to(k, D - g.degree())) {
      RowQ row(monos.size());
      for (const auto& [gm, c] : g.terms()) {
        Monomial t(k);
        for (std::size_t i = 0; i < k; ++i) t[i] = gm[i] + m[i];
        row[column.at(t)] += c;
      }
      ambient_span.add(row);
    }
  }
  out.ambient_dimension = ambient_span.rank();

  IncrementalEchelon rows(monos.size());
  for (const auto& p : points) {
    if (p.size() != k) throw InvalidInput("zariski_density_test: points of different dimension");
    RowQ row(monos.size());
    for (std::size_t c = 0; c < monos.size(); ++c) {
      Rational v = 1;
      for (std::size_t i = 0; i < k; ++i)
        if (monos[c][i]) v *= pow(p[i], monos[c][i]);
      row[c] = v;
    }
    rows.add(row);
    if (rows.rank() == monos.size()) break;
  }
  out.rank = rows.rank();
  const std::size_t target = monos.size() - out.ambient_dimension;
  if (points.size() < target) {
    out.underdetermined = true;
    out.points_needed = target - points.size();
  }
  MatQ null = nullspace(rows.rows(), monos.size());
  out.dense = true;
  for (const auto& v : null) {
    if (ambient_span.contains(v)) continue;
    out.dense = false;
    if (out.vanishing.size() < 8) {
      MultiPoly f(ambient.empty() ? indexed_variables(k) : ambient.front().vars());
      for (std::size_t c = 0; c < monos.size(); ++c) f.add_term(monos[c], v[c]);
      out.vanishing.push_back(f);
    }
  }
  return out;
}

}  // namespace affsieve
