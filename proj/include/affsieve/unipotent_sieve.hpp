#pragma once

/**
 * @file unipotent_sieve.hpp
 * @brief Almost-prime values of polynomials in several integer variables, by
 * induction on the number of variables, and the group-level wrapper that
 * runs the same recursion in Malcev coordinates of a unipotent group.
 *
 * A problem is (P, families). Emitted points x satisfy
 *   - P(x) has at most r prime factors outside S (with multiplicity), and
 *   - for each family, every prime of gcd_j P_ij(x) lies in S.
 * Existence of infinitely many good values in one variable is replaced by a
 * bounded search; every emitted point is re-verified from scratch.
 */

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "affsieve/arith.hpp"
#include "affsieve/linalg.hpp"
#include "affsieve/matgroup.hpp"
#include "affsieve/poly.hpp"
#include "affsieve/polyalg.hpp"

namespace affsieve {

struct UniSieveProblem {
  MultiPoly P;
  std::vector<std::vector<MultiPoly>> families;
};

struct UniSieveBudget {
  std::size_t candidates = 64;     // progression terms tried per prefix
  std::size_t want = 3;            // values kept per prefix
  std::size_t max_points = 20000;  // per level; exceeding it is an error, not a truncation
  unsigned r_per_degree = 1;       // single-variable r = r_per_degree * deg
  unsigned density_degree = 2;
  FactorBudget factor{};
};

struct SingleSearch {
  std::vector<Integer> values;
  std::vector<Factorization> certificates;
  std::size_t tested = 0;
  std::size_t skipped_incomplete = 0;  // factoring budget ran out
  bool exhausted = false;              // reached the bound before `want` values
};

namespace detail {

inline SingleSearch search_progression(const MultiPoly& P, const PrimeSet& S, const Integer& a, const Integer& b,
                                       unsigned r, const Integer& search_bound, std::size_t want,
                                       const FactorBudget& budget) {
  SingleSearch out;
  for (Integer n = b; n <= search_bound; n += a) {
    if (out.values.size() >= want) return out;
    ++out.tested;
    Rational v = P.eval(std::vector<Integer>{n});
    if (v == 0) continue;
    if (v.get_den() != 1) throw InvalidInput("single-variable search: value " + to_string(v) + " is not an integer");
    auto fac = factorize(v.get_num(), budget);
    auto om = omega_outside(fac, S);
    if (!om) {
      ++out.skipped_incomplete;
      continue;
    }
    if (*om <= r) {
      out.values.push_back(n);
      out.certificates.push_back(std::move(fac));
    }
  }
  out.exhausted = out.values.size() < want;
  return out;
}

}  // namespace detail

/// Up to `want` integers n = a j + b <= search_bound (j >= 0) with
/// omega_outside(P(n), S) <= r. Values with P(n) = 0 are skipped.
inline SingleSearch single_variable_almost_primes(const MultiPoly& P, const PrimeSet& S, const Integer& a,
                                                  const Integer& b, unsigned r, const Integer& search_bound,
                                                  std::size_t want, const FactorBudget& budget = {}) {
  if (P.nvars() != 1) throw InvalidInput("single_variable_almost_primes: P must be univariate");
  if (P.is_constant()) throw InvalidInput("single_variable_almost_primes: P is constant");
  if (r < 1) throw InvalidInput("single_variable_almost_primes: r must be positive");
  if (a < 1) throw InvalidInput("single_variable_almost_primes: progression step must be positive");
  if (!P.has_integer_coefficients()) throw InvalidInput("single_variable_almost_primes: P is not integral");
  return detail::search_progression(P, S, a, b, r, search_bound, want, budget);
}

struct UniPointCertificate {
  std::vector<Integer> x;
  Integer P_value = 0;
  Factorization factorization;
  unsigned omega_outside = 0;
  std::vector<Integer> family_gcds;
};

struct UniLayer {
  std::vector<Integer> prefix;
  Integer M = 1;
  Progression progression;
  std::vector<Integer> values;
  bool exhausted = false;
  std::size_t skipped_incomplete = 0;
};

struct UniSieveResult {
  std::vector<std::string> vars;
  std::string last_variable;  // the variable split off at this level
  unsigned r = 0;
  unsigned r_single = 0;
  PrimeSet S;
  PrimeSet S_constants;  // primes of constant members and elimination certificates at this level
  unsigned degree_bound = 0;
  std::size_t family_count = 0;
  std::vector<UniLayer> layers;
  std::vector<std::vector<Integer>> points;
  std::vector<UniPointCertificate> certificates;
  std::shared_ptr<UniSieveResult> sub;
  std::size_t prefixes_skipped = 0;        // M = 0 or factoring failure
  std::size_t points_unverifiable = 0;     // dropped because P(x) could not be factored
  std::vector<PrimeSet> single_instance_bad_primes;
  std::optional<DensityVerdict> prefix_density;
};

namespace detail {

inline MultiPoly drop_variable(const MultiPoly& p, std::size_t var) {
  if (p.depends_on(var)) throw std::logic_error("drop_variable: polynomial depends on the variable");
  std::vector<std::string> vars = p.vars();
  vars.erase(vars.begin() + static_cast<long>(var));
  MultiPoly out(vars);
  for (const auto& [m, c] : p.terms()) {
    Monomial mm = m;
    mm.erase(mm.begin() + static_cast<long>(var));
    out.add_term(mm, c);
  }
  return out;
}

// sum_i c_i t^i in a single variable named `name`.
inline MultiPoly univariate(const std::vector<Integer>& c, const std::string& name) {
  MultiPoly out({name});
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] != 0) out.add_term(Monomial{static_cast<unsigned>(i)}, Rational(c[i]));
  return out;
}

inline std::vector<Integer> coefficients_at(const MultiPoly& p, std::size_t var, const std::vector<Integer>& point) {
  std::vector<Integer> out;
  for (unsigned i = 0; i <= p.degree_in(var); ++i) {
    Rational v = p.coefficient(var, i).eval(point);
    out.push_back(v.get_num());
  }
  return out;
}

inline PrimeSet primes_of_constant(const Rational& c, const FactorBudget& budget) {
  if (c == 0) throw InvalidInput("zero constant in a family");
  return prime_support(Integer(c.get_num()), budget).unite(
      c.get_den() == 1 ? PrimeSet{} : prime_support(Integer(c.get_den()), budget));
}

inline void certify_coprime(const std::vector<MultiPoly>& family) {
  MultiPoly g(family.front().vars());
  for (const auto& f : family) g = poly_gcd(g, f);
  if (!g.is_constant()) {
    throw InvalidInput("family is not coprime: common factor " + g.to_string());
  }
}

// Drops zero members; a family with a nonzero constant member contributes the
// primes of that constant and is otherwise dropped. Returns the surviving families.
inline std::vector<std::vector<MultiPoly>> normalize_families(const std::vector<std::vector<MultiPoly>>& families,
                                                              PrimeSet& extra, const FactorBudget& budget) {
  std::vector<std::vector<MultiPoly>> out;
  for (const auto& fam : families) {
    std::vector<MultiPoly> kept;
    std::optional<Rational> constant;
    for (const auto& f : fam) {
      if (f.is_zero()) continue;
      if (f.is_constant()) {
        if (!constant) constant = f.constant_value();
        continue;
      }
      if (std::find(kept.begin(), kept.end(), f) == kept.end()) kept.push_back(f);
    }
    if (constant) {
      extra = extra.unite(primes_of_constant(*constant, budget));
      continue;
    }
    if (kept.empty()) throw InvalidInput("family with only zero members has gcd 0");
    out.push_back(std::move(kept));
  }
  return out;
}

inline void verify_points(const UniSieveProblem& prob, UniSieveResult& res, const FactorBudget& budget,
                          bool keep_certificates) {
  std::vector<std::vector<Integer>> kept;
  for (const auto& x : res.points) {
    UniPointCertificate c;
    c.x = x;
    Rational v = prob.P.eval(x);
    if (v == 0 || v.get_den() != 1) throw std::logic_error("sieve emitted a point with P(x) = 0 or non-integral");
    c.P_value = v.get_num();
    c.factorization = factorize(c.P_value, budget);
    auto om = omega_outside(c.factorization, res.S);
    if (!om) {
      ++res.points_unverifiable;
      continue;
    }
    c.omega_outside = *om;
    if (*om > res.r) {
      throw std::logic_error("sieve certificate failed: P(x) has " + std::to_string(*om) +
                             " prime factors outside S, bound " + std::to_string(res.r));
    }
    for (const auto& fam : prob.families) {
      Integer g = 0;
      for (const auto& f : fam) g = gcd(g, Integer(f.eval(x).get_num()));
      if (g == 0) throw std::logic_error("sieve certificate failed: family vanishes at an emitted point");
      auto gf = factorize(g, budget);
      if (!gf.complete) throw std::logic_error("sieve certificate: family gcd could not be factored");
      if (!res.S.includes(gf.prime_set())) {
        throw std::logic_error("sieve certificate failed: family gcd " + g.get_str() + " has primes outside S");
      }
      c.family_gcds.push_back(g);
    }
    kept.push_back(x);
    if (keep_certificates) res.certificates.push_back(std::move(c));
  }
  res.points = std::move(kept);
}

inline UniSieveResult sieve_level(const UniSieveProblem& input, const UniSieveBudget& budget) {
  const auto& vars = input.P.vars();
  const std::size_t d = vars.size();
  if (d == 0) throw InvalidInput("multivariable_sieve: no variables");
  if (input.P.is_zero()) throw InvalidInput("multivariable_sieve: P is zero");
  if (!input.P.has_integer_coefficients()) throw InvalidInput("multivariable_sieve: P must have integer coefficients");
  for (const auto& fam : input.families)
    for (const auto& f : fam) {
      if (f.vars() != vars) throw InvalidInput("multivariable_sieve: family member over different variables");
      if (!f.has_integer_coefficients()) throw InvalidInput("multivariable_sieve: family member " + f.to_string() +
                                                            " must have integer coefficients");
    }

  UniSieveResult res;
  res.vars = vars;
  PrimeSet extra;
  auto families = normalize_families(input.families, extra, budget.factor);
  for (const auto& fam : families) certify_coprime(fam);
  res.family_count = families.size();

  if (d == 1) {
    // Base case: certificates sum_j Q_ij P_ij = m_i bound every family gcd.
    for (const auto& fam : families) {
      auto cert = gcd_certificate(fam);
      extra = extra.unite(prime_support(cert.m, budget.factor));
    }
    PrimeSet S_P;
    if (input.P.is_constant()) {
      S_P = primes_of_constant(input.P.constant_value(), budget.factor);
    } else {
      S_P = bad_prime_bound(input.P, budget.factor).primes;
      res.r_single = budget.r_per_degree * input.P.degree();
    }
    res.S_constants = extra;
    res.S = S_P.unite(extra);
    res.r = res.r_single;
    res.degree_bound = input.P.degree();
    res.last_variable = vars[0];
    UniLayer layer;
    auto found = detail::search_progression(input.P, res.S, 1, 0, res.r, Integer(static_cast<unsigned long>(budget.candidates - 1)),
                                            budget.want, budget.factor);
    layer.values = found.values;
    layer.exhausted = found.exhausted;
    layer.skipped_incomplete = found.skipped_incomplete;
    for (const auto& v : found.values) res.points.push_back({v});
    res.single_instance_bad_primes.push_back(input.P.is_constant() ? S_P : bad_prime_bound(input.P, budget.factor).primes);
    res.layers.push_back(std::move(layer));
    verify_points(input, res, budget.factor, false);
    return res;
  }

  // Choose x_d: least total degree, ties to the highest index.
  std::size_t xd = 0;
  unsigned best = ~0u;
  for (std::size_t v = 0; v < d; ++v) {
    unsigned s = input.P.degree_in(v);
    for (const auto& fam : families)
      for (const auto& f : fam) s += f.degree_in(v);
    if (s <= best) {
      best = s;
      xd = v;
    }
  }
  res.last_variable = vars[xd];

  // Content and primitive parts in x_d; each family member is replaced by
  // one of its two parts, in every combination.
  std::vector<std::vector<MultiPoly>> expanded;
  for (const auto& fam : families) {
    std::vector<std::vector<MultiPoly>> choices{{}};
    for (const auto& f : fam) {
      auto split = split_content(f, xd);
      MultiPoly prim(vars);
      for (std::size_t l = 0; l < split.coefficients.size(); ++l)
        prim = prim + split.coefficients[l] * var_power(vars, xd, static_cast<unsigned>(l));
      std::vector<MultiPoly> parts{split.H};
      if (!prim.is_constant()) parts.push_back(prim);
      std::vector<std::vector<MultiPoly>> next;
      for (const auto& c : choices)
        for (const auto& part : parts) {
          auto cc = c;
          cc.push_back(part);
          next.push_back(std::move(cc));
        }
      choices = std::move(next);
    }
    for (auto& c : choices) expanded.push_back(std::move(c));
  }
  expanded = normalize_families(expanded, extra, budget.factor);
  for (const auto& fam : expanded) certify_coprime(fam);

  auto psplit = split_content(input.P, xd);
  UniSieveProblem sub;
  sub.P = drop_variable(psplit.H, xd);
  {
    std::vector<MultiPoly> hi;
    for (const auto& h : psplit.coefficients)
      if (!h.is_zero()) hi.push_back(drop_variable(h, xd));
    sub.families.push_back(std::move(hi));
  }
  std::vector<MultiPoly> dependent;  // distinct members depending on x_d
  std::vector<MultiPoly> Q;          // one elimination certificate per family with such members
  for (const auto& fam : expanded) {
    bool any_dep = std::any_of(fam.begin(), fam.end(), [&](const MultiPoly& f) { return f.depends_on(xd); });
    if (!any_dep) {
      std::vector<MultiPoly> whole;
      for (const auto& f : fam) whole.push_back(drop_variable(f, xd));
      sub.families.push_back(std::move(whole));
      continue;
    }
    std::optional<MultiPoly> q;
    for (const auto& f : fam) {
      if (f.depends_on(xd)) {
        if (std::find(dependent.begin(), dependent.end(), f) == dependent.end()) dependent.push_back(f);
        std::vector<MultiPoly> coeffs;
        for (unsigned l = 0; l <= f.degree_in(xd); ++l) {
          MultiPoly c = f.coefficient(xd, l);
          if (!c.is_zero()) coeffs.push_back(drop_variable(c, xd));
        }
        sub.families.push_back(std::move(coeffs));
      } else if (!q) {
        q = f;
      }
    }
    if (!q) {
      // Res_{x_d}(F_1, sum_j lambda_j F_j) lies in the ideal of the family.
      for (unsigned attempt = 0; attempt < 12 && (!q || q->is_zero()); ++attempt) {
        MultiPoly comb(vars);
        for (std::size_t j = 1; j < fam.size(); ++j) {
          Integer lambda = attempt == 0 ? Integer(1) : pow(Integer(static_cast<unsigned long>(j + 1)), attempt);
          comb = comb + Rational(lambda) * fam[j];
        }
        q = resultant(fam[0], comb, xd);
      }
      if (!q || q->is_zero()) throw std::logic_error("multivariable_sieve: no nonzero elimination certificate found");
    }
    Q.push_back(*q);
  }

  MultiPoly prim_P(vars);
  for (std::size_t l = 0; l < psplit.coefficients.size(); ++l)
    prim_P = prim_P + psplit.coefficients[l] * var_power(vars, xd, static_cast<unsigned>(l));
  unsigned deg_calP = prim_P.degree_in(xd);
  res.degree_bound = deg_calP;
  for (const auto& f : dependent) res.degree_bound += f.degree_in(xd);
  res.r_single = budget.r_per_degree * deg_calP;

  auto sub_res = std::make_shared<UniSieveResult>(sieve_level(sub, budget));
  std::vector<Integer> small;
  for (auto p : primes_up_to(res.degree_bound)) small.push_back(from_u64(p));
  res.S_constants = extra;
  res.S = PrimeSet(small).unite(sub_res->S).unite(extra);
  res.r = sub_res->r + res.r_single;

  for (const auto& prefix : sub_res->points) {
    std::vector<Integer> point = prefix;
    point.insert(point.begin() + static_cast<long>(xd), Integer(0));
    Integer M = 1;
    for (const auto& q : Q) M *= Integer(q.eval(point).get_num());
    if (M == 0) {
      ++res.prefixes_skipped;
      continue;
    }
    UniLayer layer;
    layer.prefix = prefix;
    layer.M = M;
    MultiPoly calP = univariate(coefficients_at(prim_P, xd, point), "t");
    MultiPoly product = calP;
    for (const auto& f : dependent) product = product * univariate(coefficients_at(f, xd, point), "t");
    try {
      layer.progression = progression_avoiding(M, {product}, budget.factor);
    } catch (const ResourceExhausted&) {
      ++res.prefixes_skipped;
      continue;
    }
    if (!res.S.includes(layer.progression.exempt)) {
      throw std::logic_error("multivariable_sieve: progression exemptions escape S");
    }
    const Integer a = layer.progression.a, b = layer.progression.b;
    // The single-variable instance calP(a j + b).
    MultiPoly inst({"j"});
    {
      MultiPoly lin({"j"});
      lin.add_term(Monomial{1}, Rational(a));
      lin.add_term(Monomial{0}, Rational(b));
      std::vector<Integer> c = coefficients_at(calP, 0, {Integer(0)});
      for (std::size_t i = 0; i < c.size(); ++i) inst = inst + Rational(c[i]) * lin.pow(static_cast<unsigned>(i));
    }
    try {
      PrimeSet bad = inst.is_constant() ? primes_of_constant(inst.constant_value(), budget.factor)
                                        : bad_prime_bound(inst, budget.factor).primes;
      if (!res.S.includes(bad)) throw std::logic_error("multivariable_sieve: single-variable bad primes escape S");
      res.single_instance_bad_primes.push_back(bad);
    } catch (const ResourceExhausted&) {
      ++res.prefixes_skipped;
      continue;
    }
    Integer bound = b + a * Integer(static_cast<unsigned long>(budget.candidates - 1));
    auto found = search_progression(calP, res.S, a, b, res.r_single, bound, budget.want, budget.factor);
    layer.values = found.values;
    layer.exhausted = found.exhausted;
    layer.skipped_incomplete = found.skipped_incomplete;
    for (const auto& t : found.values) {
      std::vector<Integer> x = point;
      x[xd] = t;
      res.points.push_back(std::move(x));
    }
    if (res.points.size() > budget.max_points) {
      throw ResourceExhausted("multivariable_sieve: more than " + std::to_string(budget.max_points) +
                                  " points at one level",
                              static_cast<long long>(res.points.size()));
    }
    res.layers.push_back(std::move(layer));
  }
  res.sub = sub_res;
  verify_points(input, res, budget.factor, false);

  // Prefix density in affine (d-1)-space.
  std::vector<VectorQ> pre;
  for (const auto& p : sub_res->points) {
    VectorQ v;
    for (const auto& x : p) v.push_back(Rational(x));
    pre.push_back(std::move(v));
  }
  if (!pre.empty()) res.prefix_density = zariski_density_test(pre, std::min(2u, budget.density_degree), {});
  return res;
}

}  // namespace detail

/// The recursion on (P, families); every emitted point carries a certificate.
inline UniSieveResult multivariable_sieve(const UniSieveProblem& problem, const UniSieveBudget& budget = {}) {
  if (budget.candidates == 0 || budget.want == 0) throw InvalidInput("multivariable_sieve: empty search budget");
  UniSieveResult res = detail::sieve_level(problem, budget);
  detail::verify_points(problem, res, budget.factor, true);
  return res;
}

// ---------------------------------------------------------------------------
// Group level

enum class UniChart { Log, Matrix };

struct UniGroupPoint {
  std::vector<Integer> lattice_coordinates;
  MatrixQ element;
  Rational p_value = 0;
  Integer s_part = 0;
  unsigned omega_outside = 0;
  std::vector<Rational> family_gcds;
};

struct UniGroupSieveResult {
  MalcevLattice lattice;
  UniChart chart = UniChart::Log;
  UniSieveProblem lattice_problem;
  Integer denominator = 1;  // common denominator cleared from p
  UniSieveResult sieve;
  unsigned r = 0;
  PrimeSet S;
  std::vector<UniGroupPoint> points;
};

namespace detail {

using PolyMatrix = std::vector<std::vector<MultiPoly>>;

inline PolyMatrix poly_mul(const PolyMatrix& a, const PolyMatrix& b, const std::vector<std::string>& vars) {
  const std::size_t n = a.size();
  PolyMatrix out(n, std::vector<MultiPoly>(n, MultiPoly(vars)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      if (a[i][k].is_zero()) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (!b[k][j].is_zero()) out[i][j] = out[i][j] + a[i][k] * b[k][j];
    }
  return out;
}

// The chart coordinates of exp(scale * sum c_k basis_k) as polynomials in c.
inline std::vector<MultiPoly> chart_images(const MalcevLattice& L, UniChart chart, const std::vector<std::string>& cvars) {
  const std::size_t n = L.n;
  PolyMatrix X(n, std::vector<MultiPoly>(n, MultiPoly(cvars)));
  for (std::size_t k = 0; k < L.basis.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (L.basis[k](i, j) != 0)
          X[i][j] = X[i][j] + Rational(Rational(L.scale) * L.basis[k](i, j)) * MultiPoly::variable(cvars, k);
  std::vector<MultiPoly> out;
  if (chart == UniChart::Log) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) out.push_back(X[i][j]);
    return out;
  }
  PolyMatrix E(n, std::vector<MultiPoly>(n, MultiPoly(cvars))), power = E;
  for (std::size_t i = 0; i < n; ++i) E[i][i] = power[i][i] = MultiPoly::constant(cvars, 1);
  Integer fact = 1;
  for (std::size_t k = 1; k < n; ++k) {
    power = poly_mul(power, X, cvars);
    fact *= static_cast<unsigned long>(k);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) E[i][j] = E[i][j] + Rational(Integer(1), fact) * power[i][j];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.push_back(E[i][j]);
  return out;
}

inline std::vector<Rational> chart_point(const MatrixQ& g, UniChart chart) {
  return chart == UniChart::Log ? upper_coordinates(nilpotent_log(g)) : g.entries();
}

}  // namespace detail

inline std::vector<std::string> chart_variables(std::size_t n, UniChart chart) {
  return chart == UniChart::Log ? upper_coordinate_names(n) : matrix_variables(n);
}

/// Runs the sieve on exp(Lambda) for the Malcev lattice Lambda of the group
/// generated by unipotent upper-triangular `gens`. `p` and the families are
/// polynomials in the chart coordinates (log entries above the diagonal, or
/// all matrix entries).
inline UniGroupSieveResult unipotent_group_sieve(const std::vector<MatrixQ>& gens, const MultiPoly& p,
                                                 const std::vector<std::vector<MultiPoly>>& families,
                                                 UniChart chart = UniChart::Log, const UniSieveBudget& budget = {}) {
  UniGroupSieveResult out;
  out.chart = chart;
  out.lattice = malcev_lattice(gens);
  const std::size_t n = out.lattice.n;
  const auto expected_vars = chart_variables(n, chart);
  if (p.vars() != expected_vars) throw InvalidInput("unipotent_group_sieve: p is not over the chart variables");
  for (const auto& fam : families)
    for (const auto& f : fam)
      if (f.vars() != expected_vars) throw InvalidInput("unipotent_group_sieve: family member not over the chart variables");

  const auto cvars = indexed_variables(out.lattice.basis.size(), "c");
  auto images = detail::chart_images(out.lattice, chart, cvars);
  MultiPoly pc = p.compose(images);
  out.denominator = pc.denominator_lcm();
  out.lattice_problem.P = Rational(out.denominator) * pc;
  PrimeSet family_denominators;
  for (const auto& fam : families) {
    std::vector<MultiPoly> fc;
    for (const auto& f : fam) {
      MultiPoly g = f.compose(images);
      Integer den = g.denominator_lcm();
      if (den != 1) family_denominators = family_denominators.unite(prime_support(den, budget.factor));
      fc.push_back(Rational(den) * g);
    }
    out.lattice_problem.families.push_back(std::move(fc));
  }
  out.sieve = multivariable_sieve(out.lattice_problem, budget);
  out.S = out.sieve.S;
  if (out.denominator != 1) out.S = out.S.unite(prime_support(out.denominator, budget.factor));
  out.S = out.S.unite(family_denominators);
  out.r = out.sieve.r;

  // Dual evaluation: the matrix route must agree with the lattice route.
  for (const auto& c : out.sieve.points) {
    UniGroupPoint gp;
    gp.lattice_coordinates = c;
    gp.element = out.lattice.element(c);
    auto coords = detail::chart_point(gp.element, chart);
    gp.p_value = p.eval(coords);
    if (gp.p_value != pc.eval(c)) throw std::logic_error("unipotent_group_sieve: matrix and lattice evaluations differ");
    gp.s_part = s_integer_part(gp.p_value, out.S);
    auto om = omega_outside(gp.s_part, out.S, true, budget.factor);
    if (!om || *om > out.r) throw std::logic_error("unipotent_group_sieve: emitted element fails the r bound");
    gp.omega_outside = *om;
    for (const auto& fam : families) {
      Rational g = 0;
      for (const auto& f : fam) {
        Rational v = f.eval(coords);
        g = make_rational(gcd(Integer(g.get_num()) * Integer(v.get_den()), Integer(v.get_num()) * Integer(g.get_den())),
                          Integer(g.get_den()) * Integer(v.get_den()));
      }
      if (g == 0) throw std::logic_error("unipotent_group_sieve: family vanishes at an emitted element");
      PrimeSet gp_primes = prime_support(Integer(g.get_num()), budget.factor);
      if (g.get_den() != 1) gp_primes = gp_primes.unite(prime_support(Integer(g.get_den()), budget.factor));
      if (!out.S.includes(gp_primes)) throw std::logic_error("unipotent_group_sieve: family gcd escapes S");
      gp.family_gcds.push_back(g);
    }
    out.points.push_back(std::move(gp));
  }
  return out;
}

}  // namespace affsieve
