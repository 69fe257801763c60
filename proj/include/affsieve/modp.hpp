#pragma once

/**
 * @file modp.hpp
 * @brief Reductions mod q: finite images of a group, counts N_f(d), local
 * densities beta(d), ramified primes, point counts of varieties over F_p and
 * the splitting census of those counts.
 *
 * Point counts use a planner that solves coordinates instead of enumerating
 * them wherever an equation allows it:
 *   - an equation with a single open coordinate is solved (linear directly,
 *     otherwise by scanning residues);
 *   - a coordinate that no remaining equation mentions contributes a factor p;
 *   - the last equation is counted in closed form when it is linear in a
 *     coordinate whose coefficient is already fixed, has the shape A + B*y*z,
 *     or is univariate of degree <= 2 (Legendre symbol);
 *   - otherwise the coordinate that makes the most equations univariate is
 *     enumerated.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "affsieve/arith.hpp"
#include "affsieve/matgroup.hpp"
#include "affsieve/poly.hpp"

namespace affsieve {

namespace detail {

inline std::int64_t mod_pos(std::int64_t a, std::int64_t m) {
  a %= m;
  return a < 0 ? a + m : a;
}

inline std::int64_t mul_mod(std::int64_t a, std::int64_t b, std::int64_t m) {
  return static_cast<std::int64_t>(static_cast<__int128>(a) * b % m);
}

inline std::int64_t pow_mod(std::int64_t a, std::uint64_t e, std::int64_t m) {
  std::int64_t r = 1 % m;
  a = mod_pos(a, m);
  while (e) {
    if (e & 1) r = mul_mod(r, a, m);
    a = mul_mod(a, a, m);
    e >>= 1;
  }
  return r;
}

inline std::int64_t to_small(const Integer& z, const char* what) {
  if (!z.fits_slong_p()) throw InvalidInput(std::string(what) + " does not fit in 63 bits");
  return z.get_si();
}

// q mod m of a rational whose denominator is invertible mod m.
inline std::int64_t reduce_rational(const Rational& x, std::int64_t m) {
  Integer M(static_cast<long>(m));
  Integer num = x.get_num() % M, den = x.get_den() % M;
  if (gcd(Integer(x.get_den()), M) != 1) {
    throw InvalidInput("denominator of " + to_string(x) + " shares a factor with the modulus " + M.get_str());
  }
  Integer inv;
  mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), M.get_mpz_t());
  Integer r = (num * inv) % M;
  if (r < 0) r += M;
  return r.get_si();
}

struct KeyHash {
  std::size_t operator()(const std::vector<std::int64_t>& v) const {
    std::size_t h = v.size();
    for (auto x : v) h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

}  // namespace detail

/// A polynomial with coefficients reduced mod m, evaluated on int64 residues.
class ModPoly {
 public:
  ModPoly() = default;

  ModPoly(const MultiPoly& f, std::int64_t m) : m_(m), nvars_(f.nvars()) {
    for (const auto& [mono, c] : f.terms()) {
      Term t;
      t.coeff = detail::reduce_rational(c, m);
      if (t.coeff == 0) continue;
      for (std::size_t i = 0; i < mono.size(); ++i)
        if (mono[i]) t.factors.emplace_back(static_cast<unsigned>(i), mono[i]);
      terms_.push_back(std::move(t));
    }
  }

  std::int64_t modulus() const { return m_; }
  bool is_zero() const { return terms_.empty(); }

  std::int64_t eval(const std::int64_t* x) const {
    std::int64_t s = 0;
    for (const auto& t : terms_) {
      std::int64_t v = t.coeff;
      for (const auto& [i, e] : t.factors) {
        std::int64_t xi = x[i];
        for (unsigned k = 0; k < e; ++k) v = detail::mul_mod(v, xi, m_);
      }
      s += v;
      if (s >= m_) s -= m_;
    }
    return s;
  }

  std::int64_t eval(const std::vector<std::int64_t>& x) const { return eval(x.data()); }

 private:
  struct Term {
    std::int64_t coeff = 0;
    std::vector<std::pair<unsigned, unsigned>> factors;
  };
  std::int64_t m_ = 1;
  std::size_t nvars_ = 0;
  std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------
// Matrices mod q and finite images

struct MatrixModQ {
  std::int64_t q = 1;
  std::size_t n = 0;
  std::vector<std::int64_t> a;

  static MatrixModQ identity(std::size_t n, std::int64_t q) {
    MatrixModQ m{q, n, std::vector<std::int64_t>(n * n, 0)};
    for (std::size_t i = 0; i < n; ++i) m.a[i * n + i] = 1 % q;
    return m;
  }

  friend MatrixModQ operator*(const MatrixModQ& x, const MatrixModQ& y) {
    MatrixModQ out{x.q, x.n, std::vector<std::int64_t>(x.n * x.n, 0)};
    for (std::size_t i = 0; i < x.n; ++i)
      for (std::size_t j = 0; j < x.n; ++j) {
        __int128 s = 0;
        for (std::size_t k = 0; k < x.n; ++k) s += static_cast<__int128>(x.a[i * x.n + k]) * y.a[k * x.n + j];
        out.a[i * x.n + j] = static_cast<std::int64_t>(s % x.q);
      }
    return out;
  }

  friend bool operator==(const MatrixModQ& x, const MatrixModQ& y) { return x.q == y.q && x.a == y.a; }

  std::int64_t det() const {
    // Leibniz expansion is fine for the n <= 4 used at desk scale; larger n
    // falls back to cofactor recursion with the same cost profile.
    std::function<std::int64_t(std::vector<std::size_t>, std::size_t)> rec =
        [&](std::vector<std::size_t> cols, std::size_t row) -> std::int64_t {
      if (cols.empty()) return 1 % q;
      std::int64_t s = 0;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        std::vector<std::size_t> rest = cols;
        rest.erase(rest.begin() + static_cast<long>(k));
        std::int64_t term = detail::mul_mod(a[row * n + cols[k]], rec(rest, row + 1), q);
        s = (k % 2 == 0) ? (s + term) % q : detail::mod_pos(s - term, q);
      }
      return s;
    };
    std::vector<std::size_t> cols(n);
    for (std::size_t i = 0; i < n; ++i) cols[i] = i;
    return rec(cols, 0);
  }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < n; ++i) {
      s += i ? ",[" : "[";
      for (std::size_t j = 0; j < n; ++j) s += (j ? "," : "") + std::to_string(a[i * n + j]);
      s += "]";
    }
    return s + "] mod " + std::to_string(q);
  }
};

inline MatrixModQ reduce_mod(const MatrixQ& g, std::int64_t q) {
  if (q < 1) throw InvalidInput("reduce_mod: modulus must be positive");
  MatrixModQ out{q, g.dim(), {}};
  for (const auto& x : g.entries()) {
    if (gcd(Integer(x.get_den()), Integer(static_cast<long>(q))) != 1) {
      throw InvalidInput("reduce_mod: entry " + to_string(x) + " has a denominator sharing a factor with " +
                         std::to_string(q));
    }
    out.a.push_back(detail::reduce_rational(x, q));
  }
  return out;
}

inline MatrixModQ project(const MatrixModQ& g, std::int64_t d) {
  if (g.q % d != 0) throw InvalidInput("project: modulus does not divide the source modulus");
  MatrixModQ out{d, g.n, g.a};
  for (auto& x : out.a) x %= d;
  return out;
}

inline bool is_squarefree_small(std::int64_t q) {
  for (std::int64_t p = 2; p * p <= q; ++p)
    if (q % (p * p) == 0) return false;
  return q >= 1;
}

inline std::vector<std::int64_t> prime_divisors_small(std::int64_t q) {
  std::vector<std::int64_t> out;
  for (std::int64_t p = 2; p * p <= q; ++p) {
    if (q % p) continue;
    out.push_back(p);
    while (q % p == 0) q /= p;
  }
  if (q > 1) out.push_back(q);
  return out;
}

/// The subgroup generated by the reductions, with a word for each element:
/// elements[i] = generators[via[i]] * elements[parent[i]].
struct FiniteImage {
  std::int64_t q = 1;
  std::size_t n = 0;
  std::vector<MatrixModQ> generators;
  std::vector<MatrixModQ> elements;
  std::vector<std::int64_t> parent;  // -1 for the identity
  std::vector<std::int64_t> via;

  std::size_t order() const { return elements.size(); }

  /// Generator indices whose product, applied right to left, gives element i.
  std::vector<std::size_t> word(std::size_t i) const {
    std::vector<std::size_t> w;
    while (parent[i] >= 0) {
      w.push_back(static_cast<std::size_t>(via[i]));
      i = static_cast<std::size_t>(parent[i]);
    }
    return w;
  }
};

inline FiniteImage generate_image(const GeneratorSet& gens, std::int64_t q, std::size_t cap = 2'000'000) {
  if (!is_squarefree_small(q)) throw InvalidInput("generate_image: modulus " + std::to_string(q) + " is not squarefree");
  if (gens.dim() == 0) throw InvalidInput("generate_image: no generators");
  FiniteImage img;
  img.q = q;
  img.n = gens.dim();
  for (const auto& g : gens.generators()) img.generators.push_back(reduce_mod(g, q));
  std::unordered_map<std::vector<std::int64_t>, std::size_t, detail::KeyHash> index;
  auto id = MatrixModQ::identity(img.n, q);
  index.emplace(id.a, 0);
  img.elements.push_back(id);
  img.parent.push_back(-1);
  img.via.push_back(-1);
  for (std::size_t head = 0; head < img.elements.size(); ++head) {
    for (std::size_t j = 0; j < img.generators.size(); ++j) {
      MatrixModQ next = img.generators[j] * img.elements[head];
      if (index.count(next.a)) continue;
      if (img.elements.size() >= cap) {
        throw ResourceExhausted("generate_image: cap " + std::to_string(cap) + " reached mod " + std::to_string(q),
                                static_cast<long long>(img.elements.size()));
      }
      index.emplace(next.a, img.elements.size());
      img.elements.push_back(std::move(next));
      img.parent.push_back(static_cast<std::int64_t>(head));
      img.via.push_back(static_cast<std::int64_t>(j));
    }
  }
  return img;
}

/// |SL_n(F_p)| = p^{n(n-1)/2} prod_{k=2..n} (p^k - 1).
inline Integer sl_order(std::size_t n, const Integer& p) {
  Integer out = pow(p, n * (n - 1) / 2);
  for (std::size_t k = 2; k <= n; ++k) out *= pow(p, k) - 1;
  return out;
}

// ---------------------------------------------------------------------------
// Point counts over F_p

struct VarietyCount {
  std::int64_t p = 0;
  Integer count = 0;
  std::string strategy;
  std::uint64_t work = 0;  // innermost evaluations performed
};

namespace detail {

struct PlanStep {
  enum Kind { Enumerate, Solve, Check, FinalLinear, FinalHyperbola, FinalUnivariate } kind = Enumerate;
  std::size_t var = 0, var2 = 0;
  std::size_t eq = 0;
  unsigned degree = 0;
  unsigned free_after = 0;   // coordinates freed by this step (factor p each)
  unsigned others = 0;       // open coordinates besides `var` in a final linear equation
  std::vector<std::size_t> other_vars;
  std::vector<std::size_t> checks;  // equations fully determined after this step
};

struct VarietyPlan {
  std::size_t nvars = 0;
  unsigned free_initial = 0;
  std::vector<PlanStep> steps;
  std::vector<std::size_t> enumerated;
};

inline std::vector<std::size_t> open_vars(const MultiPoly& e, const std::vector<bool>& assigned) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < e.nvars(); ++i)
    if (!assigned[i] && e.depends_on(i)) out.push_back(i);
  return out;
}

inline VarietyPlan plan_variety(const std::vector<MultiPoly>& eqs, std::size_t nvars) {
  VarietyPlan plan;
  plan.nvars = nvars;
  std::vector<bool> assigned(nvars, false);
  std::vector<bool> used(eqs.size(), false);
  auto mentioned = [&](std::size_t v) {
    for (std::size_t e = 0; e < eqs.size(); ++e)
      if (!used[e] && eqs[e].depends_on(v)) return true;
    return false;
  };
  auto release_free = [&]() {
    unsigned k = 0;
    for (std::size_t v = 0; v < nvars; ++v)
      if (!assigned[v] && !mentioned(v)) {
        assigned[v] = true;
        ++k;
      }
    return k;
  };
  auto collect_checks = [&](PlanStep& st) {
    for (std::size_t e = 0; e < eqs.size(); ++e)
      if (!used[e] && open_vars(eqs[e], assigned).empty()) {
        used[e] = true;
        st.checks.push_back(e);
      }
  };
  // Equations that are constant from the start.
  {
    PlanStep st;
    st.kind = PlanStep::Check;
    collect_checks(st);
    if (!st.checks.empty()) plan.steps.push_back(st);
  }
  plan.free_initial = release_free();
  for (;;) {
    std::vector<std::size_t> remaining;
    for (std::size_t e = 0; e < eqs.size(); ++e)
      if (!used[e]) remaining.push_back(e);
    if (remaining.empty()) break;

    if (remaining.size() == 1) {
      const std::size_t e = remaining.front();
      auto open = open_vars(eqs[e], assigned);
      // Linear in some y whose coefficient involves no other open coordinate.
      for (std::size_t y : open) {
        if (eqs[e].degree_in(y) != 1) continue;
        MultiPoly a = eqs[e].coefficient(y, 1);
        if (!open_vars(a, assigned).empty()) continue;
        PlanStep st;
    st.kind = PlanStep::FinalLinear;
        st.var = y;
        st.eq = e;
        st.others = static_cast<unsigned>(open.size() - 1);
        for (std::size_t v : open)
          if (v != y) st.other_vars.push_back(v);
        plan.steps.push_back(st);
        return plan;
      }
      // A + B*y*z with y, z open nowhere else.
      if (open.size() == 2) {
        std::size_t y = open[0], z = open[1];
        bool shape = true;
        for (const auto& [m, c] : eqs[e].terms()) {
          bool has = m[y] || m[z];
          if (has && !(m[y] == 1 && m[z] == 1)) shape = false;
        }
        if (shape) {
          PlanStep st;
    st.kind = PlanStep::FinalHyperbola;
          st.var = y;
          st.var2 = z;
          st.eq = e;
          plan.steps.push_back(st);
          return plan;
        }
      }
      if (open.size() == 1 && eqs[e].degree_in(open[0]) <= 2) {
        PlanStep st;
    st.kind = PlanStep::FinalUnivariate;
        st.var = open[0];
        st.eq = e;
        st.degree = eqs[e].degree_in(open[0]);
        plan.steps.push_back(st);
        return plan;
      }
    }

    // Solve an equation with a single open coordinate, lowest degree first.
    std::optional<std::size_t> solve_eq;
    for (std::size_t e : remaining) {
      auto open = open_vars(eqs[e], assigned);
      if (open.size() != 1) continue;
      if (!solve_eq || eqs[e].degree_in(open[0]) < eqs[*solve_eq].degree_in(open_vars(eqs[*solve_eq], assigned)[0])) {
        solve_eq = e;
      }
    }
    PlanStep st;
    st.kind = PlanStep::Enumerate;
    if (solve_eq) {
      st.kind = PlanStep::Solve;
      st.eq = *solve_eq;
      st.var = open_vars(eqs[*solve_eq], assigned)[0];
      st.degree = eqs[*solve_eq].degree_in(st.var);
      used[*solve_eq] = true;
    } else {
      std::size_t best = nvars;
      int best_score = -1;
      unsigned best_deg = ~0u;
      for (std::size_t v = 0; v < nvars; ++v) {
        if (assigned[v]) continue;
        assigned[v] = true;
        int score = 0;
        unsigned deg = 0;
        for (std::size_t e : remaining) {
          if (open_vars(eqs[e], assigned).size() == 1) ++score;
          deg += eqs[e].degree_in(v);
        }
        assigned[v] = false;
        if (score > best_score || (score == best_score && deg < best_deg)) {
          best = v;
          best_score = score;
          best_deg = deg;
        }
      }
      st.var = best;
      plan.enumerated.push_back(best);
    }
    assigned[st.var] = true;
    collect_checks(st);
    st.free_after = release_free();
    plan.steps.push_back(st);
  }
  return plan;
}

inline std::int64_t legendre(std::int64_t a, std::int64_t p) {
  a = mod_pos(a, p);
  if (a == 0) return 0;
  return pow_mod(a, static_cast<std::uint64_t>((p - 1) / 2), p) == 1 ? 1 : -1;
}

class VarietyCounter {
 public:
  VarietyCounter(const std::vector<MultiPoly>& eqs, const VarietyPlan& plan, std::int64_t p)
      : plan_(plan), p_(p), x_(plan.nvars, 0) {
    for (const auto& e : eqs) eqs_.push_back(ModPoly(e, p));
    for (const auto& st : plan.steps) {
      if (st.kind == PlanStep::FinalLinear) {
        coef1_ = ModPoly(eqs[st.eq].coefficient(st.var, 1), p);
        coef0_ = ModPoly(eqs[st.eq].coefficient(st.var, 0), p);
      }
      if (st.kind == PlanStep::FinalHyperbola) {
        MultiPoly b(eqs[st.eq].vars()), a(eqs[st.eq].vars());
        for (const auto& [m, c] : eqs[st.eq].terms()) {
          if (m[st.var]) {
            Monomial mm = m;
            mm[st.var] = mm[st.var2] = 0;
            b.add_term(mm, c);
          } else {
            a.add_term(m, c);
          }
        }
        coef1_ = ModPoly(b, p);
        coef0_ = ModPoly(a, p);
      }
      if (st.kind == PlanStep::FinalUnivariate) {
        for (unsigned k = 0; k <= 2; ++k) uni_[k] = ModPoly(eqs[st.eq].coefficient(st.var, k), p);
      }
    }
  }

  Integer count() {
    Integer P(static_cast<long>(p_));
    Integer mult = pow(P, plan_.free_initial);
    return mult * run(0);
  }

  std::uint64_t work() const { return work_; }

 private:
  bool checks_pass(const PlanStep& st) {
    for (std::size_t e : st.checks)
      if (eqs_[e].eval(x_) != 0) return false;
    return true;
  }

  // Number of completions from step k on, with x_ holding assigned coordinates.
  Integer run(std::size_t k) {
    if (k == plan_.steps.size()) return 1;
    const PlanStep& st = plan_.steps[k];
    const Integer P(static_cast<long>(p_));
    switch (st.kind) {
      case PlanStep::Check:
        ++work_;
        return checks_pass(st) ? run(k + 1) : Integer(0);
      case PlanStep::Enumerate: {
        Integer total = 0;
        for (std::int64_t v = 0; v < p_; ++v) {
          x_[st.var] = v;
          ++work_;
          if (checks_pass(st)) total += run(k + 1);
        }
        return st.free_after ? total * pow(P, st.free_after) : total;
      }
      case PlanStep::Solve: {
        Integer total = 0;
        auto visit = [&](std::int64_t v) {
          x_[st.var] = v;
          if (checks_pass(st)) total += run(k + 1);
        };
        if (st.degree == 1) {
          x_[st.var] = 0;
          std::int64_t b = eqs_[st.eq].eval(x_);
          x_[st.var] = 1;
          std::int64_t a = mod_pos(eqs_[st.eq].eval(x_) - b, p_);
          work_ += 2;
          if (a != 0) {
            visit(mul_mod(mod_pos(-b, p_), pow_mod(a, static_cast<std::uint64_t>(p_ - 2), p_), p_));
          } else if (b == 0) {
            for (std::int64_t v = 0; v < p_; ++v) visit(v);
          }
        } else {
          for (std::int64_t v = 0; v < p_; ++v) {
            x_[st.var] = v;
            ++work_;
            if (eqs_[st.eq].eval(x_) == 0) visit(v);
          }
        }
        return st.free_after ? total * pow(P, st.free_after) : total;
      }
      case PlanStep::FinalLinear: {
        ++work_;
        std::int64_t a = coef1_.eval(x_);
        if (a != 0) return pow(P, st.others);
        // Coefficient vanishes: y is free, count zeros of the rest over the others.
        return P * count_zeros_brute(coef0_, st.other_vars);
      }
      case PlanStep::FinalHyperbola: {
        ++work_;
        std::int64_t b = coef1_.eval(x_), a = coef0_.eval(x_);
        if (b != 0) return a != 0 ? Integer(P - 1) : Integer(2 * P - 1);
        return a == 0 ? P * P : Integer(0);
      }
      case PlanStep::FinalUnivariate: {
        ++work_;
        std::int64_t c2 = uni_[2].eval(x_), c1 = uni_[1].eval(x_), c0 = uni_[0].eval(x_);
        if (c2 == 0) {
          if (c1 != 0) return 1;
          return c0 == 0 ? P : Integer(0);
        }
        if (p_ == 2) {
          int roots = 0;
          for (std::int64_t v = 0; v < 2; ++v) roots += ((c2 * v * v + c1 * v + c0) % 2 == 0);
          return roots;
        }
        std::int64_t disc = mod_pos(mul_mod(c1, c1, p_) - mul_mod(4 % p_, mul_mod(c2, c0, p_), p_), p_);
        return 1 + legendre(disc, p_);
      }
    }
    return 0;
  }

  // Zeros of g over the listed coordinates, by enumeration.
  Integer count_zeros_brute(const ModPoly& g, const std::vector<std::size_t>& open) {
    Integer total = 0;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == open.size()) {
        ++work_;
        if (g.eval(x_) == 0) total += 1;
        return;
      }
      for (std::int64_t v = 0; v < p_; ++v) {
        x_[open[i]] = v;
        rec(i + 1);
      }
    };
    rec(0);
    return total;
  }

  const VarietyPlan& plan_;
  std::int64_t p_;
  std::vector<ModPoly> eqs_;
  ModPoly coef1_, coef0_;
  ModPoly uni_[3];
  std::vector<std::int64_t> x_;
  std::uint64_t work_ = 0;
};

}  // namespace detail

enum class VarietyStrategy { Sliced, Brute };

struct VarietyOptions {
  VarietyStrategy strategy = VarietyStrategy::Sliced;
  double max_work = 2e10;  // estimated innermost evaluations allowed per prime
};

/// Exact #V(F_p) for V cut out by `equations` in affine space over their
/// common variable list.
inline VarietyCount enumerate_variety_mod_p(const std::vector<MultiPoly>& equations, std::int64_t p,
                                            const VarietyOptions& opt = {}) {
  if (equations.empty()) throw InvalidInput("enumerate_variety_mod_p: no equations");
  if (!is_prime(Integer(static_cast<long>(p)))) throw InvalidInput("enumerate_variety_mod_p: modulus is not prime");
  const std::size_t k = equations.front().nvars();
  for (const auto& e : equations)
    if (e.vars() != equations.front().vars()) throw InvalidInput("equations over different variable lists");
  VarietyCount out;
  out.p = p;
  if (opt.strategy == VarietyStrategy::Brute) {
    double work = std::pow(static_cast<double>(p), static_cast<double>(k));
    if (work > opt.max_work) {
      throw ResourceExhausted("enumerate_variety_mod_p: brute force over p^" + std::to_string(k) +
                                  " points exceeds the budget",
                              0);
    }
    std::vector<ModPoly> eqs;
    for (const auto& e : equations) eqs.emplace_back(e, p);
    std::vector<std::int64_t> x(k, 0);
    Integer count = 0;
    for (;;) {
      bool ok = true;
      for (const auto& e : eqs)
        if (e.eval(x) != 0) {
          ok = false;
          break;
        }
      if (ok) count += 1;
      ++out.work;
      std::size_t i = 0;
      while (i < k && ++x[i] == p) x[i++] = 0;
      if (i == k) break;
    }
    out.count = count;
    out.strategy = "brute";
    return out;
  }
  auto plan = detail::plan_variety(equations, k);
  double work = std::pow(static_cast<double>(p), static_cast<double>(plan.enumerated.size()));
  if (work > opt.max_work) {
    throw ResourceExhausted("enumerate_variety_mod_p: sliced plan enumerates " +
                                std::to_string(plan.enumerated.size()) + " coordinates; p=" + std::to_string(p) +
                                " exceeds the budget",
                            0);
  }
  detail::VarietyCounter counter(equations, plan, p);
  out.count = counter.count();
  out.work = counter.work();
  out.strategy = "sliced(enumerate " + std::to_string(plan.enumerated.size()) + " of " + std::to_string(k) + ")";
  return out;
}

// ---------------------------------------------------------------------------
// N_f, local densities, strong approximation, ramified primes

/// #{x in image mod d : f(x) = 0 mod d} for d | q. Primes in `ramified` are
/// first removed from d.
inline Integer count_Nf(const FiniteImage& image, const MultiPoly& f, std::int64_t d,
                        const PrimeSet& ramified = {}) {
  if (d < 1 || image.q % d != 0) throw InvalidInput("count_Nf: d must divide the image modulus");
  for (const auto& p : ramified) {
    std::int64_t pp = p.get_si();
    while (d % pp == 0) d /= pp;
  }
  if (d == 1) {
    // Every element vanishes mod 1; the count is the order of the trivial image.
    return 1;
  }
  ModPoly fm(f, d);
  std::unordered_map<std::vector<std::int64_t>, bool, detail::KeyHash> seen;
  Integer count = 0;
  for (const auto& g : image.elements) {
    MatrixModQ h = image.q == d ? g : project(g, d);
    if (!seen.emplace(h.a, true).second) continue;
    if (fm.eval(h.a) == 0) count += 1;
  }
  return count;
}

inline std::size_t image_order_mod(const FiniteImage& image, std::int64_t d) {
  if (d == image.q) return image.order();
  std::unordered_map<std::vector<std::int64_t>, bool, detail::KeyHash> seen;
  for (const auto& g : image.elements) seen.emplace(project(g, d).a, true);
  return seen.size();
}

struct LocalDensity {
  std::int64_t p = 0;
  Integer N_f = 0;
  Integer order = 0;
  Rational beta = 0;
  bool ramified = false;  // beta set to 0 by the fiat rule
};

/// beta(p) = N_f(p) / |image mod p|; 0 when p is ramified, either declared or
/// detected because f vanishes on the whole image.
inline LocalDensity local_density(const GeneratorSet& gens, const MultiPoly& f, std::int64_t p,
                                  const PrimeSet& declared_ramified = {}, std::size_t cap = 2'000'000) {
  if (!is_prime(Integer(static_cast<long>(p)))) throw InvalidInput("local_density: " + std::to_string(p) + " is not prime");
  auto img = generate_image(gens, p, cap);
  LocalDensity out;
  out.p = p;
  out.order = static_cast<unsigned long>(img.order());
  out.N_f = count_Nf(img, f, p);
  out.ramified = declared_ramified.contains(Integer(static_cast<long>(p))) || out.N_f == out.order;
  out.beta = out.ramified ? Rational(0) : Rational(out.N_f, out.order);
  out.beta.canonicalize();
  return out;
}

struct BetaValue {
  Rational beta = 0;                 // product of local densities
  std::optional<Rational> direct;    // N_f(d) / |image mod d| when computed
  bool consistent = true;
  std::vector<LocalDensity> factors;
};

/// beta(d) for squarefree d as the product of beta(p); cross-checked against
/// the image mod d when its order stays within `cross_check_cap`.
inline BetaValue beta_squarefree(const GeneratorSet& gens, const MultiPoly& f, std::int64_t d,
                                 const PrimeSet& ramified = {}, std::size_t cross_check_cap = 200'000) {
  if (d < 1 || !is_squarefree_small(d)) throw InvalidInput("beta_squarefree: d must be squarefree");
  BetaValue out;
  out.beta = 1;
  bool any_ramified = false;
  for (auto p : prime_divisors_small(d)) {
    auto ld = local_density(gens, f, p, ramified);
    any_ramified = any_ramified || ld.ramified;
    out.beta *= ld.beta;
    out.factors.push_back(ld);
  }
  if (d > 1) {
    try {
      auto img = generate_image(gens, d, cross_check_cap);
      Rational direct(count_Nf(img, f, d), Integer(static_cast<unsigned long>(img.order())));
      direct.canonicalize();
      if (any_ramified) direct = 0;
      out.direct = direct;
      out.consistent = (direct == out.beta);
    } catch (const ResourceExhausted&) {
      // Too large to cross-check; the product stands alone.
    }
  }
  return out;
}

struct StrongApproxVerdict {
  enum Status { Holds, Fails, Unverifiable } status = Unverifiable;
  Integer image_order = 0;
  Integer expected_order = 0;
  std::map<std::int64_t, Integer> image_order_per_prime;
  std::map<std::int64_t, std::optional<Integer>> expected_per_prime;
  std::string witness;

  std::string status_name() const {
    return status == Holds ? "true" : status == Fails ? "false" : "unverifiable";
  }
};

using ExpectedOrder = std::function<std::optional<Integer>(std::int64_t p)>;

/// Compares |image mod q| with the product of the expected orders |G(F_p)|.
inline StrongApproxVerdict verify_strong_approx(const GeneratorSet& gens, std::int64_t q, const ExpectedOrder& expected,
                                                std::size_t cap = 2'000'000) {
  if (!is_squarefree_small(q)) throw InvalidInput("verify_strong_approx: q must be squarefree");
  StrongApproxVerdict out;
  auto img = generate_image(gens, q, cap);
  out.image_order = static_cast<unsigned long>(img.order());
  Integer prod = 1;
  bool known = true;
  for (auto p : prime_divisors_small(q)) {
    auto e = expected(p);
    out.expected_per_prime[p] = e;
    out.image_order_per_prime[p] = static_cast<unsigned long>(image_order_mod(img, p));
    if (!e) {
      known = false;
      continue;
    }
    prod *= *e;
  }
  if (!known) {
    out.status = StrongApproxVerdict::Unverifiable;
    out.witness = "expected order unknown for some prime of q";
    return out;
  }
  out.expected_order = prod;
  out.status = out.image_order == prod ? StrongApproxVerdict::Holds : StrongApproxVerdict::Fails;
  out.witness = "|image mod " + std::to_string(q) + "| = " + out.image_order.get_str() + ", expected " + prod.get_str();
  return out;
}

inline ExpectedOrder sl_expected_order(std::size_t n) {
  return [n](std::int64_t p) -> std::optional<Integer> { return sl_order(n, Integer(static_cast<long>(p))); };
}

/// Expected orders from point counts of the declared ambient equations.
inline ExpectedOrder variety_expected_order(std::vector<MultiPoly> ambient, VarietyOptions opt = {}) {
  return [ambient = std::move(ambient), opt](std::int64_t p) -> std::optional<Integer> {
    if (ambient.empty()) return std::nullopt;
    try {
      return enumerate_variety_mod_p(ambient, p, opt).count;
    } catch (const ResourceExhausted&) {
      return std::nullopt;
    }
  };
}

struct RamifiedReport {
  PrimeSet confirmed;
  std::vector<Integer> rejected;    // candidates where f is not identically 0 on the image
  std::vector<Integer> unresolved;  // candidates above p_max or too large to test
  Integer sample_gcd = 0;
  std::size_t sample_size = 0;
};

/// Candidates are the primes of gcd over the sample of f's values (with the
/// primes of `excluded`, typically denominators, stripped); each candidate up
/// to p_max is confirmed when f vanishes on the whole image mod p.
inline RamifiedReport detect_ramified(const GeneratorSet& gens, const MultiPoly& f, const std::vector<MatrixQ>& sample,
                                      std::int64_t p_max, const PrimeSet& excluded = {},
                                      std::size_t cap = 2'000'000) {
  if (sample.empty()) throw InvalidInput("detect_ramified: empty sample");
  RamifiedReport out;
  out.sample_size = sample.size();
  for (const auto& g : sample) {
    Rational v = f.eval(g);
    if (v == 0) continue;
    out.sample_gcd = gcd(out.sample_gcd, s_integer_part(v, excluded));
    if (out.sample_gcd == 1) break;
  }
  if (out.sample_gcd == 0) throw InvalidInput("detect_ramified: f vanishes on the whole sample");
  auto fac = factorize(out.sample_gcd);
  std::vector<Integer> confirmed;
  for (const auto& [p, e] : fac.factors) {
    if (p > p_max) {
      out.unresolved.push_back(p);
      continue;
    }
    auto img = generate_image(gens, p.get_si(), cap);
    if (count_Nf(img, f, p.get_si()) == static_cast<unsigned long>(img.order())) {
      confirmed.push_back(p);
    } else {
      out.rejected.push_back(p);
    }
  }
  if (!fac.complete) out.unresolved.push_back(fac.cofactor);
  out.confirmed = PrimeSet(confirmed);
  return out;
}

struct VarietyBeta {
  std::int64_t p = 0;
  Integer count_f = 0;        // #(ambient and f = 0)(F_p)
  Integer count_ambient = 0;  // #ambient(F_p)
  Rational beta = 0;
};

/// beta(p) as the ratio of point counts, with no image generation.
inline VarietyBeta variety_beta(const std::vector<MultiPoly>& ambient, const MultiPoly& f, std::int64_t p,
                                const VarietyOptions& opt = {}) {
  if (ambient.empty()) throw InvalidInput("variety_beta: no ambient equations");
  VarietyBeta out;
  out.p = p;
  auto eqs = ambient;
  eqs.push_back(f);
  out.count_f = enumerate_variety_mod_p(eqs, p, opt).count;
  out.count_ambient = enumerate_variety_mod_p(ambient, p, opt).count;
  if (out.count_ambient == 0) throw InvalidInput("variety_beta: ambient variety has no F_p points");
  out.beta = make_rational(out.count_f, out.count_ambient);
  return out;
}

// ---------------------------------------------------------------------------
// Splitting census

struct CensusRow {
  std::int64_t p = 0;
  Integer count = 0;
  std::optional<long> c_hat;  // nullopt when the prime is unclassified
  Rational residual = 0;      // count - c_hat * p^dim, exact
};

struct SplittingCensus {
  unsigned dim_V = 0;
  std::vector<CensusRow> rows;
  std::map<long, std::size_t> frequencies;
  std::size_t unclassified = 0;
  long max_c_hat = 0;
  double mean_c_hat = 0;
  bool two_valued = false;           // observed values are {0, c}
  long component_degree_estimate = 0;
  Integer bezout_bound = 0;
  bool bezout_ok = true;
  bool range_too_small = false;
};

/// For each prime: c_hat = round(count / p^dim_V), accepted when
/// |count - c_hat p^dim_V| <= 6 p^(dim_V - 1/2).
inline SplittingCensus splitting_census(const std::vector<MultiPoly>& equations, unsigned dim_V,
                                        const std::vector<std::int64_t>& primes, const Integer& bezout_bound,
                                        const VarietyOptions& opt = {}, unsigned threads = 1) {
  SplittingCensus out;
  out.dim_V = dim_V;
  out.bezout_bound = bezout_bound;
  out.rows.resize(primes.size());
  detail::parallel_for(primes.size(), threads, [&](std::size_t i) {
    std::int64_t p = primes[i];
    CensusRow row;
    row.p = p;
    row.count = enumerate_variety_mod_p(equations, p, opt).count;
    Integer P(static_cast<long>(p));
    Integer pd = pow(P, dim_V);
    // Nearest integer to count / p^dim.
    Integer c;
    Integer twice = 2 * row.count + pd;
    mpz_fdiv_q(c.get_mpz_t(), twice.get_mpz_t(), Integer(2 * pd).get_mpz_t());
    Integer diff = row.count - c * pd;
    // |diff| <= 6 p^(dim - 1/2)  <=>  diff^2 <= 36 p^(2 dim - 1)
    if (diff * diff <= 36 * pow(P, 2 * dim_V - 1)) row.c_hat = c.get_si();
    row.residual = Rational(diff);
    out.rows[i] = row;
  });
  double sum = 0;
  std::size_t classified = 0;
  for (const auto& row : out.rows) {
    if (!row.c_hat) {
      ++out.unclassified;
      continue;
    }
    ++classified;
    out.frequencies[*row.c_hat] += 1;
    out.max_c_hat = std::max(out.max_c_hat, *row.c_hat);
    sum += static_cast<double>(*row.c_hat);
  }
  out.mean_c_hat = classified ? sum / static_cast<double>(classified) : 0.0;
  std::size_t nonzero_values = 0;
  long nonzero_sum = 0;
  for (const auto& [c, k] : out.frequencies)
    if (c != 0) {
      ++nonzero_values;
      nonzero_sum += c;
    }
  out.two_valued = out.frequencies.size() <= 2 && nonzero_values <= 1;
  out.component_degree_estimate = out.two_valued ? out.max_c_hat : static_cast<long>(std::lround(out.mean_c_hat));
  out.bezout_ok = Integer(nonzero_sum) <= bezout_bound && Integer(out.max_c_hat) <= bezout_bound;
  out.range_too_small = classified < 10;
  return out;
}

}  // namespace affsieve
