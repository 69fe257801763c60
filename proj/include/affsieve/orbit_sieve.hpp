#pragma once

/**
 * @file orbit_sieve.hpp
 * @brief Sieve data on balls of a finitely generated group: the sequence
 * a_n(L), congruence sums A_d with remainders against beta(d) X, level of
 * distribution, sieve dimension, truncated inclusion-exclusion bounds,
 * almost-prime censuses, an empirical saturation estimate and the explicit r.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "affsieve/arith.hpp"
#include "affsieve/matgroup.hpp"
#include "affsieve/modp.hpp"
#include "affsieve/poly.hpp"
#include "affsieve/polyalg.hpp"

namespace affsieve {

struct SieveSequence {
  unsigned L = 0;
  PrimeSet S_used;
  std::map<Integer, Integer> entries;  // n -> a_n(L)
  Integer X = 0;
  std::size_t skipped = 0;  // elements with f = 0
  std::size_t ball_size = 0;
};

/// a_n(L) = #{ gamma in the ball : |f(gamma)| with the primes of S removed = n }.
inline SieveSequence build_sequence(const GeneratorSet& gens, const MultiPoly& f, unsigned L, const PrimeSet& S,
                                    const BallOptions& opt = {}) {
  auto B = ball(gens, L, opt);
  std::vector<std::optional<Integer>> keys(B.size());
  detail::parallel_for(B.size(), opt.threads, [&](std::size_t i) {
    Rational v = f.eval(B.elements[i]);
    if (v == 0) return;
    keys[i] = abs(Rational(s_integer_part(v, S))).get_num();
  });
  SieveSequence seq;
  seq.L = L;
  seq.S_used = S;
  seq.ball_size = B.size();
  for (const auto& k : keys) {
    if (!k) {
      ++seq.skipped;
      continue;
    }
    seq.entries[*k] += 1;
    seq.X += 1;
  }
  return seq;
}

/// beta(d) for squarefree d.
using BetaProvider = std::function<Rational(const Integer& d)>;

/// beta(d) = prod beta(p) from images mod p; ramified primes give 0.
inline BetaProvider local_beta_provider(const GeneratorSet& gens, const MultiPoly& f, const PrimeSet& ramified = {},
                                        std::size_t cap = 2'000'000) {
  auto cache = std::make_shared<std::map<Integer, Rational>>();
  auto lock = std::make_shared<std::mutex>();
  return [=](const Integer& d) -> Rational {
    Rational out = 1;
    for (const auto& [p, e] : factorize(d).factors) {
      if (e > 1) throw InvalidInput("beta provider: " + d.get_str() + " is not squarefree");
      std::optional<Rational> hit;
      {
        std::lock_guard<std::mutex> g(*lock);
        auto it = cache->find(p);
        if (it != cache->end()) hit = it->second;
      }
      if (!hit) {
        if (!p.fits_slong_p()) throw InvalidInput("beta provider: prime too large");
        hit = local_density(gens, f, p.get_si(), ramified, cap).beta;
        std::lock_guard<std::mutex> g(*lock);
        (*cache)[p] = *hit;
      }
      out *= *hit;
    }
    return out;
  };
}

struct ModulusRow {
  Integer d = 1;
  Integer A = 0;
  Rational beta = 0;
  Rational prediction = 0;
  Rational remainder = 0;
};

struct ModuliDecomposition {
  Integer X = 0;
  unsigned D = 1;
  std::vector<ModulusRow> rows;  // squarefree d <= D, increasing
};

inline ModuliDecomposition moduli_decomposition(const SieveSequence& seq, const BetaProvider& beta, unsigned D,
                                                unsigned threads = 1) {
  if (D < 1) throw InvalidInput("moduli_decomposition: D must be at least 1");
  ModuliDecomposition out;
  out.X = seq.X;
  out.D = D;
  for (unsigned d = 1; d <= D; ++d)
    if (is_squarefree_small(d)) out.rows.push_back(ModulusRow{Integer(d)});
  // beta first, sequentially, so caches fill deterministically.
  for (auto& row : out.rows) row.beta = row.d == 1 ? Rational(1) : beta(row.d);
  std::vector<std::pair<Integer, Integer>> entries(seq.entries.begin(), seq.entries.end());
  detail::parallel_for(out.rows.size(), threads, [&](std::size_t i) {
    auto& row = out.rows[i];
    const unsigned long d = row.d.get_ui();
    Integer A = 0;
    for (const auto& [n, a] : entries)
      if (mpz_divisible_ui_p(n.get_mpz_t(), d)) A += a;
    row.A = A;
    row.prediction = row.beta * Rational(seq.X);
    row.remainder = Rational(A) - row.prediction;
  });
  return out;
}

struct LevelReport {
  Rational sum_abs = 0;
  Rational max_abs = 0;
  Integer X = 0;
  unsigned D = 1;
  double dim = 0, epsilon = 0;
  std::vector<std::pair<double, bool>> grid;  // tau, bound satisfied
  std::optional<double> least_tau;
};

/// Least tau on the grid with sum_{d<=D} |r_d| <= X^tau D^(dim+eps). Empirical only.
inline LevelReport level_distribution_report(const ModuliDecomposition& dec, std::vector<double> tau_grid, double dim,
                                             double epsilon) {
  if (tau_grid.empty()) throw InvalidInput("level_distribution_report: empty tau grid");
  std::sort(tau_grid.begin(), tau_grid.end());
  LevelReport out;
  out.X = dec.X;
  out.D = dec.D;
  out.dim = dim;
  out.epsilon = epsilon;
  for (const auto& row : dec.rows) {
    Rational a = abs(row.remainder);
    out.sum_abs += a;
    if (a > out.max_abs) out.max_abs = a;
  }
  const long double lhs = out.sum_abs.get_d();
  const long double X = dec.X.get_d();
  for (double tau : tau_grid) {
    long double rhs = std::pow(X, static_cast<long double>(tau)) *
                      std::pow(static_cast<long double>(dec.D), static_cast<long double>(dim + epsilon));
    if (dec.X == 0) rhs = 0;
    bool ok = out.sum_abs == 0 || lhs <= rhs;
    out.grid.emplace_back(tau, ok);
    if (ok && !out.least_tau) out.least_tau = tau;
  }
  return out;
}

struct DimensionFit {
  double w = 0, z = 0;
  double slope = 0;      // t-hat
  double intercept = 0;  // c-hat
  double residual = 0;   // root mean square of the fit residuals
  std::size_t primes_used = 0;
  bool inconclusive = false;
};

/// Least-squares fit of sum_{w<=p<=y} beta(p) log p against log y, one point per prime y in [w, z].
inline DimensionFit sieve_dimension_fit(const std::map<Integer, double>& beta_table, double w, double z) {
  DimensionFit out;
  out.w = w;
  out.z = z;
  std::vector<double> xs, ys;
  double cum = 0;
  for (const auto& [p, b] : beta_table) {
    double pd = p.get_d();
    if (pd < w || pd > z) continue;
    cum += b * std::log(pd);
    xs.push_back(std::log(pd));
    ys.push_back(cum);
  }
  out.primes_used = xs.size();
  if (xs.size() < 10) {
    out.inconclusive = true;
    return out;
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  out.intercept = (sy - out.slope * sx) / n;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double e = ys[i] - (out.slope * xs[i] + out.intercept);
    ss += e * e;
  }
  out.residual = std::sqrt(ss / n);
  return out;
}

struct BrunBound {
  Integer lower = 0;   // inclusion-exclusion truncated at omega(d) <= 2b - 1
  Integer upper = 0;   // truncated at omega(d) <= 2b
  Integer exact = 0;   // sum of a_n over n coprime to every sifting prime
  std::vector<Integer> sifting_primes;
  std::size_t moduli = 0;
  std::optional<Rational> predicted;  // X prod (1 - beta(p)) when beta is supplied
};

/// Truncated inclusion-exclusion for the entries with no prime factor p <= z
/// outside S. lower <= exact <= upper holds for every sequence.
inline BrunBound brun_bound(const SieveSequence& seq, double z, unsigned b, const BetaProvider& beta = nullptr,
                            std::size_t moduli_budget = 10'000'000) {
  if (z < 2) throw InvalidInput("brun_bound: z must be at least 2");
  if (b < 1) throw InvalidInput("brun_bound: truncation b must be at least 1");
  BrunBound out;
  for (auto p : primes_up_to(static_cast<std::uint64_t>(z))) {
    Integer P = detail::from_u64(p);
    if (!seq.S_used.contains(P)) out.sifting_primes.push_back(P);
  }
  const std::size_t k = out.sifting_primes.size();
  const unsigned depth_upper = 2 * b, depth_lower = 2 * b - 1;
  // Number of moduli d | prod p with omega(d) <= 2b.
  long double count = 0, binom = 1;
  for (unsigned j = 0; j <= depth_upper && j <= k; ++j) {
    if (j > 0) binom = binom * static_cast<long double>(k - j + 1) / j;
    count += binom;
  }
  if (count > static_cast<long double>(moduli_budget)) {
    throw ResourceExhausted("brun_bound: " + std::to_string(static_cast<long long>(count)) +
                                " moduli exceed the budget; lower z or b",
                            static_cast<long long>(moduli_budget));
  }
  out.moduli = static_cast<std::size_t>(count);
  // Each n with m sifting primes contributes sum_{j<=K} (-1)^j C(m, j) to the K-truncated sum.
  for (const auto& [n, a] : seq.entries) {
    unsigned m = 0;
    for (const auto& p : out.sifting_primes)
      if (mpz_divisible_p(n.get_mpz_t(), p.get_mpz_t())) ++m;
    Integer lo = 0, up = 0, c = 1;
    for (unsigned j = 0; j <= depth_upper && j <= m; ++j) {
      if (j > 0) c = c * (m - j + 1) / j;
      Integer term = (j % 2 == 0) ? c : Integer(-c);
      up += term;
      if (j <= depth_lower) lo += term;
    }
    out.lower += a * lo;
    out.upper += a * up;
    if (m == 0) out.exact += a;
  }
  if (beta) {
    Rational pred = Rational(seq.X);
    for (const auto& p : out.sifting_primes) pred *= 1 - beta(p);
    out.predicted = pred;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Almost-prime census and saturation

struct CensusPoint {
  MatrixQ g;
  unsigned length = 0;
  unsigned omega = 0;
};

struct AlmostPrimeCensus {
  unsigned L = 0;
  PrimeSet S;
  unsigned r_max = 0;
  std::vector<std::size_t> counts;  // counts[r] = #{gamma : Omega outside S of f(gamma) <= r}
  std::size_t ball_size = 0;
  std::size_t zero = 0;
  std::size_t incomplete = 0;
  std::vector<CensusPoint> points;  // complete, nonzero, in ball order

  std::vector<VectorQ> sample(unsigned r, std::size_t cap = ~std::size_t{0}) const {
    std::vector<VectorQ> out;
    for (const auto& p : points) {
      if (out.size() >= cap) break;
      if (p.omega <= r) out.push_back(p.g.entries());
    }
    return out;
  }
};

inline AlmostPrimeCensus almost_prime_census(const GeneratorSet& gens, const MultiPoly& f, unsigned L,
                                             const PrimeSet& S, unsigned r_max, const BallOptions& opt = {},
                                             const FactorBudget& budget = {}) {
  auto B = ball(gens, L, opt);
  AlmostPrimeCensus out;
  out.L = L;
  out.S = S;
  out.r_max = r_max;
  out.ball_size = B.size();
  out.counts.assign(r_max + 1, 0);
  // -2: f = 0, -1: incomplete factorization.
  std::vector<long> omega(B.size(), -2);
  detail::parallel_for(B.size(), opt.threads, [&](std::size_t i) {
    Rational v = f.eval(B.elements[i]);
    if (v == 0) return;
    auto om = omega_outside(s_integer_part(v, S), S, true, budget);
    omega[i] = om ? static_cast<long>(*om) : -1;
  });
  for (std::size_t i = 0; i < B.size(); ++i) {
    if (omega[i] == -2) {
      ++out.zero;
      continue;
    }
    if (omega[i] == -1) {
      ++out.incomplete;
      continue;
    }
    unsigned om = static_cast<unsigned>(omega[i]);
    for (unsigned r = om; r <= r_max; ++r) out.counts[r] += 1;
    out.points.push_back(CensusPoint{B.elements[i], B.lengths[i], om});
  }
  return out;
}

struct SaturationStep {
  unsigned L = 0;
  std::optional<unsigned> r_hat;
  std::vector<std::size_t> sample_sizes;   // per r
  std::vector<DensityVerdict> verdicts;    // per r
};

struct SaturationEstimate {
  std::optional<unsigned> r_hat;  // at the final L
  PrimeSet S;
  unsigned D = 1;
  std::vector<unsigned> L_schedule;
  std::vector<SaturationStep> steps;
  bool stable = false;  // same r-hat at the last two L values
  // "dense at r_hat", "not dense at degree D", or "not enough certified points"
  std::string status;
  std::optional<DensityVerdict> at_r_hat, at_r_hat_minus_1;
  std::string label = "empirical lower-confidence estimate";
};

/// Minimal r whose census sample passes the degree-D density test against the
/// ambient equations, tracked along the L schedule.
inline SaturationEstimate saturation_estimate(const GeneratorSet& gens, const MultiPoly& f, const PrimeSet& S,
                                              unsigned D, const std::vector<unsigned>& L_schedule, unsigned r_max,
                                              const std::vector<MultiPoly>& ambient, const BallOptions& opt = {},
                                              const FactorBudget& budget = {}) {
  if (L_schedule.empty()) throw InvalidInput("saturation_estimate: empty L schedule");
  SaturationEstimate out;
  out.S = S;
  out.D = D;
  out.L_schedule = L_schedule;
  for (unsigned L : L_schedule) {
    auto census = almost_prime_census(gens, f, L, S, r_max, opt, budget);
    SaturationStep step;
    step.L = L;
    for (unsigned r = 0; r <= r_max; ++r) {
      auto pts = census.sample(r);
      step.sample_sizes.push_back(pts.size());
      DensityVerdict v;
      if (pts.empty()) {
        v.underdetermined = true;
        v.monomials = monomials_up_to(gens.dim() * gens.dim(), D).size();
        v.points_needed = v.monomials;
      } else {
        v = zariski_density_test(pts, D, ambient);
      }
      if (v.dense && !step.r_hat) step.r_hat = r;
      step.verdicts.push_back(std::move(v));
    }
    out.steps.push_back(std::move(step));
  }
  const auto& last = out.steps.back();
  out.r_hat = last.r_hat;
  if (out.steps.size() >= 2) out.stable = out.steps[out.steps.size() - 2].r_hat == last.r_hat;
  if (out.r_hat) {
    out.status = "dense at r_hat";
    out.at_r_hat = last.verdicts[*out.r_hat];
    if (*out.r_hat > 0) out.at_r_hat_minus_1 = last.verdicts[*out.r_hat - 1];
  } else {
    out.status = last.verdicts.back().underdetermined ? "not enough certified points" : "not dense at degree D";
    out.at_r_hat = last.verdicts.back();
  }
  return out;
}

/// floor(9 (#S + 1) deg T (dim + 1) log M0 / ((1 - tau) log |Omega|)) + 1.
inline long long r_formula(unsigned deg_ftilde, std::size_t s_count, unsigned dim_G, double tau,
                           unsigned long long omega_size, double T, double logM0) {
  if (!(tau > 0 && tau < 1)) throw InvalidInput("r_formula: tau must lie in (0, 1)");
  if (omega_size < 2) throw InvalidInput("r_formula: the generating set needs at least 2 elements");
  if (T <= 0 || logM0 <= 0) throw InvalidInput("r_formula: T and log M0 must be positive");
  long double num = 9.0L * static_cast<long double>(s_count + 1) * deg_ftilde * static_cast<long double>(T) *
                    (dim_G + 1) * static_cast<long double>(logM0);
  long double den = (1.0L - static_cast<long double>(tau)) * std::log(static_cast<long double>(omega_size));
  long double q = std::floor(num / den);
  if (q > 9e18L) throw InvalidInput("r_formula: value overflows");
  return static_cast<long long>(q) + 1;
}

}  // namespace affsieve
