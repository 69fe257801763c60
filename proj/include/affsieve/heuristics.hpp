#pragma once

/**
 * @file heuristics.hpp
 * @brief Torus-orbit heuristics: Hilbert-Schmidt growth along a free abelian
 * group of matrices, the shifted product of F, prime-factor trends of
 * explicit sequences, and Borel-Cantelli partial sums with a tail bound.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "affsieve/arith.hpp"
#include "affsieve/matgroup.hpp"
#include "affsieve/poly.hpp"

namespace affsieve {

/// F(x) = Tr(x^t x), the sum of squared entries.
inline Rational hilbert_schmidt(const MatrixQ& x) {
  Rational s = 0;
  for (const auto& e : x.entries()) s += e * e;
  return s;
}

/// prod_{j=1..nu} (F(x) + j); the empty product for nu = 0.
inline Rational shifted_product(const MatrixQ& x, unsigned nu) {
  Rational F = hilbert_schmidt(x), out = 1;
  for (unsigned j = 1; j <= nu; ++j) out *= F + j;
  return out;
}

struct TorusSpec {
  std::vector<MatrixQ> generators;
  unsigned M = 0;  // exponent box |m|_1 <= M

  void validate() const {
    if (generators.empty()) throw InvalidInput("torus: at least one generator is required");
    for (const auto& g : generators) {
      if (g.dim() != generators.front().dim()) throw InvalidInput("torus: generators have different dimensions");
      if (g.det() == 0) throw InvalidInput("torus: generator " + g.to_string() + " is singular");
    }
    for (std::size_t i = 0; i < generators.size(); ++i)
      for (std::size_t j = i + 1; j < generators.size(); ++j)
        if (generators[i] * generators[j] != generators[j] * generators[i]) {
          throw InvalidInput("torus: generators " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                             " do not commute");
        }
  }
};

namespace detail {

// All m in Z^t with |m|_1 <= M (optionally m_i >= 0), ordered by |m|_1 then lexicographically.
inline std::vector<std::vector<long>> exponent_box(std::size_t t, unsigned M, bool nonnegative) {
  std::vector<std::vector<long>> out;
  std::vector<long> m(t, 0);
  std::function<void(std::size_t, long)> rec = [&](std::size_t i, long left) {
    if (i == t) {
      if (left == 0) out.push_back(m);
      return;
    }
    for (long v = nonnegative ? 0 : -left; v <= left; ++v) {
      m[i] = v;
      rec(i + 1, left - std::labs(v));
    }
    m[i] = 0;
  };
  for (long k = 0; k <= static_cast<long>(M); ++k) rec(0, k);
  return out;
}

inline unsigned l1(const std::vector<long>& m) {
  unsigned s = 0;
  for (long v : m) s += static_cast<unsigned>(std::labs(v));
  return s;
}

// gamma^m from cached powers of each generator.
class TorusPowers {
 public:
  TorusPowers(const std::vector<MatrixQ>& gens, unsigned M) : M_(M) {
    for (const auto& g : gens) {
      std::vector<MatrixQ> pw(2 * M + 1, MatrixQ::identity(g.dim()));
      MatrixQ inv = g.inverse();
      for (unsigned k = 1; k <= M; ++k) {
        pw[M + k] = pw[M + k - 1] * g;
        pw[M - k] = pw[M - k + 1] * inv;
      }
      powers_.push_back(std::move(pw));
    }
  }

  MatrixQ at(const std::vector<long>& m) const {
    MatrixQ out = powers_.front()[M_ + m[0]];
    for (std::size_t i = 1; i < m.size(); ++i) out = out * powers_[i][M_ + m[i]];
    return out;
  }

 private:
  unsigned M_;
  std::vector<std::vector<MatrixQ>> powers_;
};

inline std::pair<double, double> least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

// A rational within 1e-6 of x, rounded in the requested direction.
inline Rational rational_bound(double x, bool up) {
  const long den = 1'000'000;
  double scaled = x * den;
  long num = static_cast<long>(up ? std::ceil(scaled) : std::floor(scaled));
  return make_rational(num, den);
}

}  // namespace detail

struct NormGrowth {
  Rational A1 = 0, A2 = 0;  // rational envelope bases (A1 rounded up, A2 down)
  double A1_fit = 0, A2_fit = 0;
  Integer K = 1;
  bool envelope_verified = false;
  bool degenerate = false;  // A2 <= 1: some direction does not escape
  std::string note;
  std::size_t points = 0;
  std::vector<std::pair<unsigned, std::pair<double, double>>> shells;  // |m| -> (min log F, max log F)
};

/// Fits log F(gamma^m) per shell |m|_1 = k; the envelope
/// A2^|m| / K <= F(gamma^m) <= K A1^|m| is then checked exactly on every point.
inline NormGrowth norm_growth_check(const TorusSpec& spec) {
  spec.validate();
  if (spec.M < 3) throw InvalidInput("norm_growth_check: M must be at least 3");
  NormGrowth out;
  detail::TorusPowers powers(spec.generators, spec.M);
  auto box = detail::exponent_box(spec.generators.size(), spec.M, false);
  std::vector<std::pair<unsigned, Rational>> values;
  std::vector<double> lo(spec.M + 1, INFINITY), hi(spec.M + 1, -INFINITY);
  for (const auto& m : box) {
    Rational F = hilbert_schmidt(powers.at(m));
    unsigned k = detail::l1(m);
    double lf = std::log(F.get_d());
    lo[k] = std::min(lo[k], lf);
    hi[k] = std::max(hi[k], lf);
    values.emplace_back(k, F);
  }
  out.points = values.size();
  std::vector<double> ks, los, his;
  for (unsigned k = 0; k <= spec.M; ++k) {
    out.shells.push_back({k, {lo[k], hi[k]}});
    if (k == 0) continue;
    ks.push_back(k);
    los.push_back(lo[k]);
    his.push_back(hi[k]);
  }
  out.A1_fit = std::exp(detail::least_squares(ks, his).first);
  out.A2_fit = std::exp(detail::least_squares(ks, los).first);
  out.A1 = detail::rational_bound(out.A1_fit, true);
  out.A2 = detail::rational_bound(out.A2_fit, false);
  if (out.A2_fit <= 1.0 + 1e-3) {
    out.degenerate = true;
    out.note = "some direction does not escape (eigenvalues on the unit circle or torsion); no lower envelope";
    out.A2 = 1;
  }
  // K: the least integer making the envelope hold on every point.
  Rational K = 1;
  for (const auto& [k, F] : values) {
    Rational up = F / pow(out.A1, k);
    if (up > K) K = up;
    if (!out.degenerate) {
      Rational down = pow(out.A2, k) / F;
      if (down > K) K = down;
    }
  }
  Integer Kc;
  mpz_cdiv_q(Kc.get_mpz_t(), K.get_num_mpz_t(), K.get_den_mpz_t());
  out.K = Kc;
  bool ok = true;
  for (const auto& [k, F] : values) {
    if (F > Rational(out.K) * pow(out.A1, k)) ok = false;
    if (!out.degenerate && pow(out.A2, k) > Rational(out.K) * F) ok = false;
  }
  out.envelope_verified = ok;
  return out;
}

struct TrendRow {
  std::vector<long> m;
  unsigned norm = 0;
  Rational value = 0;
  std::optional<unsigned> omega_distinct;  // nullopt: zero value or incomplete factorization
  std::optional<unsigned> omega_total;
  bool zero = false;
};

struct TrendTable {
  PrimeSet S;
  std::vector<TrendRow> rows;
  std::vector<std::pair<unsigned, std::optional<unsigned>>> dyadic_minimum;  // window start 2^k -> min omega_distinct
};

/// omega and Omega outside S of each value, with the running minimum of omega
/// over dyadic windows [2^k, 2^(k+1)) of the index norm.
inline TrendTable prime_factor_trend(const std::vector<std::pair<std::vector<long>, Rational>>& values,
                                     const PrimeSet& S, const FactorBudget& budget = {}, unsigned threads = 1) {
  TrendTable out;
  out.S = S;
  out.rows.resize(values.size());
  detail::parallel_for(values.size(), threads, [&](std::size_t i) {
    TrendRow row;
    row.m = values[i].first;
    row.norm = detail::l1(row.m);
    row.value = values[i].second;
    if (row.value == 0) {
      row.zero = true;
    } else {
      Integer n = s_integer_part(row.value, S);
      auto f = factorize(n, budget);
      row.omega_distinct = omega_outside(f, S, false);
      row.omega_total = omega_outside(f, S, true);
    }
    out.rows[i] = std::move(row);
  });
  unsigned maxnorm = 0;
  for (const auto& r : out.rows) maxnorm = std::max(maxnorm, r.norm);
  for (unsigned lo = 1; lo <= maxnorm; lo *= 2) {
    std::optional<unsigned> best;
    for (const auto& r : out.rows)
      if (r.norm >= lo && r.norm < 2 * lo && r.omega_distinct && (!best || *r.omega_distinct < *best))
        best = r.omega_distinct;
    out.dyadic_minimum.emplace_back(lo, best);
  }
  return out;
}

/// f(gamma^m) for m >= 0 componentwise, 1 <= |m|_1 <= M.
inline TrendTable prime_factor_trend(const TorusSpec& spec, const MultiPoly& f, const PrimeSet& S,
                                     const FactorBudget& budget = {}, unsigned threads = 1) {
  spec.validate();
  detail::TorusPowers powers(spec.generators, spec.M);
  std::vector<std::pair<std::vector<long>, Rational>> values;
  for (const auto& m : detail::exponent_box(spec.generators.size(), spec.M, true)) {
    if (detail::l1(m) == 0) continue;
    values.emplace_back(m, f.eval(powers.at(m)));
  }
  return prime_factor_trend(values, S, budget, threads);
}

struct BorelCantelli {
  unsigned t = 1, nu = 2, r = 1;
  std::vector<std::pair<unsigned long, long double>> checkpoints;  // M -> partial sum
  std::vector<long double> increments;                             // between consecutive checkpoints
  bool increments_decreasing = true;
  long double tail_bound = 0;  // bound on the full sum
  unsigned long K0 = 0;
  bool bounded = true;  // every partial sum <= tail_bound
};

namespace detail {

// #{m in Z^t : |m|_1 = k}
inline long double shell_count(unsigned t, unsigned long k) {
  if (k == 0) return 1;
  long double total = 0;
  // sum_j 2^j C(t, j) C(k-1, j-1)
  long double ctj = 1;
  for (unsigned j = 1; j <= t && j <= k; ++j) {
    ctj = ctj * (t - j + 1) / j;
    long double ck = 1;
    for (unsigned i = 1; i < j; ++i) ck = ck * static_cast<long double>(k - i) / i;
    total += std::pow(2.0L, static_cast<long double>(j)) * ctj * ck;
  }
  return total;
}

// Gamma(a + 1, x) for integer a >= 0.
inline long double upper_gamma_int(unsigned a, long double x) {
  long double term = 1, sum = 1;
  for (unsigned j = 1; j <= a; ++j) {
    term *= x / j;
    sum += term;
  }
  long double fact = 1;
  for (unsigned j = 2; j <= a; ++j) fact *= j;
  return fact * std::exp(-x) * sum;
}

}  // namespace detail

/// Partial sums over m in Z^t, |m|_1 <= M, of log(|m|+1)^(nu(r-1)) / (|m|+1)^nu
/// at the given checkpoints, with an integral-test bound on the full sum.
inline BorelCantelli borel_cantelli_sum(unsigned t, unsigned nu, unsigned r, std::vector<unsigned long> checkpoints) {
  if (t < 1) throw InvalidInput("borel_cantelli_sum: t must be at least 1");
  if (nu <= t) throw InvalidInput("borel_cantelli_sum: nu must exceed t");
  if (r < 1) throw InvalidInput("borel_cantelli_sum: r must be at least 1");
  if (checkpoints.empty()) throw InvalidInput("borel_cantelli_sum: no checkpoints");
  std::sort(checkpoints.begin(), checkpoints.end());
  BorelCantelli out;
  out.t = t;
  out.nu = nu;
  out.r = r;
  const unsigned a = nu * (r - 1);
  const long double s = static_cast<long double>(nu) - t + 1;
  auto summand = [&](unsigned long k) {
    long double x = static_cast<long double>(k) + 1;
    return detail::shell_count(t, k) * std::pow(std::log(x), static_cast<long double>(a)) / std::pow(x, static_cast<long double>(nu));
  };
  // Kahan summation keeps the small tail increments meaningful.
  long double sum = 0, comp = 0;
  unsigned long k = 0;
  auto add_to = [&](unsigned long upto) {
    for (; k <= upto; ++k) {
      long double y = summand(k) - comp;
      long double tt = sum + y;
      comp = (tt - sum) - y;
      sum = tt;
    }
  };
  // Tail past K0 where log(x)^a / x^s is decreasing (log(K0+1) >= a/(s-1)).
  out.K0 = 1;
  while (std::log(static_cast<long double>(out.K0) + 1) < a / (s - 1)) ++out.K0;
  long double head = 0;
  {
    long double hs = 0;
    for (unsigned long j = 0; j <= out.K0; ++j) hs += summand(j);
    head = hs;
  }
  long double U = std::log(static_cast<long double>(out.K0) + 1);
  out.tail_bound = head + std::pow(2.0L, static_cast<long double>(t)) * detail::upper_gamma_int(a, (s - 1) * U) /
                              std::pow(s - 1, static_cast<long double>(a + 1));
  for (auto M : checkpoints) {
    add_to(M);
    out.checkpoints.emplace_back(M, sum);
    if (sum > out.tail_bound * (1 + 1e-15L)) out.bounded = false;
  }
  for (std::size_t i = 1; i < out.checkpoints.size(); ++i)
    out.increments.push_back(out.checkpoints[i].second - out.checkpoints[i - 1].second);
  for (std::size_t i = 1; i < out.increments.size(); ++i)
    if (out.increments[i] > out.increments[i - 1]) out.increments_decreasing = false;
  return out;
}

}  // namespace affsieve
