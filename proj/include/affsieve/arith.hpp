#pragma once

/**
 * @file arith.hpp
 * @brief Exact integers and rationals, prime sets, S-integers and factorization.
 *
 * Integers and rationals are GMP values. Factorization is budgeted: trial
 * division to a bound, then Brent's variant of Pollard rho, with every prime
 * factor certified by Miller-Rabin. Below 3.3e24 the Miller-Rabin bases used
 * are a proven deterministic set; above that, 64 extra rounds are run with
 * bases drawn from a generator seeded by the candidate itself, so results are
 * reproducible and the false-prime probability is below 2^-128. When that
 * happens the factorization is flagged `probabilistic`.
 */

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "affsieve/errors.hpp"

namespace affsieve {

using Integer = mpz_class;
using Rational = mpq_class;

inline Rational make_rational(const Integer& num, const Integer& den) {
  if (den == 0) throw InvalidInput("rational with zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline std::string to_string(const Integer& n) { return n.get_str(); }

inline std::string to_string(Rational q) {
  q.canonicalize();
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

inline Integer parse_integer(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw InvalidInput("empty integer literal");
  std::size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (start == s.size()) throw InvalidInput("bad integer literal '" + s + "'");
  for (std::size_t i = start; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') throw InvalidInput("bad integer literal '" + s + "'");
  }
  if (s[0] == '+') s.erase(0, 1);
  return Integer(s);
}

/// Parses "a" or "a/b" with integer a, b (no floating point literals).
inline Rational parse_rational(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_integer(text));
  return make_rational(parse_integer(text.substr(0, slash)), parse_integer(text.substr(slash + 1)));
}

inline Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

namespace detail {

inline const std::vector<std::uint32_t>& small_primes() {
  static const std::vector<std::uint32_t> primes = [] {
    constexpr std::uint32_t kBound = 1u << 20;
    std::vector<bool> composite(kBound + 1, false);
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 2; i <= kBound; ++i) {
      if (composite[i]) continue;
      out.push_back(i);
      for (std::uint64_t j = std::uint64_t(i) * i; j <= kBound; j += i) composite[j] = true;
    }
    return out;
  }();
  return primes;
}

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t powmod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mulmod(result, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return result;
}

inline bool miller_rabin_round(std::uint64_t n, std::uint64_t a) {
  a %= n;
  if (a == 0) return true;
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  std::uint64_t x = powmod(a, d, n);
  if (x == 1 || x == n - 1) return true;
  for (int i = 1; i < s; ++i) {
    x = mulmod(x, x, n);
    if (x == n - 1) return true;
  }
  return false;
}

// Deterministic for every 64-bit n (Jim Sinclair's base set).
inline bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n == p) return true;
    if (n % p == 0) return false;
  }
  for (std::uint64_t a : {2ull, 325ull, 9375ull, 28178ull, 450775ull, 9780504ull, 1795265022ull}) {
    if (!miller_rabin_round(n, a)) return false;
  }
  return true;
}

inline bool miller_rabin_round(const Integer& n, const Integer& a) {
  Integer d = n - 1;
  unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
  mpz_tdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);
  Integer x;
  mpz_powm(x.get_mpz_t(), a.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
  Integer nm1 = n - 1;
  if (x == 1 || x == nm1) return true;
  for (unsigned long i = 1; i < s; ++i) {
    mpz_powm_ui(x.get_mpz_t(), x.get_mpz_t(), 2, n.get_mpz_t());
    if (x == nm1) return true;
  }
  return false;
}

inline bool fits_u64(const Integer& n) { return n >= 0 && mpz_sizeinbase(n.get_mpz_t(), 2) <= 64; }

inline std::uint64_t to_u64(const Integer& n) {
  std::uint64_t out = 0;
  mpz_export(&out, nullptr, -1, sizeof(out), 0, 0, n.get_mpz_t());
  return out;
}

inline Integer from_u64(std::uint64_t v) {
  Integer out;
  mpz_import(out.get_mpz_t(), 1, -1, sizeof(v), 0, 0, &v);
  return out;
}

inline std::size_t hash_mpz(const Integer& z) {
  const mpz_srcptr p = z.get_mpz_t();
  std::size_t h = static_cast<std::size_t>(p->_mp_size) * 0x9e3779b97f4a7c15ULL;
  const int limbs = p->_mp_size < 0 ? -p->_mp_size : p->_mp_size;
  for (int i = 0; i < limbs; ++i) {
    h ^= static_cast<std::size_t>(mpz_getlimbn(p, i)) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace detail

/// Outcome of a primality check. `proven` is false only above the
/// deterministic Miller-Rabin range.
struct PrimalityResult {
  bool prime = false;
  bool proven = true;
};

inline PrimalityResult check_prime(const Integer& n) {
  if (n < 2) return {false, true};
  if (detail::fits_u64(n)) return {detail::is_prime_u64(detail::to_u64(n)), true};
  for (unsigned long p : detail::small_primes()) {
    if (p > 1000) break;
    if (mpz_divisible_ui_p(n.get_mpz_t(), p)) return {false, true};
  }
  // Bases 2..41 are deterministic below 3317044064679887385961981.
  static const Integer kDeterministicBound("3317044064679887385961981");
  for (unsigned long a : {2ul, 3ul, 5ul, 7ul, 11ul, 13ul, 17ul, 19ul, 23ul, 29ul, 31ul, 37ul, 41ul}) {
    if (!detail::miller_rabin_round(n, Integer(a))) return {false, true};
  }
  if (n < kDeterministicBound) return {true, true};
  std::seed_seq seq{static_cast<std::uint32_t>(mpz_get_ui(n.get_mpz_t())),
                    static_cast<std::uint32_t>(mpz_sizeinbase(n.get_mpz_t(), 2))};
  std::mt19937_64 rng(seq);
  gmp_randclass gmp_rng(gmp_randinit_default);
  gmp_rng.seed(static_cast<unsigned long>(rng()));
  for (int round = 0; round < 64; ++round) {
    Integer a = gmp_rng.get_z_range(n - 3) + 2;
    if (!detail::miller_rabin_round(n, a)) return {false, true};
  }
  return {true, false};
}

inline bool is_prime(const Integer& n) { return check_prime(n).prime; }

/// Primes up to `bound` inclusive.
inline std::vector<std::uint64_t> primes_up_to(std::uint64_t bound) {
  std::vector<std::uint64_t> out;
  if (bound < 2) return out;
  std::vector<bool> composite(bound + 1, false);
  for (std::uint64_t i = 2; i <= bound; ++i) {
    if (composite[i]) continue;
    out.push_back(i);
    for (std::uint64_t j = i * i; j <= bound; j += i) composite[j] = true;
  }
  return out;
}

/// A finite, strictly increasing set of primes.
class PrimeSet {
 public:
  PrimeSet() = default;

  PrimeSet(std::initializer_list<long> primes) {
    for (long p : primes) primes_.emplace_back(p);
    normalize();
  }

  explicit PrimeSet(std::vector<Integer> primes) : primes_(std::move(primes)) { normalize(); }

  bool contains(const Integer& p) const { return std::binary_search(primes_.begin(), primes_.end(), p); }
  bool empty() const { return primes_.empty(); }
  std::size_t size() const { return primes_.size(); }
  auto begin() const { return primes_.begin(); }
  auto end() const { return primes_.end(); }
  const std::vector<Integer>& primes() const { return primes_; }

  PrimeSet unite(const PrimeSet& other) const {
    std::vector<Integer> merged = primes_;
    merged.insert(merged.end(), other.primes_.begin(), other.primes_.end());
    PrimeSet out;
    out.primes_ = std::move(merged);
    out.sort_unique();
    return out;
  }

  bool includes(const PrimeSet& other) const {
    return std::includes(primes_.begin(), primes_.end(), other.primes_.begin(), other.primes_.end());
  }

  std::string to_string() const {
    std::string out = "{";
    for (std::size_t i = 0; i < primes_.size(); ++i) {
      if (i) out += ",";
      out += primes_[i].get_str();
    }
    return out + "}";
  }

  friend bool operator==(const PrimeSet& a, const PrimeSet& b) { return a.primes_ == b.primes_; }

 private:
  void sort_unique() {
    std::sort(primes_.begin(), primes_.end());
    primes_.erase(std::unique(primes_.begin(), primes_.end()), primes_.end());
  }

  void normalize() {
    sort_unique();
    for (const auto& p : primes_) {
      if (!is_prime(p)) throw InvalidInput("prime set member " + p.get_str() + " is not prime");
    }
  }

  std::vector<Integer> primes_;
};

/// Parses "{2,3,5}" or "2,3,5"; "{}" or "" is the empty set.
inline PrimeSet parse_prime_set(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (c != '{' && c != '}' && c != ' ' && c != '\t') s.push_back(c);
  }
  std::vector<Integer> primes;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    primes.push_back(parse_integer(std::string_view(s).substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return PrimeSet(std::move(primes));
}

/// Effort bound for `factorize`.
struct FactorBudget {
  std::uint64_t trial_bound = 1u << 16;
  std::uint64_t rho_iterations = 20'000'000;
};

/// value = sign * prod(p^e) * cofactor. `complete` iff cofactor == 1.
struct Factorization {
  int sign = 1;
  std::map<Integer, unsigned> factors;
  Integer cofactor = 1;
  bool complete = true;
  bool probabilistic = false;

  Integer value() const {
    Integer out = cofactor;
    for (const auto& [p, e] : factors) {
      Integer pe;
      mpz_pow_ui(pe.get_mpz_t(), p.get_mpz_t(), e);
      out *= pe;
    }
    return sign < 0 ? Integer(-out) : out;
  }

  PrimeSet prime_set() const {
    std::vector<Integer> ps;
    for (const auto& [p, e] : factors) ps.push_back(p);
    return PrimeSet(std::move(ps));
  }
};

namespace detail {

inline std::optional<std::uint64_t> rho_u64(std::uint64_t n, std::uint64_t& iterations_left) {
  if (n % 2 == 0) return 2;
  for (std::uint64_t c = 1; c < 64 && iterations_left > 0; ++c) {
    auto step = [&](std::uint64_t x) { return (mulmod(x, x, n) + c) % n; };
    std::uint64_t y = 2, x = 2, ys = 2, q = 1, g = 1;
    std::uint64_t r = 1;
    constexpr std::uint64_t m = 128;
    while (g == 1 && iterations_left > 0) {
      x = y;
      for (std::uint64_t i = 0; i < r; ++i) y = step(y);
      std::uint64_t k = 0;
      while (k < r && g == 1) {
        ys = y;
        std::uint64_t lim = std::min(m, r - k);
        for (std::uint64_t i = 0; i < lim; ++i) {
          y = step(y);
          q = mulmod(q, x > y ? x - y : y - x, n);
        }
        g = std::gcd(q, n);
        k += m;
        iterations_left = iterations_left > lim ? iterations_left - lim : 0;
      }
      r *= 2;
    }
    if (g == n) {
      do {
        ys = step(ys);
        g = std::gcd(x > ys ? x - ys : ys - x, n);
      } while (g == 1);
    }
    if (g != 1 && g != n) return g;
  }
  return std::nullopt;
}

inline std::optional<Integer> rho_mpz(const Integer& n, std::uint64_t& iterations_left) {
  if (mpz_even_p(n.get_mpz_t())) return Integer(2);
  for (unsigned long c = 1; c < 64 && iterations_left > 0; ++c) {
    Integer y = 2, x = 2, ys = 2, q = 1, g = 1, t;
    auto step = [&](Integer& v) {
      mpz_mul(v.get_mpz_t(), v.get_mpz_t(), v.get_mpz_t());
      mpz_add_ui(v.get_mpz_t(), v.get_mpz_t(), c);
      mpz_mod(v.get_mpz_t(), v.get_mpz_t(), n.get_mpz_t());
    };
    std::uint64_t r = 1;
    constexpr std::uint64_t m = 128;
    while (g == 1 && iterations_left > 0) {
      x = y;
      for (std::uint64_t i = 0; i < r; ++i) step(y);
      std::uint64_t k = 0;
      while (k < r && g == 1) {
        ys = y;
        std::uint64_t lim = std::min(m, r - k);
        for (std::uint64_t i = 0; i < lim; ++i) {
          step(y);
          mpz_sub(t.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t());
          mpz_mul(q.get_mpz_t(), q.get_mpz_t(), t.get_mpz_t());
          mpz_mod(q.get_mpz_t(), q.get_mpz_t(), n.get_mpz_t());
        }
        mpz_gcd(g.get_mpz_t(), q.get_mpz_t(), n.get_mpz_t());
        k += m;
        iterations_left = iterations_left > lim ? iterations_left - lim : 0;
      }
      r *= 2;
    }
    if (g == n || g == 0) {
      do {
        step(ys);
        mpz_sub(t.get_mpz_t(), x.get_mpz_t(), ys.get_mpz_t());
        mpz_gcd(g.get_mpz_t(), t.get_mpz_t(), n.get_mpz_t());
      } while (g == 1);
    }
    if (g != 1 && g != n) return g;
  }
  return std::nullopt;
}

// Returns (root, k) with n = root^k and k maximal, or (n, 1).
inline std::pair<Integer, unsigned> perfect_power(const Integer& n) {
  if (n < 4 || !mpz_perfect_power_p(n.get_mpz_t())) return {n, 1};
  unsigned long bits = mpz_sizeinbase(n.get_mpz_t(), 2);
  for (unsigned long k = bits; k >= 2; --k) {
    Integer root;
    if (mpz_root(root.get_mpz_t(), n.get_mpz_t(), k)) return {root, static_cast<unsigned>(k)};
  }
  return {n, 1};
}

}  // namespace detail

/// Budgeted factorization. Zero is rejected; a failed split leaves the
/// unfactored part in `cofactor` and clears `complete`.
inline Factorization factorize(const Integer& n, const FactorBudget& budget = {}) {
  if (n == 0) throw InvalidInput("factorize: zero has no factorization");
  Factorization out;
  out.sign = n < 0 ? -1 : 1;
  Integer rest = n < 0 ? Integer(-n) : n;

  const auto& primes = detail::small_primes();
  for (std::uint32_t p : primes) {
    if (p > budget.trial_bound) break;
    if (rest == 1) break;
    if (Integer(p) * p > rest) break;
    if (mpz_divisible_ui_p(rest.get_mpz_t(), p)) {
      unsigned e = static_cast<unsigned>(mpz_remove(rest.get_mpz_t(), rest.get_mpz_t(), Integer(p).get_mpz_t()));
      out.factors[Integer(p)] += e;
    }
  }
  if (rest == 1) return out;

  std::uint64_t iterations_left = budget.rho_iterations;
  // Stack of (composite-or-prime, multiplicity).
  std::vector<std::pair<Integer, unsigned>> work{{rest, 1}};
  Integer unfactored = 1;
  while (!work.empty()) {
    auto [m, mult] = work.back();
    work.pop_back();
    if (m == 1) continue;
    auto primality = check_prime(m);
    if (primality.prime) {
      out.factors[m] += mult;
      if (!primality.proven) out.probabilistic = true;
      continue;
    }
    auto [root, k] = detail::perfect_power(m);
    if (k > 1) {
      work.emplace_back(root, mult * k);
      continue;
    }
    std::optional<Integer> d;
    if (detail::fits_u64(m)) {
      auto small = detail::rho_u64(detail::to_u64(m), iterations_left);
      if (small) d = detail::from_u64(*small);
    } else {
      d = detail::rho_mpz(m, iterations_left);
    }
    if (!d) {
      Integer power;
      mpz_pow_ui(power.get_mpz_t(), m.get_mpz_t(), mult);
      unfactored *= power;
      continue;
    }
    Integer other = m / *d;
    work.emplace_back(*d, mult);
    work.emplace_back(other, mult);
  }
  out.cofactor = unfactored;
  out.complete = (unfactored == 1);
  return out;
}

/// Number of prime factors of n outside S; nullopt when the factorization is
/// incomplete (never a guess).
inline std::optional<unsigned> omega_outside(const Factorization& f, const PrimeSet& S, bool with_multiplicity = true) {
  if (!f.complete) return std::nullopt;
  unsigned count = 0;
  for (const auto& [p, e] : f.factors) {
    if (S.contains(p)) continue;
    count += with_multiplicity ? e : 1;
  }
  return count;
}

inline std::optional<unsigned> omega_outside(const Integer& n, const PrimeSet& S, bool with_multiplicity = true,
                                             const FactorBudget& budget = {}) {
  return omega_outside(factorize(n, budget), S, with_multiplicity);
}

/// v_p(q) for q != 0.
inline long padic_valuation(const Rational& q, const Integer& p) {
  if (q == 0) throw InvalidInput("padic_valuation: zero input");
  if (p < 2) throw InvalidInput("padic_valuation: modulus is not a prime");
  Integer num = q.get_num(), den = q.get_den();
  long up = static_cast<long>(mpz_remove(num.get_mpz_t(), num.get_mpz_t(), p.get_mpz_t()));
  long down = static_cast<long>(mpz_remove(den.get_mpz_t(), den.get_mpz_t(), p.get_mpz_t()));
  return up - down;
}

namespace detail {

inline Integer strip_primes(Integer n, const PrimeSet& S) {
  if (n < 0) n = -n;
  for (const auto& p : S) {
    if (n == 1) break;
    mpz_remove(n.get_mpz_t(), n.get_mpz_t(), p.get_mpz_t());
  }
  return n;
}

}  // namespace detail

/// The positive integer prod_{p not in S} |q|_p^{-1}: q with its S-part and
/// sign removed. The denominator must be supported on S.
inline Integer s_integer_part(const Rational& q, const PrimeSet& S) {
  if (q == 0) throw InvalidInput("s_integer_part: zero input");
  if (detail::strip_primes(q.get_den(), S) != 1) {
    throw InvalidInput("s_integer_part: denominator of " + to_string(q) + " has a prime outside S = " +
                       S.to_string());
  }
  return detail::strip_primes(q.get_num(), S);
}

inline bool is_unit_in_ZS(const Rational& q, const PrimeSet& S) {
  if (q == 0) throw InvalidInput("is_unit_in_ZS: zero input");
  return detail::strip_primes(q.get_num(), S) == 1 && detail::strip_primes(q.get_den(), S) == 1;
}

/// Prime support of a nonzero integer; throws ResourceExhausted when the
/// factorization does not complete within budget.
inline PrimeSet prime_support(const Integer& n, const FactorBudget& budget = {}) {
  auto f = factorize(n, budget);
  if (!f.complete) throw ResourceExhausted("could not factor " + n.get_str() + " within budget", 0);
  return f.prime_set();
}

inline bool is_squarefree(const Integer& n, const FactorBudget& budget = {}) {
  auto f = factorize(n, budget);
  if (!f.complete) throw ResourceExhausted("could not factor " + n.get_str() + " within budget", 0);
  for (const auto& [p, e] : f.factors) {
    if (e > 1) return false;
  }
  return true;
}

inline Integer lcm(const Integer& a, const Integer& b) {
  Integer out;
  mpz_lcm(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return out;
}

inline Integer gcd(const Integer& a, const Integer& b) {
  Integer out;
  mpz_gcd(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return out;
}

inline Integer pow(const Integer& base, unsigned long e) {
  Integer out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), e);
  return out;
}

inline Rational pow(const Rational& base, unsigned long e) {
  Rational out(pow(Integer(base.get_num()), e), pow(Integer(base.get_den()), e));
  out.canonicalize();
  return out;
}

}  // namespace affsieve
