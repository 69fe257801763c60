#pragma once

// Independent brute-force oracles used by the tests. They deliberately avoid
// the library's own algorithms: plain trial division, Floyd rho with GMP's
// probable-prime test, and direct enumeration of SL_2 over small fields.

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace oracle {

inline std::map<mpz_class, unsigned> trial_factor(long long n) {
  std::map<mpz_class, unsigned> out;
  if (n < 0) n = -n;
  for (long long p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      out[mpz_class(std::to_string(p))] += 1;
      n /= p;
    }
  }
  if (n > 1) out[mpz_class(std::to_string(n))] += 1;
  return out;
}

// Floyd cycle detection with f(x) = x^2 + c; slow but independent.
inline mpz_class floyd_split(const mpz_class& n) {
  if (mpz_even_p(n.get_mpz_t())) return 2;
  for (unsigned long c = 1;; ++c) {
    mpz_class x = 2, y = 2, d = 1;
    while (d == 1) {
      x = (x * x + c) % n;
      y = (y * y + c) % n;
      y = (y * y + c) % n;
      mpz_class diff = x - y;
      mpz_gcd(d.get_mpz_t(), diff.get_mpz_t(), n.get_mpz_t());
    }
    if (d != n) return d;
  }
}

inline void factor_into(mpz_class n, std::map<mpz_class, unsigned>& out) {
  if (n < 0) n = -n;
  for (unsigned long p = 2; p < 1000; ++p) {
    while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
      out[mpz_class(p)] += 1;
      n /= p;
    }
  }
  std::vector<mpz_class> stack{n};
  while (!stack.empty()) {
    mpz_class m = stack.back();
    stack.pop_back();
    if (m == 1) continue;
    if (mpz_probab_prime_p(m.get_mpz_t(), 40)) {
      out[m] += 1;
      continue;
    }
    mpz_class d = floyd_split(m);
    stack.push_back(d);
    stack.push_back(m / d);
  }
}

inline std::map<mpz_class, unsigned> factor(const mpz_class& n) {
  std::map<mpz_class, unsigned> out;
  factor_into(n, out);
  return out;
}

// All elements of SL_2(Z/p) as (a,b,c,d).
inline std::vector<std::array<long, 4>> sl2_elements(long p) {
  std::vector<std::array<long, 4>> out;
  for (long a = 0; a < p; ++a)
    for (long b = 0; b < p; ++b)
      for (long c = 0; c < p; ++c)
        for (long d = 0; d < p; ++d)
          if (((a * d - b * c) % p + p) % p == 1) out.push_back({a, b, c, d});
  return out;
}

}  // namespace oracle
