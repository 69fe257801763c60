#pragma once

// Sparse multivariate polynomials with rational coefficients, and a parser
// for infix literals such as "x_{11}^2 + 1", "tr - 2" or "3/4*x1*x2 - x3".

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "affsieve/arith.hpp"
#include "affsieve/matgroup.hpp"

namespace affsieve {

using Monomial = std::vector<unsigned>;

class MultiPoly {
 public:
  MultiPoly() = default;
  explicit MultiPoly(std::vector<std::string> vars) : vars_(std::move(vars)) {}

  static MultiPoly constant(std::vector<std::string> vars, const Rational& c) {
    MultiPoly p(std::move(vars));
    if (c != 0) p.terms_[Monomial(p.vars_.size(), 0)] = c;
    return p;
  }

  static MultiPoly variable(std::vector<std::string> vars, std::size_t index) {
    MultiPoly p(std::move(vars));
    if (index >= p.vars_.size()) throw InvalidInput("variable index out of range");
    Monomial m(p.vars_.size(), 0);
    m[index] = 1;
    p.terms_[m] = 1;
    return p;
  }

  const std::vector<std::string>& vars() const { return vars_; }
  std::size_t nvars() const { return vars_.size(); }
  const std::map<Monomial, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  std::size_t var_index(const std::string& name) const {
    auto it = std::find(vars_.begin(), vars_.end(), name);
    if (it == vars_.end()) throw InvalidInput("unknown variable '" + name + "'");
    return static_cast<std::size_t>(it - vars_.begin());
  }

  void add_term(const Monomial& m, const Rational& c) {
    if (m.size() != vars_.size()) throw InvalidInput("monomial has wrong arity");
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  unsigned degree() const {
    unsigned d = 0;
    for (const auto& [m, c] : terms_) {
      unsigned s = 0;
      for (unsigned e : m) s += e;
      d = std::max(d, s);
    }
    return d;
  }

  unsigned degree_in(std::size_t var) const {
    unsigned d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m[var]);
    return d;
  }

  bool depends_on(std::size_t var) const { return degree_in(var) > 0; }

  bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && degree() == 0); }

  Rational constant_value() const {
    auto it = terms_.find(Monomial(vars_.size(), 0));
    return it == terms_.end() ? Rational(0) : it->second;
  }

  /// Coefficient of var^k, as a polynomial in the same variables (var absent).
  MultiPoly coefficient(std::size_t var, unsigned k) const {
    MultiPoly out(vars_);
    for (const auto& [m, c] : terms_) {
      if (m[var] != k) continue;
      Monomial mm = m;
      mm[var] = 0;
      out.terms_.emplace(std::move(mm), c);
    }
    return out;
  }

  friend MultiPoly operator+(const MultiPoly& a, const MultiPoly& b) {
    check_same(a, b);
    MultiPoly out = a;
    for (const auto& [m, c] : b.terms_) out.add_term(m, c);
    return out;
  }

  friend MultiPoly operator-(const MultiPoly& a) {
    MultiPoly out = a;
    for (auto& [m, c] : out.terms_) c = -c;
    return out;
  }

  friend MultiPoly operator-(const MultiPoly& a, const MultiPoly& b) { return a + (-b); }

  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
    check_same(a, b);
    MultiPoly out(a.vars_);
    Monomial m(a.vars_.size());
    for (const auto& [ma, ca] : a.terms_) {
      for (const auto& [mb, cb] : b.terms_) {
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = ma[i] + mb[i];
        out.add_term(m, ca * cb);
      }
    }
    return out;
  }

  friend MultiPoly operator*(const Rational& s, const MultiPoly& a) {
    MultiPoly out(a.vars_);
    if (s == 0) return out;
    for (const auto& [m, c] : a.terms_) out.terms_.emplace(m, s * c);
    return out;
  }

  friend bool operator==(const MultiPoly& a, const MultiPoly& b) {
    return a.vars_ == b.vars_ && a.terms_ == b.terms_;
  }
  friend bool operator!=(const MultiPoly& a, const MultiPoly& b) { return !(a == b); }

  MultiPoly pow(unsigned e) const {
    MultiPoly out = constant(vars_, 1), base = *this;
    while (e) {
      if (e & 1) out = out * base;
      e >>= 1;
      if (e) base = base * base;
    }
    return out;
  }

  Rational eval(const std::vector<Rational>& x) const {
    if (x.size() != vars_.size()) throw InvalidInput("eval: point has wrong dimension");
    Rational sum = 0, term, pw;
    for (const auto& [m, c] : terms_) {
      term = c;
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] == 0) continue;
        mpz_pow_ui(pw.get_num_mpz_t(), x[i].get_num_mpz_t(), m[i]);
        mpz_pow_ui(pw.get_den_mpz_t(), x[i].get_den_mpz_t(), m[i]);
        term *= pw;
      }
      sum += term;
    }
    return sum;
  }

  Rational eval(const std::vector<Integer>& x) const {
    std::vector<Rational> q(x.begin(), x.end());
    return eval(q);
  }

  /// Evaluates on the entries of a matrix, variables x_{ij} in row-major order.
  Rational eval(const MatrixQ& g) const { return eval(g.entries()); }

  /// Replaces variable i by images[i]; all images share one variable list.
  MultiPoly compose(const std::vector<MultiPoly>& images) const {
    if (images.size() != vars_.size()) throw InvalidInput("compose: wrong number of images");
    if (images.empty()) return *this;
    MultiPoly out(images.front().vars_);
    std::vector<std::vector<MultiPoly>> powers(images.size());
    for (const auto& [m, c] : terms_) {
      MultiPoly t = constant(out.vars_, c);
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] == 0) continue;
        auto& pw = powers[i];
        if (pw.empty()) pw.push_back(constant(out.vars_, 1));
        while (pw.size() <= m[i]) pw.push_back(pw.back() * images[i]);
        t = t * pw[m[i]];
      }
      out = out + t;
    }
    return out;
  }

  /// Same polynomial over a different (super)set of variable names.
  MultiPoly rename(const std::vector<std::string>& new_vars) const {
    std::vector<std::size_t> where(vars_.size());
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      auto it = std::find(new_vars.begin(), new_vars.end(), vars_[i]);
      if (it == new_vars.end()) {
        if (depends_on(i)) throw InvalidInput("rename: variable '" + vars_[i] + "' missing");
        where[i] = new_vars.size();
      } else {
        where[i] = static_cast<std::size_t>(it - new_vars.begin());
      }
    }
    MultiPoly out(new_vars);
    for (const auto& [m, c] : terms_) {
      Monomial mm(new_vars.size(), 0);
      for (std::size_t i = 0; i < m.size(); ++i)
        if (where[i] < new_vars.size()) mm[where[i]] = m[i];
      out.add_term(mm, c);
    }
    return out;
  }

  /// lcm of coefficient denominators.
  Integer denominator_lcm() const {
    Integer l = 1;
    for (const auto& [m, c] : terms_) l = lcm(l, Integer(c.get_den()));
    return l;
  }

  /// Positive gcd of numerators over lcm of denominators; 0 for the zero polynomial.
  Rational content() const {
    Integer g = 0;
    for (const auto& [m, c] : terms_) g = gcd(g, Integer(c.get_num()));
    if (g == 0) return 0;
    return make_rational(g, denominator_lcm());
  }

  bool has_integer_coefficients() const {
    for (const auto& [m, c] : terms_)
      if (c.get_den() != 1) return false;
    return true;
  }

  /// Leading term in lex order on exponent vectors (first variable most significant).
  std::pair<Monomial, Rational> leading_term() const {
    if (terms_.empty()) throw InvalidInput("leading term of zero polynomial");
    auto it = terms_.rbegin();
    return {it->first, it->second};
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string s;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [m, c] = *it;
      bool constant_term = std::all_of(m.begin(), m.end(), [](unsigned e) { return e == 0; });
      Rational a = abs(c);
      if (first) {
        if (c < 0) s += "-";
      } else {
        s += c < 0 ? " - " : " + ";
      }
      first = false;
      std::string mono;
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] == 0) continue;
        if (!mono.empty()) mono += "*";
        mono += vars_[i];
        if (m[i] > 1) mono += "^" + std::to_string(m[i]);
      }
      if (constant_term) {
        s += affsieve::to_string(a);
      } else if (a == 1) {
        s += mono;
      } else {
        s += affsieve::to_string(a) + "*" + mono;
      }
    }
    return s;
  }

 private:
  static void check_same(const MultiPoly& a, const MultiPoly& b) {
    if (a.vars_ != b.vars_) throw InvalidInput("polynomials over different variable lists");
  }

  std::vector<std::string> vars_;
  std::map<Monomial, Rational> terms_;
};

/// x11, x12, ..., xnn: the entry coordinates of n x n matrices (n <= 9).
inline std::vector<std::string> matrix_variables(std::size_t n) {
  if (n == 0 || n > 9) throw InvalidInput("matrix variables support 1 <= n <= 9");
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= n; ++j) out.push_back("x" + std::to_string(i) + std::to_string(j));
  return out;
}

/// Determinant of the generic n x n matrix in the variables of matrix_variables(n).
inline MultiPoly generic_determinant(std::size_t n) {
  auto vars = matrix_variables(n);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  MultiPoly out(vars);
  do {
    int sign = 1;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) sign = -sign;
    Monomial m(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) m[i * n + perm[i]] = 1;
    out.add_term(m, sign);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

inline MultiPoly generic_trace(std::size_t n) {
  auto vars = matrix_variables(n);
  MultiPoly out(vars);
  for (std::size_t i = 0; i < n; ++i) out = out + MultiPoly::variable(vars, i * n + i);
  return out;
}

namespace detail {

// Recursive-descent parser. `matrix_dim` > 0 enables the macros tr and det.
class PolyParser {
 public:
  PolyParser(std::string_view text, const std::vector<std::string>& vars, std::size_t matrix_dim)
      : s_(text), vars_(vars), n_(matrix_dim) {}

  MultiPoly parse() {
    MultiPoly p = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw InvalidInput("polynomial '" + std::string(s_) + "': " + why + " at position " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  MultiPoly expr() {
    MultiPoly acc = term();
    for (;;) {
      char c = peek();
      if (c == '+') {
        ++pos_;
        acc = acc + term();
      } else if (c == '-') {
        ++pos_;
        acc = acc - term();
      } else {
        return acc;
      }
    }
  }

  MultiPoly term() {
    MultiPoly acc = unary();
    for (;;) {
      char c = peek();
      if (c == '*') {
        ++pos_;
        acc = acc * unary();
      } else if (c == '/') {
        ++pos_;
        MultiPoly d = unary();
        if (!d.is_constant() || d.is_zero()) fail("division only by nonzero constants");
        acc = (1 / d.constant_value()) * acc;
      } else if (c == '(' || std::isalnum(static_cast<unsigned char>(c))) {
        acc = acc * unary();  // implicit multiplication, as in 2x or 3(x+1)
      } else {
        return acc;
      }
    }
  }

  MultiPoly unary() {
    char c = peek();
    if (c == '-') {
      ++pos_;
      return -unary();
    }
    if (c == '+') {
      ++pos_;
      return unary();
    }
    return power();
  }

  MultiPoly power() {
    MultiPoly base = primary();
    if (peek() == '^') {
      ++pos_;
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("exponent must be a non-negative integer");
      unsigned long e = std::stoul(std::string(s_.substr(start, pos_ - start)));
      if (e > 1000) fail("exponent too large");
      return base.pow(static_cast<unsigned>(e));
    }
    return base;
  }

  MultiPoly primary() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      MultiPoly p = expr();
      if (peek() != ')') fail("missing ')'");
      ++pos_;
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return MultiPoly::constant(vars_, Integer(std::string(s_.substr(start, pos_ - start))));
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::string name;
      while (pos_ < s_.size()) {
        char d = s_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_') {
          if (d != '_') name.push_back(d);
          ++pos_;
        } else if (d == '{' ) {
          // x_{1,2} style subscripts: keep the digits.
          ++pos_;
          while (pos_ < s_.size() && s_[pos_] != '}') {
            if (s_[pos_] != ',' && s_[pos_] != ' ') name.push_back(s_[pos_]);
            ++pos_;
          }
          if (pos_ == s_.size()) fail("unterminated '{'");
          ++pos_;
        } else {
          break;
        }
      }
      if (n_ > 0 && (name == "tr" || name == "det")) {
        if (peek() == '(') {
          ++pos_;
          if (peek() != ')') fail("macro takes no arguments");
          ++pos_;
        }
        MultiPoly m = name == "tr" ? generic_trace(n_) : generic_determinant(n_);
        return m.rename(vars_);
      }
      auto it = std::find(vars_.begin(), vars_.end(), name);
      if (it == vars_.end()) fail("unknown variable '" + name + "'");
      return MultiPoly::variable(vars_, static_cast<std::size_t>(it - vars_.begin()));
    }
    fail(c == '\0' ? "unexpected end of input" : "unexpected '" + std::string(1, c) + "'");
  }

  std::string_view s_;
  const std::vector<std::string>& vars_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses over a fixed variable list. Subscript spellings x_{12}, x_12 and
/// x12 all name the variable "x12".
inline MultiPoly parse_poly(std::string_view text, const std::vector<std::string>& vars) {
  return detail::PolyParser(text, vars, 0).parse();
}

/// Parses a regular function on n x n matrices: variables x11..xnn plus the
/// macros tr and det.
inline MultiPoly parse_matrix_poly(std::string_view text, std::size_t n) {
  auto vars = matrix_variables(n);
  return detail::PolyParser(text, vars, n).parse();
}

/// Variables x1..xk.
inline std::vector<std::string> indexed_variables(std::size_t k, const std::string& stem = "x") {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= k; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

}  // namespace affsieve
