#pragma once

// Exact rational matrices, generator sets, word-metric balls and orbits.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "affsieve/arith.hpp"

namespace affsieve {

using VectorQ = std::vector<Rational>;

class MatrixQ {
 public:
  MatrixQ() = default;
  explicit MatrixQ(std::size_t n) : n_(n), a_(n * n) {}

  MatrixQ(std::size_t n, std::vector<Rational> entries) : n_(n), a_(std::move(entries)) {
    if (a_.size() != n * n) throw InvalidInput("matrix entry count does not match dimension");
    for (auto& x : a_) x.canonicalize();
  }

  MatrixQ(std::initializer_list<std::initializer_list<Rational>> rows) {
    n_ = rows.size();
    for (const auto& row : rows) {
      if (row.size() != n_) throw InvalidInput("matrix must be square");
      for (const auto& x : row) a_.push_back(x);
    }
    for (auto& x : a_) x.canonicalize();
  }

  static MatrixQ identity(std::size_t n) {
    MatrixQ m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  std::size_t dim() const { return n_; }
  Rational& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  const std::vector<Rational>& entries() const { return a_; }

  friend MatrixQ operator*(const MatrixQ& x, const MatrixQ& y) {
    if (x.n_ != y.n_) throw InvalidInput("matrix dimension mismatch");
    const std::size_t n = x.n_;
    MatrixQ out(n);
    Rational t;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        const Rational& xik = x(i, k);
        if (xik == 0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          mpq_mul(t.get_mpq_t(), xik.get_mpq_t(), y(k, j).get_mpq_t());
          out(i, j) += t;
        }
      }
    }
    return out;
  }

  friend MatrixQ operator+(const MatrixQ& x, const MatrixQ& y) {
    MatrixQ out = x;
    for (std::size_t i = 0; i < out.a_.size(); ++i) out.a_[i] += y.a_[i];
    return out;
  }

  friend MatrixQ operator-(const MatrixQ& x, const MatrixQ& y) {
    MatrixQ out = x;
    for (std::size_t i = 0; i < out.a_.size(); ++i) out.a_[i] -= y.a_[i];
    return out;
  }

  friend MatrixQ operator*(const Rational& c, const MatrixQ& x) {
    MatrixQ out = x;
    for (auto& e : out.a_) e *= c;
    return out;
  }

  friend VectorQ operator*(const MatrixQ& x, const VectorQ& v) {
    if (v.size() != x.n_) throw InvalidInput("vector dimension mismatch");
    VectorQ out(x.n_);
    for (std::size_t i = 0; i < x.n_; ++i)
      for (std::size_t j = 0; j < x.n_; ++j) out[i] += x(i, j) * v[j];
    return out;
  }

  friend bool operator==(const MatrixQ& x, const MatrixQ& y) { return x.n_ == y.n_ && x.a_ == y.a_; }
  friend bool operator!=(const MatrixQ& x, const MatrixQ& y) { return !(x == y); }

  // Lexicographic on row-major entries; the canonical order inside a layer.
  friend bool operator<(const MatrixQ& x, const MatrixQ& y) {
    if (x.n_ != y.n_) return x.n_ < y.n_;
    for (std::size_t i = 0; i < x.a_.size(); ++i) {
      int c = cmp(x.a_[i], y.a_[i]);
      if (c != 0) return c < 0;
    }
    return false;
  }

  bool is_identity() const { return *this == identity(n_); }

  Rational trace() const {
    Rational t = 0;
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  MatrixQ transpose() const {
    MatrixQ out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) out(j, i) = (*this)(i, j);
    return out;
  }

  Rational det() const {
    MatrixQ m = *this;
    Rational d = 1;
    for (std::size_t c = 0; c < n_; ++c) {
      std::size_t piv = c;
      while (piv < n_ && m(piv, c) == 0) ++piv;
      if (piv == n_) return 0;
      if (piv != c) {
        for (std::size_t j = 0; j < n_; ++j) std::swap(m(piv, j), m(c, j));
        d = -d;
      }
      d *= m(c, c);
      for (std::size_t r = c + 1; r < n_; ++r) {
        if (m(r, c) == 0) continue;
        Rational f = m(r, c) / m(c, c);
        for (std::size_t j = c; j < n_; ++j) m(r, j) -= f * m(c, j);
      }
    }
    return d;
  }

  MatrixQ inverse() const {
    MatrixQ m = *this, inv = identity(n_);
    for (std::size_t c = 0; c < n_; ++c) {
      std::size_t piv = c;
      while (piv < n_ && m(piv, c) == 0) ++piv;
      if (piv == n_) throw InvalidInput("matrix is singular");
      if (piv != c) {
        for (std::size_t j = 0; j < n_; ++j) {
          std::swap(m(piv, j), m(c, j));
          std::swap(inv(piv, j), inv(c, j));
        }
      }
      Rational s = 1 / m(c, c);
      for (std::size_t j = 0; j < n_; ++j) {
        m(c, j) *= s;
        inv(c, j) *= s;
      }
      for (std::size_t r = 0; r < n_; ++r) {
        if (r == c || m(r, c) == 0) continue;
        Rational f = m(r, c);
        for (std::size_t j = 0; j < n_; ++j) {
          m(r, j) -= f * m(c, j);
          inv(r, j) -= f * inv(c, j);
        }
      }
    }
    return inv;
  }

  /// Least common multiple of entry denominators.
  Integer denominator_lcm() const {
    Integer l = 1;
    for (const auto& x : a_) l = lcm(l, Integer(x.get_den()));
    return l;
  }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < n_; ++i) {
      s += i ? ",[" : "[";
      for (std::size_t j = 0; j < n_; ++j) {
        if (j) s += ",";
        s += affsieve::to_string((*this)(i, j));
      }
      s += "]";
    }
    return s + "]";
  }

  std::size_t hash() const {
    std::size_t h = n_;
    auto hz = detail::hash_mpz;
    for (const auto& x : a_) {
      h ^= hz(x.get_num()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h ^= hz(x.get_den()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Rational> a_;
};

struct MatrixHash {
  std::size_t operator()(const MatrixQ& m) const { return m.hash(); }
};

struct VectorHash {
  std::size_t operator()(const VectorQ& v) const {
    std::size_t h = v.size();
    auto hz = detail::hash_mpz;
    for (const auto& x : v) h ^= hz(x.get_num()) * 31 + hz(x.get_den()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

inline bool vector_less(const VectorQ& a, const VectorQ& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [](const Rational& x, const Rational& y) { return x < y; });
}

inline std::string to_string(const VectorQ& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + to_string(v[i]);
  return s + ")";
}

/// Parses "[[1,2],[0,1]]" with rational entries.
inline MatrixQ parse_matrix(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (c != ' ' && c != '\t') s.push_back(c);
  }
  if (s.size() < 4 || s.front() != '[' || s.back() != ']') throw InvalidInput("bad matrix literal '" + s + "'");
  std::string body = s.substr(1, s.size() - 2);
  std::vector<std::vector<Rational>> rows;
  std::size_t pos = 0;
  while (pos < body.size()) {
    if (body[pos] == ',') {
      ++pos;
      continue;
    }
    if (body[pos] != '[') throw InvalidInput("bad matrix literal '" + s + "'");
    auto close = body.find(']', pos);
    if (close == std::string::npos) throw InvalidInput("bad matrix literal '" + s + "'");
    std::vector<Rational> row;
    std::string inner = body.substr(pos + 1, close - pos - 1);
    std::size_t p = 0;
    while (p <= inner.size()) {
      auto comma = inner.find(',', p);
      if (comma == std::string::npos) comma = inner.size();
      row.push_back(parse_rational(std::string_view(inner).substr(p, comma - p)));
      p = comma + 1;
    }
    rows.push_back(std::move(row));
    pos = close + 1;
  }
  std::size_t n = rows.size();
  std::vector<Rational> entries;
  for (auto& row : rows) {
    if (row.size() != n) throw InvalidInput("matrix literal is not square: '" + s + "'");
    for (auto& x : row) entries.push_back(x);
  }
  return MatrixQ(n, std::move(entries));
}

inline VectorQ parse_vector(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (c != ' ' && c != '\t' && c != '(' && c != ')' && c != '[' && c != ']') s.push_back(c);
  }
  VectorQ v;
  std::size_t p = 0;
  while (p < s.size()) {
    auto comma = s.find(',', p);
    if (comma == std::string::npos) comma = s.size();
    v.push_back(parse_rational(std::string_view(s).substr(p, comma - p)));
    p = comma + 1;
  }
  if (v.empty()) throw InvalidInput("empty vector literal");
  return v;
}

/// The motion x -> Ax + b as the block matrix [[A, b], [0, 1]].
inline MatrixQ affine_embed(const MatrixQ& A, const VectorQ& b) {
  const std::size_t n = A.dim();
  if (b.size() != n) throw InvalidInput("affine_embed: translation has wrong dimension");
  if (A.det() == 0) throw InvalidInput("affine_embed: linear part is singular");
  MatrixQ out(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) = A(i, j);
    out(i, n) = b[i];
  }
  out(n, n) = 1;
  return out;
}

class GeneratorSet {
 public:
  GeneratorSet() = default;

  /// Deduplicates, drops the identity and, when `symmetric`, appends missing
  /// inverses (each generator followed by its inverse).
  GeneratorSet(const std::vector<MatrixQ>& gens, bool symmetric) : symmetric_(symmetric) {
    std::unordered_set<MatrixQ, MatrixHash> seen;
    auto push = [&](const MatrixQ& g) {
      if (g.is_identity() || seen.count(g)) return;
      seen.insert(g);
      gens_.push_back(g);
    };
    for (const auto& g : gens) {
      if (!gens_.empty() && g.dim() != gens_.front().dim()) throw InvalidInput("generators have different dimensions");
      if (g.det() == 0) throw InvalidInput("generator " + g.to_string() + " is singular");
      push(g);
      if (symmetric) push(g.inverse());
    }
    if (!gens.empty()) dim_ = gens.front().dim();
  }

  const std::vector<MatrixQ>& generators() const { return gens_; }
  bool symmetric() const { return symmetric_; }
  std::size_t size() const { return gens_.size(); }
  bool empty() const { return gens_.empty(); }
  std::size_t dim() const { return dim_; }

  /// Throws unless every generator has determinant exactly 1.
  void require_special_linear() const {
    for (const auto& g : gens_) {
      if (g.det() != 1) throw InvalidInput("generator " + g.to_string() + " does not have determinant 1");
    }
  }

  Integer denominator_lcm() const {
    Integer l = 1;
    for (const auto& g : gens_) l = lcm(l, g.denominator_lcm());
    return l;
  }

 private:
  std::vector<MatrixQ> gens_;
  bool symmetric_ = true;
  std::size_t dim_ = 0;
};

/// All elements of word length <= L, in canonical order: by length, then
/// lexicographically by entries.
struct Ball {
  unsigned L = 0;
  std::vector<MatrixQ> elements;
  std::vector<unsigned> lengths;

  std::size_t size() const { return elements.size(); }

  std::optional<unsigned> length_of(const MatrixQ& g) const {
    if (index_.empty()) build_index();
    auto it = index_.find(g);
    if (it == index_.end()) return std::nullopt;
    return lengths[it->second];
  }

  /// Number of elements of exact length k.
  std::size_t shell_size(unsigned k) const {
    return static_cast<std::size_t>(std::count(lengths.begin(), lengths.end(), k));
  }

 private:
  void build_index() const {
    for (std::size_t i = 0; i < elements.size(); ++i) index_.emplace(elements[i], i);
  }
  mutable std::unordered_map<MatrixQ, std::size_t, MatrixHash> index_;
};

struct BallOptions {
  std::size_t cap = 1'000'000;
  unsigned threads = 1;
};

namespace detail {

// Applies `fn(i)` for i in [0, n) across up to `threads` workers; results are
// written by index so the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  if (threads <= 1 || n < 256) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

inline Ball ball(const GeneratorSet& gens, unsigned L, const BallOptions& opt = {}) {
  if (gens.dim() == 0) throw InvalidInput("ball: empty generator set has no dimension");
  Ball out;
  out.L = L;
  std::unordered_set<MatrixQ, MatrixHash> seen;
  std::vector<MatrixQ> frontier{MatrixQ::identity(gens.dim())};
  seen.insert(frontier.front());
  out.elements.push_back(frontier.front());
  out.lengths.push_back(0);
  const auto& g = gens.generators();
  for (unsigned k = 1; k <= L; ++k) {
    // Refuse before allocating a product buffer far beyond the cap.
    if (frontier.size() * g.size() > 2 * opt.cap) {
      throw ResourceExhausted("ball: element cap " + std::to_string(opt.cap) + " exceeded at radius " +
                                  std::to_string(k),
                              static_cast<long long>(k - 1));
    }
    std::vector<MatrixQ> products(frontier.size() * g.size());
    detail::parallel_for(frontier.size(), opt.threads, [&](std::size_t i) {
      for (std::size_t j = 0; j < g.size(); ++j) products[i * g.size() + j] = g[j] * frontier[i];
    });
    std::vector<MatrixQ> next;
    for (auto& m : products) {
      if (seen.insert(m).second) {
        next.push_back(std::move(m));
        if (seen.size() > opt.cap) {
          throw ResourceExhausted("ball: element cap " + std::to_string(opt.cap) + " exceeded at radius " +
                                      std::to_string(k),
                                  static_cast<long long>(k - 1));
        }
      }
    }
    std::sort(next.begin(), next.end());
    for (auto& m : next) {
      out.elements.push_back(m);
      out.lengths.push_back(k);
    }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  return out;
}

/// Points gamma*v for l(gamma) <= L with the minimal word length reaching each.
struct OrbitSlice {
  VectorQ base;
  unsigned L = 0;
  std::vector<VectorQ> points;
  std::vector<unsigned> lengths;
};

namespace detail {

// Acts linearly when dim == |v|, affinely through the embedding when dim == |v| + 1.
inline VectorQ act(const MatrixQ& g, const VectorQ& v) {
  if (g.dim() == v.size()) return g * v;
  VectorQ w = v;
  w.push_back(1);
  w = g * w;
  w.pop_back();
  return w;
}

}  // namespace detail

inline OrbitSlice orbit(const GeneratorSet& gens, const VectorQ& v, unsigned L, const BallOptions& opt = {}) {
  if (gens.dim() != v.size() && gens.dim() != v.size() + 1) {
    throw InvalidInput("orbit: base point dimension does not match the generators");
  }
  if (gens.dim() == v.size() + 1) {
    for (const auto& g : gens.generators()) {
      for (std::size_t j = 0; j + 1 < g.dim(); ++j) {
        if (g(g.dim() - 1, j) != 0) throw InvalidInput("orbit: generator is not an affine embedding");
      }
      if (g(g.dim() - 1, g.dim() - 1) != 1) throw InvalidInput("orbit: generator is not an affine embedding");
    }
  }
  OrbitSlice out;
  out.base = v;
  out.L = L;
  std::unordered_set<VectorQ, VectorHash> seen{v};
  std::vector<VectorQ> frontier{v};
  out.points.push_back(v);
  out.lengths.push_back(0);
  for (unsigned k = 1; k <= L && !frontier.empty(); ++k) {
    std::vector<VectorQ> next;
    for (const auto& w : frontier) {
      for (const auto& g : gens.generators()) {
        VectorQ u = detail::act(g, w);
        if (seen.insert(u).second) {
          next.push_back(std::move(u));
          if (seen.size() > opt.cap) throw ResourceExhausted("orbit: point cap exceeded", static_cast<long long>(k - 1));
        }
      }
    }
    std::sort(next.begin(), next.end(), vector_less);
    for (const auto& u : next) {
      out.points.push_back(u);
      out.lengths.push_back(k);
    }
    frontier = std::move(next);
  }
  return out;
}

/// p-adic absolute value |x|_p = p^{-v_p(x)}; |0|_p = 0.
inline Rational padic_abs(const Rational& x, const Integer& p) {
  if (x == 0) return 0;
  long v = padic_valuation(x, p);
  Integer pv = pow(p, static_cast<unsigned long>(v < 0 ? -v : v));
  return v >= 0 ? Rational(Integer(1), pv) : Rational(pv);
}

/// max(n * max|entry|, max over p in S of the largest p-adic entry norm).
/// The first term bounds the operator norm from above.
inline Rational s_norm(const MatrixQ& g, const PrimeSet& S) {
  Rational arch = 0;
  for (const auto& x : g.entries()) arch = std::max(arch, abs(x));
  Rational out = Rational(static_cast<long>(g.dim())) * arch;
  for (const auto& p : S) {
    for (const auto& x : g.entries()) out = std::max(out, padic_abs(x, p));
  }
  return out;
}

inline MatrixQ commutator(const MatrixQ& a, const MatrixQ& b) { return a.inverse() * b.inverse() * a * b; }

/// Commutators [a,b] of distinct generator pairs, iterated `depth` times.
/// Generates a subgroup of the derived group, not necessarily all of it.
inline GeneratorSet derived_generators(const GeneratorSet& gens, unsigned depth) {
  GeneratorSet cur = gens;
  for (unsigned d = 0; d < depth; ++d) {
    std::vector<MatrixQ> comms;
    const auto& g = cur.generators();
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = i + 1; j < g.size(); ++j) comms.push_back(commutator(g[i], g[j]));
    GeneratorSet next(comms, gens.symmetric());
    if (next.empty()) return GeneratorSet({}, gens.symmetric());
    cur = next;
  }
  return cur;
}

}  // namespace affsieve
