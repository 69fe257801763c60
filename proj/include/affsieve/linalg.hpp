#pragma once

// Exact linear algebra over Q and Z: reduced row echelon form, nullspaces,
// an incremental echelon basis, and lattice bases by integer row reduction.

#include <algorithm>
#include <vector>

#include "affsieve/arith.hpp"

namespace affsieve {

using RowQ = std::vector<Rational>;
using MatQ = std::vector<RowQ>;

/// In-place reduced row echelon form with deterministic first-nonzero
/// pivoting. Returns pivot columns; zero rows are removed.
inline std::vector<std::size_t> rref(MatQ& m) {
  std::vector<std::size_t> pivots;
  if (m.empty()) return pivots;
  const std::size_t cols = m.front().size();
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < m.size(); ++c) {
    std::size_t piv = r;
    while (piv < m.size() && m[piv][c] == 0) ++piv;
    if (piv == m.size()) continue;
    std::swap(m[piv], m[r]);
    Rational inv = 1 / m[r][c];
    for (std::size_t j = c; j < cols; ++j) m[r][j] *= inv;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (i == r || m[i][c] == 0) continue;
      Rational f = m[i][c];
      for (std::size_t j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  m.resize(r);
  return pivots;
}

inline std::size_t rank(MatQ m) { return rref(m).size(); }

/// Basis of {x : m x = 0}.
inline MatQ nullspace(MatQ m, std::size_t cols) {
  auto pivots = rref(m);
  std::vector<bool> is_pivot(cols, false);
  for (auto c : pivots) is_pivot[c] = true;
  MatQ basis;
  for (std::size_t free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    RowQ v(cols);
    v[free] = 1;
    for (std::size_t i = 0; i < pivots.size(); ++i) v[pivots[i]] = -m[i][free];
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Row space built one vector at a time, kept in reduced echelon form.
class IncrementalEchelon {
 public:
  explicit IncrementalEchelon(std::size_t cols) : cols_(cols) {}

  /// Reduces v against the basis; returns the remainder (zero iff v is in the span).
  RowQ reduce(RowQ v) const {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const Rational& f = v[pivots_[i]];
      if (f == 0) continue;
      Rational ff = f;
      for (std::size_t j = pivots_[i]; j < cols_; ++j) v[j] -= ff * rows_[i][j];
    }
    return v;
  }

  bool contains(const RowQ& v) const {
    RowQ r = reduce(v);
    return std::all_of(r.begin(), r.end(), [](const Rational& x) { return x == 0; });
  }

  /// Adds v; returns true when it enlarged the span.
  bool add(const RowQ& v) {
    RowQ r = reduce(v);
    std::size_t p = 0;
    while (p < cols_ && r[p] == 0) ++p;
    if (p == cols_) return false;
    Rational inv = 1 / r[p];
    for (std::size_t j = p; j < cols_; ++j) r[j] *= inv;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const Rational f = rows_[i][p];
      if (f == 0) continue;
      for (std::size_t j = p; j < cols_; ++j) rows_[i][j] -= f * r[j];
    }
    auto pos = std::lower_bound(pivots_.begin(), pivots_.end(), p) - pivots_.begin();
    pivots_.insert(pivots_.begin() + pos, p);
    rows_.insert(rows_.begin() + pos, std::move(r));
    return true;
  }

  std::size_t rank() const { return rows_.size(); }
  std::size_t cols() const { return cols_; }
  const MatQ& rows() const { return rows_; }

 private:
  std::size_t cols_;
  MatQ rows_;
  std::vector<std::size_t> pivots_;
};

/// A Z-basis (Hermite normal form rows) of the lattice spanned by rational
/// vectors. Rows are returned with positive pivots, top to bottom.
inline MatQ lattice_basis(const MatQ& gens) {
  if (gens.empty()) return {};
  const std::size_t cols = gens.front().size();
  Integer D = 1;
  for (const auto& row : gens)
    for (const auto& x : row) D = lcm(D, Integer(x.get_den()));
  std::vector<std::vector<Integer>> m;
  for (const auto& row : gens) {
    std::vector<Integer> r(cols);
    for (std::size_t j = 0; j < cols; ++j) r[j] = Integer(row[j] * D);
    m.push_back(std::move(r));
  }
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < m.size(); ++c) {
    // Euclid on column c among rows r.. until a single nonzero entry remains.
    for (;;) {
      std::size_t best = m.size();
      for (std::size_t i = r; i < m.size(); ++i) {
        if (m[i][c] == 0) continue;
        if (best == m.size() || abs(m[i][c]) < abs(m[best][c])) best = i;
      }
      if (best == m.size()) break;
      std::swap(m[r], m[best]);
      bool done = true;
      for (std::size_t i = r + 1; i < m.size(); ++i) {
        if (m[i][c] == 0) continue;
        Integer q;
        mpz_fdiv_q(q.get_mpz_t(), m[i][c].get_mpz_t(), m[r][c].get_mpz_t());
        for (std::size_t j = c; j < cols; ++j) m[i][j] -= q * m[r][j];
        if (m[i][c] != 0) done = false;
      }
      if (done) break;
    }
    if (m[r][c] == 0) continue;
    if (m[r][c] < 0)
      for (auto& x : m[r]) x = -x;
    // Reduce entries above the pivot into [0, pivot).
    for (std::size_t i = 0; i < r; ++i) {
      Integer q;
      mpz_fdiv_q(q.get_mpz_t(), m[i][c].get_mpz_t(), m[r][c].get_mpz_t());
      if (q != 0)
        for (std::size_t j = c; j < cols; ++j) m[i][j] -= q * m[r][j];
    }
    ++r;
  }
  MatQ out;
  for (std::size_t i = 0; i < r; ++i) {
    RowQ row(cols);
    for (std::size_t j = 0; j < cols; ++j) row[j] = make_rational(m[i][j], D);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace affsieve
