#pragma once

#include "airy/rational.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace airy {

using SparseRow = std::map<long, Rational>;
using SparseMatrix = std::map<long, SparseRow>;  // row index -> row

using DenseMatrix = std::vector<std::vector<Rational>>;

// Gauss-Jordan inverse; empty optional when singular.
inline std::optional<DenseMatrix> dense_inverse(DenseMatrix a) {
  std::size_t n = a.size();
  DenseMatrix inv(n, std::vector<Rational>(n, 0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col] == 0) ++pivot;
    if (pivot == n) return std::nullopt;
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    Rational p = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= p;
      inv[col][j] /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rational f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

inline DenseMatrix dense_product(const DenseMatrix& a, const DenseMatrix& b) {
  std::size_t n = a.size(), m = b.empty() ? 0 : b[0].size(), k = b.size();
  DenseMatrix r(n, std::vector<Rational>(m, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      if (a[i][l] == 0) continue;
      for (std::size_t j = 0; j < m; ++j) r[i][j] += a[i][l] * b[l][j];
    }
  return r;
}

// Binomial-derivative coefficients m!/((m-i-1)! i!) arranged as the block
// matrix (M)_{rc} = c^{2r}_{c-1} for 1 <= r,c <= n; rescaling row r by 1/r
// gives a submatrix of the Pascal matrix, so the block is invertible.
inline DenseMatrix pascal_block(long n) {
  DenseMatrix m(n, std::vector<Rational>(n, 0));
  for (long r = 1; r <= n; ++r)
    for (long c = 1; c <= n; ++c) {
      long mm = 2 * r;
      if (c > mm) continue;
      m[r - 1][c - 1] = Rational(factorial(mm) / (factorial(mm - c) * factorial(c - 1)));
    }
  return m;
}

// Inverse data for a block upper-bidiagonal matrix with square diagonal
// blocks D_k and superdiagonal blocks U_k (rows at block k touch columns of
// blocks k and k+1 only). Row a of the inverse is produced incrementally:
// J_a = (D_k^{-1})-row over block k plus a pending tail on block k+1 given by
// -D_k^{-1} U_k, which is then substituted recursively.
struct BandedInverse {
  long block_size = 0;
  long block_count = 0;  // blocks 0..block_count-1 materialized
  std::vector<DenseMatrix> dinv;
  std::vector<DenseMatrix> tail;  // -D_k^{-1} U_k

  // L-coefficients of row a, expanded through block `depth` (inclusive).
  SparseRow row(long a, long depth) const {
    long k0 = a / block_size;
    if (k0 >= block_count) throw window_overflow_error("row block outside banded window");
    depth = std::min(depth, block_count - 1);
    SparseRow out;
    std::vector<Rational> pending(block_size, 0);
    pending[a % block_size] = 1;  // coefficients on hbar J's of block k0
    for (long k = k0; k <= depth; ++k) {
      std::vector<Rational> lcoef(block_size, 0);
      for (long r = 0; r < block_size; ++r) {
        if (pending[r] == 0) continue;
        for (long c = 0; c < block_size; ++c) lcoef[c] += pending[r] * dinv[k][r][c];
      }
      for (long c = 0; c < block_size; ++c)
        if (lcoef[c] != 0) out[k * block_size + c] = lcoef[c];
      std::vector<Rational> next(block_size, 0);
      for (long r = 0; r < block_size; ++r) {
        if (pending[r] == 0) continue;
        for (long c = 0; c < block_size; ++c) next[c] += pending[r] * tail[k][r][c];
      }
      pending.swap(next);
    }
    return out;
  }
};

struct SingularBlockError : error {
  long block;
  explicit SingularBlockError(long b)
      : error("singular diagonal block " + std::to_string(b)), block(b) {}
};

// Builds the banded inverse from sparse rows. Row i may only touch columns in
// [block(i)*n, block(i)*n + 2n).
inline BandedInverse invert_banded(const SparseMatrix& rows, long block_size,
                                   long block_count) {
  BandedInverse inv;
  inv.block_size = block_size;
  inv.block_count = block_count;
  for (long k = 0; k < block_count; ++k) {
    DenseMatrix d(block_size, std::vector<Rational>(block_size, 0));
    DenseMatrix u(block_size, std::vector<Rational>(block_size, 0));
    for (long r = 0; r < block_size; ++r) {
      auto it = rows.find(k * block_size + r);
      if (it == rows.end()) throw SingularBlockError(k);
      for (auto& [col, v] : it->second) {
        long off = col - k * block_size;
        if (off < 0 || off >= 2 * block_size)
          throw error("matrix row leaves its band");
        if (off < block_size) d[r][off] = v;
        else u[r][off - block_size] = v;
      }
    }
    auto di = dense_inverse(d);
    if (!di) throw SingularBlockError(k);
    inv.dinv.push_back(*di);
    DenseMatrix t = dense_product(*di, u);
    for (auto& rr : t)
      for (auto& v : rr) v = -v;
    inv.tail.push_back(std::move(t));
  }
  return inv;
}

// Exact inverse of a finite sparse matrix given by rows; returns rows of the
// inverse keyed by column index (so inverse.row(a) gives the coefficients
// expressing unit vector a in terms of the original rows). Rejects non-square
// or singular systems.
inline std::optional<SparseMatrix> invert_finite(const SparseMatrix& rows) {
  std::vector<long> row_ids;
  std::map<long, std::size_t> col_pos;
  for (auto& [i, r] : rows) {
    row_ids.push_back(i);
    for (auto& [c, v] : r) col_pos.try_emplace(c, 0);
  }
  if (row_ids.size() != col_pos.size()) return std::nullopt;
  std::size_t n = row_ids.size();
  std::vector<long> col_ids;
  for (auto& [c, pos] : col_pos) {
    pos = col_ids.size();
    col_ids.push_back(c);
  }
  DenseMatrix a(n, std::vector<Rational>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (auto& [c, v] : rows.at(row_ids[i])) a[i][col_pos[c]] = v;
  auto inv = dense_inverse(std::move(a));
  if (!inv) return std::nullopt;
  SparseMatrix out;
  for (std::size_t ci = 0; ci < n; ++ci) {
    SparseRow r;
    for (std::size_t ri = 0; ri < n; ++ri)
      if ((*inv)[ci][ri] != 0) r[row_ids[ri]] = (*inv)[ci][ri];
    out[col_ids[ci]] = std::move(r);
  }
  return out;
}

}  // namespace airy
