#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdca_admm {

using Vector = std::vector<double>;
using IndexList = std::vector<std::size_t>;

/// Compressed sparse column storage. Columns hold (row, value) pairs with
/// strictly increasing rows and nonzero finite values.
class SparseColumnMatrix {
 public:
  struct Entry {
    std::size_t row;
    double value;
  };

  SparseColumnMatrix() = default;

  SparseColumnMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), col_ptr_(cols + 1, 0) {}

  /// Builds from per-column entry lists. Entries may be unsorted; zeros are
  /// dropped. Duplicate rows within a column, out-of-range rows and
  /// non-finite values are rejected.
  static SparseColumnMatrix from_columns(std::size_t rows,
                                         std::vector<std::vector<Entry>> columns) {
    SparseColumnMatrix m(rows, columns.size());
    std::size_t total = 0;
    for (const auto& c : columns) total += c.size();
    m.row_idx_.reserve(total);
    m.values_.reserve(total);
    for (std::size_t j = 0; j < columns.size(); ++j) {
      auto& col = columns[j];
      std::sort(col.begin(), col.end(),
                [](const Entry& a, const Entry& b) { return a.row < b.row; });
      for (std::size_t k = 0; k < col.size(); ++k) {
        const auto& e = col[k];
        if (e.row >= rows) {
          throw std::invalid_argument("SparseColumnMatrix: row index " + std::to_string(e.row) +
                                      " out of range in column " + std::to_string(j));
        }
        if (k > 0 && col[k - 1].row == e.row) {
          throw std::invalid_argument("SparseColumnMatrix: duplicate row " +
                                      std::to_string(e.row) + " in column " + std::to_string(j));
        }
        if (!std::isfinite(e.value)) {
          throw std::invalid_argument("SparseColumnMatrix: non-finite value in column " +
                                      std::to_string(j));
        }
        if (e.value == 0.0) continue;
        m.row_idx_.push_back(e.row);
        m.values_.push_back(e.value);
      }
      m.col_ptr_[j + 1] = m.row_idx_.size();
    }
    return m;
  }

  /// Row-major dense input, rows x cols.
  static SparseColumnMatrix from_dense(std::size_t rows, std::size_t cols,
                                       std::span<const double> row_major) {
    if (row_major.size() != rows * cols) {
      throw std::invalid_argument("SparseColumnMatrix::from_dense: size mismatch");
    }
    std::vector<std::vector<Entry>> columns(cols);
    for (std::size_t j = 0; j < cols; ++j) {
      for (std::size_t i = 0; i < rows; ++i) {
        const double v = row_major[i * cols + j];
        if (v != 0.0) columns[j].push_back({i, v});
      }
    }
    return from_columns(rows, std::move(columns));
  }

  static SparseColumnMatrix identity(std::size_t n) {
    std::vector<std::vector<Entry>> columns(n);
    for (std::size_t j = 0; j < n; ++j) columns[j].push_back({j, 1.0});
    return from_columns(n, std::move(columns));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  std::span<const std::size_t> column_rows(std::size_t j) const {
    return {row_idx_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::span<const double> column_values(std::size_t j) const {
    return {values_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }

  /// Dot product of column j with a dense vector of length rows().
  double column_dot(std::size_t j, std::span<const double> v) const {
    double s = 0.0;
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) s += values_[k] * v[row_idx_[k]];
    return s;
  }

  /// out += alpha * column j
  void axpy_column(std::size_t j, double alpha, std::span<double> out) const {
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) out[row_idx_[k]] += alpha * values_[k];
  }

  double column_squared_norm(std::size_t j) const {
    double s = 0.0;
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) s += values_[k] * values_[k];
    return s;
  }

  /// Row-major dense copy.
  Vector to_dense() const {
    Vector d(rows_ * cols_, 0.0);
    for (std::size_t j = 0; j < cols_; ++j)
      for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) d[row_idx_[k] * cols_ + j] = values_[k];
    return d;
  }

  SparseColumnMatrix scaled(double c) const {
    SparseColumnMatrix m = *this;
    if (c == 0.0) return SparseColumnMatrix(rows_, cols_);
    for (auto& v : m.values_) v *= c;
    return m;
  }

  friend bool operator==(const SparseColumnMatrix&, const SparseColumnMatrix&) = default;

 private:
  friend SparseColumnMatrix select_columns(const SparseColumnMatrix&, std::span<const std::size_t>);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<std::size_t> row_idx_;
  std::vector<double> values_;
};

/// M * v
inline Vector matvec(const SparseColumnMatrix& m, std::span<const double> v) {
  if (v.size() != m.cols()) throw std::invalid_argument("matvec: dimension mismatch");
  Vector out(m.rows(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (v[j] != 0.0) m.axpy_column(j, v[j], out);
  }
  return out;
}

/// M^T * v
inline Vector matvec_transpose(const SparseColumnMatrix& m, std::span<const double> v) {
  if (v.size() != m.rows()) throw std::invalid_argument("matvec_transpose: dimension mismatch");
  Vector out(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) out[j] = m.column_dot(j, v);
  return out;
}

/// Sub-matrix built from the listed columns, in the order given.
inline SparseColumnMatrix select_columns(const SparseColumnMatrix& m,
                                         std::span<const std::size_t> idx) {
  std::vector<bool> seen(m.cols(), false);
  SparseColumnMatrix out(m.rows(), idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t j = idx[k];
    if (j >= m.cols()) throw std::invalid_argument("select_columns: index out of range");
    if (seen[j]) throw std::invalid_argument("select_columns: duplicate index");
    seen[j] = true;
    const auto r = m.column_rows(j);
    const auto v = m.column_values(j);
    out.row_idx_.insert(out.row_idx_.end(), r.begin(), r.end());
    out.values_.insert(out.values_.end(), v.begin(), v.end());
    out.col_ptr_[k + 1] = out.row_idx_.size();
  }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct SpectralEstimate {
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Largest eigenvalue of M^T M (the squared spectral norm of M) by power
/// iteration on v -> M^T (M v). The start vector is drawn from a fixed seed,
/// so the result is deterministic. Convergence is declared when successive
/// Rayleigh quotients agree to relative tolerance `tol`; otherwise the last
/// estimate is returned with `converged == false`.
inline SpectralEstimate spectral_norm_gram(const SparseColumnMatrix& m, double tol = 1e-10,
                                           std::size_t max_iter = 10000) {
  if (m.cols() == 0 || m.rows() == 0) throw std::invalid_argument("spectral_norm_gram: empty matrix");
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm_gram: tol must be positive");
  SpectralEstimate est;
  if (m.nonzeros() == 0) {
    est.converged = true;
    return est;
  }

  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> normal;
  Vector v(m.cols());
  for (auto& e : v) e = normal(rng);
  double nv = norm2(v);
  for (auto& e : v) e /= nv;

  double prev = 0.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Vector mv = matvec(m, v);
    Vector g = matvec_transpose(m, mv);
    const double rayleigh = dot(mv, mv);
    est.value = rayleigh;
    est.iterations = it;
    if (it > 1 && std::abs(rayleigh - prev) <= tol * rayleigh) {
      est.converged = true;
      break;
    }
    prev = rayleigh;
    const double ng = norm2(g);
    if (ng == 0.0) {
      // start vector in the null space; restart from a fresh draw
      for (auto& e : v) e = normal(rng);
      nv = norm2(v);
      for (auto& e : v) e /= nv;
      continue;
    }
    for (std::size_t j = 0; j < g.size(); ++j) v[j] = g[j] / ng;
  }
  return est;
}

}  // namespace sdca_admm
