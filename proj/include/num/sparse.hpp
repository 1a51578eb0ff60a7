#ifndef NUM_SPARSE_HPP
#define NUM_SPARSE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "num/error.hpp"

namespace num {

using Vector = std::vector<double>;

template <typename Scalar>
struct Triplet {
  std::size_t row;
  std::size_t col;
  Scalar value;
};

/**
 * Compressed sparse row matrix. Column indices are sorted within each row
 * and unique, so lookups are a binary search and products have a fixed
 * summation order (results are bit-reproducible).
 */
template <typename Scalar>
class CsrMatrix {
 public:
  CsrMatrix() = default;

  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
            std::vector<std::size_t> col_idx, std::vector<Scalar> values)
      : rows_(rows),
        cols_(cols),
        row_ptr_(std::move(row_ptr)),
        col_idx_(std::move(col_idx)),
        values_(std::move(values)) {
    if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 ||
        row_ptr_.back() != col_idx_.size() || col_idx_.size() != values_.size()) {
      throw ParameterError("inconsistent CSR arrays");
    }
    for (std::size_t i = 0; i < rows_; ++i) {
      if (row_ptr_[i] > row_ptr_[i + 1]) throw ParameterError("row pointers not monotone");
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        if (col_idx_[k] >= cols_) throw ParameterError("column index out of range");
        if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1]) {
          throw ParameterError("column indices must be sorted and unique within a row");
        }
      }
    }
  }

  /// Builds from unordered triplets; duplicate coordinates are summed.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols,
                                 std::vector<Triplet<Scalar>> triplets) {
    for (const auto& t : triplets) {
      if (t.row >= rows || t.col >= cols) throw ParameterError("triplet index out of range");
    }
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> row_ptr(rows + 1, 0);
    std::vector<std::size_t> col_idx;
    std::vector<Scalar> values;
    col_idx.reserve(triplets.size());
    values.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size(); ++k) {
      const auto& t = triplets[k];
      if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
        values.back() += t.value;
        continue;
      }
      col_idx.push_back(t.col);
      values.push_back(t.value);
      ++row_ptr[t.row + 1];
    }
    std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
    return CsrMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
  std::span<const Scalar> values() const noexcept { return values_; }

  std::span<const std::size_t> row_cols(std::size_t i) const {
    return std::span(col_idx_).subspan(row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]);
  }
  std::span<const Scalar> row_values(std::size_t i) const {
    return std::span(values_).subspan(row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]);
  }

  Scalar at(std::size_t i, std::size_t j) const {
    auto cols = row_cols(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return Scalar{0};
    return values_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
  }

  /// y = A x
  void multiply(std::span<const Scalar> x, std::span<Scalar> y) const {
    if (x.size() != cols_ || y.size() != rows_) throw ParameterError("dimension mismatch in multiply");
    for (std::size_t i = 0; i < rows_; ++i) {
      Scalar acc{0};
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += values_[k] * x[col_idx_[k]];
      y[i] = acc;
    }
  }

  std::vector<Scalar> multiply(std::span<const Scalar> x) const {
    std::vector<Scalar> y(rows_);
    multiply(x, y);
    return y;
  }

  CsrMatrix transpose() const {
    std::vector<std::size_t> row_ptr(cols_ + 1, 0);
    for (std::size_t c : col_idx_) ++row_ptr[c + 1];
    std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
    std::vector<std::size_t> next(row_ptr.begin(), row_ptr.end() - 1);
    std::vector<std::size_t> col_idx(nnz());
    std::vector<Scalar> values(nnz());
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        std::size_t dst = next[col_idx_[k]]++;
        col_idx[dst] = i;
        values[dst] = values_[k];
      }
    }
    return CsrMatrix(cols_, rows_, std::move(row_ptr), std::move(col_idx), std::move(values));
  }

  std::vector<Scalar> diagonal() const {
    std::vector<Scalar> d(std::min(rows_, cols_), Scalar{0});
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
  }

  /// Exact symmetry of pattern and values.
  bool is_symmetric() const {
    if (rows_ != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        std::size_t j = col_idx_[k];
        auto cols = row_cols(j);
        auto it = std::lower_bound(cols.begin(), cols.end(), i);
        if (it == cols.end() || *it != i) return false;
        if (values_[row_ptr_[j] + static_cast<std::size_t>(it - cols.begin())] != values_[k]) return false;
      }
    }
    return true;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<Scalar> values_;
};

using SparseMatrix = CsrMatrix<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace num

#endif  // NUM_SPARSE_HPP
