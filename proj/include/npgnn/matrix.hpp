#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace npgnn {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw ShapeError("DenseMatrix: data size does not match shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const DenseMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Compressed sparse row matrix. Column indices sorted within each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
               std::vector<std::size_t> col_indices, std::vector<double> values)
      : rows_(rows),
        cols_(cols),
        row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)),
        values_(std::move(values)) {
    if (row_offsets_.size() != rows_ + 1 || col_indices_.size() != values_.size() ||
        row_offsets_.back() != values_.size())
      throw ShapeError("SparseMatrix: inconsistent CSR arrays");
  }

  // Builds CSR from (i, j, v) triplets; duplicates are summed.
  static SparseMatrix from_triplets(
      std::size_t rows, std::size_t cols,
      const std::vector<std::tuple<std::size_t, std::size_t, double>>& triplets);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::size_t>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  DenseMatrix to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

// y = a * b (p x q times q x r)
DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b);
// y = a * b^T
DenseMatrix dense_matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
// y = a^T * b
DenseMatrix dense_matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
// y = s * d (CSR n x n times dense n x k)
DenseMatrix sparse_dense_matmul(const SparseMatrix& s, const DenseMatrix& d);
// y = s^T * d
DenseMatrix sparse_dense_matmul_t(const SparseMatrix& s, const DenseMatrix& d);

enum class BinaryOp { add, sub, mul };
enum class ReduceOp { sum, mean };
enum class UnaryOp { relu, sigmoid, exp, log };
enum class Axis { rows, cols };

DenseMatrix elementwise(const DenseMatrix& a, const DenseMatrix& b, BinaryOp op);
// Axis::rows collapses the row dimension (result 1 x cols); Axis::cols gives rows x 1.
DenseMatrix reduce(const DenseMatrix& a, Axis axis, ReduceOp op);
DenseMatrix map(const DenseMatrix& a, UnaryOp f);

DenseMatrix transpose(const DenseMatrix& a);

double stable_sigmoid(double t);
// log(1 + exp(t)) without overflow
double softplus(double t);

}  // namespace npgnn
