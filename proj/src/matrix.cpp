#include "npgnn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "npgnn/kernels.hpp"

namespace npgnn {

SparseMatrix SparseMatrix::from_triplets(
    std::size_t rows, std::size_t cols,
    const std::vector<std::tuple<std::size_t, std::size_t, double>>& triplets) {
  // map keeps (row, col) sorted and merges duplicates
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  for (const auto& [i, j, v] : triplets) {
    if (i >= rows || j >= cols) throw InputError("SparseMatrix: index out of range");
    cells[{i, j}] += v;
  }
  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<std::size_t> cols_idx;
  std::vector<double> vals;
  cols_idx.reserve(cells.size());
  vals.reserve(cells.size());
  for (const auto& [rc, v] : cells) {
    offsets[rc.first + 1]++;
    cols_idx.push_back(rc.second);
    vals.push_back(v);
  }
  for (std::size_t i = 0; i < rows; ++i) offsets[i + 1] += offsets[i];
  return SparseMatrix(rows, cols, std::move(offsets), std::move(cols_idx), std::move(vals));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      d(i, col_indices_[k]) += values_[k];
  return d;
}

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("dense_matmul: inner dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  const auto& ops = kernels::active();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      ops.axpy(a(i, k), b.row(k), c.row(i), b.cols());
  return c;
}

DenseMatrix dense_matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("dense_matmul_nt: inner dimension mismatch");
  DenseMatrix c(a.rows(), b.rows());
  const auto& ops = kernels::active();
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      c(i, j) = ops.dot(a.row(i), b.row(j), a.cols());
  return c;
}

DenseMatrix dense_matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("dense_matmul_tn: inner dimension mismatch");
  DenseMatrix c(a.cols(), b.cols());
  const auto& ops = kernels::active();
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i)
      ops.axpy(a(k, i), b.row(k), c.row(i), b.cols());
  return c;
}

DenseMatrix sparse_dense_matmul(const SparseMatrix& s, const DenseMatrix& d) {
  if (s.cols() != d.rows()) throw ShapeError("sparse_dense_matmul: inner dimension mismatch");
  DenseMatrix c(s.rows(), d.cols());
  const auto& ops = kernels::active();
  const auto& off = s.row_offsets();
  const auto& col = s.col_indices();
  const auto& val = s.values();
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t k = off[i]; k < off[i + 1]; ++k)
      ops.axpy(val[k], d.row(col[k]), c.row(i), d.cols());
  return c;
}

DenseMatrix sparse_dense_matmul_t(const SparseMatrix& s, const DenseMatrix& d) {
  if (s.rows() != d.rows()) throw ShapeError("sparse_dense_matmul_t: inner dimension mismatch");
  DenseMatrix c(s.cols(), d.cols());
  const auto& ops = kernels::active();
  const auto& off = s.row_offsets();
  const auto& col = s.col_indices();
  const auto& val = s.values();
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t k = off[i]; k < off[i + 1]; ++k)
      ops.axpy(val[k], d.row(i), c.row(col[k]), d.cols());
  return c;
}

DenseMatrix elementwise(const DenseMatrix& a, const DenseMatrix& b, BinaryOp op) {
  if (!a.same_shape(b)) throw ShapeError("elementwise: shape mismatch");
  DenseMatrix c(a.rows(), a.cols());
  const auto& ops = kernels::active();
  switch (op) {
    case BinaryOp::add: ops.add(a.data(), b.data(), c.data(), a.size()); break;
    case BinaryOp::sub: ops.sub(a.data(), b.data(), c.data(), a.size()); break;
    case BinaryOp::mul: ops.mul(a.data(), b.data(), c.data(), a.size()); break;
  }
  return c;
}

DenseMatrix reduce(const DenseMatrix& a, Axis axis, ReduceOp op) {
  const auto& ops = kernels::active();
  if (axis == Axis::rows) {
    DenseMatrix c(1, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) ops.add(c.data(), a.row(i), c.data(), a.cols());
    if (op == ReduceOp::mean && a.rows() > 0)
      ops.scale(1.0 / static_cast<double>(a.rows()), c.data(), c.data(), a.cols());
    return c;
  }
  DenseMatrix c(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = ops.sum(a.row(i), a.cols());
    c(i, 0) = (op == ReduceOp::mean && a.cols() > 0) ? s / static_cast<double>(a.cols()) : s;
  }
  return c;
}

double stable_sigmoid(double t) {
  double s;
  if (t >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-t));
  } else {
    double e = std::exp(t);
    s = e / (1.0 + e);
  }
  // keep strictly inside (0, 1) even when exp underflows
  if (s <= 0.0) return std::numeric_limits<double>::min();
  if (s >= 1.0) return std::nextafter(1.0, 0.0);
  return s;
}

double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

DenseMatrix map(const DenseMatrix& a, UnaryOp f) {
  DenseMatrix c(a.rows(), a.cols());
  switch (f) {
    case UnaryOp::relu:
      kernels::active().relu(a.data(), c.data(), a.size());
      break;
    case UnaryOp::sigmoid:
      for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = stable_sigmoid(a.data()[i]);
      break;
    case UnaryOp::exp:
      for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = std::exp(a.data()[i]);
      break;
    case UnaryOp::log:
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.data()[i] <= 0.0) throw NumericError("map: log of non-positive value");
        c.data()[i] = std::log(a.data()[i]);
      }
      break;
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix c(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(j, i) = a(i, j);
  return c;
}

}  // namespace npgnn
