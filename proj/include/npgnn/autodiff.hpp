#pragma once

#include <functional>
#include <string>
#include <vector>

#include "npgnn/matrix.hpp"

namespace npgnn::ad {

struct NodeRef {
  int id = -1;
};

// Reverse-mode tape over dense matrices. One tape per forward pass; the
// sparse operands of sparse_matmul are constants and must outlive the tape.
class Tape {
 public:
  NodeRef input(DenseMatrix value, bool requires_grad = true);
  NodeRef constant(DenseMatrix value) { return input(std::move(value), false); }

  NodeRef matmul(NodeRef a, NodeRef b);
  NodeRef matmul_nt(NodeRef a, NodeRef b);  // a * b^T
  NodeRef sparse_matmul(const SparseMatrix& s, NodeRef d);
  NodeRef add_row_bias(NodeRef x, NodeRef bias);  // bias 1 x k broadcast over rows
  // x: n x f, z: 1 x d -> n x (f + d), z copied into every row
  NodeRef concat_broadcast_row(NodeRef x, NodeRef z);
  NodeRef relu(NodeRef x);
  NodeRef sigmoid(NodeRef x);
  NodeRef exp(NodeRef x);
  NodeRef add(NodeRef a, NodeRef b);
  NodeRef sub(NodeRef a, NodeRef b);
  NodeRef mul(NodeRef a, NodeRef b);
  NodeRef scalar_scale(NodeRef x, double c);
  NodeRef add_scalar(NodeRef x, double c);
  NodeRef sum(NodeRef x);        // 1 x 1
  NodeRef mean_rows(NodeRef x);  // 1 x cols

  // norm * mean_ij [ pos_weight * y * log sig(x) + (1 - y) * log(1 - sig(x)) ],
  // evaluated from logits in softplus form.
  NodeRef weighted_bce_with_logits(NodeRef logits, const DenseMatrix& targets,
                                   double pos_weight, double norm);

  const DenseMatrix& value(NodeRef n) const;
  double scalar_value(NodeRef n) const;

  // Accumulates gradients of a 1x1 loss into every requires_grad node.
  void backward(NodeRef loss);
  const DenseMatrix& grad(NodeRef n) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    input, matmul, matmul_nt, sparse_matmul, add_row_bias, concat_broadcast_row,
    relu, sigmoid, exp, add, sub, mul, scalar_scale, add_scalar, sum, mean_rows,
    weighted_bce
  };
  struct Node {
    Op op;
    DenseMatrix value;
    DenseMatrix grad;
    int a = -1, b = -1;
    double c0 = 0.0, c1 = 0.0;        // op constants (scale / pos_weight, norm)
    const SparseMatrix* sparse = nullptr;
    const DenseMatrix* targets = nullptr;
    bool requires_grad = false;
  };
  NodeRef push(Node n);
  Node& at(NodeRef r);
  const Node& at(NodeRef r) const;
  void accumulate(int id, const DenseMatrix& g);
  bool needs(int id) const { return id >= 0 && nodes_[id].requires_grad; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};
struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  bool pass(double tol) const { return max_rel_err < tol; }
};

// Central finite differences of f against the supplied analytic gradients.
// Relative error per entry: |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
GradCheckReport gradient_check(
    const std::function<double(const std::vector<DenseMatrix>&)>& f,
    std::vector<DenseMatrix> params, const std::vector<DenseMatrix>& analytic_grads,
    const std::vector<std::string>& names, double h);

}  // namespace npgnn::ad
