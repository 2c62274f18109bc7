#include "npgnn/autodiff.hpp"

#include <cmath>

#include "npgnn/kernels.hpp"

namespace npgnn::ad {

NodeRef Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return NodeRef{static_cast<int>(nodes_.size() - 1)};
}

Tape::Node& Tape::at(NodeRef r) { return nodes_.at(static_cast<std::size_t>(r.id)); }
const Tape::Node& Tape::at(NodeRef r) const {
  return nodes_.at(static_cast<std::size_t>(r.id));
}

const DenseMatrix& Tape::value(NodeRef n) const { return at(n).value; }

double Tape::scalar_value(NodeRef n) const {
  const auto& v = at(n).value;
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar_value: node is not 1x1");
  return v(0, 0);
}

const DenseMatrix& Tape::grad(NodeRef n) const {
  const Node& node = at(n);
  if (node.grad.size() == 0) throw std::runtime_error("grad: no gradient recorded");
  return node.grad;
}

NodeRef Tape::input(DenseMatrix value, bool requires_grad) {
  Node n;
  n.op = Op::input;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(n);
}

NodeRef Tape::matmul(NodeRef a, NodeRef b) {
  Node n;
  n.op = Op::matmul;
  n.value = dense_matmul(at(a).value, at(b).value);
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = needs(a.id) || needs(b.id);
  return push(n);
}

NodeRef Tape::matmul_nt(NodeRef a, NodeRef b) {
  Node n;
  n.op = Op::matmul_nt;
  n.value = dense_matmul_nt(at(a).value, at(b).value);
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = needs(a.id) || needs(b.id);
  return push(n);
}

NodeRef Tape::sparse_matmul(const SparseMatrix& s, NodeRef d) {
  Node n;
  n.op = Op::sparse_matmul;
  n.value = sparse_dense_matmul(s, at(d).value);
  n.a = d.id;
  n.sparse = &s;
  n.requires_grad = needs(d.id);
  return push(n);
}

NodeRef Tape::add_row_bias(NodeRef x, NodeRef bias) {
  const auto& xv = at(x).value;
  const auto& bv = at(bias).value;
  if (bv.rows() != 1 || bv.cols() != xv.cols())
    throw ShapeError("add_row_bias: bias must be 1 x cols(x)");
  Node n;
  n.op = Op::add_row_bias;
  n.value = xv;
  for (std::size_t i = 0; i < xv.rows(); ++i)
    kernels::active().add(n.value.row(i), bv.data(), n.value.row(i), xv.cols());
  n.a = x.id;
  n.b = bias.id;
  n.requires_grad = needs(x.id) || needs(bias.id);
  return push(n);
}

NodeRef Tape::concat_broadcast_row(NodeRef x, NodeRef z) {
  const auto& xv = at(x).value;
  const auto& zv = at(z).value;
  if (zv.rows() != 1) throw ShapeError("concat_broadcast_row: z must be a row vector");
  Node n;
  n.op = Op::concat_broadcast_row;
  n.value = DenseMatrix(xv.rows(), xv.cols() + zv.cols());
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    double* row = n.value.row(i);
    std::copy_n(xv.row(i), xv.cols(), row);
    std::copy_n(zv.data(), zv.cols(), row + xv.cols());
  }
  n.a = x.id;
  n.b = z.id;
  n.requires_grad = needs(x.id) || needs(z.id);
  return push(n);
}

NodeRef Tape::relu(NodeRef x) {
  Node n;
  n.op = Op::relu;
  n.value = map(at(x).value, UnaryOp::relu);
  n.a = x.id;
  n.requires_grad = needs(x.id);
  return push(n);
}

NodeRef Tape::sigmoid(NodeRef x) {
  Node n;
  n.op = Op::sigmoid;
  n.value = map(at(x).value, UnaryOp::sigmoid);
  n.a = x.id;
  n.requires_grad = needs(x.id);
  return push(n);
}

NodeRef Tape::exp(NodeRef x) {
  Node n;
  n.op = Op::exp;
  n.value = map(at(x).value, UnaryOp::exp);
  n.a = x.id;
  n.requires_grad = needs(x.id);
  return push(n);
}

NodeRef Tape::add(NodeRef a, NodeRef b) {
  Node n;
  n.op = Op::add;
  n.value = elementwise(at(a).value, at(b).value, BinaryOp::add);
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = needs(a.id) || needs(b.id);
  return push(n);
}

NodeRef Tape::sub(NodeRef a, NodeRef b) {
  Node n;
  n.op = Op::sub;
  n.value = elementwise(at(a).value, at(b).value, BinaryOp::sub);
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = needs(a.id) || needs(b.id);
  return push(n);
}

NodeRef Tape::mul(NodeRef a, NodeRef b) {
  Node n;
  n.op = Op::mul;
  n.value = elementwise(at(a).value, at(b).value, BinaryOp::mul);
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = needs(a.id) || needs(b.id);
  return push(n);
}

NodeRef Tape::scalar_scale(NodeRef x, double c) {
  Node n;
  n.op = Op::scalar_scale;
  const auto& xv = at(x).value;
  n.value = DenseMatrix(xv.rows(), xv.cols());
  kernels::active().scale(c, xv.data(), n.value.data(), xv.size());
  n.a = x.id;
  n.c0 = c;
  n.requires_grad = needs(x.id);
  return push(n);
}

NodeRef Tape::add_scalar(NodeRef x, double c) {
  Node n;
  n.op = Op::add_scalar;
  n.value = at(x).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data()[i] += c;
  n.a = x.id;
  n.c0 = c;
  n.requires_grad = needs(x.id);
  return push(n);
}

NodeRef Tape::sum(NodeRef x) {
  Node n;
  n.op = Op::sum;
  const auto& xv = at(x).value;
  n.value = DenseMatrix(1, 1, kernels::active().sum(xv.data(), xv.size()));
  n.a = x.id;
  n.requires_grad = needs(x.id);
  return push(n);
}

NodeRef Tape::mean_rows(NodeRef x) {
  Node n;
  n.op = Op::mean_rows;
  const auto& xv = at(x).value;
  if (xv.rows() == 0) throw InputError("mean_rows: empty matrix");
  n.value = reduce(xv, Axis::rows, ReduceOp::mean);
  n.a = x.id;
  n.requires_grad = needs(x.id);
  return push(n);
}

NodeRef Tape::weighted_bce_with_logits(NodeRef logits, const DenseMatrix& targets,
                                       double pos_weight, double norm) {
  const auto& lv = at(logits).value;
  if (!lv.same_shape(targets)) throw ShapeError("weighted_bce_with_logits: shape mismatch");
  const double inv_n = 1.0 / static_cast<double>(lv.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    double x = lv.data()[i];
    if (!std::isfinite(x)) throw NumericError("weighted_bce_with_logits: non-finite logit");
    double y = targets.data()[i];
    // log sig(x) = -softplus(-x); log(1 - sig(x)) = -softplus(x)
    acc += pos_weight * y * (-softplus(-x)) + (1.0 - y) * (-softplus(x));
  }
  Node n;
  n.op = Op::weighted_bce;
  n.value = DenseMatrix(1, 1, norm * inv_n * acc);
  n.a = logits.id;
  n.c0 = pos_weight;
  n.c1 = norm;
  n.targets = &targets;
  n.requires_grad = needs(logits.id);
  return push(n);
}

void Tape::accumulate(int id, const DenseMatrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    if (!n.grad.same_shape(g)) throw ShapeError("backward: gradient shape mismatch");
    kernels::active().add(n.grad.data(), g.data(), n.grad.data(), g.size());
  }
}

void Tape::backward(NodeRef loss) {
  const Node& top = at(loss);
  if (top.value.rows() != 1 || top.value.cols() != 1)
    throw std::logic_error("backward: loss must be scalar (1x1)");
  if (backward_done_) throw std::logic_error("backward: tape already consumed");
  backward_done_ = true;

  accumulate(loss.id, DenseMatrix(1, 1, 1.0));
  const auto& ops = kernels::active();

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    const DenseMatrix& dC = n.grad;
    switch (n.op) {
      case Op::input:
        break;
      case Op::matmul: {
        if (needs(n.a)) accumulate(n.a, dense_matmul_nt(dC, nodes_[n.b].value));
        if (needs(n.b)) accumulate(n.b, dense_matmul_tn(nodes_[n.a].value, dC));
        break;
      }
      case Op::matmul_nt: {
        // C = A B^T: dA = dC B ; dB = dC^T A
        if (needs(n.a)) accumulate(n.a, dense_matmul(dC, nodes_[n.b].value));
        if (needs(n.b)) accumulate(n.b, dense_matmul_tn(dC, nodes_[n.a].value));
        break;
      }
      case Op::sparse_matmul: {
        if (needs(n.a)) accumulate(n.a, sparse_dense_matmul_t(*n.sparse, dC));
        break;
      }
      case Op::add_row_bias: {
        if (needs(n.a)) accumulate(n.a, dC);
        if (needs(n.b)) accumulate(n.b, reduce(dC, Axis::rows, ReduceOp::sum));
        break;
      }
      case Op::concat_broadcast_row: {
        const auto& xv = nodes_[n.a].value;
        if (needs(n.a)) {
          DenseMatrix dx(xv.rows(), xv.cols());
          for (std::size_t i = 0; i < xv.rows(); ++i)
            std::copy_n(dC.row(i), xv.cols(), dx.row(i));
          accumulate(n.a, dx);
        }
        if (needs(n.b)) {
          const std::size_t d = dC.cols() - xv.cols();
          DenseMatrix dz(1, d);
          for (std::size_t i = 0; i < dC.rows(); ++i)
            ops.add(dz.data(), dC.row(i) + xv.cols(), dz.data(), d);
          accumulate(n.b, dz);
        }
        break;
      }
      case Op::relu: {
        const auto& xv = nodes_[n.a].value;
        DenseMatrix dx(xv.rows(), xv.cols());
        for (std::size_t i = 0; i < xv.size(); ++i)
          dx.data()[i] = xv.data()[i] > 0.0 ? dC.data()[i] : 0.0;  // 0 at the kink
        accumulate(n.a, dx);
        break;
      }
      case Op::sigmoid: {
        DenseMatrix dx(n.value.rows(), n.value.cols());
        for (std::size_t i = 0; i < n.value.size(); ++i) {
          double s = n.value.data()[i];
          dx.data()[i] = dC.data()[i] * s * (1.0 - s);
        }
        accumulate(n.a, dx);
        break;
      }
      case Op::exp: {
        accumulate(n.a, elementwise(dC, n.value, BinaryOp::mul));
        break;
      }
      case Op::add: {
        if (needs(n.a)) accumulate(n.a, dC);
        if (needs(n.b)) accumulate(n.b, dC);
        break;
      }
      case Op::sub: {
        if (needs(n.a)) accumulate(n.a, dC);
        if (needs(n.b)) {
          DenseMatrix neg(dC.rows(), dC.cols());
          ops.scale(-1.0, dC.data(), neg.data(), dC.size());
          accumulate(n.b, neg);
        }
        break;
      }
      case Op::mul: {
        if (needs(n.a)) accumulate(n.a, elementwise(dC, nodes_[n.b].value, BinaryOp::mul));
        if (needs(n.b)) accumulate(n.b, elementwise(dC, nodes_[n.a].value, BinaryOp::mul));
        break;
      }
      case Op::scalar_scale: {
        DenseMatrix dx(dC.rows(), dC.cols());
        ops.scale(n.c0, dC.data(), dx.data(), dC.size());
        accumulate(n.a, dx);
        break;
      }
      case Op::add_scalar: {
        accumulate(n.a, dC);
        break;
      }
      case Op::sum: {
        const auto& xv = nodes_[n.a].value;
        accumulate(n.a, DenseMatrix(xv.rows(), xv.cols(), dC(0, 0)));
        break;
      }
      case Op::mean_rows: {
        const auto& xv = nodes_[n.a].value;
        DenseMatrix dx(xv.rows(), xv.cols());
        const double w = 1.0 / static_cast<double>(xv.rows());
        for (std::size_t i = 0; i < xv.rows(); ++i)
          ops.axpy(w, dC.data(), dx.row(i), xv.cols());
        accumulate(n.a, dx);
        break;
      }
      case Op::weighted_bce: {
        const auto& lv = nodes_[n.a].value;
        const DenseMatrix& y = *n.targets;
        const double w = dC(0, 0) * n.c1 / static_cast<double>(lv.size());
        DenseMatrix dx(lv.rows(), lv.cols());
        for (std::size_t i = 0; i < lv.size(); ++i) {
          double s = stable_sigmoid(lv.data()[i]);
          double yi = y.data()[i];
          dx.data()[i] = w * (n.c0 * yi * (1.0 - s) - (1.0 - yi) * s);
        }
        accumulate(n.a, dx);
        break;
      }
    }
  }
}

GradCheckReport gradient_check(
    const std::function<double(const std::vector<DenseMatrix>&)>& f,
    std::vector<DenseMatrix> params, const std::vector<DenseMatrix>& analytic_grads,
    const std::vector<std::string>& names, double h) {
  if (h <= 0.0) throw InputError("gradient_check: h must be positive");
  if (params.size() != analytic_grads.size())
    throw InputError("gradient_check: params/grads size mismatch");
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    GradCheckEntry entry;
    entry.name = p < names.size() ? names[p] : "param" + std::to_string(p);
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      double saved = params[p].data()[i];
      params[p].data()[i] = saved + h;
      double fp = f(params);
      params[p].data()[i] = saved - h;
      double fm = f(params);
      params[p].data()[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("gradient_check: non-finite function value");
      double g_fd = (fp - fm) / (2.0 * h);
      double g_ad = analytic_grads[p].data()[i];
      double rel = std::abs(g_ad - g_fd) /
                   std::max(1e-8, std::abs(g_ad) + std::abs(g_fd));
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace npgnn::ad
