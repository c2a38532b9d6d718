#include "boml/tape.hpp"

#include <cmath>
#include <string>

#include "boml/errors.hpp"

namespace boml {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw DimensionError("tape: " + msg);
}

DenseMatrix softmax_rows(const DenseMatrix& logits) {
  DenseMatrix p(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    double mx = logits.at(i, 0);
    for (int j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits.at(i, j));
    double z = 0.0;
    for (int j = 0; j < logits.cols(); ++j) {
      p.at(i, j) = std::exp(logits.at(i, j) - mx);
      z += p.at(i, j);
    }
    for (int j = 0; j < logits.cols(); ++j) p.at(i, j) /= z;
  }
  return p;
}

}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::constant(DenseMatrix v) { return push({Op::kConst, -1, -1, 0.0, nullptr, std::move(v)}); }

int Tape::leaf(DenseMatrix v) { return push({Op::kLeaf, -1, -1, 0.0, nullptr, std::move(v)}); }

int Tape::detach(int a) { return constant(nodes_[a].value); }

int Tape::matmul(int a, int b) {
  const auto& va = nodes_[a].value;
  const auto& vb = nodes_[b].value;
  check(va.cols() == vb.rows(), "matmul inner dims");
  return push({Op::kMatmul, a, b, 0.0, nullptr, boml::matmul(va, vb)});
}

int Tape::transpose(int a) {
  return push({Op::kTranspose, a, -1, 0.0, nullptr, boml::transpose(nodes_[a].value)});
}

int Tape::add(int a, int b) {
  check(nodes_[a].value.same_shape(nodes_[b].value), "add shapes");
  return push({Op::kAdd, a, b, 0.0, nullptr, boml::add(nodes_[a].value, nodes_[b].value)});
}

int Tape::sub(int a, int b) {
  check(nodes_[a].value.same_shape(nodes_[b].value), "sub shapes");
  return push({Op::kSub, a, b, 0.0, nullptr, boml::sub(nodes_[a].value, nodes_[b].value)});
}

int Tape::mul(int a, int b) {
  check(nodes_[a].value.same_shape(nodes_[b].value), "mul shapes");
  return push({Op::kMul, a, b, 0.0, nullptr, hadamard(nodes_[a].value, nodes_[b].value)});
}

int Tape::divide(int a, int b) {
  check(nodes_[a].value.same_shape(nodes_[b].value), "div shapes");
  DenseMatrix v = nodes_[a].value;
  for (std::size_t i = 0; i < v.size(); ++i) v.raw()[i] /= nodes_[b].value.raw()[i];
  return push({Op::kDiv, a, b, 0.0, nullptr, std::move(v)});
}

int Tape::scale(int a, double c) {
  return push({Op::kScale, a, -1, c, nullptr, boml::scale(nodes_[a].value, c)});
}

int Tape::scale_by(int a, int scalar_node) {
  const auto& s = nodes_[scalar_node].value;
  check(s.rows() == 1 && s.cols() == 1, "scale_by expects 1x1 scalar");
  return push({Op::kScaleBy, a, scalar_node, 0.0, nullptr, boml::scale(nodes_[a].value, s.at(0, 0))});
}

int Tape::relu(int a) {
  DenseMatrix v = nodes_[a].value;
  for (double& x : v.raw()) x = x > 0.0 ? x : 0.0;
  return push({Op::kRelu, a, -1, 0.0, nullptr, std::move(v)});
}

int Tape::tanh(int a) {
  DenseMatrix v = nodes_[a].value;
  for (double& x : v.raw()) x = std::tanh(x);
  return push({Op::kTanh, a, -1, 0.0, nullptr, std::move(v)});
}

int Tape::exp(int a) {
  DenseMatrix v = nodes_[a].value;
  for (double& x : v.raw()) x = std::exp(x);
  return push({Op::kExp, a, -1, 0.0, nullptr, std::move(v)});
}

int Tape::sqrt(int a) {
  DenseMatrix v = nodes_[a].value;
  for (double& x : v.raw()) {
    if (x < 0.0) throw DomainError("tape: sqrt of negative value");
    x = std::sqrt(x);
  }
  return push({Op::kSqrt, a, -1, 0.0, nullptr, std::move(v)});
}

int Tape::softmax(int a) {
  return push({Op::kSoftmax, a, -1, 0.0, nullptr, softmax_rows(nodes_[a].value)});
}

int Tape::softmax_xent(int logits, std::vector<int> labels) {
  const auto& x = nodes_[logits].value;
  check(static_cast<int>(labels.size()) == x.rows(), "softmax_xent: one label per row");
  for (int y : labels)
    if (y < 0 || y >= x.cols())
      throw InputError("softmax_xent: label " + std::to_string(y) + " out of range [0," +
                       std::to_string(x.cols()) + ")");
  double total = 0.0;
  for (int i = 0; i < x.rows(); ++i) {
    double mx = x.at(i, 0);
    for (int j = 1; j < x.cols(); ++j) mx = std::max(mx, x.at(i, j));
    double z = 0.0;
    for (int j = 0; j < x.cols(); ++j) z += std::exp(x.at(i, j) - mx);
    total += mx + std::log(z) - x.at(i, labels[i]);
  }
  DenseMatrix v(1, 1, total / x.rows());
  return push({Op::kSoftmaxXent, logits, -1, 0.0,
               std::make_shared<std::vector<int>>(std::move(labels)), std::move(v)});
}

int Tape::sum_all(int a) {
  double s = 0.0;
  for (double v : nodes_[a].value.raw()) s += v;
  return push({Op::kSumAll, a, -1, 0.0, nullptr, DenseMatrix(1, 1, s)});
}

int Tape::row_sum(int a) {
  const auto& x = nodes_[a].value;
  DenseMatrix v(x.rows(), 1);
  for (int i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < x.cols(); ++j) s += x.at(i, j);
    v.at(i, 0) = s;
  }
  return push({Op::kRowSum, a, -1, 0.0, nullptr, std::move(v)});
}

int Tape::col_broadcast(int a, int cols) {
  const auto& x = nodes_[a].value;
  check(x.cols() == 1, "col_broadcast expects a column vector");
  DenseMatrix v(x.rows(), cols);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < cols; ++j) v.at(i, j) = x.at(i, 0);
  return push({Op::kColBroadcast, a, -1, static_cast<double>(cols), nullptr, std::move(v)});
}

int Tape::full_broadcast(int scalar_node, int rows, int cols) {
  const auto& s = nodes_[scalar_node].value;
  check(s.rows() == 1 && s.cols() == 1, "full_broadcast expects 1x1 scalar");
  return push({Op::kFullBroadcast, scalar_node, -1, 0.0, nullptr,
               DenseMatrix(rows, cols, s.at(0, 0))});
}

int Tape::append_ones_col(int a) {
  const auto& x = nodes_[a].value;
  DenseMatrix v(x.rows(), x.cols() + 1, 1.0);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) v.at(i, j) = x.at(i, j);
  return push({Op::kAppendOnesCol, a, -1, 0.0, nullptr, std::move(v)});
}

int Tape::drop_last_col(int a) {
  const auto& x = nodes_[a].value;
  check(x.cols() >= 1, "drop_last_col on empty");
  DenseMatrix v(x.rows(), x.cols() - 1);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j + 1 < x.cols(); ++j) v.at(i, j) = x.at(i, j);
  return push({Op::kDropLastCol, a, -1, 0.0, nullptr, std::move(v)});
}

int Tape::append_zeros_col(int a) {
  const auto& x = nodes_[a].value;
  DenseMatrix v(x.rows(), x.cols() + 1, 0.0);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) v.at(i, j) = x.at(i, j);
  return push({Op::kAppendZerosCol, a, -1, 0.0, nullptr, std::move(v)});
}

double Tape::scalar_value(int id) const {
  const auto& v = nodes_[id].value;
  check(v.rows() == 1 && v.cols() == 1, "scalar_value on non-scalar node");
  return v.at(0, 0);
}

int Tape::accumulate(int acc, int contrib) {
  return acc < 0 ? contrib : add(acc, contrib);
}

std::vector<int> Tape::backward(int out, const std::vector<int>& wrt) {
  check(nodes_[out].value.rows() == 1 && nodes_[out].value.cols() == 1,
        "backward expects a scalar output node");
  std::vector<int> adj(out + 1, -1);
  adj[out] = constant(DenseMatrix(1, 1, 1.0));

  for (int i = out; i >= 0; --i) {
    const int g = adj[i];
    if (g < 0) continue;
    // Copy fields; push() may reallocate nodes_.
    const Op op = nodes_[i].op;
    const int a = nodes_[i].a;
    const int b = nodes_[i].b;
    const double c = nodes_[i].c;
    const auto labels = nodes_[i].labels;
    switch (op) {
      case Op::kConst:
      case Op::kLeaf:
        break;
      case Op::kMatmul:
        adj[a] = accumulate(adj[a], matmul(g, transpose(b)));
        adj[b] = accumulate(adj[b], matmul(transpose(a), g));
        break;
      case Op::kTranspose:
        adj[a] = accumulate(adj[a], transpose(g));
        break;
      case Op::kAdd:
        adj[a] = accumulate(adj[a], g);
        adj[b] = accumulate(adj[b], g);
        break;
      case Op::kSub:
        adj[a] = accumulate(adj[a], g);
        adj[b] = accumulate(adj[b], scale(g, -1.0));
        break;
      case Op::kMul:
        adj[a] = accumulate(adj[a], mul(g, b));
        adj[b] = accumulate(adj[b], mul(g, a));
        break;
      case Op::kDiv:
        adj[a] = accumulate(adj[a], divide(g, b));
        adj[b] = accumulate(adj[b], scale(mul(g, divide(i, b)), -1.0));
        break;
      case Op::kScale:
        adj[a] = accumulate(adj[a], scale(g, c));
        break;
      case Op::kScaleBy:
        adj[a] = accumulate(adj[a], scale_by(g, b));
        adj[b] = accumulate(adj[b], sum_all(mul(g, a)));
        break;
      case Op::kRelu: {
        DenseMatrix m = nodes_[a].value;
        for (double& x : m.raw()) x = x > 0.0 ? 1.0 : 0.0;
        adj[a] = accumulate(adj[a], mul(g, constant(std::move(m))));
        break;
      }
      case Op::kTanh: {
        const int ones = constant(DenseMatrix(nodes_[i].value.rows(), nodes_[i].value.cols(), 1.0));
        adj[a] = accumulate(adj[a], mul(g, sub(ones, mul(i, i))));
        break;
      }
      case Op::kExp:
        adj[a] = accumulate(adj[a], mul(g, i));
        break;
      case Op::kSqrt:
        adj[a] = accumulate(adj[a], scale(divide(g, i), 0.5));
        break;
      case Op::kSoftmax: {
        // dx = y .* (g - rowsum(g .* y))
        const int gy = mul(g, i);
        const int rs = row_sum(gy);
        const int bc = col_broadcast(rs, nodes_[i].value.cols());
        adj[a] = accumulate(adj[a], mul(i, sub(g, bc)));
        break;
      }
      case Op::kSoftmaxXent: {
        const auto& x = nodes_[a].value;
        DenseMatrix onehot(x.rows(), x.cols());
        for (int r = 0; r < x.rows(); ++r) onehot.at(r, (*labels)[r]) = 1.0;
        const int probs = softmax(a);
        const int diff = sub(probs, constant(std::move(onehot)));
        adj[a] = accumulate(adj[a], scale_by(scale(diff, 1.0 / x.rows()), g));
        break;
      }
      case Op::kSumAll:
        adj[a] = accumulate(adj[a],
                            full_broadcast(g, nodes_[a].value.rows(), nodes_[a].value.cols()));
        break;
      case Op::kRowSum:
        adj[a] = accumulate(adj[a], col_broadcast(g, nodes_[a].value.cols()));
        break;
      case Op::kColBroadcast:
        adj[a] = accumulate(adj[a], row_sum(g));
        break;
      case Op::kFullBroadcast:
        adj[a] = accumulate(adj[a], sum_all(g));
        break;
      case Op::kAppendOnesCol:
        adj[a] = accumulate(adj[a], drop_last_col(g));
        break;
      case Op::kDropLastCol:
        adj[a] = accumulate(adj[a], append_zeros_col(g));
        break;
      case Op::kAppendZerosCol:
        adj[a] = accumulate(adj[a], drop_last_col(g));
        break;
    }
  }

  std::vector<int> out_ids(wrt.size(), -1);
  for (std::size_t k = 0; k < wrt.size(); ++k)
    if (wrt[k] <= out) out_ids[k] = adj[wrt[k]];
  return out_ids;
}

std::vector<DenseMatrix> Tape::gradients(int out, const std::vector<int>& wrt) {
  const auto ids = backward(out, wrt);
  std::vector<DenseMatrix> grads(wrt.size());
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    if (ids[k] >= 0) {
      grads[k] = nodes_[ids[k]].value;
    } else {
      const auto& v = nodes_[wrt[k]].value;
      grads[k] = DenseMatrix(v.rows(), v.cols());
    }
  }
  return grads;
}

}  // namespace boml
