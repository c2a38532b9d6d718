#pragma once

#include <memory>
#include <vector>

#include "boml/matrix.hpp"

namespace boml {

// Reverse-mode tape over dense matrices. Values are computed eagerly at
// record time; `backward` expresses adjoints as new nodes on the same
// tape, so a further `backward` over those nodes yields exact
// second-order derivatives (gradients through recorded gradient steps).
//
// The primitive set is deliberately frozen: matmul, add/sub, elementwise
// mul/div/exp/sqrt, relu, tanh, softmax, fused softmax cross-entropy,
// scalar scaling, reductions/broadcasts, and bias-column plumbing.
// A tape is single-threaded; run one tape per task.
class Tape {
 public:
  enum class Op {
    kConst,
    kLeaf,
    kMatmul,
    kTranspose,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kScale,
    kScaleBy,
    kRelu,
    kTanh,
    kExp,
    kSqrt,
    kSoftmax,
    kSoftmaxXent,
    kSumAll,
    kRowSum,
    kColBroadcast,
    kFullBroadcast,
    kAppendOnesCol,
    kDropLastCol,
    kAppendZerosCol,
  };

  int constant(DenseMatrix v);
  int leaf(DenseMatrix v);
  int detach(int a);  // value copy with gradient flow cut

  int matmul(int a, int b);
  int transpose(int a);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int divide(int a, int b);
  int scale(int a, double c);
  int scale_by(int a, int scalar_node);
  int relu(int a);
  int tanh(int a);
  int exp(int a);
  int sqrt(int a);
  int softmax(int a);
  // Mean over rows of -log softmax(logits)[label]; returns a 1x1 node.
  int softmax_xent(int logits, std::vector<int> labels);
  int sum_all(int a);
  int row_sum(int a);
  int col_broadcast(int a, int cols);
  int full_broadcast(int scalar_node, int rows, int cols);
  int append_ones_col(int a);
  int drop_last_col(int a);
  int append_zeros_col(int a);

  const DenseMatrix& value(int id) const { return nodes_[id].value; }
  double scalar_value(int id) const;
  std::size_t size() const { return nodes_.size(); }

  // Adjoints of `out` (a 1x1 node) w.r.t. each node in `wrt`, returned
  // as node ids on this tape; -1 marks a structurally-zero gradient.
  std::vector<int> backward(int out, const std::vector<int>& wrt);

  // Convenience: adjoint values, with zeros materialized.
  std::vector<DenseMatrix> gradients(int out, const std::vector<int>& wrt);

 private:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double c = 0.0;  // payload for kScale / broadcast target columns
    std::shared_ptr<std::vector<int>> labels;
    DenseMatrix value;
  };

  int push(Node n);
  int accumulate(int acc, int contrib);

  std::vector<Node> nodes_;
};

}  // namespace boml
