#include "boml/network.hpp"

#include <cmath>
#include <string>

#include "boml/errors.hpp"
#include "boml/rng.hpp"

namespace boml {

std::size_t ParamSet::total_dim() const {
  std::size_t n = 0;
  for (const auto& w : layers) n += w.size();
  return n;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> out;
  out.reserve(total_dim());
  for (const auto& w : layers) {
    const auto v = vec_col(w);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

ParamSet ParamSet::unflatten(const std::vector<double>& v,
                             const std::vector<std::pair<int, int>>& shapes) {
  ParamSet p;
  std::size_t pos = 0;
  for (const auto& [r, c] : shapes) {
    const std::size_t n = static_cast<std::size_t>(r) * c;
    if (pos + n > v.size()) throw DimensionError("unflatten: vector too short");
    p.layers.push_back(unvec_col({v.begin() + pos, v.begin() + pos + n}, r, c));
    pos += n;
  }
  if (pos != v.size()) throw DimensionError("unflatten: vector too long");
  return p;
}

ParamSet operator+(const ParamSet& a, const ParamSet& b) {
  ParamSet r = a;
  for (std::size_t l = 0; l < r.layers.size(); ++l) add_in_place(r.layers[l], b.layers[l]);
  return r;
}

ParamSet operator-(const ParamSet& a, const ParamSet& b) {
  ParamSet r = a;
  for (std::size_t l = 0; l < r.layers.size(); ++l)
    r.layers[l] = sub(r.layers[l], b.layers[l]);
  return r;
}

ParamSet scaled(const ParamSet& a, double c) {
  ParamSet r = a;
  for (auto& w : r.layers) scale_in_place(w, c);
  return r;
}

Network Network::mlp(int input_dim, const std::vector<int>& hidden, int classes,
                     Activation hidden_act) {
  Network net;
  int in = input_dim;
  for (int h : hidden) {
    net.layers.push_back({in, h, hidden_act});
    in = h;
  }
  net.layers.push_back({in, classes, Activation::kIdentity});
  net.validate();
  return net;
}

void Network::validate() const {
  if (layers.empty()) throw DimensionError("network: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].in_dim <= 0 || layers[l].out_dim <= 0)
      throw DimensionError("network: non-positive layer dimension");
    if (l + 1 < layers.size() && layers[l].out_dim != layers[l + 1].in_dim)
      throw DimensionError("network: layer " + std::to_string(l) + " output dim " +
                           std::to_string(layers[l].out_dim) + " does not feed layer " +
                           std::to_string(l + 1));
  }
}

std::vector<std::pair<int, int>> Network::weight_shapes() const {
  std::vector<std::pair<int, int>> shapes;
  for (const auto& l : layers) shapes.emplace_back(l.out_dim, l.in_dim + 1);
  return shapes;
}

ParamSet Network::init_params(std::uint64_t seed) const {
  ParamSet p;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& spec = layers[l];
    const double gain = spec.act == Activation::kRelu ? 2.0 : 1.0;
    const double stddev = std::sqrt(gain / spec.in_dim);
    DenseMatrix w = gaussian_matrix(spec.out_dim, spec.in_dim + 1, stddev,
                                    seed_mix(seed, kTagInit, l + 1));
    for (int r = 0; r < w.rows(); ++r) w.at(r, w.cols() - 1) = 0.0;  // zero bias
    p.layers.push_back(std::move(w));
  }
  return p;
}

void Network::check_params(const ParamSet& p) const {
  if (p.layers.size() != layers.size()) throw DimensionError("params: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (p.layers[l].rows() != layers[l].out_dim || p.layers[l].cols() != layers[l].in_dim + 1)
      throw DimensionError("params: layer " + std::to_string(l) + " shape mismatch");
  }
}

namespace {

DenseMatrix augment_ones(const DenseMatrix& a) {
  DenseMatrix v(a.rows(), a.cols() + 1, 1.0);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) v.at(i, j) = a.at(i, j);
  return v;
}

DenseMatrix apply_act(const DenseMatrix& h, Activation act) {
  DenseMatrix a = h;
  switch (act) {
    case Activation::kRelu:
      for (double& x : a.raw()) x = x > 0.0 ? x : 0.0;
      break;
    case Activation::kTanh:
      for (double& x : a.raw()) x = std::tanh(x);
      break;
    case Activation::kIdentity:
      break;
  }
  return a;
}

DenseMatrix act_derivative(const DenseMatrix& h, Activation act) {
  DenseMatrix d(h.rows(), h.cols(), 1.0);
  switch (act) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < h.size(); ++i) d.raw()[i] = h.raw()[i] > 0.0 ? 1.0 : 0.0;
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double t = std::tanh(h.raw()[i]);
        d.raw()[i] = 1.0 - t * t;
      }
      break;
    case Activation::kIdentity:
      break;
  }
  return d;
}

}  // namespace

DenseMatrix forward(const Network& net, const ParamSet& params, const DenseMatrix& inputs) {
  net.check_params(params);
  if (inputs.cols() != net.input_dim())
    throw DimensionError("forward: input has " + std::to_string(inputs.cols()) +
                         " features, network expects " + std::to_string(net.input_dim()));
  DenseMatrix a = inputs;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseMatrix h = matmul(augment_ones(a), transpose(params.layers[l]));
    a = apply_act(h, net.layers[l].act);
  }
  return a;
}

double nll(const DenseMatrix& logits, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits.rows())
    throw InputError("nll: one label per logit row required");
  double total = 0.0;
  for (int i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= logits.cols())
      throw InputError("nll: label " + std::to_string(y) + " out of range");
    double mx = logits.at(i, 0);
    for (int j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits.at(i, j));
    double z = 0.0;
    for (int j = 0; j < logits.cols(); ++j) z += std::exp(logits.at(i, j) - mx);
    total += mx + std::log(z) - logits.at(i, y);
  }
  return total / logits.rows();
}

std::vector<int> predict(const DenseMatrix& logits) {
  std::vector<int> out(logits.rows());
  for (int i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

std::vector<LayerFactors> capture_factors(const Network& net, const ParamSet& params,
                                          const DenseMatrix& inputs,
                                          const std::vector<int>& labels) {
  net.check_params(params);
  if (inputs.rows() == 0) throw InputError("capture_factors: empty batch");
  if (static_cast<int>(labels.size()) != inputs.rows())
    throw InputError("capture_factors: one label per example required");

  const int n = inputs.rows();
  const std::size_t L = net.layers.size();
  std::vector<DenseMatrix> aug(L);   // augmented activations entering each layer
  std::vector<DenseMatrix> pre(L);   // pre-activations of each layer
  DenseMatrix a = inputs;
  for (std::size_t l = 0; l < L; ++l) {
    aug[l] = augment_ones(a);
    pre[l] = matmul(aug[l], transpose(params.layers[l]));
    a = apply_act(pre[l], net.layers[l].act);
  }

  // Per-example pre-activation gradients of that example's own loss.
  // Rows stay independent because the softmax cross-entropy couples
  // entries only within a row.
  std::vector<DenseMatrix> g(L);
  DenseMatrix gl(n, net.n_classes());
  for (int i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= net.n_classes()) throw InputError("capture_factors: label out of range");
    double mx = pre[L - 1].at(i, 0);
    for (int j = 1; j < net.n_classes(); ++j) mx = std::max(mx, pre[L - 1].at(i, j));
    double z = 0.0;
    for (int j = 0; j < net.n_classes(); ++j) z += std::exp(pre[L - 1].at(i, j) - mx);
    for (int j = 0; j < net.n_classes(); ++j)
      gl.at(i, j) = std::exp(pre[L - 1].at(i, j) - mx) / z - (j == y ? 1.0 : 0.0);
  }
  g[L - 1] = std::move(gl);
  for (int l = static_cast<int>(L) - 2; l >= 0; --l) {
    // Propagate through W_{l+1} without its bias column, then the
    // activation derivative of layer l. h = a W^T, so da = g W.
    const DenseMatrix& wnext = params.layers[l + 1];
    DenseMatrix wnb(wnext.rows(), wnext.cols() - 1);
    for (int r = 0; r < wnext.rows(); ++r)
      for (int c = 0; c + 1 < wnext.cols(); ++c) wnb.at(r, c) = wnext.at(r, c);
    g[l] = hadamard(matmul(g[l + 1], wnb), act_derivative(pre[l], net.layers[l].act));
  }

  std::vector<LayerFactors> out(L);
  for (std::size_t l = 0; l < L; ++l) {
    out[l].a_outer = scale(matmul(transpose(aug[l]), aug[l]), 1.0 / n);
    out[l].g_outer = scale(matmul(transpose(g[l]), g[l]), 1.0 / n);
  }
  return out;
}

std::vector<int> param_leaves(Tape& tape, const ParamSet& params) {
  std::vector<int> ids;
  ids.reserve(params.layers.size());
  for (const auto& w : params.layers) ids.push_back(tape.leaf(w));
  return ids;
}

int tape_forward(Tape& tape, const Network& net, const std::vector<int>& weights, int x) {
  if (weights.size() != net.layers.size())
    throw DimensionError("tape_forward: weight node count mismatch");
  int a = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const int h = tape.matmul(tape.append_ones_col(a), tape.transpose(weights[l]));
    switch (net.layers[l].act) {
      case Activation::kRelu:
        a = tape.relu(h);
        break;
      case Activation::kTanh:
        a = tape.tanh(h);
        break;
      case Activation::kIdentity:
        a = h;
        break;
    }
  }
  return a;
}

int tape_nll(Tape& tape, const Network& net, const std::vector<int>& weights, int x,
             const std::vector<int>& labels) {
  return tape.softmax_xent(tape_forward(tape, net, weights, x), labels);
}

std::vector<int> tape_sgd_adapt(Tape& tape, const Network& net, std::vector<int> weights,
                                const DenseMatrix& x, const std::vector<int>& labels, int k,
                                double alpha, bool first_order) {
  if (x.rows() == 0) throw InputError("tape_sgd_adapt: empty support set");
  const int xc = tape.constant(x);
  for (int step = 0; step < k; ++step) {
    const int loss = tape_nll(tape, net, weights, xc, labels);
    const auto grads = tape.backward(loss, weights);
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (grads[l] < 0) continue;
      const int g = first_order ? tape.detach(grads[l]) : grads[l];
      weights[l] = tape.add(weights[l], tape.scale(g, -alpha));
    }
  }
  return weights;
}

ParamSet grad(const LossBuilder& loss, const ParamSet& params, double* loss_value) {
  Tape tape;
  const auto leaves = param_leaves(tape, params);
  const int out = loss(tape, leaves);
  if (loss_value != nullptr) *loss_value = tape.scalar_value(out);
  ParamSet g;
  g.layers = tape.gradients(out, leaves);
  return g;
}

ParamSet grad_through_inner(const LossBuilder& outer, const InnerStepBuilder& inner,
                            const ParamSet& params, double* loss_value) {
  Tape tape;
  const auto leaves = param_leaves(tape, params);
  const auto adapted = inner(tape, leaves);
  const int out = outer(tape, adapted);
  if (loss_value != nullptr) *loss_value = tape.scalar_value(out);
  ParamSet g;
  g.layers = tape.gradients(out, leaves);
  return g;
}

}  // namespace boml
