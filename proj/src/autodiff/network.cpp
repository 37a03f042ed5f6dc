#include "advica/autodiff.hpp"

#include "advica/errors.hpp"

#include <cmath>

namespace advica {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) +
                    "' (accepted: identity, relu, tanh, sigmoid)");
}

void apply_activation(Activation a, const Tensor2& pre, Tensor2& out) {
  switch (a) {
    case Activation::identity: out = pre; break;
    case Activation::relu: out = pre.cwiseMax(0.0); break;
    case Activation::tanh: out = pre.array().tanh().matrix(); break;
    case Activation::sigmoid:
      // Split by sign so exp never overflows.
      out.resize(pre.rows(), pre.cols());
      for (Index i = 0; i < pre.size(); ++i) {
        const double x = pre.data()[i];
        if (x >= 0) {
          out.data()[i] = 1.0 / (1.0 + std::exp(-x));
        } else {
          const double e = std::exp(x);
          out.data()[i] = e / (1.0 + e);
        }
      }
      break;
  }
}

Tensor2 activation_derivative(Activation a, const Tensor2& pre, const Tensor2& out) {
  switch (a) {
    case Activation::identity: return Tensor2::Ones(pre.rows(), pre.cols());
    case Activation::relu: return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::tanh: return (1.0 - out.array().square()).matrix();
    case Activation::sigmoid: return (out.array() * (1.0 - out.array())).matrix();
  }
  return Tensor2::Ones(pre.rows(), pre.cols());
}

Tensor2 activation_second_derivative(Activation a, const Tensor2& pre, const Tensor2& out) {
  switch (a) {
    case Activation::identity:
    case Activation::relu: return Tensor2::Zero(pre.rows(), pre.cols());
    case Activation::tanh:
      return (-2.0 * out.array() * (1.0 - out.array().square())).matrix();
    case Activation::sigmoid:
      return (out.array() * (1.0 - out.array()) * (1.0 - 2.0 * out.array())).matrix();
  }
  return Tensor2::Zero(pre.rows(), pre.cols());
}

Parameter::Parameter(Index rows, Index cols)
    : value(Tensor2::Zero(rows, cols)),
      grad(Tensor2::Zero(rows, cols)),
      rms_accumulator(Tensor2::Zero(rows, cols)) {}

DenseLayer::DenseLayer(Index in, Index out, Activation act)
    : weight(in, out), bias(1, out), activation(act) {}

Network& Network::add_layer(Index in, Index out, Activation act) {
  if (in < 1 || out < 1) throw ConfigError("layer dimensions must be positive");
  if (!layers_.empty() && layers_.back().out_dim() != in) {
    throw ConfigError("layer input dimension " + std::to_string(in) +
                      " does not match previous output " +
                      std::to_string(layers_.back().out_dim()));
  }
  if (!heads_.empty()) throw ConfigError("cannot add trunk layers after heads");
  layers_.emplace_back(in, out, act);
  return *this;
}

Network& Network::set_heads(std::vector<Network> heads) {
  for (const auto& h : heads) {
    if (h.input_dim() != 1 || h.output_dim() != 1 || !h.heads().empty()) {
      throw ConfigError("heads must be scalar trunk-only networks");
    }
  }
  if (!layers_.empty() && layers_.back().out_dim() != static_cast<Index>(heads.size())) {
    throw ConfigError("head count " + std::to_string(heads.size()) +
                      " does not match trunk output " +
                      std::to_string(layers_.back().out_dim()));
  }
  heads_ = std::move(heads);
  return *this;
}

Index Network::input_dim() const {
  if (!layers_.empty()) return layers_.front().in_dim();
  return static_cast<Index>(heads_.size());
}

Index Network::output_dim() const {
  if (!heads_.empty()) return static_cast<Index>(heads_.size());
  if (!layers_.empty()) return layers_.back().out_dim();
  return 0;
}

Tensor2 Network::trunk_forward(const Tensor2& input) {
  Tensor2 x = input;
  for (auto& layer : layers_) {
    layer.input = std::move(x);
    layer.pre.noalias() = layer.input * layer.weight.value;
    layer.pre.rowwise() += layer.bias.value.row(0);
    apply_activation(layer.activation, layer.pre, layer.output);
    x = layer.output;
  }
  return x;
}

Tensor2 Network::forward(const Tensor2& input) {
  if (layers_.empty() && heads_.empty()) throw ConfigError("empty network");
  if (input.cols() != input_dim()) {
    throw ConfigError("input has " + std::to_string(input.cols()) + " columns, expected " +
                      std::to_string(input_dim()));
  }
  Tensor2 x = trunk_forward(input);
  if (!heads_.empty()) {
    Tensor2 out(x.rows(), static_cast<Index>(heads_.size()));
    for (std::size_t k = 0; k < heads_.size(); ++k) {
      const auto col = static_cast<Index>(k);
      out.col(col) = heads_[k].forward(x.col(col));
    }
    x = std::move(out);
  }
  forward_done_ = true;
  input_gradient_done_ = false;
  cached_rows_ = input.rows();
  return x;
}

Tensor2 Network::trunk_backward(const Tensor2& upstream) {
  Tensor2 g = upstream;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    auto& layer = *it;
    Tensor2 dpre = g.cwiseProduct(activation_derivative(layer.activation, layer.pre, layer.output));
    layer.weight.grad.noalias() += layer.input.transpose() * dpre;
    layer.bias.grad += dpre.colwise().sum();
    g.noalias() = dpre * layer.weight.value.transpose();
  }
  return g;
}

Tensor2 Network::backward(const Tensor2& upstream) {
  if (!forward_done_) throw StateError("backward called before forward");
  if (upstream.rows() != cached_rows_ || upstream.cols() != output_dim()) {
    throw ConfigError("upstream gradient shape does not match network output");
  }
  Tensor2 g = upstream;
  if (!heads_.empty()) {
    Tensor2 trunk_grad(g.rows(), static_cast<Index>(heads_.size()));
    for (std::size_t k = 0; k < heads_.size(); ++k) {
      const auto col = static_cast<Index>(k);
      trunk_grad.col(col) = heads_[k].backward(g.col(col));
    }
    g = std::move(trunk_grad);
  }
  return trunk_backward(g);
}

Tensor2 Network::input_gradient(const Tensor2& input) {
  if (!heads_.empty() || layers_.empty() || output_dim() != 1) {
    throw ConfigError("input_gradient requires a trunk-only scalar-output network");
  }
  forward(input);
  const std::size_t n_layers = layers_.size();
  ig_g_.assign(n_layers, Tensor2());
  ig_d_.assign(n_layers, Tensor2());
  Tensor2 g = Tensor2::Ones(input.rows(), 1);
  for (std::size_t l = n_layers; l-- > 0;) {
    auto& layer = layers_[l];
    ig_g_[l] = g;
    ig_d_[l] = g.cwiseProduct(activation_derivative(layer.activation, layer.pre, layer.output));
    g.noalias() = ig_d_[l] * layer.weight.value.transpose();
  }
  input_gradient_done_ = true;
  return g;
}

Tensor2 Network::backward_input_gradient(const Tensor2& grad_of_input_gradient) {
  if (!input_gradient_done_) {
    throw StateError("backward_input_gradient called before input_gradient");
  }
  if (grad_of_input_gradient.rows() != cached_rows_ ||
      grad_of_input_gradient.cols() != input_dim()) {
    throw ConfigError("gradient shape does not match network input");
  }
  const std::size_t n_layers = layers_.size();
  // Reverse the gradient sweep (which ran from the output towards the input):
  // walk layers from the input side, producing adjoints of d_l and extra
  // pre-activation adjoints from the activation's second derivative.
  std::vector<Tensor2> pre_adjoint(n_layers);
  Tensor2 g_bar = grad_of_input_gradient;
  for (std::size_t l = 0; l < n_layers; ++l) {
    auto& layer = layers_[l];
    Tensor2 d_bar = g_bar * layer.weight.value;
    layer.weight.grad.noalias() += g_bar.transpose() * ig_d_[l];
    const Tensor2 d1 = activation_derivative(layer.activation, layer.pre, layer.output);
    const Tensor2 d2 = activation_second_derivative(layer.activation, layer.pre, layer.output);
    pre_adjoint[l] = d_bar.cwiseProduct(ig_g_[l]).cwiseProduct(d2);
    g_bar = d_bar.cwiseProduct(d1);
  }
  // Ordinary backprop of the pre-activation adjoints through the forward graph.
  Tensor2 a_bar = Tensor2::Zero(cached_rows_, output_dim());
  for (std::size_t l = n_layers; l-- > 0;) {
    auto& layer = layers_[l];
    Tensor2 p_bar = pre_adjoint[l];
    if (l + 1 < n_layers) {
      p_bar += a_bar.cwiseProduct(
          activation_derivative(layer.activation, layer.pre, layer.output));
    }
    layer.weight.grad.noalias() += layer.input.transpose() * p_bar;
    layer.bias.grad += p_bar.colwise().sum();
    a_bar.noalias() = p_bar * layer.weight.value.transpose();
  }
  return a_bar;
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  for (auto& head : heads_) {
    auto sub = head.parameters();
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

std::vector<const Parameter*> Network::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  for (const auto& head : heads_) {
    auto sub = head.parameters();
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

void Network::init_uniform(double scale, Rng& rng) {
  for (auto& layer : layers_) {
    const double bound = scale / std::sqrt(static_cast<double>(layer.in_dim()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < layer.weight.value.size(); ++i) layer.weight.value.data()[i] = dist(rng);
    layer.bias.value.setZero();
  }
  for (auto& head : heads_) head.init_uniform(scale, rng);
}

void Network::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

void rmsprop_step(std::span<Parameter* const> params, double lr, double decay, double eps) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("RMSProp decay must lie in [0, 1)");
  for (Parameter* p : params) {
    auto v = p->rms_accumulator.array();
    const auto g = p->grad.array();
    v = decay * v + (1.0 - decay) * g.square();
    p->value.array() -= lr * g / (v.sqrt() + eps);
    p->zero_grad();
  }
}

}  // namespace advica
