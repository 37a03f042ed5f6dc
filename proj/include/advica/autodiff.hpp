#pragma once

// Dense reverse-mode differentiation for the closed set of feed-forward
// architectures used by the adversarial ICA models, plus RMSProp and a
// flat binary checkpoint format.

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace advica {

/// Samples are rows, features are columns.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

enum class Activation { identity, relu, tanh, sigmoid };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// Element-wise activation and its first two derivatives expressed through
/// the pre-activation and the cached output.
void apply_activation(Activation a, const Tensor2& pre, Tensor2& out);
Tensor2 activation_derivative(Activation a, const Tensor2& pre, const Tensor2& out);
Tensor2 activation_second_derivative(Activation a, const Tensor2& pre, const Tensor2& out);

/// A trainable tensor with its gradient and RMSProp accumulator.
struct Parameter {
  Tensor2 value;
  Tensor2 grad;
  Tensor2 rms_accumulator;

  Parameter() = default;
  Parameter(Index rows, Index cols);

  void zero_grad() { grad.setZero(); }
  Index size() const { return value.size(); }
};

struct DenseLayer {
  Parameter weight;  // in x out
  Parameter bias;    // 1 x out
  Activation activation = Activation::identity;

  // Forward cache.
  Tensor2 input;
  Tensor2 pre;
  Tensor2 output;

  DenseLayer(Index in, Index out, Activation act);

  Index in_dim() const { return weight.value.rows(); }
  Index out_dim() const { return weight.value.cols(); }
};

/// Feed-forward network: an optional trunk of dense layers followed by an
/// optional bank of independent scalar heads. Head k sees only column k of
/// the trunk output (or of the input, when the trunk is empty) and emits
/// column k of the result.
class Network {
 public:
  Network() = default;

  Network& add_layer(Index in, Index out, Activation act);
  Network& set_heads(std::vector<Network> heads);

  Tensor2 forward(const Tensor2& input);

  /// Accumulates parameter gradients for the loss whose gradient w.r.t. the
  /// last forward output is `upstream`. Returns the gradient w.r.t. the input.
  Tensor2 backward(const Tensor2& upstream);

  /// Forward pass plus d(output)/d(input) per row. Requires a trunk-only
  /// network with a scalar output.
  Tensor2 input_gradient(const Tensor2& input);

  /// Second-order pass through `input_gradient`: given dL/dG for the input
  /// gradient G returned by the last `input_gradient` call, accumulates
  /// dL/d(parameters) and returns dL/d(input).
  Tensor2 backward_input_gradient(const Tensor2& grad_of_input_gradient);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;

  Index input_dim() const;
  Index output_dim() const;

  /// Weights U[-s/sqrt(fan_in), s/sqrt(fan_in)], biases zero.
  void init_uniform(double scale, Rng& rng);
  void zero_grad();

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<Network>& heads() { return heads_; }
  const std::vector<Network>& heads() const { return heads_; }

 private:
  Tensor2 trunk_forward(const Tensor2& input);
  Tensor2 trunk_backward(const Tensor2& upstream);

  std::vector<DenseLayer> layers_;
  std::vector<Network> heads_;
  bool forward_done_ = false;
  Index cached_rows_ = 0;

  // input_gradient cache: per layer, adjoint g_l of the layer output and
  // d_l = g_l * act'(pre_l).
  std::vector<Tensor2> ig_g_;
  std::vector<Tensor2> ig_d_;
  bool input_gradient_done_ = false;
};

/// v <- decay*v + (1-decay)*g^2;  theta <- theta - lr*g/(sqrt(v)+eps); then grads cleared.
void rmsprop_step(std::span<Parameter* const> params, double lr, double decay = 0.9,
                  double eps = 1e-8);

/// Checkpoint layout: ASCII header with one "in out" line per dense layer
/// (trunk first, then each head in order), a blank line, then every layer's
/// weights followed by its bias as little-endian float64.
void save_checkpoint(const std::filesystem::path& path, const Network& net);
void load_checkpoint(const std::filesystem::path& path, Network& net);

}  // namespace advica
