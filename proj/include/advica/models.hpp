#pragma once

// Encoder / decoder / discriminator / marginal-generator builders and the
// feature normalisation + trainable rescaling that sit between them.

#include "advica/autodiff.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace advica {

enum class Architecture { linear, pnl, mlp };

std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

struct NetworkPair {
  Network encoder;
  Network decoder;
};

NetworkPair build_linear_pair(Index n_obs, Index n_sources);

/// Encoder: two ReLU hidden layers. Decoder: affine map followed by an
/// independent 1 -> head_hidden -> head_hidden -> 1 ReLU network per output.
NetworkPair build_pnl_models(Index n_obs, Index n_sources, Index enc_hidden,
                             Index head_hidden = 16);

struct NetworkTriple {
  Network encoder;
  Network decoder;
  Network discriminator;
};

NetworkTriple build_mlp_models(Index n_obs, Index n_sources, Index hidden, bool critic);

/// ReLU MLP with a sigmoid head, or a linear head when `critic` is set.
Network build_discriminator(Index n_sources, Index hidden = 64, int n_hidden_layers = 1,
                            bool critic = false);

/// One independent scalar network per source: latent h_i -> z_hat_i.
Network build_marginal_generator(Index n_sources, Index hidden);

/// Column-wise batch standardisation, differentiated through like batch norm.
/// Divides by sqrt(var + eps^2) with population variance.
class FeatureNorm {
 public:
  static constexpr double kEps = 1e-6;

  Tensor2 forward(const Tensor2& z);
  Tensor2 backward(const Tensor2& upstream) const;

  const Eigen::RowVectorXd& mean() const { return mean_; }
  const Eigen::RowVectorXd& scale() const { return scale_; }

 private:
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd scale_;
  Tensor2 centered_;
  bool ready_ = false;
};

/// gamma * z + beta per column.
Tensor2 rescale_features(const Tensor2& z_norm, const Parameter& gamma, const Parameter& beta);

/// Accumulates gamma/beta gradients, returns the gradient w.r.t. z_norm.
Tensor2 rescale_backward(const Tensor2& z_norm, const Tensor2& upstream, Parameter& gamma,
                         Parameter& beta);

struct ModelSpec {
  Architecture architecture = Architecture::linear;
  Index n_obs = 6;
  Index n_sources = 6;
  Index hidden = 64;        // encoder/decoder hidden units
  Index disc_hidden = 64;
  int disc_layers = 1;
  Index head_hidden = 16;   // PNL decoder scalar heads
  Index gen_hidden = 16;    // marginal generator
  bool critic = false;
  bool with_generator = false;
  double init_scale = 1.0;
  double disc_init_scale = 1.0;
};

struct ModelBundle {
  Network encoder;
  Network decoder;
  Network discriminator;
  std::optional<Network> generator;
  Parameter gamma;  // 1 x M, starts at 1
  Parameter beta;   // 1 x M, starts at 0
  FeatureNorm norm;

  Index n_sources() const { return gamma.value.cols(); }

  /// Everything minimised by the encoder/decoder update.
  std::vector<Parameter*> generator_side_parameters();
  std::vector<Parameter*> discriminator_parameters();
};

/// Builds and initialises every network for `spec`. For the MLP architecture
/// the discriminator uses `hidden` units and two hidden layers.
ModelBundle build_models(const ModelSpec& spec, Rng& rng);

}  // namespace advica
