#include "advica/models.hpp"

#include "advica/errors.hpp"

#include <cmath>

namespace advica {

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::linear: return "linear";
    case Architecture::pnl: return "pnl";
    case Architecture::mlp: return "mlp";
  }
  return "linear";
}

Architecture architecture_from_string(const std::string& s) {
  if (s == "linear") return Architecture::linear;
  if (s == "pnl") return Architecture::pnl;
  if (s == "mlp") return Architecture::mlp;
  throw ConfigError("unknown architecture '" + s + "' (accepted: linear, pnl, mlp)");
}

namespace {

Network scalar_mlp(Index hidden) {
  Network n;
  n.add_layer(1, hidden, Activation::relu)
      .add_layer(hidden, hidden, Activation::relu)
      .add_layer(hidden, 1, Activation::identity);
  return n;
}

void require_positive(Index v, const char* what) {
  if (v < 1) throw ConfigError(std::string(what) + " must be at least 1");
}

}  // namespace

NetworkPair build_linear_pair(Index n_obs, Index n_sources) {
  require_positive(n_sources, "n_sources");
  if (n_obs < n_sources) throw ConfigError("n_obs must be at least n_sources");
  NetworkPair p;
  p.encoder.add_layer(n_obs, n_sources, Activation::identity);
  p.decoder.add_layer(n_sources, n_obs, Activation::identity);
  return p;
}

NetworkPair build_pnl_models(Index n_obs, Index n_sources, Index enc_hidden, Index head_hidden) {
  require_positive(n_sources, "n_sources");
  require_positive(enc_hidden, "encoder hidden units");
  require_positive(head_hidden, "decoder head hidden units");
  if (n_obs < n_sources) throw ConfigError("n_obs must be at least n_sources");
  NetworkPair p;
  p.encoder.add_layer(n_obs, enc_hidden, Activation::relu)
      .add_layer(enc_hidden, enc_hidden, Activation::relu)
      .add_layer(enc_hidden, n_sources, Activation::identity);
  p.decoder.add_layer(n_sources, n_obs, Activation::identity);
  std::vector<Network> heads;
  heads.reserve(static_cast<std::size_t>(n_obs));
  for (Index i = 0; i < n_obs; ++i) heads.push_back(scalar_mlp(head_hidden));
  p.decoder.set_heads(std::move(heads));
  return p;
}

NetworkTriple build_mlp_models(Index n_obs, Index n_sources, Index hidden, bool critic) {
  require_positive(n_sources, "n_sources");
  require_positive(hidden, "hidden units");
  NetworkTriple t;
  t.encoder.add_layer(n_obs, hidden, Activation::relu)
      .add_layer(hidden, hidden, Activation::relu)
      .add_layer(hidden, n_sources, Activation::identity);
  t.decoder.add_layer(n_sources, hidden, Activation::relu)
      .add_layer(hidden, hidden, Activation::relu)
      .add_layer(hidden, n_obs, Activation::identity);
  t.discriminator = build_discriminator(n_sources, hidden, 2, critic);
  return t;
}

Network build_discriminator(Index n_sources, Index hidden, int n_hidden_layers, bool critic) {
  require_positive(n_sources, "n_sources");
  require_positive(hidden, "discriminator hidden units");
  if (n_hidden_layers < 1) throw ConfigError("discriminator needs at least one hidden layer");
  Network d;
  Index in = n_sources;
  for (int l = 0; l < n_hidden_layers; ++l) {
    d.add_layer(in, hidden, Activation::relu);
    in = hidden;
  }
  d.add_layer(in, 1, critic ? Activation::identity : Activation::sigmoid);
  return d;
}

Network build_marginal_generator(Index n_sources, Index hidden) {
  require_positive(n_sources, "n_sources");
  require_positive(hidden, "generator hidden units");
  std::vector<Network> heads;
  heads.reserve(static_cast<std::size_t>(n_sources));
  for (Index i = 0; i < n_sources; ++i) heads.push_back(scalar_mlp(hidden));
  Network g;
  g.set_heads(std::move(heads));
  return g;
}

Tensor2 FeatureNorm::forward(const Tensor2& z) {
  if (z.rows() < 2) throw ConfigError("feature normalisation needs a batch of at least 2");
  const double n = static_cast<double>(z.rows());
  mean_ = z.colwise().mean();
  centered_ = z.rowwise() - mean_;
  const Eigen::RowVectorXd var = centered_.colwise().squaredNorm() / n;
  scale_ = (var.array() + kEps * kEps).sqrt().matrix();
  ready_ = true;
  return centered_.array().rowwise() / scale_.array();
}

Tensor2 FeatureNorm::backward(const Tensor2& upstream) const {
  if (!ready_) throw StateError("FeatureNorm::backward called before forward");
  if (upstream.rows() != centered_.rows() || upstream.cols() != centered_.cols()) {
    throw ConfigError("FeatureNorm::backward shape mismatch");
  }
  const double n = static_cast<double>(upstream.rows());
  const Eigen::RowVectorXd up_mean = upstream.colwise().mean();
  const Eigen::RowVectorXd proj = upstream.cwiseProduct(centered_).colwise().sum();
  Tensor2 out = upstream.rowwise() - up_mean;
  out.array().rowwise() /= scale_.array();
  const Eigen::RowVectorXd coef = (proj.array() / (n * scale_.array().cube())).matrix();
  out.array() -= centered_.array().rowwise() * coef.array();
  return out;
}

Tensor2 rescale_features(const Tensor2& z_norm, const Parameter& gamma, const Parameter& beta) {
  if (gamma.value.cols() != z_norm.cols() || beta.value.cols() != z_norm.cols()) {
    throw ConfigError("rescale parameters do not match feature count");
  }
  Tensor2 out = z_norm.array().rowwise() * gamma.value.row(0).array();
  out.rowwise() += beta.value.row(0);
  return out;
}

Tensor2 rescale_backward(const Tensor2& z_norm, const Tensor2& upstream, Parameter& gamma,
                         Parameter& beta) {
  gamma.grad += upstream.cwiseProduct(z_norm).colwise().sum();
  beta.grad += upstream.colwise().sum();
  return upstream.array().rowwise() * gamma.value.row(0).array();
}

std::vector<Parameter*> ModelBundle::generator_side_parameters() {
  std::vector<Parameter*> out = encoder.parameters();
  auto dec = decoder.parameters();
  out.insert(out.end(), dec.begin(), dec.end());
  out.push_back(&gamma);
  out.push_back(&beta);
  if (generator) {
    auto gen = generator->parameters();
    out.insert(out.end(), gen.begin(), gen.end());
  }
  return out;
}

std::vector<Parameter*> ModelBundle::discriminator_parameters() {
  return discriminator.parameters();
}

ModelBundle build_models(const ModelSpec& spec, Rng& rng) {
  ModelBundle b;
  switch (spec.architecture) {
    case Architecture::linear: {
      auto p = build_linear_pair(spec.n_obs, spec.n_sources);
      b.encoder = std::move(p.encoder);
      b.decoder = std::move(p.decoder);
      b.discriminator = build_discriminator(spec.n_sources, spec.disc_hidden, spec.disc_layers,
                                            spec.critic);
      break;
    }
    case Architecture::pnl: {
      auto p = build_pnl_models(spec.n_obs, spec.n_sources, spec.hidden, spec.head_hidden);
      b.encoder = std::move(p.encoder);
      b.decoder = std::move(p.decoder);
      b.discriminator = build_discriminator(spec.n_sources, spec.disc_hidden, spec.disc_layers,
                                            spec.critic);
      break;
    }
    case Architecture::mlp: {
      auto t = build_mlp_models(spec.n_obs, spec.n_sources, spec.hidden, spec.critic);
      b.encoder = std::move(t.encoder);
      b.decoder = std::move(t.decoder);
      b.discriminator = std::move(t.discriminator);
      break;
    }
  }
  if (spec.with_generator) b.generator = build_marginal_generator(spec.n_sources, spec.gen_hidden);

  b.encoder.init_uniform(spec.init_scale, rng);
  b.decoder.init_uniform(spec.init_scale, rng);
  b.discriminator.init_uniform(spec.disc_init_scale, rng);
  if (b.generator) b.generator->init_uniform(spec.init_scale, rng);

  b.gamma = Parameter(1, spec.n_sources);
  b.gamma.value.setOnes();
  b.beta = Parameter(1, spec.n_sources);
  return b;
}

}  // namespace advica
