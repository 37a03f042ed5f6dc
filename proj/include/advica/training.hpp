#pragma once

// Marginal resampling, adversarial objectives, reconstruction loss and the
// joint encoder/decoder/discriminator training loop.

#include "advica/autodiff.hpp"
#include "advica/evaluation.hpp"
#include "advica/models.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace advica {

enum class Objective { gan, wgan_gp };
enum class Variant { anica, anica_g };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct TrainConfig {
  Objective objective = Objective::gan;
  Variant variant = Variant::anica;
  double lambda = 1.0;       // reconstruction weight
  double lambda_gp = 10.0;   // gradient penalty weight (WGAN-GP only)
  double adv_weight = 1.0;   // adversarial term weight in the encoder/decoder objective
  Index batch_size = 64;
  long iterations = 50000;
  double lr = 3e-4;
  double disc_lr_scale = 10.0;  // discriminator learning rate is lr * disc_lr_scale
  double rms_decay = 0.9;
  double rms_eps = 1e-8;
  std::uint64_t seed = 0;
  long log_interval = 100;
  long eval_interval = 1000;
  ModelSpec model;

  double discriminator_lr() const { return lr * disc_lr_scale; }
  void validate() const;
};

struct LossReport {
  double J_disc = 0.0;  // objective the discriminator maximises
  double J_adv = 0.0;   // adversarial term the encoder side minimises
  double R = 0.0;
  double total = 0.0;   // adv_weight * J_adv + lambda * R
  std::optional<double> gp;
  std::size_t clamp_count = 0;
};

struct Resampled {
  Tensor2 values;
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> source_rows;
};

/// values(r, i) = Z(u, i) with u ~ Uniform{0..N-1} drawn independently per entry.
Resampled resample_marginals(const Tensor2& Z, Rng& rng);

/// Scatter-adds the gradient w.r.t. the resampled values back onto Z.
Tensor2 resample_backward(const Resampled& r, const Tensor2& upstream, Index n_rows);

struct AdversarialTerms {
  LossReport report;
  Tensor2 grad_real;  // dJ_adv / dZ
  Tensor2 grad_fake;  // dJ_adv / dZ_hat
};

/// J = mean log D(Z) + mean log(1 - D(Z_hat)), D clamped to [1e-7, 1 - 1e-7].
/// With `backprop`, accumulates d(-J)/d(discriminator parameters).
AdversarialTerms gan_losses(Network& D, const Tensor2& Z, const Tensor2& Z_hat,
                            bool backprop = true);

/// Critic objective mean D(Z) - mean D(Z_hat) - lambda_gp * mean (|grad_u D(u)| - 1)^2
/// on u = eps Z + (1 - eps) Z_hat. With `backprop`, accumulates the gradient of
/// its negation into the critic parameters.
AdversarialTerms wgan_gp_losses(Network& D, const Tensor2& Z, const Tensor2& Z_hat,
                                double lambda_gp, Rng& rng, bool backprop = true);

/// Mean over rows of the Euclidean norm of X - X_hat.
double reconstruction_loss(const Tensor2& X, const Tensor2& X_hat);
Tensor2 reconstruction_grad(const Tensor2& X, const Tensor2& X_hat);

/// Full objective evaluation on one batch. With `backprop`, parameter grads of
/// both sides are accumulated (discriminator: its own loss; everything else:
/// adv_weight * J_adv + lambda * R). Does not update parameters.
LossReport compute_objective(ModelBundle& bundle, const Tensor2& X, const TrainConfig& cfg,
                             Rng& rng, bool backprop);

/// One iteration: objective and gradients, then one discriminator RMSProp
/// step and one encoder-side RMSProp step. lr == 0 skips the updates.
/// Throws DivergenceError on a non-finite loss.
LossReport train_step(ModelBundle& bundle, const Tensor2& X, const TrainConfig& cfg, Rng& rng);

/// Encoder output for every row of X.
Tensor2 encode(ModelBundle& bundle, const Tensor2& X);

struct Dataset {
  Tensor2 train;    // samples x observations
  Tensor2 heldout;
  Tensor2 full;
  std::optional<Tensor2> sources;  // signals x samples, aligned with `full`
  Index n_train_samples() const { return train.rows(); }
};

/// Splits off the trailing `n_heldout` samples.
Dataset make_dataset(const Tensor2& mixtures_signals_by_samples,
                     std::optional<Tensor2> sources_signals_by_samples, Index n_heldout);

struct LogRow {
  long iteration = 0;
  LossReport loss;
  std::optional<double> rho_max;
};

struct EvalRow {
  long iteration = 0;
  double heldout_total = 0.0;
  double heldout_R = 0.0;
  double heldout_J = 0.0;
  std::optional<double> rho_full;
  std::optional<double> rho_heldout;
};

struct TrialResult {
  TrainConfig config;
  std::uint64_t seed = 0;
  std::vector<LogRow> log;
  std::vector<EvalRow> evals;
  std::optional<double> final_rho;
  std::optional<double> final_rho_heldout;
  std::optional<CorrelationReport> final_report;
  double heldout_loss = 0.0;
  double heldout_R = 0.0;
  bool diverged = false;
  std::string divergence_reason;
  double wall_seconds = 0.0;

  TrialScore score() const { return {heldout_loss, final_rho.value_or(0.0), diverged}; }
};

/// Runs cfg.iterations steps on batches sampled uniformly with replacement
/// from data.train. Logs every log_interval and evaluates (held-out loss and,
/// with sources, rho_max) at iteration 0, every eval_interval and at the end.
TrialResult train_loop(ModelBundle& bundle, const Dataset& data, const TrainConfig& cfg);

/// iteration,J_disc,J_adv,R,total,gp,rho_max
void write_loss_csv(const std::filesystem::path& path, const TrialResult& result);
void write_eval_csv(const std::filesystem::path& path, const TrialResult& result);

}  // namespace advica
