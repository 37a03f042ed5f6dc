#include "advica/errors.hpp"
#include "advica/signals.hpp"
#include "advica/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace advica {

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(lambda_gp >= 0.0)) throw ConfigError("lambda_gp must be non-negative");
  if (!(adv_weight >= 0.0)) throw ConfigError("adv_weight must be non-negative");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (!(lr >= 0.0)) throw ConfigError("lr must be non-negative");
  if (!(disc_lr_scale > 0.0)) throw ConfigError("disc_lr_scale must be positive");
  if (!(rms_decay >= 0.0 && rms_decay < 1.0)) throw ConfigError("rms_decay must lie in [0, 1)");
  if (!(rms_eps > 0.0)) throw ConfigError("rms_eps must be positive");
  if (log_interval < 1) throw ConfigError("log_interval must be at least 1");
  if (eval_interval < 1) throw ConfigError("eval_interval must be at least 1");
  if (!(model.init_scale > 0.0) || !(model.disc_init_scale > 0.0)) {
    throw ConfigError("init scales must be positive");
  }
  if (model.n_obs < model.n_sources) throw ConfigError("n_obs must be at least n_sources");
  if (variant == Variant::anica_g && !model.with_generator) {
    throw ConfigError("variant anica_g needs a marginal generator");
  }
  if ((objective == Objective::wgan_gp) != model.critic) {
    throw ConfigError("wgan_gp needs a critic discriminator and gan a probability output");
  }
}

LossReport compute_objective(ModelBundle& b, const Tensor2& X, const TrainConfig& cfg, Rng& rng,
                             bool backprop) {
  const Tensor2 Z = b.encoder.forward(X);
  const Tensor2 Zn = b.norm.forward(Z);

  std::optional<Resampled> resampled;
  Tensor2 Z_hat;
  if (cfg.variant == Variant::anica) {
    resampled = resample_marginals(Zn, rng);
    Z_hat = resampled->values;
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor2 h(Zn.rows(), Zn.cols());
    for (Index i = 0; i < h.size(); ++i) h.data()[i] = normal(rng);
    Z_hat = b.generator->forward(h);
  }

  AdversarialTerms adv = cfg.objective == Objective::gan
                             ? gan_losses(b.discriminator, Zn, Z_hat, backprop)
                             : wgan_gp_losses(b.discriminator, Zn, Z_hat, cfg.lambda_gp, rng, backprop);

  const Tensor2 Zr = rescale_features(Zn, b.gamma, b.beta);
  const Tensor2 X_hat = b.decoder.forward(Zr);

  LossReport report = adv.report;
  report.R = reconstruction_loss(X, X_hat);
  report.total = cfg.adv_weight * report.J_adv + cfg.lambda * report.R;

  if (backprop) {
    const Tensor2 dXhat = cfg.lambda * reconstruction_grad(X, X_hat);
    const Tensor2 dZr = b.decoder.backward(dXhat);
    Tensor2 dZn = rescale_backward(Zn, dZr, b.gamma, b.beta);
    dZn += cfg.adv_weight * adv.grad_real;
    if (resampled) {
      dZn += resample_backward(*resampled, cfg.adv_weight * adv.grad_fake, Zn.rows());
    } else {
      b.generator->backward(cfg.adv_weight * adv.grad_fake);
    }
    b.encoder.backward(b.norm.backward(dZn));
  }
  return report;
}

namespace {

bool finite(const LossReport& r) {
  return std::isfinite(r.J_disc) && std::isfinite(r.J_adv) && std::isfinite(r.R) &&
         std::isfinite(r.total) && (!r.gp || std::isfinite(*r.gp));
}

}  // namespace

LossReport train_step(ModelBundle& b, const Tensor2& X, const TrainConfig& cfg, Rng& rng) {
  auto disc = b.discriminator_parameters();
  auto gen = b.generator_side_parameters();
  for (auto* p : disc) p->zero_grad();
  for (auto* p : gen) p->zero_grad();

  const LossReport report = compute_objective(b, X, cfg, rng, true);
  if (!finite(report)) {
    throw DivergenceError("non-finite loss (J_disc=" + format_double(report.J_disc) +
                          ", R=" + format_double(report.R) + ")");
  }
  if (cfg.lr > 0.0) {
    rmsprop_step(disc, cfg.discriminator_lr(), cfg.rms_decay, cfg.rms_eps);
    rmsprop_step(gen, cfg.lr, cfg.rms_decay, cfg.rms_eps);
  } else {
    for (auto* p : disc) p->zero_grad();
    for (auto* p : gen) p->zero_grad();
  }
  return report;
}

Tensor2 encode(ModelBundle& b, const Tensor2& X) { return b.encoder.forward(X); }

Dataset make_dataset(const Tensor2& mixtures, std::optional<Tensor2> sources, Index n_heldout) {
  const Index t = mixtures.cols();
  if (n_heldout < 2 || n_heldout >= t - 1) {
    throw ConfigError("held-out size must leave at least 2 training samples");
  }
  if (sources && sources->cols() != t) throw ConfigError("sources and mixtures differ in length");
  Dataset d;
  d.full = mixtures.transpose();
  d.train = d.full.topRows(t - n_heldout);
  d.heldout = d.full.bottomRows(n_heldout);
  d.sources = std::move(sources);
  return d;
}

TrialResult train_loop(ModelBundle& b, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  TrialResult result;
  result.config = cfg;
  result.seed = cfg.seed;

  Rng rng(cfg.seed);
  const std::uint64_t eval_seed = cfg.seed ^ 0x9e3779b97f4a7c15ull;
  std::uniform_int_distribution<Index> pick(0, data.train.rows() - 1);
  Tensor2 batch(cfg.batch_size, data.train.cols());
  auto sample_batch = [&](Rng& r) {
    for (Index i = 0; i < cfg.batch_size; ++i) batch.row(i) = data.train.row(pick(r));
  };

  const Index n_heldout = data.heldout.rows();
  auto evaluate = [&](long iteration) {
    EvalRow row;
    row.iteration = iteration;
    Rng eval_rng(eval_seed);
    const LossReport held = compute_objective(b, data.heldout, cfg, eval_rng, false);
    row.heldout_total = held.total;
    row.heldout_R = held.R;
    row.heldout_J = held.J_adv;
    if (data.sources) {
      const Tensor2 z = encode(b, data.full).transpose();
      const CorrelationReport full = max_correlation(*data.sources, z);
      row.rho_full = full.rho_max;
      row.rho_heldout =
          max_correlation(Tensor2(data.sources->rightCols(n_heldout)), Tensor2(z.rightCols(n_heldout)))
              .rho_max;
      result.final_report = full;
    }
    result.evals.push_back(row);
    return row;
  };

  {
    Rng init_rng(eval_seed + 1);
    sample_batch(init_rng);
    LogRow row;
    row.iteration = 0;
    row.loss = compute_objective(b, batch, cfg, init_rng, false);
    row.rho_max = evaluate(0).rho_full;
    result.log.push_back(row);
  }

  int runaway_logs = 0;
  try {
    for (long it = 1; it <= cfg.iterations; ++it) {
      sample_batch(rng);
      const LossReport loss = train_step(b, batch, cfg, rng);
      const bool log_now = it % cfg.log_interval == 0 || it == cfg.iterations;
      const bool eval_now = it % cfg.eval_interval == 0 || it == cfg.iterations;
      if (log_now) {
        LogRow row;
        row.iteration = it;
        row.loss = loss;
        if (eval_now) row.rho_max = evaluate(it).rho_full;
        result.log.push_back(row);
        runaway_logs = std::abs(loss.J_disc) > 1e3 ? runaway_logs + 1 : 0;
        if (runaway_logs >= 100) throw DivergenceError("|J| above 1e3 for 100 consecutive logs");
      } else if (eval_now) {
        evaluate(it);
      }
    }
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.divergence_reason = e.what();
  }

  if (!result.evals.empty()) {
    const EvalRow& last = result.evals.back();
    result.heldout_loss = last.heldout_total;
    result.heldout_R = last.heldout_R;
    result.final_rho = last.rho_full;
    result.final_rho_heldout = last.rho_heldout;
  }
  if (result.diverged) {
    result.heldout_loss = std::numeric_limits<double>::quiet_NaN();
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const TrialResult& result) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("cannot write " + path.string());
  os << "iteration,J_disc,J_adv,R,total,gp,rho_max\n";
  for (const auto& row : result.log) {
    os << row.iteration << ',' << format_double(row.loss.J_disc) << ','
       << format_double(row.loss.J_adv) << ',' << format_double(row.loss.R) << ','
       << format_double(row.loss.total) << ',' << (row.loss.gp ? format_double(*row.loss.gp) : "")
       << ',' << (row.rho_max ? format_double(*row.rho_max) : "") << '\n';
  }
}

void write_eval_csv(const std::filesystem::path& path, const TrialResult& result) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("cannot write " + path.string());
  os << "iteration,heldout_total,heldout_J,heldout_R,rho_full,rho_heldout\n";
  for (const auto& row : result.evals) {
    os << row.iteration << ',' << format_double(row.heldout_total) << ','
       << format_double(row.heldout_J) << ',' << format_double(row.heldout_R) << ','
       << (row.rho_full ? format_double(*row.rho_full) : "") << ','
       << (row.rho_heldout ? format_double(*row.rho_heldout) : "") << '\n';
  }
}

}  // namespace advica
