#include "doctest.h"

#include "advica/errors.hpp"
#include "advica/signals.hpp"
#include "advica/training.hpp"
#include "support/finite_diff.hpp"

#include <algorithm>
#include <cmath>

using namespace advica;
using advica::testing::random_tensor;

namespace {

std::vector<double> column(const Tensor2& t, Index c) {
  std::vector<double> out(static_cast<std::size_t>(t.rows()));
  for (Index r = 0; r < t.rows(); ++r) out[static_cast<std::size_t>(r)] = t(r, c);
  return out;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

double kendall_tau(const std::vector<double>& y) {
  long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = i + 1; j < y.size(); ++j) {
      if (y[j] > y[i]) ++concordant;
      if (y[j] < y[i]) ++discordant;
    }
  const double n = static_cast<double>(y.size());
  return (concordant - discordant) / (n * (n - 1) / 2.0);
}

std::vector<double> block_means(const std::vector<double>& v, std::size_t block) {
  std::vector<double> out;
  for (std::size_t s = 0; s + block <= v.size(); s += block) {
    double m = 0.0;
    for (std::size_t k = s; k < s + block; ++k) m += v[k];
    out.push_back(m / static_cast<double>(block));
  }
  return out;
}

struct LinearTask {
  Dataset data;
  TrainConfig cfg;
};

LinearTask linear_task() {
  SignalMatrix s = gen_synthetic(4000, 0.4, 0);
  peak_normalize(s);
  const Mixture mix = mix_linear(s, 6, 0);
  LinearTask t{make_dataset(mix.X.data, s.data, 500), {}};
  t.cfg.model.architecture = Architecture::linear;
  t.cfg.model.n_obs = 6;
  t.cfg.model.n_sources = 6;
  return t;
}

std::vector<Tensor2> values_of(const std::vector<Parameter*>& ps) {
  std::vector<Tensor2> out;
  for (auto* p : ps) out.push_back(p->value);
  return out;
}

bool same_values(const std::vector<Parameter*>& ps, const std::vector<Tensor2>& vs) {
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps[i]->value != vs[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("resampling breaks dependence and keeps marginals") {
  Rng rng(31);
  const Index n = 4096;
  std::normal_distribution<double> normal;
  Tensor2 Z(n, 2);
  for (Index r = 0; r < n; ++r) {
    const double a = normal(rng), b = normal(rng);
    Z(r, 0) = a;
    Z(r, 1) = 0.9 * a + std::sqrt(1.0 - 0.81) * b;
  }
  const std::vector<double> c0 = column(Z, 0), c1 = column(Z, 1);
  CHECK(pearson(c0, c1) > 0.85);

  const Resampled r = resample_marginals(Z, rng);
  const std::vector<double> h0 = column(r.values, 0), h1 = column(r.values, 1);
  CHECK(std::abs(pearson(h0, h1)) < 0.05);
  CHECK(ks_statistic(h0, c0) < 0.05);
  CHECK(ks_statistic(h1, c1) < 0.05);
}

TEST_CASE("discriminator and encoder-side updates touch disjoint parameters") {
  LinearTask t = linear_task();
  TrainConfig& cfg = t.cfg;
  cfg.lr = 1e-3;
  Rng init(32);
  const ModelBundle fresh = build_models(cfg.model, init);
  const Tensor2 X = t.data.train.topRows(64);

  ModelBundle joint = fresh;
  Rng r0(7);
  train_step(joint, X, cfg, r0);

  // Discriminator step alone leaves the encoder side untouched.
  ModelBundle d_only = fresh;
  {
    auto gen = d_only.generator_side_parameters();
    auto disc = d_only.discriminator_parameters();
    const auto gen_before = values_of(gen);
    Rng r(7);
    for (auto* p : gen) p->zero_grad();
    for (auto* p : disc) p->zero_grad();
    compute_objective(d_only, X, cfg, r, true);
    rmsprop_step(disc, cfg.discriminator_lr(), cfg.rms_decay, cfg.rms_eps);
    CHECK(same_values(gen, gen_before));
    CHECK(same_values(disc, values_of(joint.discriminator_parameters())));
  }
  // Encoder-side step alone leaves the discriminator untouched.
  ModelBundle g_only = fresh;
  {
    auto gen = g_only.generator_side_parameters();
    auto disc = g_only.discriminator_parameters();
    const auto disc_before = values_of(disc);
    Rng r(7);
    for (auto* p : gen) p->zero_grad();
    for (auto* p : disc) p->zero_grad();
    compute_objective(g_only, X, cfg, r, true);
    rmsprop_step(gen, cfg.lr, cfg.rms_decay, cfg.rms_eps);
    CHECK(same_values(disc, disc_before));
    CHECK(same_values(gen, values_of(joint.generator_side_parameters())));
  }
  // The reconstruction weight reaches only the encoder side.
  TrainConfig heavy = cfg;
  heavy.lambda = 50.0;
  ModelBundle other = fresh;
  Rng r1(7);
  train_step(other, X, heavy, r1);
  CHECK(same_values(other.discriminator_parameters(), values_of(joint.discriminator_parameters())));
  CHECK_FALSE(same_values(other.generator_side_parameters(), values_of(joint.generator_side_parameters())));
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  LinearTask t = linear_task();
  t.cfg.lr = 0.0;
  for (Variant v : {Variant::anica, Variant::anica_g}) {
    t.cfg.variant = v;
    t.cfg.model.with_generator = v == Variant::anica_g;
    Rng init(33);
    ModelBundle b = build_models(t.cfg.model, init);
    auto all = b.generator_side_parameters();
    auto disc = b.discriminator_parameters();
    all.insert(all.end(), disc.begin(), disc.end());
    const auto before = values_of(all);
    Rng r(1);
    const LossReport rep = train_step(b, t.data.train.topRows(64), t.cfg, r);
    CHECK(same_values(all, before));
    CHECK(std::isfinite(rep.total));
    CHECK(std::isfinite(rep.J_disc));
  }
}

TEST_CASE("GAN objective at fresh init lies within the clamp bound") {
  LinearTask t = linear_task();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng init(seed);
    ModelBundle b = build_models(t.cfg.model, init);
    Rng r(seed + 100);
    const LossReport rep = compute_objective(b, t.data.train.topRows(64), t.cfg, r, false);
    CHECK(rep.J_disc <= 0.0);
    CHECK(rep.J_disc >= 2.0 * std::log(1e-7));
  }
}

TEST_CASE("without the adversarial term training is an auto-encoder") {
  LinearTask t = linear_task();
  t.cfg.adv_weight = 0.0;
  t.cfg.iterations = 1000;
  t.cfg.log_interval = 1;
  t.cfg.eval_interval = 1000;
  Rng init(34);
  ModelBundle b = build_models(t.cfg.model, init);
  const TrialResult r = train_loop(b, t.data, t.cfg);
  REQUIRE_FALSE(r.diverged);
  std::vector<double> R;
  for (const auto& row : r.log) R.push_back(row.loss.R);
  const auto means = block_means(R, 50);
  CHECK(kendall_tau(means) < -0.5);
  CHECK(means.back() < 0.5 * means.front());
}

TEST_CASE("objective trends down over the first 5k steps") {
  LinearTask t = linear_task();
  t.cfg.iterations = 5000;
  t.cfg.log_interval = 1;
  t.cfg.eval_interval = 5000;
  Rng init(35);
  ModelBundle b = build_models(t.cfg.model, init);
  const TrialResult r = train_loop(b, t.data, t.cfg);
  REQUIRE_FALSE(r.diverged);
  std::vector<double> total;
  for (const auto& row : r.log) total.push_back(row.loss.total);
  const double tau = kendall_tau(block_means(total, 100));
  MESSAGE("Kendall tau of 100-step means: " << tau);
  CHECK(tau < 0.0);
}

TEST_CASE("zero iterations yields only the initial evaluation") {
  LinearTask t = linear_task();
  t.cfg.iterations = 0;
  Rng init(36);
  ModelBundle b = build_models(t.cfg.model, init);
  const TrialResult r = train_loop(b, t.data, t.cfg);
  REQUIRE(r.evals.size() == 1);
  CHECK(r.evals[0].iteration == 0);
  CHECK(r.final_rho.has_value());
  CHECK_FALSE(r.diverged);
}

TEST_CASE("training replays identically from the same seeds") {
  LinearTask t = linear_task();
  t.cfg.iterations = 400;
  t.cfg.log_interval = 10;
  t.cfg.eval_interval = 200;
  t.cfg.seed = 5;
  auto run = [&] {
    Rng init(37);
    ModelBundle b = build_models(t.cfg.model, init);
    return train_loop(b, t.data, t.cfg);
  };
  const TrialResult a = run();
  const TrialResult c = run();
  REQUIRE(a.log.size() == c.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].loss.total == c.log[i].loss.total);
    CHECK(a.log[i].loss.J_disc == c.log[i].loss.J_disc);
  }
  CHECK(a.final_rho == c.final_rho);
  t.cfg.seed = 6;
  const TrialResult d = run();
  CHECK(d.log.back().loss.total != a.log.back().loss.total);
}

TEST_CASE("non-finite input marks the trial diverged") {
  LinearTask t = linear_task();
  t.cfg.iterations = 50;
  t.data.train(3, 2) = std::numeric_limits<double>::infinity();
  t.data.train.col(2).setConstant(std::numeric_limits<double>::infinity());
  Rng init(38);
  ModelBundle b = build_models(t.cfg.model, init);
  const TrialResult r = train_loop(b, t.data, t.cfg);
  CHECK(r.diverged);
  CHECK_FALSE(r.divergence_reason.empty());
  CHECK(std::isnan(r.heldout_loss));
}

TEST_CASE("desk-scale linear run beats the mixtures") {
  LinearTask t = linear_task();
  t.cfg.iterations = 20000;
  Rng init(0);
  ModelBundle b = build_models(t.cfg.model, init);
  const TrialResult r = train_loop(b, t.data, t.cfg);
  const double mixed = max_correlation(*t.data.sources, Tensor2(t.data.full.transpose())).rho_max;
  REQUIRE(r.final_rho.has_value());
  MESSAGE("trained " << *r.final_rho << " vs mixed " << mixed);
  CHECK(*r.final_rho > mixed);
}
