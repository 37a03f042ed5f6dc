#include "advica/errors.hpp"
#include "advica/training.hpp"

#include <cmath>

namespace advica {

std::string to_string(Objective o) { return o == Objective::gan ? "gan" : "wgan_gp"; }

Objective objective_from_string(const std::string& s) {
  if (s == "gan") return Objective::gan;
  if (s == "wgan_gp") return Objective::wgan_gp;
  throw ConfigError("unknown objective '" + s + "' (accepted: gan, wgan_gp)");
}

std::string to_string(Variant v) { return v == Variant::anica ? "anica" : "anica_g"; }

Variant variant_from_string(const std::string& s) {
  if (s == "anica") return Variant::anica;
  if (s == "anica_g") return Variant::anica_g;
  throw ConfigError("unknown variant '" + s + "' (accepted: anica, anica_g)");
}

Resampled resample_marginals(const Tensor2& Z, Rng& rng) {
  const Index n = Z.rows();
  if (n < 2) throw ConfigError("resampling needs a batch of at least 2");
  std::uniform_int_distribution<Index> pick(0, n - 1);
  Resampled r;
  r.values.resize(n, Z.cols());
  r.source_rows.resize(n, Z.cols());
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < Z.cols(); ++i) {
      const Index k = pick(rng);
      r.source_rows(j, i) = k;
      r.values(j, i) = Z(k, i);
    }
  }
  return r;
}

Tensor2 resample_backward(const Resampled& r, const Tensor2& upstream, Index n_rows) {
  Tensor2 g = Tensor2::Zero(n_rows, upstream.cols());
  for (Index j = 0; j < upstream.rows(); ++j)
    for (Index i = 0; i < upstream.cols(); ++i) g(r.source_rows(j, i), i) += upstream(j, i);
  return g;
}

namespace {

constexpr double kClampLow = 1e-7;
constexpr double kClampHigh = 1.0 - 1e-7;

Tensor2 stack_rows(const Tensor2& a, const Tensor2& b) {
  Tensor2 out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

void check_pair(const Network& D, const Tensor2& Z, const Tensor2& Z_hat) {
  if (Z.cols() != Z_hat.cols()) throw ConfigError("Z and Z_hat have different widths");
  if (Z.rows() < 1 || Z_hat.rows() < 1) throw ConfigError("empty adversarial batch");
  if (D.output_dim() != 1) throw ConfigError("discriminator must have a scalar output");
}

}  // namespace

AdversarialTerms gan_losses(Network& D, const Tensor2& Z, const Tensor2& Z_hat, bool backprop) {
  check_pair(D, Z, Z_hat);
  if (D.layers().empty() || D.layers().back().activation != Activation::sigmoid) {
    throw ConfigError("GAN objective needs a probability-output discriminator");
  }
  const Index n_real = Z.rows();
  const Index n_fake = Z_hat.rows();
  const Tensor2 p = D.forward(stack_rows(Z, Z_hat));

  AdversarialTerms out;
  Tensor2 dJ_dp = Tensor2::Zero(p.rows(), 1);
  double sum_real = 0.0, sum_fake = 0.0;
  for (Index r = 0; r < p.rows(); ++r) {
    double v = p(r, 0);
    bool clamped = false;
    if (v < kClampLow) {
      v = kClampLow;
      clamped = true;
    } else if (v > kClampHigh) {
      v = kClampHigh;
      clamped = true;
    }
    if (clamped) ++out.report.clamp_count;
    if (r < n_real) {
      sum_real += std::log(v);
      if (!clamped) dJ_dp(r, 0) = 1.0 / (static_cast<double>(n_real) * v);
    } else {
      sum_fake += std::log1p(-v);
      if (!clamped) dJ_dp(r, 0) = -1.0 / (static_cast<double>(n_fake) * (1.0 - v));
    }
  }
  const double J = sum_real / static_cast<double>(n_real) + sum_fake / static_cast<double>(n_fake);
  out.report.J_disc = J;
  out.report.J_adv = J;
  if (backprop) {
    // Discriminator minimises -J; the input gradient of -J is negated for the encoder side.
    const Tensor2 g_in = D.backward(-dJ_dp);
    out.grad_real = -g_in.topRows(n_real);
    out.grad_fake = -g_in.bottomRows(n_fake);
  }
  return out;
}

AdversarialTerms wgan_gp_losses(Network& D, const Tensor2& Z, const Tensor2& Z_hat,
                                double lambda_gp, Rng& rng, bool backprop) {
  check_pair(D, Z, Z_hat);
  if (Z.rows() != Z_hat.rows()) throw ConfigError("gradient penalty needs equal batch sizes");
  const Index n = Z.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Tensor2 d = D.forward(stack_rows(Z, Z_hat));
  const double w = d.topRows(n).mean() - d.bottomRows(n).mean();

  AdversarialTerms out;
  if (backprop) {
    Tensor2 up(2 * n, 1);
    up.topRows(n).setConstant(-inv_n);
    up.bottomRows(n).setConstant(inv_n);
    const Tensor2 g_in = D.backward(up);
    out.grad_real = -g_in.topRows(n);
    out.grad_fake = -g_in.bottomRows(n);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tensor2 u(n, Z.cols());
  for (Index r = 0; r < n; ++r) {
    const double e = unit(rng);
    u.row(r) = e * Z.row(r) + (1.0 - e) * Z_hat.row(r);
  }
  const Tensor2 G = D.input_gradient(u);
  double penalty = 0.0;
  Tensor2 G_bar = Tensor2::Zero(n, G.cols());
  for (Index r = 0; r < n; ++r) {
    const double norm = G.row(r).norm();
    penalty += (norm - 1.0) * (norm - 1.0);
    if (norm > 0.0) G_bar.row(r) = (lambda_gp * 2.0 * inv_n * (norm - 1.0) / norm) * G.row(r);
  }
  penalty *= inv_n;
  if (backprop) D.backward_input_gradient(G_bar);

  out.report.J_adv = w;
  out.report.J_disc = w - lambda_gp * penalty;
  out.report.gp = penalty;
  return out;
}

double reconstruction_loss(const Tensor2& X, const Tensor2& X_hat) {
  if (X.rows() != X_hat.rows() || X.cols() != X_hat.cols()) {
    throw ConfigError("reconstruction shapes differ");
  }
  if (X.rows() == 0) return 0.0;
  return (X - X_hat).rowwise().norm().mean();
}

Tensor2 reconstruction_grad(const Tensor2& X, const Tensor2& X_hat) {
  const Tensor2 diff = X_hat - X;
  Tensor2 g = Tensor2::Zero(X.rows(), X.cols());
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  for (Index r = 0; r < X.rows(); ++r) {
    const double norm = diff.row(r).norm();
    if (norm > 0.0) g.row(r) = diff.row(r) * (inv_n / norm);
  }
  return g;
}

}  // namespace advica
