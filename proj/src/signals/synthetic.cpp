#include "advica/signals.hpp"

#include "advica/errors.hpp"

#include <cmath>
#include <numbers>

namespace advica {

SignalMatrix SignalMatrix::from_batch(const Tensor2& batch, std::string generator) {
  SignalMatrix s;
  s.data = batch.transpose();
  s.generator = std::move(generator);
  return s;
}

SignalMatrix gen_synthetic(Index n_samples, double t_max, std::uint64_t seed) {
  if (n_samples < 2) throw ConfigError("gen_synthetic needs at least 2 samples");
  if (!(t_max > 0.0)) throw ConfigError("gen_synthetic needs t_max > 0");
  constexpr double pi = std::numbers::pi;

  SignalMatrix s;
  s.data.resize(6, n_samples);
  s.seed = seed;
  s.generator = "synthetic";
  s.sample_rate = static_cast<double>(n_samples - 1) / t_max;

  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (Index k = 0; k < n_samples; ++k) {
    const double t = t_max * static_cast<double>(k) / static_cast<double>(n_samples - 1);
    const double c = std::cos(310.0 * pi * t);
    s.data(0, k) = (c > 0.0) ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
    s.data(1, k) = std::sin(1600.0 * pi * t);
    s.data(2, k) = std::sin(600.0 * pi * t + 6.0 * std::cos(120.0 * pi * t));
    s.data(3, k) = std::sin(180.0 * pi * t);
  }
  // Noise rows are drawn after the deterministic rows so they only depend on the seed.
  for (Index k = 0; k < n_samples; ++k) s.data(4, k) = uniform(rng);
  for (Index k = 0; k < n_samples; ++k) {
    // Laplace(0, 1) by inversion; 1 - u lies in (0, 1].
    const double u = unit(rng) - 0.5;
    const double mag = -std::log1p(-2.0 * std::abs(u));
    s.data(5, k) = u < 0.0 ? -mag : mag;
  }
  return s;
}

SignalMatrix gen_uniform_noise(Index n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw ConfigError("noise source needs at least 1 sample");
  SignalMatrix s;
  s.data.resize(1, n_samples);
  s.seed = seed;
  s.generator = "uniform_noise";
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (Index k = 0; k < n_samples; ++k) s.data(0, k) = uniform(rng);
  return s;
}

void peak_normalize(SignalMatrix& s) {
  for (Index i = 0; i < s.n_signals(); ++i) {
    const double peak = s.data.row(i).cwiseAbs().maxCoeff();
    if (!(peak > 0.0)) {
      throw NumericalError("signal " + std::to_string(i + 1) + " has zero peak amplitude");
    }
    if (peak != 1.0) s.data.row(i) /= peak;
  }
}

SignalMatrix stack_signals(std::span<const SignalMatrix> parts) {
  if (parts.empty()) throw ConfigError("nothing to stack");
  const Index t = parts.front().n_samples();
  Index rows = 0;
  for (const auto& p : parts) {
    if (p.n_samples() != t) throw ConfigError("stacked signals must have equal length");
    rows += p.n_signals();
  }
  SignalMatrix out;
  out.data.resize(rows, t);
  Index r = 0;
  for (const auto& p : parts) {
    out.data.middleRows(r, p.n_signals()) = p.data;
    r += p.n_signals();
    if (!out.sample_rate && p.sample_rate) out.sample_rate = p.sample_rate;
  }
  out.generator = "stacked";
  out.seed = parts.front().seed;
  return out;
}

std::pair<SignalMatrix, SignalMatrix> split_tail(const SignalMatrix& s, Index n_heldout) {
  if (n_heldout < 0 || n_heldout >= s.n_samples()) {
    throw ConfigError("held-out size must be smaller than the sample count");
  }
  const Index n_train = s.n_samples() - n_heldout;
  SignalMatrix train = s;
  SignalMatrix held = s;
  train.data = s.data.leftCols(n_train);
  held.data = s.data.rightCols(n_heldout);
  return {std::move(train), std::move(held)};
}

}  // namespace advica
