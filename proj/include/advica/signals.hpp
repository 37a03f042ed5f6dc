#pragma once

// Source synthesis, audio ingestion and the linear / post-nonlinear / MLP
// mixing transformations.

#include "advica/autodiff.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace advica {

/// M signals x T samples, one signal per row.
struct SignalMatrix {
  Tensor2 data;
  std::optional<double> sample_rate;
  std::uint64_t seed = 0;
  std::string generator;

  Index n_signals() const { return data.rows(); }
  Index n_samples() const { return data.cols(); }

  /// Samples-as-rows view used by the networks (T x M).
  Tensor2 as_batch() const { return data.transpose(); }
  static SignalMatrix from_batch(const Tensor2& batch, std::string generator = {});
};

/// The six synthetic sources on t = linspace(0, t_max, T):
/// square, two sines, a frequency-modulated sine, uniform and Laplace noise.
SignalMatrix gen_synthetic(Index n_samples = 4000, double t_max = 0.4, std::uint64_t seed = 0);

/// I.i.d. U[-1, 1] noise source.
SignalMatrix gen_uniform_noise(Index n_samples, std::uint64_t seed);

/// Scales every signal so that max |value| = 1. Throws NumericalError on an
/// all-zero signal.
void peak_normalize(SignalMatrix& s);

struct WavData {
  std::uint32_t sample_rate = 0;
  std::uint16_t channels = 0;
  std::vector<std::int16_t> samples;  // interleaved
};

WavData read_wav(const std::filesystem::path& path);

/// One signal per requested channel, each peak-normalised.
SignalMatrix load_audio(const std::filesystem::path& path, std::span<const int> channels);
SignalMatrix load_audio(const std::filesystem::path& path, int channel = 0);

/// Stacks signals (rows) of equal length; keeps the first sample rate found.
SignalMatrix stack_signals(std::span<const SignalMatrix> parts);

enum class MixKind { linear, pnl, mlp };
enum class PostFunc { identity, tanh, cubic_avg, exp };

std::string to_string(MixKind k);
MixKind mix_kind_from_string(const std::string& s);
std::string to_string(PostFunc f);
PostFunc post_func_from_string(const std::string& s);
double apply_post_func(PostFunc f, double x);

/// Mixing transformation with its sampled matrices, sufficient to replay X from S.
struct MixSpec {
  MixKind kind = MixKind::linear;
  Eigen::MatrixXd A;
  std::optional<Eigen::MatrixXd> B;
  std::vector<PostFunc> post_funcs;
  std::uint64_t seed = 0;
  int rejected_draws = 0;
};

/// P x M matrix with i.i.d. U[-.5, .5] entries, redrawn while its smallest
/// singular value is below 1e-10.
Eigen::MatrixXd sample_mixing_matrix(Index rows, Index cols, Rng& rng, int* rejected = nullptr);

/// Recomputes the mixtures described by `spec` from the sources.
SignalMatrix apply_mix(const SignalMatrix& sources, const MixSpec& spec);

struct Mixture {
  SignalMatrix X;
  MixSpec spec;
};

Mixture mix_linear(const SignalMatrix& sources, Index n_obs, std::uint64_t seed);
Mixture mix_pnl(const SignalMatrix& sources, std::uint64_t seed, std::span<const PostFunc> funcs);
Mixture mix_mlp(const SignalMatrix& sources, std::uint64_t seed);

/// First `T - n_heldout` samples and the trailing `n_heldout` samples.
std::pair<SignalMatrix, SignalMatrix> split_tail(const SignalMatrix& s, Index n_heldout);

// File formats --------------------------------------------------------------

/// CSV with header `s1,...,sM`, one column per signal, plus `<path>.meta`
/// holding key=value lines (sample_rate, seed, generator).
void write_signals_csv(const std::filesystem::path& path, const SignalMatrix& s);
SignalMatrix read_signals_csv(const std::filesystem::path& path);

/// key=value header (kind, seed, funcs) followed by `A:` / `B:` CSV blocks.
void write_mixspec(const std::filesystem::path& path, const MixSpec& spec);
MixSpec read_mixspec(const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace advica
