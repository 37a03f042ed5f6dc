#include "advica/signals.hpp"

#include "advica/errors.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace advica {

std::string to_string(MixKind k) {
  switch (k) {
    case MixKind::linear: return "linear";
    case MixKind::pnl: return "pnl";
    case MixKind::mlp: return "mlp";
  }
  return "linear";
}

MixKind mix_kind_from_string(const std::string& s) {
  if (s == "linear") return MixKind::linear;
  if (s == "pnl") return MixKind::pnl;
  if (s == "mlp") return MixKind::mlp;
  throw ConfigError("unknown mixture kind '" + s + "' (accepted: linear, pnl, mlp)");
}

std::string to_string(PostFunc f) {
  switch (f) {
    case PostFunc::identity: return "identity";
    case PostFunc::tanh: return "tanh";
    case PostFunc::cubic_avg: return "cubic_avg";
    case PostFunc::exp: return "exp";
  }
  return "identity";
}

PostFunc post_func_from_string(const std::string& s) {
  if (s == "identity") return PostFunc::identity;
  if (s == "tanh") return PostFunc::tanh;
  if (s == "cubic_avg") return PostFunc::cubic_avg;
  if (s == "exp") return PostFunc::exp;
  throw ConfigError("unknown post-nonlinearity '" + s +
                    "' (accepted: identity, tanh, cubic_avg, exp)");
}

double apply_post_func(PostFunc f, double x) {
  switch (f) {
    case PostFunc::identity: return x;
    case PostFunc::tanh: return std::tanh(x);
    case PostFunc::cubic_avg: return 0.5 * (x + x * x * x);
    case PostFunc::exp: return std::exp(x);
  }
  return x;
}

Eigen::MatrixXd sample_mixing_matrix(Index rows, Index cols, Rng& rng, int* rejected) {
  if (rows < 1 || cols < 1) throw ConfigError("mixing matrix dimensions must be positive");
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  int rejections = 0;
  for (;;) {
    Eigen::MatrixXd a(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) a(i, j) = dist(rng);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const double smallest = svd.singularValues()(svd.singularValues().size() - 1);
    if (smallest >= 1e-10) {
      if (rejected) *rejected = rejections;
      return a;
    }
    ++rejections;
    std::clog << "advica: rejected near-singular mixing matrix draw (sigma_min=" << smallest
              << ")\n";
  }
}

SignalMatrix apply_mix(const SignalMatrix& sources, const MixSpec& spec) {
  if (spec.A.cols() != sources.n_signals()) {
    throw ConfigError("mixing matrix expects " + std::to_string(spec.A.cols()) +
                      " sources, got " + std::to_string(sources.n_signals()));
  }
  SignalMatrix x;
  x.sample_rate = sources.sample_rate;
  x.seed = spec.seed;
  x.generator = "mix_" + to_string(spec.kind);
  x.data = spec.A * sources.data;

  switch (spec.kind) {
    case MixKind::linear: break;
    case MixKind::pnl: {
      if (static_cast<Index>(spec.post_funcs.size()) != spec.A.rows()) {
        throw ConfigError("PNL mixture needs one post-nonlinearity per output");
      }
      constexpr double kExpLimit = 709.0;
      for (Index i = 0; i < x.data.rows(); ++i) {
        const PostFunc f = spec.post_funcs[static_cast<std::size_t>(i)];
        if (f == PostFunc::exp && x.data.row(i).maxCoeff() > kExpLimit) {
          throw NumericalError("exp post-nonlinearity overflows on mixture " +
                               std::to_string(i + 1) + "; pre-scale the sources");
        }
        for (Index k = 0; k < x.data.cols(); ++k) x.data(i, k) = apply_post_func(f, x.data(i, k));
      }
      break;
    }
    case MixKind::mlp: {
      if (!spec.B) throw ConfigError("MLP mixture needs a B matrix");
      if (spec.B->cols() != spec.A.rows()) throw ConfigError("B columns must match A rows");
      const Eigen::MatrixXd hidden = x.data.array().tanh().matrix();
      x.data = ((*spec.B) * hidden).array().tanh().matrix();
      break;
    }
  }
  return x;
}

Mixture mix_linear(const SignalMatrix& sources, Index n_obs, std::uint64_t seed) {
  if (n_obs < sources.n_signals()) {
    throw ConfigError("linear mixture needs at least as many observations as sources");
  }
  Rng rng(seed);
  MixSpec spec;
  spec.kind = MixKind::linear;
  spec.seed = seed;
  spec.A = sample_mixing_matrix(n_obs, sources.n_signals(), rng, &spec.rejected_draws);
  SignalMatrix x = apply_mix(sources, spec);
  return {std::move(x), std::move(spec)};
}

Mixture mix_pnl(const SignalMatrix& sources, std::uint64_t seed, std::span<const PostFunc> funcs) {
  const auto n_obs = static_cast<Index>(funcs.size());
  if (n_obs < sources.n_signals()) {
    throw ConfigError("PNL mixture needs one post-nonlinearity per output and at least as many "
                      "outputs as sources");
  }
  Rng rng(seed);
  MixSpec spec;
  spec.kind = MixKind::pnl;
  spec.seed = seed;
  spec.A = sample_mixing_matrix(n_obs, sources.n_signals(), rng, &spec.rejected_draws);
  spec.post_funcs.assign(funcs.begin(), funcs.end());
  SignalMatrix x = apply_mix(sources, spec);
  return {std::move(x), std::move(spec)};
}

Mixture mix_mlp(const SignalMatrix& sources, std::uint64_t seed) {
  if (sources.n_signals() != 6) throw ConfigError("MLP mixture expects 6 sources");
  Rng rng(seed);
  MixSpec spec;
  spec.kind = MixKind::mlp;
  spec.seed = seed;
  int rej_a = 0, rej_b = 0;
  spec.A = sample_mixing_matrix(24, 6, rng, &rej_a);
  spec.B = sample_mixing_matrix(24, 24, rng, &rej_b);
  spec.rejected_draws = rej_a + rej_b;
  SignalMatrix x = apply_mix(sources, spec);
  return {std::move(x), std::move(spec)};
}

}  // namespace advica
