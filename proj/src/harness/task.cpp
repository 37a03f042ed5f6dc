#include "advica/errors.hpp"
#include "advica/harness.hpp"

#include <algorithm>

namespace advica {

namespace {

SignalMatrix build_audio_sources(const TaskSpec& spec) {
  if (spec.audio_files.empty()) {
    throw ConfigError(
        "audio task needs source recordings: set task.audio_files to a comma separated list of "
        "16-bit PCM WAV files (optionally path:channel), e.g. MA02_04.wav,FA01_03.wav");
  }
  std::vector<SignalMatrix> parts;
  std::vector<std::string> missing;
  for (const auto& entry : spec.audio_files) {
    std::string path = entry;
    int channel = 0;
    const auto colon = entry.rfind(':');
    if (colon != std::string::npos && colon + 1 < entry.size() &&
        std::all_of(entry.begin() + static_cast<long>(colon) + 1, entry.end(), ::isdigit)) {
      path = entry.substr(0, colon);
      channel = std::stoi(entry.substr(colon + 1));
    }
    if (!std::filesystem::exists(path)) {
      missing.push_back(path);
      continue;
    }
    parts.push_back(load_audio(path, channel));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("missing audio inputs: " + list);
  }

  Index length = parts.front().n_samples();
  for (const auto& p : parts) length = std::min(length, p.n_samples());
  if (spec.samples > 0) {
    if (spec.samples > length) {
      throw ConfigError("task.samples exceeds the shortest recording (" + std::to_string(length) +
                        " samples)");
    }
    length = spec.samples;
  }
  for (auto& p : parts) p.data = Tensor2(p.data.leftCols(length));
  for (Index k = 0; k < spec.noise_sources; ++k) {
    SignalMatrix noise = gen_uniform_noise(length, spec.seed + static_cast<std::uint64_t>(k));
    noise.sample_rate = parts.front().sample_rate;
    peak_normalize(noise);
    parts.push_back(std::move(noise));
  }
  SignalMatrix s = stack_signals(parts);
  s.seed = spec.seed;
  s.generator = "audio";
  return s;
}

}  // namespace

Task build_task(const TaskSpec& spec) {
  if (spec.heldout < 2) throw ConfigError("task.heldout must be at least 2");
  Task task;
  if (spec.sources == "synthetic") {
    const Index t = spec.samples > 0 ? spec.samples : 4000;
    task.sources = gen_synthetic(t, spec.t_max, spec.seed);
    peak_normalize(task.sources);
  } else if (spec.sources == "audio") {
    task.sources = build_audio_sources(spec);
  } else {
    throw ConfigError("invalid value '" + spec.sources +
                      "' for task.sources (accepted: synthetic, audio)");
  }

  const Index m = task.sources.n_signals();
  switch (spec.mix) {
    case MixKind::linear:
      task.mixture = mix_linear(task.sources, spec.n_obs > 0 ? spec.n_obs : m, spec.seed);
      break;
    case MixKind::pnl: {
      std::vector<PostFunc> funcs = spec.post_funcs;
      if (funcs.empty()) {
        if (spec.sources == "audio" && m == 3) {
          funcs = {PostFunc::tanh, PostFunc::cubic_avg, PostFunc::exp};
        } else {
          funcs.assign(static_cast<std::size_t>(m), PostFunc::tanh);
        }
      }
      task.mixture = mix_pnl(task.sources, spec.seed, funcs);
      break;
    }
    case MixKind::mlp:
      task.mixture = mix_mlp(task.sources, spec.seed);
      break;
  }
  if (task.sources.n_samples() <= spec.heldout + 1) {
    throw ConfigError("task has " + std::to_string(task.sources.n_samples()) +
                      " samples, too few for a held-out split of " + std::to_string(spec.heldout));
  }
  return task;
}

void write_task(const Task& task, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_signals_csv(dir / "sources.csv", task.sources);
  write_signals_csv(dir / "mixtures.csv", task.mixture.X);
  write_mixspec(dir / "mixspec.txt", task.mixture.spec);
}

Task read_task(const std::filesystem::path& dir) {
  Task task;
  task.sources = read_signals_csv(dir / "sources.csv");
  task.mixture.X = read_signals_csv(dir / "mixtures.csv");
  task.mixture.spec = read_mixspec(dir / "mixspec.txt");
  if (task.sources.n_samples() != task.mixture.X.n_samples()) {
    throw IngestionError(dir.string() + ": sources and mixtures differ in length");
  }
  return task;
}

Task resolve_task(const TaskSpec& spec) {
  if (!spec.data_dir.empty()) return read_task(spec.data_dir);
  return build_task(spec);
}

TrainConfig trial_config(const RunConfig& cfg, const Task& task) {
  TrainConfig tc = cfg.train;
  ModelSpec& m = tc.model;
  const auto has = [&](const char* key) { return cfg.explicit_keys.count(key) > 0; };
  switch (task.mixture.spec.kind) {
    case MixKind::linear: m.architecture = Architecture::linear; break;
    case MixKind::pnl: m.architecture = Architecture::pnl; break;
    case MixKind::mlp:
      m.architecture = Architecture::mlp;
      if (!has("model.disc_layers")) m.disc_layers = 2;
      if (!has("model.disc_hidden")) m.disc_hidden = m.hidden;
      break;
  }
  m.n_obs = task.mixture.X.n_signals();
  m.n_sources = task.sources.n_signals();
  m.critic = tc.objective == Objective::wgan_gp;
  m.with_generator = tc.variant == Variant::anica_g;
  return tc;
}

}  // namespace advica
