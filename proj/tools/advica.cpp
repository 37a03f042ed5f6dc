// advica: command-line front end for task generation, training, search,
// reporting and the FastICA baseline.

#include "CLI11.hpp"
#include "advica/errors.hpp"
#include "advica/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace advica;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitDiverged = 2;

struct CommonOptions {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<long> iterations;
  bool paper_scale = false;
  std::optional<int> jobs;
};

RunConfig load(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  for (const auto& kv : o.overrides) apply_override(cfg, kv);
  if (o.paper_scale) cfg.train.iterations = kPaperIterations;
  if (o.iterations) cfg.train.iterations = *o.iterations;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (cfg.jobs < 1) throw ConfigError("--jobs must be at least 1");
  return cfg;
}

std::string rho_text(const std::optional<double>& r) { return r ? format_double(*r) : "n/a"; }

int cmd_generate(const CommonOptions& o) {
  RunConfig cfg = load(o);
  if (o.seed) cfg.task.seed = *o.seed;
  const Task task = build_task(cfg.task);
  write_task(task, o.out);
  const CorrelationReport mixed = max_correlation(task.sources.data, task.mixture.X.data);
  std::printf("wrote %s: %ld sources, %ld mixtures, %ld samples, mixed rho_max %s\n", o.out.c_str(),
              static_cast<long>(task.sources.n_signals()), static_cast<long>(task.mixture.X.n_signals()),
              static_cast<long>(task.sources.n_samples()), format_double(mixed.rho_max).c_str());
  return kExitOk;
}

int cmd_train(const CommonOptions& o) {
  RunConfig cfg = load(o);
  if (o.seed) cfg.train.seed = *o.seed;
  const Task task = resolve_task(cfg.task);
  const TrainConfig tc = trial_config(cfg, task);
  tc.validate();
  fs::create_directories(o.out);
  {
    std::ofstream os(fs::path(o.out) / "run_config.txt", std::ios::binary);
    os << to_config_text(cfg);
  }
  const TrialResult r = run_trial(task, tc, cfg.task.heldout, o.out);
  std::printf("rho_max %s (held-out %s), held-out loss %s, %.1f s\n", rho_text(r.final_rho).c_str(),
              rho_text(r.final_rho_heldout).c_str(), format_double(r.heldout_loss).c_str(),
              r.wall_seconds);
  if (r.diverged) {
    std::fprintf(stderr, "training diverged: %s\n", r.divergence_reason.c_str());
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_search(const CommonOptions& o) {
  RunConfig cfg = load(o);
  if (o.seed) cfg.train.seed = *o.seed;
  cfg.search.validate();
  const Task task = resolve_task(cfg.task);
  fs::create_directories(o.out);
  {
    std::ofstream os(fs::path(o.out) / "run_config.txt", std::ios::binary);
    os << to_config_text(cfg);
  }
  const SearchReport rep = run_search(task, cfg, o.out);
  for (const auto& s : rep.settings) {
    std::printf("setting %d: lr %s init %s lambda %s hidden %ld | loss std %s | rho %s\n",
                s.setting.index, format_double(s.setting.lr).c_str(),
                format_double(s.setting.init_scale).c_str(), format_double(s.setting.lambda).c_str(),
                static_cast<long>(s.setting.hidden),
                s.stats.selectable ? format_double(s.stats.std_loss).c_str() : "n/a",
                s.stats.selectable ? format_score(s.stats.mean_rho, s.stats.std_rho).c_str() : "n/a");
  }
  if (rep.all_diverged) {
    std::fprintf(stderr, "every trial diverged\n");
    return kExitDiverged;
  }
  if (rep.selected && rep.best) {
    std::printf("selected setting %d, best setting %d, gap %s\n", *rep.selected, *rep.best,
                format_double(*rep.gap).c_str());
  }
  return kExitOk;
}

void collect_runs(const fs::path& dir, std::vector<fs::path>& out) {
  if (fs::exists(dir / "summary.txt") && fs::exists(dir / "loss.csv")) {
    out.push_back(dir);
    return;
  }
  if (!fs::is_directory(dir)) return;
  std::vector<fs::path> children;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) children.push_back(e.path());
  std::sort(children.begin(), children.end());
  for (const auto& c : children) collect_runs(c, out);
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<fs::path> runs;
  for (const auto& in : inputs) collect_runs(in, runs);
  if (runs.empty()) throw StateError("no completed runs found under the given directories");
  const auto rows = build_report(runs, out);
  std::printf("%zu runs -> %s\n", runs.size(), out.c_str());
  for (const auto& r : rows) {
    std::printf("%-18s %-7s %s / %s\n", r.method.c_str(), r.task.c_str(), r.selected.c_str(),
                r.best.c_str());
  }
  return kExitOk;
}

int cmd_fastica(const CommonOptions& o) {
  RunConfig cfg = load(o);
  const Task task = resolve_task(cfg.task);
  const FastIcaRun run = run_fastica(task, o.seed.value_or(0), o.out);
  std::printf("rho_max %s, converged %s, %.3f s\n",
              run.correlation ? format_double(run.correlation->rho_max).c_str() : "n/a",
              run.separation.ica.all_converged() ? "yes" : "no", run.seconds);
  return kExitOk;
}

void add_common(CLI::App* sub, CommonOptions& o, bool training) {
  sub->add_option("--config", o.config, "key=value run configuration file")->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "output directory")->required();
  sub->add_option("--set", o.overrides, "override a config key (key=value), repeatable");
  sub->add_option("--seed", o.seed, "seed");
  if (training) {
    auto* it = sub->add_option("--iterations", o.iterations, "training iterations");
    sub->add_flag("--paper-scale", o.paper_scale, "train for 500000 iterations")->excludes(it);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial non-linear ICA"};
  app.require_subcommand(1);

  CommonOptions gen, train, search, ica;
  auto* g = app.add_subcommand("generate", "write sources, mixtures and the mixing spec");
  add_common(g, gen, false);
  auto* t = app.add_subcommand("train", "train one model");
  add_common(t, train, true);
  auto* s = app.add_subcommand("search", "random hyper-parameter search with model selection");
  add_common(s, search, true);
  s->add_option("--jobs", search.jobs, "worker threads");
  auto* f = app.add_subcommand("fastica", "run the FastICA baseline");
  add_common(f, ica, false);
  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* r = app.add_subcommand("report", "convergence CSVs and results table from run directories");
  r->add_option("runs", report_inputs, "run or search directories")->required();
  r->add_option("--out", report_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*t) return cmd_train(train);
    if (*s) return cmd_search(search);
    if (*f) return cmd_fastica(ica);
    if (*r) return cmd_report(report_inputs, report_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitInvalid;
  } catch (const IngestionError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  }
  return kExitInvalid;
}
