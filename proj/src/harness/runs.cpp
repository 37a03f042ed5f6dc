#include "advica/errors.hpp"
#include "advica/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

namespace advica {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("cannot write " + path.string());
  os << text;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void write_rescale(const fs::path& path, const ModelBundle& b) {
  std::string text = "gamma,beta\n";
  for (Index i = 0; i < b.n_sources(); ++i) {
    text += format_double(b.gamma.value(0, i)) + "," + format_double(b.beta.value(0, i)) + "\n";
  }
  write_text(path, text);
}

std::string train_config_text(const TrainConfig& c) {
  RunConfig rc;
  rc.train = c;
  std::string out;
  // Only the train.* and model.* lines describe a trial.
  const std::string all = to_config_text(rc);
  std::size_t pos = 0;
  while (pos < all.size()) {
    const auto end = all.find('\n', pos);
    const std::string line = all.substr(pos, end - pos);
    if (line.rfind("train.", 0) == 0 || line.rfind("model.", 0) == 0) out += line + "\n";
    pos = end + 1;
  }
  out += "model.architecture = " + to_string(c.model.architecture) + "\n";
  out += "model.n_obs = " + std::to_string(c.model.n_obs) + "\n";
  out += "model.n_sources = " + std::to_string(c.model.n_sources) + "\n";
  return out;
}

MixKind kind_of(Architecture a) {
  switch (a) {
    case Architecture::linear: return MixKind::linear;
    case Architecture::pnl: return MixKind::pnl;
    case Architecture::mlp: return MixKind::mlp;
  }
  return MixKind::linear;
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

void write_summary(const fs::path& path, const TrialResult& r) {
  std::string text;
  text += "method=" + method_label(r.config.objective, r.config.variant) + "\n";
  text += "task=" + task_label(kind_of(r.config.model.architecture)) + "\n";
  text += "seed=" + std::to_string(r.seed) + "\n";
  text += "iterations=" + std::to_string(r.config.iterations) + "\n";
  text += "final_rho=" + opt(r.final_rho) + "\n";
  text += "final_rho_heldout=" + opt(r.final_rho_heldout) + "\n";
  text += "heldout_loss=" + format_double(r.heldout_loss) + "\n";
  text += "heldout_R=" + format_double(r.heldout_R) + "\n";
  text += "diverged=" + std::string(r.diverged ? "1" : "0") + "\n";
  text += "divergence_reason=" + r.divergence_reason + "\n";
  write_text(path, text);
}

TrialResult run_trial(const Task& task, const TrainConfig& cfg, Index heldout,
                      const fs::path& out_dir) {
  cfg.validate();
  Rng init_rng(cfg.seed);
  ModelBundle bundle = build_models(cfg.model, init_rng);
  const Dataset data = make_dataset(task.mixture.X.data, task.sources.data, heldout);
  TrialResult result = train_loop(bundle, data, cfg);
  if (out_dir.empty()) return result;

  fs::create_directories(out_dir);
  write_text(out_dir / "config.txt", train_config_text(cfg));
  write_loss_csv(out_dir / "loss.csv", result);
  write_eval_csv(out_dir / "eval.csv", result);
  save_checkpoint(out_dir / "encoder.ckpt", bundle.encoder);
  save_checkpoint(out_dir / "decoder.ckpt", bundle.decoder);
  save_checkpoint(out_dir / "discriminator.ckpt", bundle.discriminator);
  if (bundle.generator) save_checkpoint(out_dir / "generator.ckpt", *bundle.generator);
  write_rescale(out_dir / "rescale.csv", bundle);
  if (result.final_report) write_correlation_report(out_dir / "correlation", *result.final_report);
  write_summary(out_dir / "summary.txt", result);
  return result;
}

std::vector<Setting> sample_settings(const SearchSpace& space) {
  space.validate();
  Rng rng(space.seed);
  auto pick = [&rng](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Setting> out;
  const double log_lo = std::log(space.lr_min), log_hi = std::log(space.lr_max);
  for (int i = 0; i < space.n_settings; ++i) {
    Setting s;
    s.index = i;
    s.hidden = space.hidden[pick(space.hidden.size())];
    s.lr = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
    s.init_scale = space.init_min + (space.init_max - space.init_min) * unit(rng);
    s.lambda = space.lambda[pick(space.lambda.size())];
    s.objective = space.objectives[pick(space.objectives.size())];
    s.variant = space.variants[pick(space.variants.size())];
    out.push_back(s);
  }
  return out;
}

TrainConfig apply_setting(TrainConfig base, const Setting& s) {
  base.model.hidden = s.hidden;
  base.lr = s.lr;
  base.model.init_scale = s.init_scale;
  base.model.disc_init_scale = s.init_scale;
  base.lambda = s.lambda;
  base.objective = s.objective;
  base.variant = s.variant;
  base.model.critic = s.objective == Objective::wgan_gp;
  base.model.with_generator = s.variant == Variant::anica_g;
  return base;
}

std::vector<int> rank_by_reliability(const std::vector<SettingOutcome>& outcomes) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    if (outcomes[i].stats.selectable) idx.push_back(static_cast<int>(i));
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return outcomes[a].stats.std_loss < outcomes[b].stats.std_loss;
  });
  return idx;
}

std::vector<int> rank_by_correlation(const std::vector<SettingOutcome>& outcomes) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    if (outcomes[i].stats.selectable) idx.push_back(static_cast<int>(i));
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return outcomes[a].stats.mean_rho > outcomes[b].stats.mean_rho;
  });
  return idx;
}

SearchReport run_search(const Task& task, const RunConfig& cfg, const fs::path& out_dir) {
  const std::vector<Setting> settings = sample_settings(cfg.search);
  const int n_seeds = cfg.search.n_seeds;

  std::vector<TrainConfig> configs;
  for (const auto& s : settings) {
    RunConfig rc = cfg;
    rc.train = apply_setting(cfg.train, s);
    rc.explicit_keys.erase("model.disc_hidden");
    configs.push_back(trial_config(rc, task));
    configs.back().validate();
  }

  const std::size_t n_jobs = settings.size() * static_cast<std::size_t>(n_seeds);
  std::vector<TrialScore> scores(n_jobs);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= n_jobs) return;
      const std::size_t si = job / static_cast<std::size_t>(n_seeds);
      const int seed_index = static_cast<int>(job % static_cast<std::size_t>(n_seeds));
      try {
        TrainConfig tc = configs[si];
        tc.seed = cfg.train.seed + static_cast<std::uint64_t>(seed_index);
        const fs::path dir = out_dir.empty()
                                 ? fs::path{}
                                 : out_dir / ("setting_" + std::to_string(si)) /
                                       ("seed_" + std::to_string(tc.seed));
        const TrialResult r = run_trial(task, tc, cfg.task.heldout, dir);
        scores[job] = r.score();
        std::lock_guard<std::mutex> lock(log_mutex);
        std::clog << "setting " << si << " seed " << tc.seed << ": rho "
                  << (r.final_rho ? format_double(*r.final_rho) : "n/a") << ", held-out loss "
                  << format_double(r.heldout_loss) << (r.diverged ? " (diverged)" : "") << '\n';
      } catch (...) {
        std::lock_guard<std::mutex> lock(log_mutex);
        if (!failure) failure = std::current_exception();
        next = n_jobs;
      }
    }
  };
  const int threads = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(n_jobs)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  SearchReport report;
  for (std::size_t si = 0; si < settings.size(); ++si) {
    SettingOutcome o;
    o.setting = settings[si];
    o.trials.assign(scores.begin() + static_cast<long>(si) * n_seeds,
                    scores.begin() + static_cast<long>(si + 1) * n_seeds);
    o.stats = selection_stats(o.trials);
    if (o.stats.n_used == 0) {
      std::clog << "setting " << si << ": every seed diverged, excluded\n";
    }
    report.settings.push_back(std::move(o));
  }
  report.ranking_reliability = rank_by_reliability(report.settings);
  report.ranking_correlation = rank_by_correlation(report.settings);
  if (!report.ranking_reliability.empty()) report.selected = report.ranking_reliability.front();
  if (!report.ranking_correlation.empty()) report.best = report.ranking_correlation.front();
  if (report.selected && report.best) {
    report.gap = report.settings[*report.best].stats.mean_rho -
                 report.settings[*report.selected].stats.mean_rho;
  }
  report.all_diverged = std::all_of(report.settings.begin(), report.settings.end(),
                                    [](const SettingOutcome& o) { return o.stats.n_used == 0; });
  if (out_dir.empty()) return report;

  fs::create_directories(out_dir);
  std::string csv =
      "setting,hidden,lr,init_scale,lambda,objective,variant,n_used,n_diverged,mean_loss,std_loss,"
      "mean_rho,std_rho,rank_reliability,rank_correlation\n";
  auto rank_of = [](const std::vector<int>& ranking, int i) -> std::string {
    const auto it = std::find(ranking.begin(), ranking.end(), i);
    return it == ranking.end() ? "" : std::to_string(it - ranking.begin() + 1);
  };
  for (const auto& o : report.settings) {
    const auto& s = o.setting;
    const auto& st = o.stats;
    csv += std::to_string(s.index) + "," + std::to_string(s.hidden) + "," + format_double(s.lr) +
           "," + format_double(s.init_scale) + "," + format_double(s.lambda) + "," +
           to_string(s.objective) + "," + to_string(s.variant) + "," + std::to_string(st.n_used) +
           "," + std::to_string(st.n_diverged) + "," + format_double(st.mean_loss) + "," +
           format_double(st.std_loss) + "," + format_double(st.mean_rho) + "," +
           format_double(st.std_rho) + "," + rank_of(report.ranking_reliability, s.index) + "," +
           rank_of(report.ranking_correlation, s.index) + "\n";
  }
  write_text(out_dir / "search_report.csv", csv);

  std::vector<ResultRow> rows;
  if (report.selected && report.best) {
    const auto& sel = report.settings[*report.selected];
    const auto& best = report.settings[*report.best];
    ResultRow row;
    row.method = method_label(sel.setting.objective, sel.setting.variant);
    row.task = task_label(task.mixture.spec.kind);
    row.selected = format_score(sel.stats.mean_rho, sel.stats.std_rho);
    row.best = format_score(best.stats.mean_rho, best.stats.std_rho);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", sel.stats.std_rho * 1e4);
    row.std_e4 = buf;
    rows.push_back(row);
  }
  write_results_table(out_dir / "results_table.csv", rows);

  std::string summary;
  summary += "settings=" + std::to_string(report.settings.size()) + "\n";
  summary += "seeds=" + std::to_string(n_seeds) + "\n";
  auto list = [](const std::vector<int>& r) {
    std::string s;
    for (int i : r) s += (s.empty() ? "" : ",") + std::to_string(i);
    return s;
  };
  summary += "ranking_reliability=" + list(report.ranking_reliability) + "\n";
  summary += "ranking_correlation=" + list(report.ranking_correlation) + "\n";
  summary += "selected=" + (report.selected ? std::to_string(*report.selected) : "") + "\n";
  summary += "best=" + (report.best ? std::to_string(*report.best) : "") + "\n";
  summary += "selected_mean_rho=" +
             (report.selected ? format_double(report.settings[*report.selected].stats.mean_rho) : "") +
             "\n";
  summary += "best_mean_rho=" +
             (report.best ? format_double(report.settings[*report.best].stats.mean_rho) : "") + "\n";
  summary += "gap=" + opt(report.gap) + "\n";
  summary += "all_diverged=" + std::string(report.all_diverged ? "1" : "0") + "\n";
  write_text(out_dir / "search_summary.txt", summary);
  return report;
}

std::string format_score(double mean, double std_dev) {
  char m[32], s[32];
  std::snprintf(m, sizeof m, "%.4f", mean);
  std::string ms = m;
  if (ms.rfind("0.", 0) == 0) ms.erase(0, 1);
  else if (ms.rfind("-0.", 0) == 0) ms.erase(1, 1);
  std::snprintf(s, sizeof s, "%.1f", std_dev * 1e4);
  std::string ss = s;
  if (ss.size() > 2 && ss.compare(ss.size() - 2, 2, ".0") == 0) ss.resize(ss.size() - 2);
  return ms + "(" + ss + ")";
}

std::string method_label(Objective o, Variant v) {
  std::string s = v == Variant::anica ? "Anica" : "Anica-g";
  if (o == Objective::wgan_gp) s += " WGAN-GP";
  return s;
}

std::string task_label(MixKind k) {
  switch (k) {
    case MixKind::linear: return "Linear";
    case MixKind::pnl: return "PNL";
    case MixKind::mlp: return "MLP";
  }
  return "";
}

void write_results_table(const fs::path& path, const std::vector<ResultRow>& rows) {
  std::string csv = "method,task,selected,best,std_e4\n";
  for (const auto& r : rows) {
    csv += r.method + "," + r.task + "," + r.selected + "," + r.best + "," + r.std_e4 + "\n";
  }
  write_text(path, csv);
}

namespace {

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot read " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    for (;;) {
      const auto comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> build_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  struct Group {
    std::string method, task;
    std::vector<double> rho;
  };
  std::vector<Group> groups;
  fs::create_directories(out_dir);
  std::set<std::string> used_names;

  for (const auto& dir : run_dirs) {
    if (!fs::exists(dir / "loss.csv") || !fs::exists(dir / "summary.txt")) {
      std::clog << "skipping " << dir.string() << ": no completed run\n";
      continue;
    }
    const auto summary = read_key_values(dir / "summary.txt");
    const auto rows = read_csv_rows(dir / "loss.csv");
    if (rows.empty()) continue;
    const std::string method = summary.count("method") ? summary.at("method") : "";
    const bool wgan = method.find("WGAN") != std::string::npos;

    std::string name = dir.filename().string();
    if (name.empty() || name == ".") name = "run";
    if (dir.has_parent_path()) {
      const std::string parent = dir.parent_path().filename().string();
      if (!parent.empty() && parent != ".") name = parent + "_" + name;
    }
    while (used_names.count(name)) name += "_";
    used_names.insert(name);

    std::string csv = "iteration,objective,disc_cost,reconstruction_cost,rho_max\n";
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 7) continue;
      csv += r[0] + "," + (wgan ? "wgan_gp" : "gan") + "," + r[1] + "," + r[3] + "," + r[6] + "\n";
    }
    write_text(out_dir / ("convergence_" + name + ".csv"), csv);

    const std::string task = summary.count("task") ? summary.at("task") : "";
    const std::string rho = summary.count("final_rho") ? summary.at("final_rho") : "";
    const bool diverged = summary.count("diverged") && summary.at("diverged") == "1";
    if (rho.empty() || diverged) continue;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const Group& g) { return g.method == method && g.task == task; });
    if (it == groups.end()) {
      groups.push_back({method, task, {}});
      it = groups.end() - 1;
    }
    it->rho.push_back(std::stod(rho));
  }
  if (used_names.empty()) throw StateError("no completed runs among the given directories");

  std::vector<ResultRow> rows;
  for (const auto& g : groups) {
    const double mean = std::accumulate(g.rho.begin(), g.rho.end(), 0.0) / static_cast<double>(g.rho.size());
    const double sd = sample_std(g.rho);
    const double best = *std::max_element(g.rho.begin(), g.rho.end());
    ResultRow row;
    row.method = g.method;
    row.task = g.task;
    row.selected = format_score(mean, sd);
    const std::string best_text = format_score(best, 0.0);
    row.best = best_text.substr(0, best_text.find('('));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", sd * 1e4);
    row.std_e4 = buf;
    rows.push_back(row);
  }
  write_results_table(out_dir / "results_table.csv", rows);
  return rows;
}

FastIcaRun run_fastica(const Task& task, std::uint64_t seed, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  FastIcaRun run;
  run.separation = fastica_separate(task.mixture.X.data, task.sources.n_signals(), seed);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (task.sources.n_samples() == run.separation.sources.cols()) {
    run.correlation = max_correlation(task.sources.data, run.separation.sources);
  }
  if (out_dir.empty()) return run;

  fs::create_directories(out_dir);
  write_matrix_csv(out_dir / "unmixing.csv", run.separation.unmixing);
  SignalMatrix est;
  est.data = run.separation.sources;
  est.sample_rate = task.sources.sample_rate;
  est.seed = seed;
  est.generator = "fastica";
  write_signals_csv(out_dir / "estimated_sources.csv", est);
  if (run.correlation) write_correlation_report(out_dir / "correlation", *run.correlation);
  std::string text = "seed=" + std::to_string(seed) + "\n";
  text += "rho_max=" + (run.correlation ? format_double(run.correlation->rho_max) : "") + "\n";
  text += "converged=" + std::string(run.separation.ica.all_converged() ? "1" : "0") + "\n";
  std::string iters;
  for (int it : run.separation.ica.iterations) iters += (iters.empty() ? "" : ",") + std::to_string(it);
  text += "iterations=" + iters + "\n";
  write_text(out_dir / "summary.txt", text);
  return run;
}

}  // namespace advica
