#pragma once

// Experiment orchestration: run configuration files, task construction,
// single training runs, random hyper-parameter search with reliability-based
// model selection, and report tables.

#include "advica/evaluation.hpp"
#include "advica/fastica.hpp"
#include "advica/signals.hpp"
#include "advica/training.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace advica {

inline constexpr long kDeskIterations = 50000;
inline constexpr long kPaperIterations = 500000;

// Config files -------------------------------------------------------------

/// Flat `key = value` lines; `#` starts a comment; blank lines ignored.
struct ConfigFile {
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;  // key -> 1-based line number
};

ConfigFile parse_config_text(const std::string& text);
ConfigFile read_config_file(const std::filesystem::path& path);

struct TaskSpec {
  std::string sources = "synthetic";  // synthetic | audio
  MixKind mix = MixKind::linear;
  Index samples = 0;                  // 0: 4000 for synthetic, full length for audio
  double t_max = 0.4;
  std::uint64_t seed = 0;             // source noise and mixing matrices
  Index n_obs = 0;                    // linear only; 0 means one per source
  std::vector<PostFunc> post_funcs;   // pnl; empty picks the task default
  std::vector<std::string> audio_files;  // `path` or `path:channel`
  Index noise_sources = 1;            // extra uniform-noise sources for audio
  std::filesystem::path data_dir;     // load a generated task instead of building one
  Index heldout = 500;
};

struct SearchSpace {
  std::vector<Index> hidden{32, 64, 128};
  double lr_min = 1e-5;
  double lr_max = 1e-3;
  double init_min = 0.3;
  double init_max = 2.0;
  std::vector<double> lambda{0.1, 1.0, 10.0};
  std::vector<Objective> objectives{Objective::gan};
  std::vector<Variant> variants{Variant::anica};
  int n_settings = 4;
  int n_seeds = 5;
  std::uint64_t seed = 0;
  void validate() const;
};

struct RunConfig {
  TaskSpec task;
  TrainConfig train;
  SearchSpace search;
  int jobs = 1;
  std::set<std::string> explicit_keys;
};

/// Builds a RunConfig from parsed keys. Unknown keys and malformed values
/// raise ConfigError naming the key and the accepted values.
RunConfig run_config_from(const ConfigFile& file);
RunConfig load_run_config(const std::filesystem::path& path);
/// Applies one `key=value` override, as if it had been written in the file.
void apply_override(RunConfig& cfg, const std::string& assignment);
/// Every accepted key with its resolved value, in file syntax.
std::string to_config_text(const RunConfig& cfg);
std::vector<std::string> accepted_config_keys();

// Tasks -----------------------------------------------------------------------

struct Task {
  SignalMatrix sources;
  Mixture mixture;
};

Task build_task(const TaskSpec& spec);
/// sources.csv, mixtures.csv (with .meta sidecars) and mixspec.txt.
void write_task(const Task& task, const std::filesystem::path& dir);
Task read_task(const std::filesystem::path& dir);
/// Loads from spec.data_dir when set, otherwise builds.
Task resolve_task(const TaskSpec& spec);

/// Train config with shapes and heads filled in from the task.
TrainConfig trial_config(const RunConfig& cfg, const Task& task);

// Runs ------------------------------------------------------------------------

/// Trains one model. When `out_dir` is non-empty writes config.txt, loss.csv,
/// eval.csv, *.ckpt, rescale.csv, correlation.{csv,txt} and summary.txt.
/// The trailing `heldout` samples are held out.
TrialResult run_trial(const Task& task, const TrainConfig& cfg, Index heldout,
                      const std::filesystem::path& out_dir = {});

void write_summary(const std::filesystem::path& path, const TrialResult& result);

struct Setting {
  int index = 0;
  Index hidden = 64;
  double lr = 3e-4;
  double init_scale = 1.0;
  double lambda = 1.0;
  Objective objective = Objective::gan;
  Variant variant = Variant::anica;
};

std::vector<Setting> sample_settings(const SearchSpace& space);
TrainConfig apply_setting(TrainConfig base, const Setting& s);

struct SettingOutcome {
  Setting setting;
  std::vector<TrialScore> trials;
  SelectionStats stats;
};

/// Setting indices, most reliable first: ascending held-out loss standard
/// deviation over surviving seeds. Never reads rho_max. Unselectable settings
/// are left out.
std::vector<int> rank_by_reliability(const std::vector<SettingOutcome>& outcomes);
/// Setting indices by descending mean rho_max; unselectable settings left out.
std::vector<int> rank_by_correlation(const std::vector<SettingOutcome>& outcomes);

struct SearchReport {
  std::vector<SettingOutcome> settings;
  std::vector<int> ranking_reliability;
  std::vector<int> ranking_correlation;
  std::optional<int> selected;  // head of ranking_reliability
  std::optional<int> best;      // head of ranking_correlation
  std::optional<double> gap;    // mean rho of best minus mean rho of selected
  bool all_diverged = false;
};

/// Runs n_settings x n_seeds trials on `jobs` worker threads, one directory
/// per trial under out_dir, then writes search_report.csv, results_table.csv
/// and search_summary.txt.
SearchReport run_search(const Task& task, const RunConfig& cfg,
                        const std::filesystem::path& out_dir);

// Reports ---------------------------------------------------------------------

/// Table-style score: ".9987(6.5)" for mean .9987 and std 6.5e-4.
std::string format_score(double mean, double std_dev);

struct ResultRow {
  std::string method;
  std::string task;
  std::string selected;
  std::string best;
  std::string std_e4;
};

std::string method_label(Objective o, Variant v);
std::string task_label(MixKind k);
void write_results_table(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

/// Reads completed run directories (containing loss.csv and summary.txt),
/// writes convergence_<name>.csv per run and an aggregate results_table.csv.
/// Throws StateError when none of the directories holds a completed run.
std::vector<ResultRow> build_report(const std::vector<std::filesystem::path>& run_dirs,
                                    const std::filesystem::path& out_dir);

struct FastIcaRun {
  FastIcaSeparation separation;
  std::optional<CorrelationReport> correlation;
  double seconds = 0.0;
};

FastIcaRun run_fastica(const Task& task, std::uint64_t seed,
                       const std::filesystem::path& out_dir = {});

}  // namespace advica
