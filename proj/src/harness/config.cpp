#include "advica/errors.hpp"
#include "advica/harness.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace advica {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& accepted) {
  throw ConfigError("invalid value '" + value + "' for " + key + " (accepted: " + accepted + ")");
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    bad_value(key, v, "a finite real number");
  }
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

// Rethrows enum parse failures with the key attached.
template <class F>
auto keyed(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt(v[i]);
  }
  return out;
}

struct KeyDef {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string num(double v) { return format_double(v); }
std::string num(long v) { return std::to_string(v); }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    std::vector<KeyDef> t;
    auto real = [&t](const std::string& name, auto member) {
      t.push_back({name,
                   [name, member](RunConfig& c, const std::string& v) { member(c) = to_double(name, v); },
                   [member](const RunConfig& c) { return num(member(const_cast<RunConfig&>(c))); }});
    };
    auto integer = [&t](const std::string& name, auto member) {
      t.push_back({name,
                   [name, member](RunConfig& c, const std::string& v) {
                     member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(to_long(name, v));
                   },
                   [member](const RunConfig& c) {
                     return num(static_cast<long>(member(const_cast<RunConfig&>(c))));
                   }});
    };
    auto seed = [&t](const std::string& name, auto member) {
      t.push_back({name,
                   [name, member](RunConfig& c, const std::string& v) { member(c) = to_u64(name, v); },
                   [member](const RunConfig& c) {
                     return std::to_string(member(const_cast<RunConfig&>(c)));
                   }});
    };

    t.push_back({"task.sources",
                 [](RunConfig& c, const std::string& v) {
                   if (v != "synthetic" && v != "audio") bad_value("task.sources", v, "synthetic, audio");
                   c.task.sources = v;
                 },
                 [](const RunConfig& c) { return c.task.sources; }});
    t.push_back({"task.mix",
                 [](RunConfig& c, const std::string& v) {
                   c.task.mix = keyed("task.mix", [&] { return mix_kind_from_string(v); });
                 },
                 [](const RunConfig& c) { return to_string(c.task.mix); }});
    integer("task.samples", [](RunConfig& c) -> Index& { return c.task.samples; });
    real("task.t_max", [](RunConfig& c) -> double& { return c.task.t_max; });
    seed("task.seed", [](RunConfig& c) -> std::uint64_t& { return c.task.seed; });
    integer("task.n_obs", [](RunConfig& c) -> Index& { return c.task.n_obs; });
    t.push_back({"task.post_funcs",
                 [](RunConfig& c, const std::string& v) {
                   c.task.post_funcs.clear();
                   for (const auto& f : split_list(v)) {
                     c.task.post_funcs.push_back(
                         keyed("task.post_funcs", [&] { return post_func_from_string(f); }));
                   }
                 },
                 [](const RunConfig& c) {
                   return join(c.task.post_funcs, [](PostFunc f) { return to_string(f); });
                 }});
    t.push_back({"task.audio_files",
                 [](RunConfig& c, const std::string& v) { c.task.audio_files = split_list(v); },
                 [](const RunConfig& c) {
                   return join(c.task.audio_files, [](const std::string& s) { return s; });
                 }});
    integer("task.noise_sources", [](RunConfig& c) -> Index& { return c.task.noise_sources; });
    t.push_back({"task.data_dir",
                 [](RunConfig& c, const std::string& v) { c.task.data_dir = v; },
                 [](const RunConfig& c) { return c.task.data_dir.string(); }});
    integer("task.heldout", [](RunConfig& c) -> Index& { return c.task.heldout; });

    t.push_back({"train.objective",
                 [](RunConfig& c, const std::string& v) {
                   c.train.objective = keyed("train.objective", [&] { return objective_from_string(v); });
                 },
                 [](const RunConfig& c) { return to_string(c.train.objective); }});
    t.push_back({"train.variant",
                 [](RunConfig& c, const std::string& v) {
                   c.train.variant = keyed("train.variant", [&] { return variant_from_string(v); });
                 },
                 [](const RunConfig& c) { return to_string(c.train.variant); }});
    real("train.lambda", [](RunConfig& c) -> double& { return c.train.lambda; });
    real("train.lambda_gp", [](RunConfig& c) -> double& { return c.train.lambda_gp; });
    real("train.adv_weight", [](RunConfig& c) -> double& { return c.train.adv_weight; });
    integer("train.batch_size", [](RunConfig& c) -> Index& { return c.train.batch_size; });
    integer("train.iterations", [](RunConfig& c) -> long& { return c.train.iterations; });
    real("train.lr", [](RunConfig& c) -> double& { return c.train.lr; });
    real("train.disc_lr_scale", [](RunConfig& c) -> double& { return c.train.disc_lr_scale; });
    real("train.rms_decay", [](RunConfig& c) -> double& { return c.train.rms_decay; });
    real("train.rms_eps", [](RunConfig& c) -> double& { return c.train.rms_eps; });
    seed("train.seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; });
    integer("train.log_interval", [](RunConfig& c) -> long& { return c.train.log_interval; });
    integer("train.eval_interval", [](RunConfig& c) -> long& { return c.train.eval_interval; });

    integer("model.hidden", [](RunConfig& c) -> Index& { return c.train.model.hidden; });
    integer("model.disc_hidden", [](RunConfig& c) -> Index& { return c.train.model.disc_hidden; });
    integer("model.disc_layers", [](RunConfig& c) -> int& { return c.train.model.disc_layers; });
    integer("model.head_hidden", [](RunConfig& c) -> Index& { return c.train.model.head_hidden; });
    integer("model.gen_hidden", [](RunConfig& c) -> Index& { return c.train.model.gen_hidden; });
    real("model.init_scale", [](RunConfig& c) -> double& { return c.train.model.init_scale; });
    real("model.disc_init_scale",
         [](RunConfig& c) -> double& { return c.train.model.disc_init_scale; });

    t.push_back({"search.hidden",
                 [](RunConfig& c, const std::string& v) {
                   c.search.hidden.clear();
                   for (const auto& h : split_list(v)) c.search.hidden.push_back(to_long("search.hidden", h));
                 },
                 [](const RunConfig& c) {
                   return join(c.search.hidden, [](Index h) { return std::to_string(h); });
                 }});
    real("search.lr.min", [](RunConfig& c) -> double& { return c.search.lr_min; });
    real("search.lr.max", [](RunConfig& c) -> double& { return c.search.lr_max; });
    real("search.init_scale.min", [](RunConfig& c) -> double& { return c.search.init_min; });
    real("search.init_scale.max", [](RunConfig& c) -> double& { return c.search.init_max; });
    t.push_back({"search.lambda",
                 [](RunConfig& c, const std::string& v) {
                   c.search.lambda.clear();
                   for (const auto& l : split_list(v)) c.search.lambda.push_back(to_double("search.lambda", l));
                 },
                 [](const RunConfig& c) { return join(c.search.lambda, [](double l) { return num(l); }); }});
    t.push_back({"search.objective",
                 [](RunConfig& c, const std::string& v) {
                   c.search.objectives.clear();
                   for (const auto& o : split_list(v)) {
                     c.search.objectives.push_back(
                         keyed("search.objective", [&] { return objective_from_string(o); }));
                   }
                 },
                 [](const RunConfig& c) {
                   return join(c.search.objectives, [](Objective o) { return to_string(o); });
                 }});
    t.push_back({"search.variant",
                 [](RunConfig& c, const std::string& v) {
                   c.search.variants.clear();
                   for (const auto& o : split_list(v)) {
                     c.search.variants.push_back(
                         keyed("search.variant", [&] { return variant_from_string(o); }));
                   }
                 },
                 [](const RunConfig& c) {
                   return join(c.search.variants, [](Variant x) { return to_string(x); });
                 }});
    integer("search.settings", [](RunConfig& c) -> int& { return c.search.n_settings; });
    integer("search.seeds", [](RunConfig& c) -> int& { return c.search.n_seeds; });
    seed("search.seed", [](RunConfig& c) -> std::uint64_t& { return c.search.seed; });
    integer("search.jobs", [](RunConfig& c) -> int& { return c.jobs; });
    return t;
  }();
  return table;
}

const KeyDef* find_key(const std::string& name) {
  for (const auto& k : key_table())
    if (k.name == name) return &k;
  return nullptr;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value, int line) {
  const KeyDef* def = find_key(key);
  if (!def) {
    std::string msg = "unknown config key '" + key + "'";
    if (line > 0) msg += " on line " + std::to_string(line);
    std::string accepted;
    for (const auto& k : accepted_config_keys()) accepted += (accepted.empty() ? "" : ", ") + k;
    throw ConfigError(msg + " (accepted keys: " + accepted + ")");
  }
  def->set(cfg, value);
  cfg.explicit_keys.insert(key);
}

}  // namespace

ConfigFile parse_config_text(const std::string& text) {
  ConfigFile out;
  std::stringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (out.values.count(key)) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    out.values[key] = value;
    out.lines[key] = line_no;
  }
  return out;
}

ConfigFile read_config_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::vector<std::string> accepted_config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.name);
  return out;
}

void SearchSpace::validate() const {
  if (hidden.empty() || lambda.empty() || objectives.empty() || variants.empty()) {
    throw ConfigError("search space lists must be non-empty");
  }
  for (Index h : hidden)
    if (h < 1) throw ConfigError("search.hidden entries must be positive");
  for (double l : lambda)
    if (!(l >= 0.0)) throw ConfigError("search.lambda entries must be non-negative");
  if (!(lr_min > 0.0 && lr_min <= lr_max)) throw ConfigError("search.lr needs 0 < min <= max");
  if (!(init_min > 0.0 && init_min <= init_max)) {
    throw ConfigError("search.init_scale needs 0 < min <= max");
  }
  if (n_settings < 1) throw ConfigError("search.settings must be at least 1");
  if (n_seeds < 1) throw ConfigError("search.seeds must be at least 1");
}

RunConfig run_config_from(const ConfigFile& file) {
  RunConfig cfg;
  for (const auto& [key, value] : file.values) {
    const auto it = file.lines.find(key);
    set_key(cfg, key, value, it == file.lines.end() ? 0 : it->second);
  }
  if (cfg.jobs < 1) throw ConfigError("search.jobs must be at least 1");
  if (cfg.task.heldout < 2) throw ConfigError("task.heldout must be at least 2");
  cfg.search.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from(read_config_file(path));
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), 0);
}

std::string to_config_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : key_table()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace advica
