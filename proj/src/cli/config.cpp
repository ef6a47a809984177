#include "mtil/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mtil::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string key_list() {
  std::string out;
  for (const auto& k : Config::known_keys()) {
    if (!out.empty()) out += ", ";
    out += k;
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& text) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc{} || r.ptr != end) throw UsageError(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

}  // namespace

const std::vector<std::string>& Config::known_keys() {
  static const std::vector<std::string> keys = {
      "env.horizon", "env.noise_dim", "env.index_dim", "env.real_dim", "env.w", "setting",
      "train.T", "train.n", "train.hidden", "train.lr", "train.max_epochs", "train.tolerance",
      "train.patience", "train.minibatch", "train.per_level", "train.all_pairs", "oa.lr_policy", "oa.lr_disc",
      "oa.disc_steps", "oa.max_outer", "oa.tolerance", "oa.window", "oa.disc_hidden",
      "oa.disc_radius", "oa.share_levels", "oa.share_disc", "test.n_grid", "eval.episodes",
      "eval.greedy", "eval.baseline", "seeds.count", "rl.hidden", "rl.lr", "rl.steps",
      "rl.batch_episodes", "rl.baseline_decay", "rl.curve_points", "out.path",
  };
  return keys;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw UsageError("override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end())
    throw UsageError("unknown config key '" + key + "'; valid keys: " + key_list());
  values_[key] = value;
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Config::get_size(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  return to_size(key, *v);
}

std::optional<double> Config::get_double(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used == v->size()) return d;
  } catch (const std::exception&) {
  }
  throw UsageError(key + ": expected a number, got '" + *v + "'");
}

std::optional<bool> Config::get_bool(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw UsageError(key + ": expected true or false, got '" + *v + "'");
}

std::optional<std::vector<std::size_t>> Config::get_sizes(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  std::vector<std::size_t> out;
  std::istringstream in(*v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_size(key, trim(item)));
  if (out.empty()) throw UsageError(key + ": empty list");
  return out;
}

env::LockParams lock_template(const Config& cfg) {
  env::LockParams p = env::LockParams::standard();
  if (auto h = cfg.get_size("env.horizon")) {
    p.horizon = *h;
    // The index and real blocks follow the horizon unless set explicitly.
    p.index_dim = std::max(p.index_dim, *h);
    p.real_dim = std::max(p.real_dim, *h);
  }
  if (auto v = cfg.get_size("env.noise_dim")) p.noise_dim = *v;
  if (auto v = cfg.get_size("env.index_dim")) p.index_dim = *v;
  if (auto v = cfg.get_size("env.real_dim")) p.real_dim = *v;
  if (auto v = cfg.get_double("env.w")) p.w = *v;
  p.combo.clear();
  try {
    p.validate(false);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return p;
}

void apply(const Config& cfg, bc::BCTrainConfig& out) {
  if (auto v = cfg.get_size("train.hidden")) out.hidden = *v;
  if (auto v = cfg.get_double("train.lr")) out.lr = *v;
  if (auto v = cfg.get_size("train.max_epochs")) out.max_epochs = *v;
  if (auto v = cfg.get_double("train.tolerance")) out.tolerance = *v;
  if (auto v = cfg.get_size("train.patience")) out.patience = *v;
  if (auto v = cfg.get_size("train.minibatch")) out.minibatch = *v;
}

void apply(const Config& cfg, oa::OATrainConfig& out) {
  if (auto v = cfg.get_size("train.hidden")) out.hidden = *v;
  if (auto v = cfg.get_double("oa.lr_policy")) out.lr_policy = *v;
  if (auto v = cfg.get_double("oa.lr_disc")) out.lr_disc = *v;
  if (auto v = cfg.get_size("oa.disc_steps")) out.disc_steps = *v;
  if (auto v = cfg.get_size("oa.max_outer")) out.max_outer_iters = *v;
  if (auto v = cfg.get_double("oa.tolerance")) out.tolerance = *v;
  if (auto v = cfg.get_size("oa.window")) out.window = *v;
  if (auto v = cfg.get_size("oa.disc_hidden")) out.disc_hidden = *v;
  if (auto v = cfg.get_double("oa.disc_radius")) out.disc_radius = *v;
  if (auto v = cfg.get_bool("oa.share_levels")) out.share_levels = *v;
  if (auto v = cfg.get_bool("oa.share_disc")) out.share_disc = *v;
}

void apply(const Config& cfg, eval::ExperimentConfig& out) {
  out.env = lock_template(cfg);
  if (auto v = cfg.get("setting")) {
    try {
      out.setting = eval::parse_setting(*v);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  if (auto v = cfg.get_sizes("train.T")) out.t_grid = *v;
  if (auto v = cfg.get_size("train.n")) out.n_train = *v;
  if (auto v = cfg.get_bool("train.per_level")) out.per_level = *v;
  if (auto v = cfg.get_bool("train.all_pairs")) out.all_pairs = *v;
  if (auto v = cfg.get_sizes("test.n_grid")) out.n_test_grid = *v;
  if (auto v = cfg.get_size("eval.episodes")) out.episodes = *v;
  if (auto v = cfg.get_bool("eval.greedy")) out.greedy = *v;
  if (auto v = cfg.get_bool("eval.baseline")) out.baseline = *v;
  if (auto v = cfg.get_size("seeds.count")) out.seeds = *v;
  apply(cfg, out.bc);
  apply(cfg, out.oa);
}

void apply(const Config& cfg, rl::RLExperimentConfig& out) {
  out.env = lock_template(cfg);
  if (auto v = cfg.get_sizes("train.T")) out.t_grid = *v;
  if (auto v = cfg.get_size("train.n")) out.n_train = *v;
  if (auto v = cfg.get_size("seeds.count")) out.seeds = *v;
  apply(cfg, out.bc);
  if (auto v = cfg.get_size("rl.hidden")) out.bc.hidden = *v;
  if (auto v = cfg.get_double("rl.lr")) out.pg.lr = *v;
  if (auto v = cfg.get_size("rl.steps")) out.pg.total_steps = *v;
  if (auto v = cfg.get_size("rl.batch_episodes")) out.pg.batch_episodes = *v;
  if (auto v = cfg.get_double("rl.baseline_decay")) out.pg.baseline_decay = *v;
  if (auto v = cfg.get_size("rl.curve_points")) out.pg.curve_points = *v;
  out.pg.hidden = out.bc.hidden;
}

}  // namespace mtil::cli
