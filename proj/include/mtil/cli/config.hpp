#pragma once

// Plain key=value run configuration. One entry per line, '#' starts a
// comment, lists are comma separated. Unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtil/env/lock.hpp"
#include "mtil/eval/eval.hpp"
#include "mtil/rltransfer/rl.hpp"

namespace mtil::cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  static const std::vector<std::string>& known_keys();

  /// Throws UsageError when the file cannot be read or holds a bad line.
  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& origin = "<config>");

  /// `assignment` is "key=value".
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::optional<std::size_t> get_size(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<std::vector<std::size_t>> get_sizes(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Lock template (combo left empty) from env.* keys.
env::LockParams lock_template(const Config& cfg);

/// Apply every relevant key on top of the defaults already in `out`.
void apply(const Config& cfg, eval::ExperimentConfig& out);
void apply(const Config& cfg, rl::RLExperimentConfig& out);
void apply(const Config& cfg, bc::BCTrainConfig& out);
void apply(const Config& cfg, oa::OATrainConfig& out);

}  // namespace mtil::cli
