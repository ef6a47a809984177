#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mtil/bc/bc.hpp"
#include "mtil/data/policy.hpp"
#include "mtil/env/lock.hpp"
#include "mtil/oa/oa.hpp"

namespace mtil::eval {

struct ReturnEstimate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean (sample std / sqrt(m))
};

/// Monte-Carlo return over `episodes` independent H-step episodes.
/// Throws InvalidInput when episodes == 0.
ReturnEstimate rollout_return(const env::LockParams& params, const data::Policy& policy,
                              std::size_t episodes, Rng& rng);

enum class Setting { BC, OA, RL };

std::string setting_name(Setting s);
Setting parse_setting(const std::string& name);

struct ExperimentConfig {
  Setting setting = Setting::BC;
  env::LockParams env = env::LockParams::standard();
  std::vector<std::size_t> t_grid{1, 2, 4, 8, 16};
  // Expert trajectories per training task (observation-alone collects 2n).
  std::size_t n_train = 50;
  // Expert trajectories for the test task (observation-alone collects 2n).
  std::vector<std::size_t> n_test_grid{16, 32, 64, 128, 256, 512, 1024};
  std::size_t seeds = 5;
  std::size_t episodes = 1000;
  bool greedy = false;
  // Level-indexed behavioral-cloning policies (one representation per step).
  bool per_level = true;
  bool all_pairs = true;
  bool baseline = true;
  bc::BCTrainConfig bc;
  oa::OATrainConfig oa;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;

  void validate() const;
};

struct ExperimentResult {
  Setting setting = Setting::BC;
  std::size_t t = 0;
  std::size_t n_test = 0;
  std::size_t seed = 0;
  bool baseline = false;
  double return_mean = 0.0;
  double return_se = 0.0;
  std::string status = "ok";
};

/// Columns: setting,T,n_test,seed,variant,return_mean,return_se,status
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const ExperimentResult& row);

/// For every seed: sample max(T) training tasks and one fresh test task,
/// collect expert data, train a representation on the first T tasks, fit a
/// head on the first n_test test trajectories, and evaluate. Baseline rows
/// train from scratch on the same test data. Rows are ordered
/// (seed, T, n_test, variant) and streamed to `csv` seed by seed. A failed
/// cell yields a row whose status starts with "error:".
std::vector<ExperimentResult> run_experiment(const ExperimentConfig& cfg, std::ostream* csv,
                                             std::ostream* log = nullptr);

/// Mean and standard error over seeds of the rows matching (variant, T, n_test).
ReturnEstimate aggregate(const std::vector<ExperimentResult>& rows, bool baseline, std::size_t t,
                         std::size_t n_test);

}  // namespace mtil::eval
