#pragma once

// Policy optimization on top of a representation: episodic REINFORCE with
// a per-step moving-average return baseline, either updating only the head
// on a frozen representation or training both from scratch.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtil/bc/bc.hpp"
#include "mtil/env/lock.hpp"
#include "mtil/model/model.hpp"
#include "mtil/numkit/rng.hpp"

namespace mtil::rl {

struct PGConfig {
  std::size_t hidden = 40;  // used only when training from scratch
  double lr = 0.01;
  std::size_t batch_episodes = 10;
  std::size_t total_steps = 200000;
  double baseline_decay = 0.9;
  std::size_t curve_points = 20;

  void validate() const;
};

/// One on-policy episode. Episodes stop once the lock's index block is
/// zero: from there on every reward is 0 whatever the policy does.
struct Episode {
  std::vector<Vector> observations;
  std::vector<std::size_t> actions;  // action indices
  std::vector<double> rewards;

  double total() const;
};

Episode run_episode(const env::LockParams& params, const model::ReprParams& repr,
                    const model::HeadParams& head, Rng& rng);

struct PolicyGradient {
  model::ReprParams repr;
  model::HeadParams head;
};

/// (1/B) sum_episodes sum_t (G_t - b_t) grad log pi(a_t | s_t), with G_t the
/// reward-to-go and b_t = baselines[t] (0 past the end of `baselines`).
/// The representation gradient is left zero unless `with_repr`.
PolicyGradient reinforce_gradient(const model::ReprParams& repr, const model::HeadParams& head,
                                  std::span<const Episode> episodes,
                                  std::span<const double> baselines, bool with_repr);

struct CurvePoint {
  std::size_t env_steps = 0;
  double mean_return = 0.0;
};

struct PGResult {
  model::ReprParams repr;
  model::HeadParams head;
  std::vector<CurvePoint> curve;
};

/// Gradient ascent on expected return. With `frozen` the head alone is
/// trained on that representation (left bit-identical); otherwise a fresh
/// representation of cfg.hidden units is trained jointly. Curve points
/// report the mean training-episode return since the previous point.
/// Throws TrainingFailure when the gradient becomes non-finite.
PGResult train_pg_on_repr(const env::LockParams& params, const model::ReprParams* frozen,
                          const PGConfig& cfg, Rng& rng);

struct RLExperimentConfig {
  // Full-batch Adam stalls near loss 0.3 on sixteen tasks; minibatches at
  // the policy-gradient step size reach a near-zero loss.
  static bc::BCTrainConfig default_bc() {
    bc::BCTrainConfig c;
    c.hidden = 40;
    c.lr = 0.01;
    c.minibatch = 32;
    c.max_epochs = 20000;
    c.patience = 0;
    return c;
  }

  env::LockParams env = env::LockParams::standard();
  std::vector<std::size_t> t_grid{1, 2, 4, 8, 16};
  std::size_t n_train = 50;
  std::size_t seeds = 5;
  bc::BCTrainConfig bc = default_bc();
  PGConfig pg;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;

  void validate() const;
};

/// T == 0 marks the from-scratch baseline.
struct CurveRow {
  std::size_t t = 0;
  std::size_t seed = 0;
  std::size_t env_steps = 0;
  double return_mean = 0.0;
};

/// Columns: setting,T,seed,env_steps,return_mean
void write_curve_header(std::ostream& out);
void write_curve_row(std::ostream& out, const CurveRow& row);

/// For each seed: stationary behavioral-cloning representations on the
/// first T training tasks (T in t_grid), then REINFORCE on a fresh test task
/// over each frozen representation and from scratch.
std::vector<CurveRow> rl_experiment(const RLExperimentConfig& cfg, std::ostream* csv,
                                    std::ostream* log = nullptr);

}  // namespace mtil::rl
