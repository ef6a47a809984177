#pragma once

// Observation-alone representation learning. For each level h the shared
// representation and per-task heads minimize, and per-task discriminators
// maximize, the mean over tasks of
//   (1/n) sum_j [K pi(a_j|s_j) g(s~_j) - g(s-bar_j)].
// The saddle point is approached by alternating Adam: `disc_steps` ascent
// steps for every discriminator, then one descent step for the policy side.

#include <cstddef>
#include <span>
#include <vector>

#include "mtil/data/data.hpp"
#include "mtil/model/model.hpp"
#include "mtil/numkit/rng.hpp"

namespace mtil::oa {

struct OATrainConfig {
  std::size_t hidden = 5;
  double lr_policy = 0.01;
  double lr_disc = 0.01;
  // Ascent steps per descent step. 0 freezes the discriminator (debugging only).
  std::size_t disc_steps = 5;
  std::size_t max_outer_iters = 2000;
  // Stop once the payoff moved by less than this over `window` iterations.
  double tolerance = 1e-4;
  std::size_t window = 50;
  // Hidden width of the discriminator; 0 is tanh of an affine map.
  std::size_t disc_hidden = 0;
  // Frobenius-ball radius for the discriminator weights after every ascent
  // step; 0 leaves them unbounded.
  double disc_radius = 2.0;
  // Train one representation for all levels instead of one per level.
  bool share_levels = false;
  // One discriminator per level, fit on the pooled tuples of every task,
  // instead of one per task.
  bool share_disc = false;

  void validate() const;
};

struct MinMaxResult {
  model::ReprParams repr;
  model::HeadParams head;
  model::DiscParams disc;
  double payoff = 0.0;
  std::vector<double> payoff_history;
};

/// Alternating descent-ascent on one task's batch. The representation is
/// updated only when `train_repr` is set. Throws TrainingFailure when the
/// payoff becomes non-finite.
MinMaxResult solve_minmax(const model::ReprParams& repr, model::HeadParams head,
                          model::DiscParams disc, const model::OABatch& batch,
                          const OATrainConfig& cfg, bool train_repr = false);

struct LevelResult {
  model::ReprParams repr;
  std::vector<model::HeadParams> heads;
  std::vector<model::DiscParams> discs;
  std::vector<double> payoff_history;
};

/// One task-averaged min-max problem at a single level. `batches[i]` is
/// task i's data at that level.
LevelResult train_oa_level(std::span<const model::OABatch> batches, const OATrainConfig& cfg,
                           Rng& rng);

/// Independent per-level training; level h (1-based) uses rng.fork("level", h).
/// With cfg.share_levels, a single representation is trained on all levels'
/// tuples and repeated H times. TrainingFailure carries the level index.
std::vector<LevelResult> train_oa_reprs(const data::OADataset& dataset, const OATrainConfig& cfg,
                                        const Rng& rng);

/// Per-level head fitting on one task with frozen representations and a
/// fresh discriminator per level.
std::vector<model::HeadParams> adapt_oa_heads(std::span<const model::ReprParams> reprs,
                                              const data::OATaskData& test_data,
                                              const OATrainConfig& cfg, const Rng& rng);

}  // namespace mtil::oa
