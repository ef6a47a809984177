#pragma once

// Multi-task behavioral cloning: a shared representation with one linear
// softmax head per task, trained jointly by full-batch Adam on the mean
// per-task cross-entropy; then head-only fitting on a new task with the
// representation frozen, and the single-task from-scratch baseline.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mtil/data/data.hpp"
#include "mtil/model/model.hpp"
#include "mtil/numkit/rng.hpp"

namespace mtil::bc {

struct BCTrainConfig {
  std::size_t hidden = 5;
  double lr = 0.001;
  std::size_t max_epochs = 5000;
  // Stop once the loss improved by less than this fraction over `patience` epochs.
  double tolerance = 1e-5;
  std::size_t patience = 50;
  // 0 trains full-batch; otherwise this many samples per task per step.
  std::size_t minibatch = 0;
  // Project each head onto ||W||_F <= radius after every step.
  std::optional<double> head_radius;

  void validate() const;
};

struct BCTrainResult {
  model::ReprParams repr;
  std::vector<model::HeadParams> heads;
  // Loss at the parameters entering each epoch; entry 0 is the initial loss.
  std::vector<double> loss_history;
};

struct HeadFit {
  model::HeadParams head;
  std::vector<double> loss_history;
};

/// Joint minimization over the representation and T heads. Throws
/// TrainingFailure when the loss becomes non-finite, InvalidInput when no
/// task or an empty task is given.
BCTrainResult train_bc_repr(std::span<const model::BCBatch> datasets, const BCTrainConfig& cfg,
                            Rng& rng);

/// Fits a head on `data` with `repr` frozen.
HeadFit adapt_head(const model::ReprParams& repr, const model::BCBatch& data,
                   const BCTrainConfig& cfg, Rng& rng);

/// Trains representation and head on the test task alone. Equivalent to
/// train_bc_repr with T = 1 under the same rng.
BCTrainResult train_scratch(const model::BCBatch& data, const BCTrainConfig& cfg, Rng& rng);

// Level-indexed variants: one representation (and heads) per step 1..H,
// level h trained on the pairs recorded at step h. Level h draws from
// rng.fork("level", h).

std::vector<BCTrainResult> train_bc_levels(const data::BCDataset& datasets, std::size_t horizon,
                                           const BCTrainConfig& cfg, const Rng& rng);
std::vector<model::HeadParams> adapt_heads_levels(std::span<const model::ReprParams> reprs,
                                                  const data::BCTaskData& data,
                                                  const BCTrainConfig& cfg, const Rng& rng);
std::vector<BCTrainResult> train_scratch_levels(const data::BCTaskData& data, std::size_t horizon,
                                                const BCTrainConfig& cfg, const Rng& rng);

}  // namespace mtil::bc
