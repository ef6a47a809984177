#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mtil/data/policy.hpp"
#include "mtil/env/lock.hpp"
#include "mtil/model/model.hpp"
#include "mtil/numkit/rng.hpp"

namespace mtil::data {

/// One rollout: H + 1 encoded states (the state after the last action is
/// kept), H actions in {-1, +1}, H rewards.
struct Trajectory {
  std::vector<Vector> states;
  std::vector<int> actions;
  std::vector<int> rewards;

  int total_reward() const;
};

/// n independent H-step rollouts. Throws InvalidInput when n == 0.
std::vector<Trajectory> collect_trajectories(const env::LockParams& params, const Policy& policy,
                                             std::size_t n, Rng& rng);

/// (state, action) pairs for one task. `levels[j]` is the 1-based step the
/// pair was taken at and `source[j]` the trajectory it came from.
struct BCTaskData {
  model::BCBatch batch;
  std::vector<std::size_t> levels;
  std::vector<std::size_t> source;

  std::size_t size() const noexcept { return batch.size(); }
};

using BCDataset = std::vector<BCTaskData>;

/// Default: one pair per trajectory at a uniformly drawn step. With
/// `all_pairs`, every step of every trajectory (n * H pairs).
BCTaskData build_bc_dataset(std::span<const Trajectory> trajectories, Rng& rng,
                            bool all_pairs = false);

/// Pairs taken at one 1-based level.
model::BCBatch level_slice(const BCTaskData& data, std::size_t level);

/// (s, a, s~, s-bar) tuples for one task, one batch per level h = 1..H.
struct OATaskData {
  std::vector<model::OABatch> levels;
  // provenance: trajectory index of s (second half) and of s-bar (first half)
  std::vector<std::vector<std::size_t>> state_source;
  std::vector<std::vector<std::size_t>> expert_next_source;

  std::size_t horizon() const noexcept { return levels.size(); }
};

using OADataset = std::vector<OATaskData>;

/// From 2n expert trajectories: s-bar at level h comes from trajectory i < n
/// at step h + 1; s comes from trajectory n + i at step h; a is uniform and
/// s~ is produced by resetting a simulator to s and playing a. Throws
/// InvalidInput on an odd or empty trajectory count.
OATaskData build_oa_dataset(const env::LockParams& params, std::span<const Trajectory> trajectories,
                            Rng& rng);

}  // namespace mtil::data
