#pragma once

// NoisyCombinationLock: a horizon-H chain whose state is
// [noise block, one-hot step index, real block]. At step i the lock stays
// open only if combo[i] * action * real[i] > 0; once the index block is
// all-zero it stays zero. Reward is 1 whenever the index block entering the
// step is nonzero, so the combo-aware expert collects exactly H.

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mtil/numkit/linalg.hpp"
#include "mtil/numkit/rng.hpp"

namespace mtil::env {

inline constexpr std::size_t kNumActions = 2;

// Actions are {-1, +1}; learners index them as {0, 1}.
constexpr std::size_t action_to_index(int action) { return action > 0 ? 1 : 0; }
constexpr int index_to_action(std::size_t index) { return index == 1 ? 1 : -1; }

struct LockParams {
  std::size_t horizon = 20;
  std::size_t noise_dim = 10;
  std::size_t index_dim = 20;
  std::size_t real_dim = 20;
  double w = std::sqrt(0.05);  // standard deviation of the noise and real blocks
  std::vector<int> combo;      // entries in {-1, +1}, one per step

  std::size_t obs_dim() const noexcept { return noise_dim + index_dim + real_dim; }

  /// Throws InvalidInput unless index_dim >= H, real_dim >= H, w >= 0 and
  /// combo is a length-H vector of +-1 (an empty combo is accepted when
  /// `require_combo` is false, for templates).
  void validate(bool require_combo = true) const;

  /// Default lock: H = 20, dims 10/20/20, obs_dim 50.
  static LockParams standard();
  /// Second lock family: H = 10, dims 30/10/10, obs_dim 50.
  static LockParams short_horizon();

  friend bool operator==(const LockParams&, const LockParams&) = default;
};

struct LockState {
  Vector noise;
  Vector index;  // one-hot e_i or all zero
  Vector real;
  std::size_t t = 1;  // 1-based step; H + 1 marks the terminal state

  /// 0-based position of the hot entry, or nullopt when the index block is zero.
  std::optional<std::size_t> active_index() const;
  void validate(const LockParams& params) const;

  friend bool operator==(const LockState&, const LockState&) = default;
};

struct StepResult {
  LockState next;
  int reward = 0;
};

class TaskSampler {
 public:
  TaskSampler(LockParams prototype, Rng rng);
  /// Fresh combo drawn uniformly from {-1,+1}^H; all other fields copied.
  LockParams sample();

 private:
  LockParams prototype_;
  Rng rng_;
};

LockParams sample_task(TaskSampler& sampler);

LockState reset(const LockParams& params, Rng& rng);

/// Throws EpisodeOver when state.t > H.
StepResult step(const LockParams& params, const LockState& state, int action, Rng& rng);

/// combo[i] * sign(real[i]) at index e_i with sign(0) := +1; +1 once the
/// index block is zero.
int expert_action(const LockParams& params, const LockState& state);

Vector encode(const LockState& state);
LockState decode(const LockParams& params, std::span<const double> x, std::size_t t);

/// Resettable simulator used by the interaction-based dataset protocol.
class LockSimulator {
 public:
  explicit LockSimulator(LockParams params);

  const LockParams& params() const noexcept { return params_; }
  const LockState& state() const noexcept { return state_; }

  void reset(Rng& rng);
  /// Validates and installs `state`; the next step() transitions from it.
  void set_state(const LockState& state);
  StepResult step(int action, Rng& rng);

 private:
  LockParams params_;
  LockState state_;
};

/// One task per line: "H noise_dim index_dim real_dim w c_1 ... c_H" with
/// c_i written as +1 / -1. Blank lines and lines starting with '#' are skipped.
void write_tasks(std::ostream& out, std::span<const LockParams> tasks);
std::vector<LockParams> read_tasks(std::istream& in);

}  // namespace mtil::env
