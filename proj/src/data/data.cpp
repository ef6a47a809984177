#include "mtil/data/data.hpp"

#include <numeric>

#include "mtil/error.hpp"

namespace mtil::data {

int Trajectory::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0); }

std::vector<Trajectory> collect_trajectories(const env::LockParams& params, const Policy& policy,
                                             std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidInput("collect_trajectories: n must be positive");
  params.validate();
  std::vector<Trajectory> out(n);
  for (auto& traj : out) {
    env::LockState state = env::reset(params, rng);
    traj.states.reserve(params.horizon + 1);
    traj.actions.reserve(params.horizon);
    traj.rewards.reserve(params.horizon);
    for (std::size_t h = 0; h < params.horizon; ++h) {
      Vector obs = env::encode(state);
      const int action = policy(state, obs, h, rng);
      auto result = env::step(params, state, action, rng);
      traj.states.push_back(std::move(obs));
      traj.actions.push_back(action);
      traj.rewards.push_back(result.reward);
      state = std::move(result.next);
    }
    traj.states.push_back(env::encode(state));
  }
  return out;
}

BCTaskData build_bc_dataset(std::span<const Trajectory> trajectories, Rng& rng, bool all_pairs) {
  if (trajectories.empty()) throw InvalidInput("build_bc_dataset: no trajectories");
  BCTaskData data;
  const auto add = [&](std::size_t i, std::size_t h) {
    const Trajectory& traj = trajectories[i];
    data.batch.states.append_row(traj.states[h]);
    data.batch.actions.push_back(env::action_to_index(traj.actions[h]));
    data.levels.push_back(h + 1);
    data.source.push_back(i);
  };
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const std::size_t horizon = trajectories[i].actions.size();
    if (horizon == 0 || trajectories[i].states.size() < horizon)
      throw InvalidInput("build_bc_dataset: trajectory without actions");
    if (all_pairs) {
      for (std::size_t h = 0; h < horizon; ++h) add(i, h);
    } else {
      add(i, rng.uniform_index(horizon));
    }
  }
  return data;
}

model::BCBatch level_slice(const BCTaskData& data, std::size_t level) {
  model::BCBatch out;
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (data.levels[j] != level) continue;
    out.states.append_row(data.batch.states.row(j));
    out.actions.push_back(data.batch.actions[j]);
  }
  return out;
}

OATaskData build_oa_dataset(const env::LockParams& params, std::span<const Trajectory> trajectories,
                            Rng& rng) {
  if (trajectories.empty() || trajectories.size() % 2 != 0)
    throw InvalidInput("build_oa_dataset: need a positive, even number of trajectories");
  params.validate();
  const std::size_t n = trajectories.size() / 2;
  const std::size_t horizon = params.horizon;
  for (const auto& traj : trajectories)
    if (traj.states.size() != horizon + 1)
      throw InvalidInput("build_oa_dataset: trajectory length does not match the horizon");

  env::LockSimulator sim(params);
  OATaskData data;
  data.levels.resize(horizon);
  data.state_source.resize(horizon);
  data.expert_next_source.resize(horizon);
  for (std::size_t h = 1; h <= horizon; ++h) {
    model::OABatch& batch = data.levels[h - 1];
    for (std::size_t i = 0; i < n; ++i) {
      const Vector& s = trajectories[n + i].states[h - 1];
      const Vector& s_bar = trajectories[i].states[h];
      const int action = rng.sign();
      sim.set_state(env::decode(params, s, h));
      const auto result = sim.step(action, rng);
      batch.states.append_row(s);
      batch.actions.push_back(env::action_to_index(action));
      batch.next_states.append_row(env::encode(result.next));
      batch.expert_next.append_row(s_bar);
      data.state_source[h - 1].push_back(n + i);
      data.expert_next_source[h - 1].push_back(i);
    }
  }
  return data;
}

}  // namespace mtil::data
