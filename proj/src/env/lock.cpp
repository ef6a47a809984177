#include "mtil/env/lock.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mtil/error.hpp"
#include "mtil/numkit/numkit.hpp"

namespace mtil::env {

void LockParams::validate(bool require_combo) const {
  if (horizon == 0) throw InvalidInput("lock: horizon must be positive");
  if (index_dim < horizon) throw InvalidInput("lock: index_dim must be at least the horizon");
  if (real_dim < horizon) throw InvalidInput("lock: real_dim must be at least the horizon");
  if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("lock: w must be finite and >= 0");
  if (combo.empty() && !require_combo) return;
  if (combo.size() != horizon) throw InvalidInput("lock: combo length must equal the horizon");
  for (int c : combo)
    if (c != 1 && c != -1) throw InvalidInput("lock: combo entries must be +1 or -1");
}

LockParams LockParams::standard() { return LockParams{}; }

LockParams LockParams::short_horizon() {
  LockParams p;
  p.horizon = 10;
  p.noise_dim = 30;
  p.index_dim = 10;
  p.real_dim = 10;
  return p;
}

std::optional<std::size_t> LockState::active_index() const {
  for (std::size_t i = 0; i < index.size(); ++i)
    if (index[i] != 0.0) return i;
  return std::nullopt;
}

void LockState::validate(const LockParams& params) const {
  if (noise.size() != params.noise_dim || index.size() != params.index_dim ||
      real.size() != params.real_dim)
    throw InvalidInput("lock state: block sizes do not match the parameters");
  if (t < 1 || t > params.horizon + 1) throw InvalidInput("lock state: step out of range");
  std::size_t hot = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] == 0.0) continue;
    if (index[i] != 1.0) throw InvalidInput("lock state: index entries must be 0 or 1");
    if (i >= params.horizon) throw InvalidInput("lock state: index beyond the horizon");
    ++hot;
  }
  if (hot > 1) throw InvalidInput("lock state: index block has more than one hot entry");
  const auto finite = [](const Vector& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(noise) || !finite(real)) throw InvalidInput("lock state: non-finite features");
}

TaskSampler::TaskSampler(LockParams prototype, Rng rng)
    : prototype_(std::move(prototype)), rng_(rng) {
  prototype_.combo.clear();
  prototype_.validate(false);
}

LockParams TaskSampler::sample() {
  LockParams task = prototype_;
  task.combo.resize(task.horizon);
  for (auto& c : task.combo) c = rng_.sign();
  return task;
}

LockParams sample_task(TaskSampler& sampler) { return sampler.sample(); }

namespace {

void resample_features(const LockParams& params, LockState& state, Rng& rng) {
  state.noise = gaussian_vector(rng, params.noise_dim, params.w);
  state.real = gaussian_vector(rng, params.real_dim, params.w);
}

}  // namespace

LockState reset(const LockParams& params, Rng& rng) {
  LockState s;
  s.index.assign(params.index_dim, 0.0);
  s.index[0] = 1.0;
  s.t = 1;
  resample_features(params, s, rng);
  return s;
}

StepResult step(const LockParams& params, const LockState& state, int action, Rng& rng) {
  if (state.t > params.horizon) throw EpisodeOver("lock: step called after the final step");
  if (action != 1 && action != -1) throw InvalidInput("lock: action must be +1 or -1");
  StepResult out;
  const auto active = state.active_index();
  out.reward = active ? 1 : 0;
  out.next.index.assign(params.index_dim, 0.0);
  if (active) {
    const std::size_t i = *active;
    const double margin = params.combo[i] * action * state.real[i];
    if (margin > 0.0 && i + 1 < params.horizon) out.next.index[i + 1] = 1.0;
  }
  out.next.t = state.t + 1;
  resample_features(params, out.next, rng);
  return out;
}

int expert_action(const LockParams& params, const LockState& state) {
  const auto active = state.active_index();
  if (!active) return 1;
  const std::size_t i = *active;
  const int sign = state.real[i] < 0.0 ? -1 : 1;
  return params.combo[i] * sign;
}

Vector encode(const LockState& state) {
  Vector x;
  x.reserve(state.noise.size() + state.index.size() + state.real.size());
  x.insert(x.end(), state.noise.begin(), state.noise.end());
  x.insert(x.end(), state.index.begin(), state.index.end());
  x.insert(x.end(), state.real.begin(), state.real.end());
  return x;
}

LockState decode(const LockParams& params, std::span<const double> x, std::size_t t) {
  if (x.size() != params.obs_dim()) throw InvalidInput("decode: observation length mismatch");
  LockState s;
  auto it = x.begin();
  s.noise.assign(it, it + static_cast<std::ptrdiff_t>(params.noise_dim));
  it += static_cast<std::ptrdiff_t>(params.noise_dim);
  s.index.assign(it, it + static_cast<std::ptrdiff_t>(params.index_dim));
  it += static_cast<std::ptrdiff_t>(params.index_dim);
  s.real.assign(it, x.end());
  s.t = t;
  return s;
}

LockSimulator::LockSimulator(LockParams params) : params_(std::move(params)) {
  params_.validate();
}

void LockSimulator::reset(Rng& rng) { state_ = env::reset(params_, rng); }

void LockSimulator::set_state(const LockState& state) {
  state.validate(params_);
  state_ = state;
}

StepResult LockSimulator::step(int action, Rng& rng) {
  StepResult r = env::step(params_, state_, action, rng);
  state_ = r.next;
  return r;
}

void write_tasks(std::ostream& out, std::span<const LockParams> tasks) {
  char wbuf[32];
  for (const auto& task : tasks) {
    task.validate();
    std::snprintf(wbuf, sizeof wbuf, "%.17g", task.w);
    out << task.horizon << ' ' << task.noise_dim << ' ' << task.index_dim << ' ' << task.real_dim
        << ' ' << wbuf;
    for (int c : task.combo) out << (c > 0 ? " +1" : " -1");
    out << '\n';
  }
}

std::vector<LockParams> read_tasks(std::istream& in) {
  std::vector<LockParams> tasks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    LockParams task;
    if (!(fields >> task.horizon >> task.noise_dim >> task.index_dim >> task.real_dim >> task.w))
      throw InvalidInput("task file line " + std::to_string(line_no) + ": malformed header");
    task.combo.clear();
    int c = 0;
    while (fields >> c) task.combo.push_back(c);
    if (!fields.eof())
      throw InvalidInput("task file line " + std::to_string(line_no) + ": malformed combo");
    try {
      task.validate();
    } catch (const InvalidInput& e) {
      throw InvalidInput("task file line " + std::to_string(line_no) + ": " + e.what());
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

}  // namespace mtil::env
