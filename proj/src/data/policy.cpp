#include "mtil/data/policy.hpp"

#include <algorithm>

#include "mtil/error.hpp"

namespace mtil::data {

std::size_t sample_index(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

Policy expert_policy(const env::LockParams& params) {
  return [params](const env::LockState& state, std::span<const double>, std::size_t, Rng&) {
    return env::expert_action(params, state);
  };
}

Policy uniform_policy() {
  return [](const env::LockState&, std::span<const double>, std::size_t, Rng& rng) {
    return rng.sign();
  };
}

namespace {

int act(const model::ReprParams& repr, const model::HeadParams& head, std::span<const double> obs,
        bool greedy, Rng& rng) {
  const Vector probs = model::policy_forward(repr, head, obs);
  const std::size_t a = greedy
      ? static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin())
      : sample_index(probs, rng);
  return env::index_to_action(a);
}

}  // namespace

Policy stationary_policy(model::ReprParams repr, model::HeadParams head, bool greedy) {
  return [repr = std::move(repr), head = std::move(head), greedy](
             const env::LockState&, std::span<const double> obs, std::size_t, Rng& rng) {
    return act(repr, head, obs, greedy, rng);
  };
}

Policy level_policy(std::vector<model::ReprParams> reprs, std::vector<model::HeadParams> heads,
                    bool greedy) {
  if (reprs.empty() || reprs.size() != heads.size())
    throw InvalidInput("level_policy: need one head per representation");
  return [reprs = std::move(reprs), heads = std::move(heads), greedy](
             const env::LockState&, std::span<const double> obs, std::size_t level, Rng& rng) {
    const std::size_t h = std::min(level, reprs.size() - 1);
    return act(reprs[h], heads[h], obs, greedy, rng);
  };
}

}  // namespace mtil::data
