#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mtil/env/lock.hpp"
#include "mtil/model/model.hpp"
#include "mtil/numkit/rng.hpp"

namespace mtil::data {

/// Maps (state, encoded observation, 0-based level) to an action in {-1, +1}.
using Policy = std::function<int(const env::LockState& state, std::span<const double> obs,
                                 std::size_t level, Rng& rng)>;

Policy expert_policy(const env::LockParams& params);
Policy uniform_policy();

/// pi(a|s) = softmax(W relu(W1 s + b1)); samples an action, or takes the
/// argmax (ties to the first action) when `greedy`.
Policy stationary_policy(model::ReprParams repr, model::HeadParams head, bool greedy = false);

/// One (representation, head) pair per level; level h >= reprs.size() reuses the last.
Policy level_policy(std::vector<model::ReprParams> reprs, std::vector<model::HeadParams> heads,
                    bool greedy = false);

/// Draws an action index from a probability vector.
std::size_t sample_index(std::span<const double> probs, Rng& rng);

}  // namespace mtil::data
