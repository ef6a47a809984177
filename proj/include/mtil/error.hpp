#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace mtil {

// Raised when an operation's preconditions on its arguments are violated
// (shape mismatch, non-finite input, empty batch, malformed file).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Stepping an episode whose horizon is already exhausted.
class EpisodeOver : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A trainer produced a non-finite loss or payoff.
class TrainingFailure : public std::runtime_error {
 public:
  TrainingFailure(const std::string& what, std::size_t epoch,
                  std::optional<std::size_t> level = std::nullopt)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) +
                           (level ? ", level " + std::to_string(*level) : std::string()) + ")"),
        epoch_(epoch),
        level_(level) {}

  std::size_t epoch() const noexcept { return epoch_; }
  std::optional<std::size_t> level() const noexcept { return level_; }

 private:
  std::size_t epoch_;
  std::optional<std::size_t> level_;
};

}  // namespace mtil
