#pragma once

#include <cstddef>
#include <span>

#include "mtil/numkit/linalg.hpp"
#include "mtil/numkit/rng.hpp"

namespace mtil {

/// i.i.d. N(0, stddev^2) draws. stddev == 0 yields the zero vector without
/// consuming randomness.
Vector gaussian_vector(Rng& rng, std::size_t dim, double stddev);

/// Numerically stable softmax (max-subtracted). Throws InvalidInput on an
/// empty or non-finite input.
Vector softmax(std::span<const double> logits);
/// Same, writing into `out` (which may alias `logits`).
void softmax_into(std::span<const double> logits, std::span<double> out);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam moments for one parameter block.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t size, AdamConfig config);

  /// params -= lr * m_hat / (sqrt(v_hat) + eps). Throws InvalidInput when
  /// params, grad and the moment buffers disagree in length.
  void step(std::span<double> params, std::span<const double> grad);

  std::size_t steps() const noexcept { return t_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  Vector m_;
  Vector v_;
  std::size_t t_ = 0;
};

}  // namespace mtil
