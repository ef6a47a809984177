#include "mtil/numkit/numkit.hpp"

#include <algorithm>
#include <cmath>

#include "mtil/error.hpp"

namespace mtil {

Vector gaussian_vector(Rng& rng, std::size_t dim, double stddev) {
  Vector out(dim, 0.0);
  if (stddev == 0.0) return out;
  for (auto& x : out) x = stddev * rng.gaussian();
  return out;
}

Vector softmax(std::span<const double> logits) {
  Vector out(logits.size());
  softmax_into(logits, out);
  return out;
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
  if (logits.empty()) throw InvalidInput("softmax: empty input");
  if (out.size() != logits.size()) throw InvalidInput("softmax: output size mismatch");
  double hi = logits[0];
  for (double z : logits) {
    if (!std::isfinite(z)) throw InvalidInput("softmax: non-finite logit");
    hi = std::max(hi, z);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - hi);
    total += out[i];
  }
  for (auto& p : out) p /= total;
}

AdamState::AdamState(std::size_t size, AdamConfig config)
    : config_(config), m_(size, 0.0), v_(size, 0.0) {}

void AdamState::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw InvalidInput("adam_step: parameter, gradient and moment sizes disagree");
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
  }
}

}  // namespace mtil
