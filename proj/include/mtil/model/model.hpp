#pragma once

// Function classes shared by every trainer:
//   representation  phi(x) = relu(W1 x + b1)
//   head            f(z)   = softmax(W z)            (no bias)
//   discriminator   g(x)   = tanh(v . z + c), z = x or relu(U x + u)
// together with hand-derived gradients of the behavioral-cloning loss and
// the observation-alone min-max payoff.

#include <cstddef>
#include <span>
#include <vector>

#include "mtil/env/lock.hpp"
#include "mtil/numkit/linalg.hpp"
#include "mtil/numkit/rng.hpp"

namespace mtil::model {

struct ReprParams {
  Matrix weight;  // hidden x input
  Vector bias;    // hidden

  std::size_t hidden() const noexcept { return weight.rows(); }
  std::size_t input_dim() const noexcept { return weight.cols(); }
  friend bool operator==(const ReprParams&, const ReprParams&) = default;
};

struct HeadParams {
  Matrix weight;  // actions x hidden

  std::size_t num_actions() const noexcept { return weight.rows(); }
  std::size_t hidden() const noexcept { return weight.cols(); }
  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

struct DiscParams {
  Matrix hidden_weight;  // empty for the affine discriminator
  Vector hidden_bias;
  Vector weight;
  double bias = 0.0;

  bool has_hidden() const noexcept { return !hidden_weight.empty(); }
  std::size_t input_dim() const noexcept {
    return has_hidden() ? hidden_weight.cols() : weight.size();
  }
  friend bool operator==(const DiscParams&, const DiscParams&) = default;
};

// Weights ~ N(0, 1/fan_in), biases zero.
ReprParams init_repr(std::size_t input_dim, std::size_t hidden, Rng& rng);
HeadParams init_head(std::size_t hidden, std::size_t num_actions, Rng& rng);
// Output layer starts at zero (g == 0); the optional hidden layer is random.
DiscParams init_disc(std::size_t input_dim, std::size_t disc_hidden, Rng& rng);

ReprParams zeros_like(const ReprParams& p);
HeadParams zeros_like(const HeadParams& p);
DiscParams zeros_like(const DiscParams& p);

Vector repr_forward(const ReprParams& repr, std::span<const double> x);
Vector head_logits(const HeadParams& head, std::span<const double> features);
Vector policy_forward(const ReprParams& repr, const HeadParams& head, std::span<const double> x);
double disc_forward(const DiscParams& disc, std::span<const double> x);

/// Row-wise repr_forward over a batch of inputs.
Matrix repr_features(const ReprParams& repr, const Matrix& inputs);

/// Scales the head so that ||W||_F <= radius; no-op when already inside.
void project_frobenius(HeadParams& head, double radius);
// Projects the output weights (and the hidden weights, if any) separately.
void project_frobenius(DiscParams& disc, double radius);

// ---------------------------------------------------------------------------
// Behavioral cloning

struct BCBatch {
  Matrix states;                     // n x input
  std::vector<std::size_t> actions;  // action indices in [0, K)

  std::size_t size() const noexcept { return actions.size(); }
};

struct BCLossGrad {
  double loss = 0.0;
  ReprParams repr;
  std::vector<HeadParams> heads;
};

/// Joint cross-entropy over T tasks: (1/T) sum_t (1/n_t) sum_j -log pi_t(a_j | s_j)
/// with pi_t = softmax(W_t phi(s)). Exact gradients; the ReLU derivative at
/// 0 is taken as 0. Throws InvalidInput on empty batches, out-of-range
/// actions, or shape mismatches.
BCLossGrad bc_loss_grad(const ReprParams& repr, std::span<const HeadParams> heads,
                        std::span<const BCBatch> batches);

struct HeadLossGrad {
  double loss = 0.0;
  HeadParams head;
};

/// Cross-entropy of a head on precomputed features (frozen representation).
HeadLossGrad head_loss_grad(const HeadParams& head, const Matrix& features,
                            std::span<const std::size_t> actions);

// ---------------------------------------------------------------------------
// Observation-alone payoff

struct OABatch {
  Matrix states;                     // s,      n x input
  std::vector<std::size_t> actions;  // a,      uniform over actions
  Matrix next_states;                // s~ from (s, a)
  Matrix expert_next;                // s-bar, one level later on an expert trajectory

  std::size_t size() const noexcept { return actions.size(); }
};

/// K * pi(a_j | s_j) for every tuple.
Vector importance_weights(const ReprParams& repr, const HeadParams& head, const OABatch& batch);
Vector importance_weights_from_features(const HeadParams& head, const Matrix& features,
                                        std::span<const std::size_t> actions);

struct DiscPayoffGrad {
  double payoff = 0.0;
  DiscParams disc;
};

/// payoff = (1/n) sum_j [w_j g(s~_j) - g(s-bar_j)] and its gradient in g's
/// parameters, for fixed importance weights w.
DiscPayoffGrad disc_payoff_grad(const DiscParams& disc, std::span<const double> weights,
                                const OABatch& batch);

struct OAPayoffGrad {
  double payoff = 0.0;
  ReprParams repr;
  HeadParams head;
  DiscParams disc;
};

/// payoff = (1/n) sum_j [K pi(a_j|s_j) g(s~_j) - g(s-bar_j)] with gradients
/// for the policy side (repr, head) and the discriminator side.
OAPayoffGrad oa_payoff_grads(const ReprParams& repr, const HeadParams& head, const DiscParams& disc,
                             const OABatch& batch);

/// Policy-side gradient only, on precomputed features (frozen representation).
/// `disc_next` holds g(s~_j).
HeadLossGrad oa_head_grad(const HeadParams& head, const Matrix& features,
                          std::span<const std::size_t> actions, std::span<const double> disc_next);

/// Checks E_{a~pi}[h(a)] == E_{a~U}[K pi(a|s) h(a)] by enumeration for m
/// random payoff vectors h at the policy's distribution on `state`.
bool is_expert_action_importance_consistent(const ReprParams& repr, const HeadParams& head,
                                            const env::LockParams& params,
                                            const env::LockState& state, Rng& rng, std::size_t m,
                                            double tolerance = 1e-12);

}  // namespace mtil::model
