#include "mtil/model/model.hpp"

#include <algorithm>
#include <cmath>

#include "mtil/error.hpp"
#include "mtil/numkit/kernels.hpp"
#include "mtil/numkit/numkit.hpp"

namespace mtil::model {

namespace kn = mtil::kernels;

ReprParams init_repr(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  ReprParams p{Matrix(hidden, input_dim), Vector(hidden, 0.0)};
  const double stddev = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (auto& w : p.weight.flat()) w = stddev * rng.gaussian();
  return p;
}

HeadParams init_head(std::size_t hidden, std::size_t num_actions, Rng& rng) {
  HeadParams p{Matrix(num_actions, hidden)};
  const double stddev = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (auto& w : p.weight.flat()) w = stddev * rng.gaussian();
  return p;
}

DiscParams init_disc(std::size_t input_dim, std::size_t disc_hidden, Rng& rng) {
  DiscParams p;
  if (disc_hidden > 0) {
    p.hidden_weight = Matrix(disc_hidden, input_dim);
    p.hidden_bias.assign(disc_hidden, 0.0);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (auto& w : p.hidden_weight.flat()) w = stddev * rng.gaussian();
    p.weight.assign(disc_hidden, 0.0);
  } else {
    p.weight.assign(input_dim, 0.0);
  }
  return p;
}

ReprParams zeros_like(const ReprParams& p) {
  return {Matrix(p.weight.rows(), p.weight.cols()), Vector(p.bias.size(), 0.0)};
}

HeadParams zeros_like(const HeadParams& p) { return {Matrix(p.weight.rows(), p.weight.cols())}; }

DiscParams zeros_like(const DiscParams& p) {
  DiscParams z;
  z.hidden_weight = Matrix(p.hidden_weight.rows(), p.hidden_weight.cols());
  z.hidden_bias.assign(p.hidden_bias.size(), 0.0);
  z.weight.assign(p.weight.size(), 0.0);
  return z;
}

namespace {

void check_repr(const ReprParams& repr, std::size_t input_dim) {
  if (repr.bias.size() != repr.hidden()) throw InvalidInput("representation: bias length mismatch");
  if (repr.input_dim() != input_dim) throw InvalidInput("representation: input length mismatch");
}

void check_head(const HeadParams& head, std::size_t hidden) {
  if (head.hidden() != hidden) throw InvalidInput("head: feature length mismatch");
  if (head.num_actions() == 0) throw InvalidInput("head: no actions");
}

// pre-activation and activation of the representation for one input
void repr_pass(const ReprParams& repr, std::span<const double> x, std::span<double> pre,
               std::span<double> post) {
  kn::gemv(repr.weight, x, pre);
  for (std::size_t k = 0; k < pre.size(); ++k) {
    pre[k] += repr.bias[k];
    post[k] = pre[k] > 0.0 ? pre[k] : 0.0;
  }
}

// Hidden-layer pass of the discriminator. Returns the vector the output
// layer reads (the raw input for the affine discriminator).
std::span<const double> disc_features(const DiscParams& disc, std::span<const double> x,
                                      Vector& scratch) {
  if (!disc.has_hidden()) return x;
  scratch.resize(disc.hidden_weight.rows());
  kn::gemv(disc.hidden_weight, x, scratch);
  for (std::size_t k = 0; k < scratch.size(); ++k)
    scratch[k] = std::max(0.0, scratch[k] + disc.hidden_bias[k]);
  return scratch;
}

void check_disc(const DiscParams& disc, std::size_t input_dim) {
  if (disc.has_hidden()) {
    if (disc.hidden_weight.cols() != input_dim || disc.hidden_bias.size() != disc.hidden_weight.rows() ||
        disc.weight.size() != disc.hidden_weight.rows())
      throw InvalidInput("discriminator: shape mismatch");
  } else if (disc.weight.size() != input_dim) {
    throw InvalidInput("discriminator: shape mismatch");
  }
}

// Accumulates coef * dg/dtheta at input x into grad, where g = tanh(v.z + c).
void disc_backward(const DiscParams& disc, std::span<const double> x, double coef,
                   DiscParams& grad, Vector& scratch) {
  const auto z = disc_features(disc, x, scratch);
  const double g = std::tanh(kn::dot(disc.weight, z) + disc.bias);
  const double du = coef * (1.0 - g * g);
  grad.bias += du;
  kn::axpy(du, z, grad.weight);
  if (!disc.has_hidden()) return;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (z[k] <= 0.0) continue;
    const double dh = du * disc.weight[k];
    grad.hidden_bias[k] += dh;
    kn::axpy(dh, x, grad.hidden_weight.row(k));
  }
}

void check_actions(std::span<const std::size_t> actions, std::size_t num_actions) {
  for (auto a : actions)
    if (a >= num_actions) throw InvalidInput("action index out of range");
}

}  // namespace

Vector repr_forward(const ReprParams& repr, std::span<const double> x) {
  check_repr(repr, x.size());
  Vector pre(repr.hidden());
  Vector post(repr.hidden());
  repr_pass(repr, x, pre, post);
  return post;
}

Vector head_logits(const HeadParams& head, std::span<const double> features) {
  check_head(head, features.size());
  Vector z(head.num_actions());
  kn::gemv(head.weight, features, z);
  return z;
}

Vector policy_forward(const ReprParams& repr, const HeadParams& head, std::span<const double> x) {
  return softmax(head_logits(head, repr_forward(repr, x)));
}

double disc_forward(const DiscParams& disc, std::span<const double> x) {
  check_disc(disc, x.size());
  Vector scratch;
  const auto z = disc_features(disc, x, scratch);
  return std::tanh(kn::dot(disc.weight, z) + disc.bias);
}

Matrix repr_features(const ReprParams& repr, const Matrix& inputs) {
  check_repr(repr, inputs.cols());
  Matrix out(inputs.rows(), repr.hidden());
  Vector pre(repr.hidden());
  for (std::size_t j = 0; j < inputs.rows(); ++j) repr_pass(repr, inputs.row(j), pre, out.row(j));
  return out;
}

void project_frobenius(HeadParams& head, double radius) {
  const double norm = std::sqrt(kn::dot(head.weight.flat(), head.weight.flat()));
  if (norm <= radius || norm == 0.0) return;
  const double scale = radius / norm;
  for (auto& w : head.weight.flat()) w *= scale;
}

namespace {

void scale_to_ball(std::span<double> w, double radius) {
  const double norm = std::sqrt(kn::dot(w, w));
  if (norm <= radius || norm == 0.0) return;
  const double scale = radius / norm;
  for (auto& v : w) v *= scale;
}

}  // namespace

void project_frobenius(DiscParams& disc, double radius) {
  scale_to_ball(disc.weight, radius);
  if (disc.has_hidden()) scale_to_ball(disc.hidden_weight.flat(), radius);
}

BCLossGrad bc_loss_grad(const ReprParams& repr, std::span<const HeadParams> heads,
                        std::span<const BCBatch> batches) {
  if (batches.empty() || heads.size() != batches.size())
    throw InvalidInput("bc_loss_grad: need one head per non-empty task batch");
  BCLossGrad out{0.0, zeros_like(repr), {}};
  out.heads.reserve(heads.size());
  const std::size_t hidden = repr.hidden();
  const double task_weight = 1.0 / static_cast<double>(batches.size());
  Vector post(hidden);
  Vector dpost(hidden);

  for (std::size_t t = 0; t < batches.size(); ++t) {
    const HeadParams& head = heads[t];
    const BCBatch& batch = batches[t];
    const std::size_t n = batch.size();
    if (n == 0 || batch.states.rows() != n)
      throw InvalidInput("bc_loss_grad: empty or ragged batch");
    check_repr(repr, batch.states.cols());
    check_head(head, hidden);
    check_actions(batch.actions, head.num_actions());
    HeadParams& ghead = out.heads.emplace_back(zeros_like(head));
    const double w = task_weight / static_cast<double>(n);
    Vector dlogits(head.num_actions());

    // Column-major pass over the batch: pre.row(k) holds unit k for every sample.
    Matrix pre(hidden, n);
    for (std::size_t k = 0; k < hidden; ++k) {
      auto col = pre.row(k);
      kn::gemv(batch.states, repr.weight.row(k), col);
      for (auto& v : col) v += repr.bias[k];
    }
    Matrix delta(hidden, n);
    const std::size_t num_actions = head.num_actions();
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < hidden; ++k) post[k] = std::max(0.0, pre(k, j));
      // The head is tiny (K x hidden); plain loops beat kernel dispatch here.
      for (std::size_t a = 0; a < num_actions; ++a) {
        double z = 0.0;
        for (std::size_t k = 0; k < hidden; ++k) z += head.weight(a, k) * post[k];
        dlogits[a] = z;
      }
      softmax_into(dlogits, dlogits);
      const std::size_t a = batch.actions[j];
      out.loss -= w * std::log(dlogits[a]);
      // d(-log p_a)/d logits = p - e_a
      dlogits[a] -= 1.0;
      std::fill(dpost.begin(), dpost.end(), 0.0);
      for (std::size_t b = 0; b < num_actions; ++b) {
        const double d = w * dlogits[b];
        for (std::size_t k = 0; k < hidden; ++k) {
          ghead.weight(b, k) += d * post[k];
          dpost[k] += d * head.weight(b, k);
        }
      }
      for (std::size_t k = 0; k < hidden; ++k) delta(k, j) = pre(k, j) > 0.0 ? dpost[k] : 0.0;
    }
    for (std::size_t k = 0; k < hidden; ++k) {
      auto gw = out.repr.weight.row(k);
      for (std::size_t j = 0; j < n; ++j) {
        const double d = delta(k, j);
        if (d == 0.0) continue;  // inactive unit
        kn::axpy(d, batch.states.row(j), gw);
        out.repr.bias[k] += d;
      }
    }
  }
  return out;
}

HeadLossGrad head_loss_grad(const HeadParams& head, const Matrix& features,
                            std::span<const std::size_t> actions) {
  if (actions.empty() || features.rows() != actions.size())
    throw InvalidInput("head_loss_grad: empty or ragged batch");
  check_head(head, features.cols());
  check_actions(actions, head.num_actions());
  HeadLossGrad out{0.0, zeros_like(head)};
  const double w = 1.0 / static_cast<double>(actions.size());
  Vector probs(head.num_actions());
  for (std::size_t j = 0; j < actions.size(); ++j) {
    kn::gemv(head.weight, features.row(j), probs);
    softmax_into(probs, probs);
    out.loss -= w * std::log(probs[actions[j]]);
    probs[actions[j]] -= 1.0;
    kn::ger(w, probs, features.row(j), out.head.weight);
  }
  return out;
}

namespace {

void check_oa_batch(const OABatch& batch) {
  const std::size_t n = batch.size();
  if (n == 0) throw InvalidInput("observation-alone batch is empty");
  if (batch.states.rows() != n || batch.next_states.rows() != n || batch.expert_next.rows() != n)
    throw InvalidInput("observation-alone batch is ragged");
  if (batch.next_states.cols() != batch.expert_next.cols())
    throw InvalidInput("observation-alone batch: s~ and s-bar widths differ");
}

}  // namespace

Vector importance_weights_from_features(const HeadParams& head, const Matrix& features,
                                        std::span<const std::size_t> actions) {
  check_head(head, features.cols());
  check_actions(actions, head.num_actions());
  const double k = static_cast<double>(head.num_actions());
  Vector weights(actions.size());
  Vector logits(head.num_actions());
  for (std::size_t j = 0; j < actions.size(); ++j) {
    kn::gemv(head.weight, features.row(j), logits);
    softmax_into(logits, logits);
    weights[j] = k * logits[actions[j]];
  }
  return weights;
}

Vector importance_weights(const ReprParams& repr, const HeadParams& head, const OABatch& batch) {
  check_oa_batch(batch);
  return importance_weights_from_features(head, repr_features(repr, batch.states), batch.actions);
}

DiscPayoffGrad disc_payoff_grad(const DiscParams& disc, std::span<const double> weights,
                                const OABatch& batch) {
  check_oa_batch(batch);
  if (weights.size() != batch.size()) throw InvalidInput("disc_payoff_grad: weight count mismatch");
  check_disc(disc, batch.next_states.cols());
  DiscPayoffGrad out{0.0, zeros_like(disc)};
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Vector scratch;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto tilde = batch.next_states.row(j);
    const auto bar = batch.expert_next.row(j);
    const double g_tilde = std::tanh(kn::dot(disc.weight, disc_features(disc, tilde, scratch)) + disc.bias);
    const double g_bar = std::tanh(kn::dot(disc.weight, disc_features(disc, bar, scratch)) + disc.bias);
    out.payoff += inv_n * (weights[j] * g_tilde - g_bar);
    disc_backward(disc, tilde, inv_n * weights[j], out.disc, scratch);
    disc_backward(disc, bar, -inv_n, out.disc, scratch);
  }
  return out;
}

HeadLossGrad oa_head_grad(const HeadParams& head, const Matrix& features,
                          std::span<const std::size_t> actions, std::span<const double> disc_next) {
  if (actions.empty() || features.rows() != actions.size() || disc_next.size() != actions.size())
    throw InvalidInput("oa_head_grad: empty or ragged batch");
  check_head(head, features.cols());
  check_actions(actions, head.num_actions());
  HeadLossGrad out{0.0, zeros_like(head)};
  const double k = static_cast<double>(head.num_actions());
  const double inv_n = 1.0 / static_cast<double>(actions.size());
  Vector probs(head.num_actions());
  for (std::size_t j = 0; j < actions.size(); ++j) {
    kn::gemv(head.weight, features.row(j), probs);
    softmax_into(probs, probs);
    const std::size_t a = actions[j];
    const double coef = inv_n * k * disc_next[j];
    const double pa = probs[a];
    out.loss += coef * pa;
    // d p_a / d z_i = p_a (delta_ai - p_i)
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = coef * pa * ((i == a ? 1.0 : 0.0) - probs[i]);
    kn::ger(1.0, probs, features.row(j), out.head.weight);
  }
  return out;
}

OAPayoffGrad oa_payoff_grads(const ReprParams& repr, const HeadParams& head, const DiscParams& disc,
                             const OABatch& batch) {
  check_oa_batch(batch);
  check_repr(repr, batch.states.cols());
  check_head(head, repr.hidden());
  check_actions(batch.actions, head.num_actions());
  check_disc(disc, batch.next_states.cols());

  const std::size_t n = batch.size();
  const std::size_t hidden = repr.hidden();
  const double k = static_cast<double>(head.num_actions());
  const double inv_n = 1.0 / static_cast<double>(n);

  OAPayoffGrad out{0.0, zeros_like(repr), zeros_like(head), {}};
  Vector pre(hidden);
  Vector post(hidden);
  Vector dpost(hidden);
  Vector probs(head.num_actions());
  Vector weights(n);
  Vector scratch;

  for (std::size_t j = 0; j < n; ++j) {
    const auto x = batch.states.row(j);
    repr_pass(repr, x, pre, post);
    kn::gemv(head.weight, post, probs);
    softmax_into(probs, probs);
    const std::size_t a = batch.actions[j];
    const double pa = probs[a];
    weights[j] = k * pa;

    const double g_tilde =
        std::tanh(kn::dot(disc.weight, disc_features(disc, batch.next_states.row(j), scratch)) + disc.bias);
    const double coef = inv_n * k * g_tilde;
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = coef * pa * ((i == a ? 1.0 : 0.0) - probs[i]);
    kn::ger(1.0, probs, post, out.head.weight);
    std::fill(dpost.begin(), dpost.end(), 0.0);
    kn::gemv_t_acc(head.weight, probs, dpost);
    for (std::size_t h = 0; h < hidden; ++h) {
      if (pre[h] <= 0.0) continue;
      out.repr.bias[h] += dpost[h];
      kn::axpy(dpost[h], x, out.repr.weight.row(h));
    }
  }

  DiscPayoffGrad dg = disc_payoff_grad(disc, weights, batch);
  out.payoff = dg.payoff;
  out.disc = std::move(dg.disc);
  return out;
}

bool is_expert_action_importance_consistent(const ReprParams& repr, const HeadParams& head,
                                            const env::LockParams& params,
                                            const env::LockState& state, Rng& rng, std::size_t m,
                                            double tolerance) {
  state.validate(params);
  const Vector pi = policy_forward(repr, head, env::encode(state));
  const double k = static_cast<double>(pi.size());
  for (std::size_t trial = 0; trial < std::max<std::size_t>(m, 1); ++trial) {
    double on_policy = 0.0;
    double reweighted = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) {
      const double h = 2.0 * rng.uniform() - 1.0;
      on_policy += pi[a] * h;
      reweighted += (1.0 / k) * (k * pi[a] * h);
    }
    if (std::abs(on_policy - reweighted) > tolerance) return false;
  }
  return true;
}

}  // namespace mtil::model
