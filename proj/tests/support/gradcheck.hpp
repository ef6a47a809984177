#pragma once

// Central finite-difference checks of the hand-derived gradients on small
// random instances. Each check returns the norm-wise relative error
// ||analytic - numeric|| / max(||analytic||, ||numeric||).

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mtil/model/model.hpp"
#include "mtil/numkit/numkit.hpp"
#include "mtil/numkit/rng.hpp"

namespace mtil::oracle {

inline constexpr double kFdStep = 1e-5;

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

inline std::vector<double> numeric_gradient(const std::vector<double*>& params,
                                            const std::function<double()>& f) {
  std::vector<double> out;
  out.reserve(params.size());
  for (double* p : params) {
    const double saved = *p;
    *p = saved + kFdStep;
    const double up = f();
    *p = saved - kFdStep;
    const double down = f();
    *p = saved;
    out.push_back((up - down) / (2.0 * kFdStep));
  }
  return out;
}

inline void collect(std::vector<double*>& out, std::span<double> values) {
  for (double& v : values) out.push_back(&v);
}
inline void collect(std::vector<double*>& out, model::ReprParams& p) {
  collect(out, p.weight.flat());
  collect(out, p.bias);
}
inline void collect(std::vector<double*>& out, model::HeadParams& p) { collect(out, p.weight.flat()); }
inline void collect(std::vector<double*>& out, model::DiscParams& p) {
  collect(out, p.hidden_weight.flat());
  collect(out, p.hidden_bias);
  collect(out, p.weight);
  out.push_back(&p.bias);
}

inline void append(std::vector<double>& out, std::span<const double> values) {
  out.insert(out.end(), values.begin(), values.end());
}
inline void append(std::vector<double>& out, const model::ReprParams& p) {
  append(out, p.weight.flat());
  append(out, p.bias);
}
inline void append(std::vector<double>& out, const model::HeadParams& p) { append(out, p.weight.flat()); }
inline void append(std::vector<double>& out, const model::DiscParams& p) {
  append(out, p.hidden_weight.flat());
  append(out, p.hidden_bias);
  append(out, p.weight);
  out.push_back(p.bias);
}

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.flat()) v = rng.gaussian();
  return m;
}

struct SmallShape {
  std::size_t input, hidden, actions, n;
};

inline SmallShape random_shape(Rng& rng) {
  return {2 + rng.uniform_index(5), 1 + rng.uniform_index(4), 2 + rng.uniform_index(4),
          1 + rng.uniform_index(6)};
}

inline model::ReprParams random_repr(const SmallShape& s, Rng& rng) {
  model::ReprParams r = model::init_repr(s.input, s.hidden, rng);
  for (auto& b : r.bias) b = 0.5 * rng.gaussian();
  return r;
}

inline model::DiscParams random_disc(std::size_t input, std::size_t hidden, Rng& rng) {
  model::DiscParams d = model::init_disc(input, hidden, rng);
  for (auto& v : d.weight) v = rng.gaussian();
  for (auto& v : d.hidden_bias) v = 0.5 * rng.gaussian();
  d.bias = 0.5 * rng.gaussian();
  return d;
}

inline std::vector<std::size_t> random_actions(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> a(n);
  for (auto& v : a) v = rng.uniform_index(k);
  return a;
}

inline model::OABatch random_oa_batch(const SmallShape& s, Rng& rng) {
  model::OABatch b;
  b.states = gaussian_matrix(s.n, s.input, rng);
  b.actions = random_actions(s.n, s.actions, rng);
  b.next_states = gaussian_matrix(s.n, s.input, rng);
  b.expert_next = gaussian_matrix(s.n, s.input, rng);
  return b;
}

/// Joint behavioral-cloning loss over 1-3 tasks, all parameters.
inline double bc_gradcheck(Rng& rng) {
  const SmallShape s = random_shape(rng);
  const std::size_t tasks = 1 + rng.uniform_index(3);
  model::ReprParams repr = random_repr(s, rng);
  std::vector<model::HeadParams> heads;
  std::vector<model::BCBatch> batches;
  for (std::size_t t = 0; t < tasks; ++t) {
    heads.push_back(model::init_head(s.hidden, s.actions, rng));
    batches.push_back({gaussian_matrix(s.n, s.input, rng), random_actions(s.n, s.actions, rng)});
  }
  const auto g = model::bc_loss_grad(repr, heads, batches);
  std::vector<double> analytic;
  append(analytic, g.repr);
  for (const auto& h : g.heads) append(analytic, h);
  std::vector<double*> params;
  collect(params, repr);
  for (auto& h : heads) collect(params, h);
  const auto numeric = numeric_gradient(params, [&] { return model::bc_loss_grad(repr, heads, batches).loss; });
  return relative_error(analytic, numeric);
}

/// Head-only cross-entropy on fixed features.
inline double head_gradcheck(Rng& rng) {
  const SmallShape s = random_shape(rng);
  model::HeadParams head = model::init_head(s.hidden, s.actions, rng);
  const Matrix features = gaussian_matrix(s.n, s.hidden, rng);
  const auto actions = random_actions(s.n, s.actions, rng);
  const auto g = model::head_loss_grad(head, features, actions);
  std::vector<double> analytic;
  append(analytic, g.head);
  std::vector<double*> params;
  collect(params, head);
  const auto numeric =
      numeric_gradient(params, [&] { return model::head_loss_grad(head, features, actions).loss; });
  return relative_error(analytic, numeric);
}

/// Observation-alone payoff, policy side (representation and head).
inline double oa_policy_gradcheck(Rng& rng) {
  const SmallShape s = random_shape(rng);
  model::ReprParams repr = random_repr(s, rng);
  model::HeadParams head = model::init_head(s.hidden, s.actions, rng);
  const model::DiscParams disc = random_disc(s.input, rng.uniform_index(2) * 3, rng);
  const model::OABatch batch = random_oa_batch(s, rng);
  const auto g = model::oa_payoff_grads(repr, head, disc, batch);
  std::vector<double> analytic;
  append(analytic, g.repr);
  append(analytic, g.head);
  std::vector<double*> params;
  collect(params, repr);
  collect(params, head);
  const auto numeric =
      numeric_gradient(params, [&] { return model::oa_payoff_grads(repr, head, disc, batch).payoff; });
  return relative_error(analytic, numeric);
}

/// Observation-alone payoff, discriminator side (affine or one hidden layer).
inline double oa_disc_gradcheck(Rng& rng) {
  const SmallShape s = random_shape(rng);
  const model::ReprParams repr = random_repr(s, rng);
  const model::HeadParams head = model::init_head(s.hidden, s.actions, rng);
  model::DiscParams disc = random_disc(s.input, rng.uniform_index(2) * 3, rng);
  const model::OABatch batch = random_oa_batch(s, rng);
  const auto g = model::oa_payoff_grads(repr, head, disc, batch);
  std::vector<double> analytic;
  append(analytic, g.disc);
  std::vector<double*> params;
  collect(params, disc);
  const auto numeric =
      numeric_gradient(params, [&] { return model::oa_payoff_grads(repr, head, disc, batch).payoff; });
  return relative_error(analytic, numeric);
}

/// Policy term of the payoff on frozen features, head only.
inline double oa_head_gradcheck(Rng& rng) {
  const SmallShape s = random_shape(rng);
  model::HeadParams head = model::init_head(s.hidden, s.actions, rng);
  const Matrix features = gaussian_matrix(s.n, s.hidden, rng);
  const auto actions = random_actions(s.n, s.actions, rng);
  std::vector<double> disc_next(s.n);
  for (auto& v : disc_next) v = std::tanh(rng.gaussian());
  const auto g = model::oa_head_grad(head, features, actions, disc_next);
  std::vector<double> analytic;
  append(analytic, g.head);
  std::vector<double*> params;
  collect(params, head);
  const auto numeric = numeric_gradient(
      params, [&] { return model::oa_head_grad(head, features, actions, disc_next).loss; });
  return relative_error(analytic, numeric);
}

/// |E_{a~pi}[h(a)] - E_{a~U}[K pi(a|s) h(a)]| by enumeration over all K
/// actions for a random K in [2, 5], random head, features and payoffs h.
inline double importance_identity_gap(Rng& rng) {
  const std::size_t k = 2 + rng.uniform_index(4);
  const std::size_t hidden = 1 + rng.uniform_index(5);
  model::HeadParams head = model::init_head(hidden, k, rng);
  for (auto& v : head.weight.flat()) v *= 3.0;
  Matrix features(k, hidden);
  const Vector z = gaussian_vector(rng, hidden, 1.0);
  std::vector<std::size_t> actions(k);
  for (std::size_t a = 0; a < k; ++a) {
    features.set_row(a, z);
    actions[a] = a;
  }
  const Vector pi = softmax(model::head_logits(head, z));
  const Vector w = model::importance_weights_from_features(head, features, actions);
  double on_policy = 0.0, reweighted = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    const double h = 2.0 * rng.uniform() - 1.0;
    on_policy += pi[a] * h;
    reweighted += w[a] * h / static_cast<double>(k);
  }
  return std::abs(on_policy - reweighted);
}

}  // namespace mtil::oracle
