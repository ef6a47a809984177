#include "mtil/oa/oa.hpp"

#include <cmath>

#include "mtil/env/lock.hpp"
#include "mtil/error.hpp"
#include "mtil/model/optim.hpp"

namespace mtil::oa {

void OATrainConfig::validate() const {
  if (hidden == 0) throw InvalidInput("oa: hidden must be positive");
  if (!(lr_policy > 0.0) || !(lr_disc > 0.0)) throw InvalidInput("oa: learning rates must be positive");
  if (max_outer_iters == 0) throw InvalidInput("oa: max_outer_iters must be at least 1");
  if (!(tolerance >= 0.0)) throw InvalidInput("oa: tolerance must be non-negative");
  if (!(disc_radius >= 0.0)) throw InvalidInput("oa: disc radius must be non-negative");
}

namespace {

bool settled(const std::vector<double>& history, const OATrainConfig& cfg) {
  if (cfg.window == 0 || history.size() <= cfg.window) return false;
  return std::abs(history.back() - history[history.size() - 1 - cfg.window]) < cfg.tolerance;
}

Vector disc_values(const model::DiscParams& disc, const Matrix& states) {
  Vector out(states.rows());
  for (std::size_t j = 0; j < states.rows(); ++j) out[j] = model::disc_forward(disc, states.row(j));
  return out;
}

// k ascent steps on one discriminator against fixed importance weights;
// returns the payoff after the last step.
double ascend_disc(model::DiscParams& disc, model::DiscAdam& opt, std::span<const double> weights,
                   const model::OABatch& batch, std::size_t steps, double radius) {
  for (std::size_t i = 0; i < steps; ++i) {
    auto g = model::disc_payoff_grad(disc, weights, batch);
    opt.ascend(disc, std::move(g.disc));
    if (radius > 0.0) model::project_frobenius(disc, radius);
  }
  return model::disc_payoff_grad(disc, weights, batch).payoff;
}

model::OABatch concat(std::span<const model::OABatch> batches) {
  model::OABatch all;
  for (const auto& b : batches) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      all.states.append_row(b.states.row(j));
      all.actions.push_back(b.actions[j]);
      all.next_states.append_row(b.next_states.row(j));
      all.expert_next.append_row(b.expert_next.row(j));
    }
  }
  return all;
}

}  // namespace

MinMaxResult solve_minmax(const model::ReprParams& repr, model::HeadParams head,
                          model::DiscParams disc, const model::OABatch& batch,
                          const OATrainConfig& cfg, bool train_repr) {
  cfg.validate();
  if (batch.size() == 0) throw InvalidInput("solve_minmax: empty batch");
  MinMaxResult r{repr, std::move(head), std::move(disc), 0.0, {}};
  model::ReprAdam repr_opt(r.repr, AdamConfig{cfg.lr_policy});
  model::HeadAdam head_opt(r.head, AdamConfig{cfg.lr_policy});
  model::DiscAdam disc_opt(r.disc, AdamConfig{cfg.lr_disc});
  Matrix features = model::repr_features(r.repr, batch.states);

  for (std::size_t it = 0; it < cfg.max_outer_iters; ++it) {
    const Vector weights = model::importance_weights_from_features(r.head, features, batch.actions);
    const double payoff = ascend_disc(r.disc, disc_opt, weights, batch, cfg.disc_steps, cfg.disc_radius);
    if (!std::isfinite(payoff)) throw TrainingFailure("min-max payoff diverged", it);
    r.payoff_history.push_back(payoff);
    r.payoff = payoff;
    if (settled(r.payoff_history, cfg)) break;

    if (train_repr) {
      const auto g = model::oa_payoff_grads(r.repr, r.head, r.disc, batch);
      repr_opt.descend(r.repr, g.repr);
      head_opt.descend(r.head, g.head);
      features = model::repr_features(r.repr, batch.states);
    } else {
      const auto g = model::oa_head_grad(r.head, features, batch.actions,
                                         disc_values(r.disc, batch.next_states));
      head_opt.descend(r.head, g.head);
    }
  }
  return r;
}

LevelResult train_oa_level(std::span<const model::OABatch> batches, const OATrainConfig& cfg,
                           Rng& rng) {
  cfg.validate();
  if (batches.empty()) throw InvalidInput("train_oa_level: need at least one task");
  for (const auto& b : batches)
    if (b.size() == 0) throw InvalidInput("train_oa_level: empty task batch");

  const std::size_t tasks = batches.size();
  const std::size_t input_dim = batches.front().states.cols();
  Rng init = rng.fork("init");
  LevelResult r;
  r.repr = model::init_repr(input_dim, cfg.hidden, init);
  for (std::size_t i = 0; i < tasks; ++i) {
    r.heads.push_back(model::init_head(cfg.hidden, env::kNumActions, init));
    if (i == 0 || !cfg.share_disc)
      r.discs.push_back(model::init_disc(batches[i].next_states.cols(), cfg.disc_hidden, init));
  }
  const model::OABatch pooled = cfg.share_disc ? concat(batches) : model::OABatch{};
  const auto disc_of = [&](std::size_t i) -> model::DiscParams& { return r.discs[cfg.share_disc ? 0 : i]; };

  model::ReprAdam repr_opt(r.repr, AdamConfig{cfg.lr_policy});
  std::vector<model::HeadAdam> head_opt;
  std::vector<model::DiscAdam> disc_opt;
  for (std::size_t i = 0; i < tasks; ++i) head_opt.emplace_back(r.heads[i], AdamConfig{cfg.lr_policy});
  for (auto& d : r.discs) disc_opt.emplace_back(d, AdamConfig{cfg.lr_disc});
  const double inv_t = 1.0 / static_cast<double>(tasks);

  for (std::size_t it = 0; it < cfg.max_outer_iters; ++it) {
    double payoff = 0.0;
    if (cfg.share_disc) {
      Vector weights;
      for (std::size_t i = 0; i < tasks; ++i) {
        const Vector w = model::importance_weights(r.repr, r.heads[i], batches[i]);
        weights.insert(weights.end(), w.begin(), w.end());
      }
      payoff = ascend_disc(r.discs[0], disc_opt[0], weights, pooled, cfg.disc_steps, cfg.disc_radius);
    } else {
      for (std::size_t i = 0; i < tasks; ++i) {
        const Vector weights = model::importance_weights(r.repr, r.heads[i], batches[i]);
        payoff += inv_t * ascend_disc(r.discs[i], disc_opt[i], weights, batches[i], cfg.disc_steps, cfg.disc_radius);
      }
    }
    if (!std::isfinite(payoff)) throw TrainingFailure("min-max payoff diverged", it);
    r.payoff_history.push_back(payoff);
    if (settled(r.payoff_history, cfg)) break;

    model::ReprParams repr_grad = model::zeros_like(r.repr);
    for (std::size_t i = 0; i < tasks; ++i) {
      auto g = model::oa_payoff_grads(r.repr, r.heads[i], disc_of(i), batches[i]);
      for (auto& v : g.head.weight.flat()) v *= inv_t;
      head_opt[i].descend(r.heads[i], g.head);
      for (std::size_t k = 0; k < repr_grad.weight.size(); ++k)
        repr_grad.weight.data()[k] += inv_t * g.repr.weight.data()[k];
      for (std::size_t k = 0; k < repr_grad.bias.size(); ++k) repr_grad.bias[k] += inv_t * g.repr.bias[k];
    }
    repr_opt.descend(r.repr, repr_grad);
  }
  if (cfg.share_disc) r.discs.assign(tasks, r.discs[0]);
  return r;
}


std::vector<LevelResult> train_oa_reprs(const data::OADataset& dataset, const OATrainConfig& cfg,
                                        const Rng& rng) {
  if (dataset.empty()) throw InvalidInput("train_oa_reprs: need at least one task");
  const std::size_t horizon = dataset.front().horizon();
  for (const auto& task : dataset)
    if (task.horizon() != horizon || horizon == 0)
      throw InvalidInput("train_oa_reprs: tasks disagree on the number of levels");

  std::vector<LevelResult> out;
  if (cfg.share_levels) {
    std::vector<model::OABatch> batches;
    for (const auto& task : dataset) batches.push_back(concat(task.levels));
    Rng shared = rng.fork("level", 0);
    LevelResult r = train_oa_level(batches, cfg, shared);
    out.assign(horizon, r);
    return out;
  }
  out.reserve(horizon);
  for (std::size_t h = 1; h <= horizon; ++h) {
    std::vector<model::OABatch> batches;
    batches.reserve(dataset.size());
    for (const auto& task : dataset) batches.push_back(task.levels[h - 1]);
    Rng level_rng = rng.fork("level", h);
    try {
      out.push_back(train_oa_level(batches, cfg, level_rng));
    } catch (const TrainingFailure& e) {
      throw TrainingFailure("min-max payoff diverged", e.epoch(), h);
    }
  }
  return out;
}

std::vector<model::HeadParams> adapt_oa_heads(std::span<const model::ReprParams> reprs,
                                              const data::OATaskData& test_data,
                                              const OATrainConfig& cfg, const Rng& rng) {
  if (reprs.size() != test_data.horizon())
    throw InvalidInput("adapt_oa_heads: need one representation per level");
  std::vector<model::HeadParams> heads;
  heads.reserve(reprs.size());
  for (std::size_t h = 1; h <= reprs.size(); ++h) {
    const model::OABatch& batch = test_data.levels[h - 1];
    Rng init = rng.fork("level", h).fork("init");
    model::HeadParams head = model::init_head(reprs[h - 1].hidden(), env::kNumActions, init);
    model::DiscParams disc = model::init_disc(batch.next_states.cols(), cfg.disc_hidden, init);
    try {
      heads.push_back(solve_minmax(reprs[h - 1], std::move(head), std::move(disc), batch, cfg).head);
    } catch (const TrainingFailure& e) {
      throw TrainingFailure("min-max payoff diverged", e.epoch(), h);
    }
  }
  return heads;
}

}  // namespace mtil::oa
