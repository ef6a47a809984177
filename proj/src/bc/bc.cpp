#include "mtil/bc/bc.hpp"

#include <algorithm>
#include <cmath>

#include "mtil/env/lock.hpp"
#include "mtil/error.hpp"
#include "mtil/model/optim.hpp"

namespace mtil::bc {

void BCTrainConfig::validate() const {
  if (hidden == 0) throw InvalidInput("bc: hidden must be positive");
  if (!(lr > 0.0)) throw InvalidInput("bc: lr must be positive");
  if (max_epochs == 0) throw InvalidInput("bc: max_epochs must be at least 1");
  if (!(tolerance >= 0.0)) throw InvalidInput("bc: tolerance must be non-negative");
  if (head_radius && !(*head_radius > 0.0)) throw InvalidInput("bc: head radius must be positive");
}

namespace {

bool converged(const std::vector<double>& history, const BCTrainConfig& cfg) {
  if (cfg.patience == 0 || history.size() <= cfg.patience) return false;
  const double before = history[history.size() - 1 - cfg.patience];
  const double now = history.back();
  return (before - now) / std::max(std::abs(before), 1e-12) < cfg.tolerance;
}

std::vector<model::BCBatch> draw_minibatches(std::span<const model::BCBatch> datasets,
                                             std::size_t size, Rng& rng) {
  std::vector<model::BCBatch> out(datasets.size());
  for (std::size_t t = 0; t < datasets.size(); ++t) {
    const auto& full = datasets[t];
    for (std::size_t j = 0; j < size; ++j) {
      const std::size_t pick = rng.uniform_index(full.size());
      out[t].states.append_row(full.states.row(pick));
      out[t].actions.push_back(full.actions[pick]);
    }
  }
  return out;
}

}  // namespace

BCTrainResult train_bc_repr(std::span<const model::BCBatch> datasets, const BCTrainConfig& cfg,
                            Rng& rng) {
  cfg.validate();
  if (datasets.empty()) throw InvalidInput("train_bc_repr: need at least one task");
  for (const auto& d : datasets)
    if (d.size() == 0) throw InvalidInput("train_bc_repr: empty task dataset");

  const std::size_t input_dim = datasets.front().states.cols();
  Rng init = rng.fork("init");
  BCTrainResult result;
  result.repr = model::init_repr(input_dim, cfg.hidden, init);
  for (std::size_t t = 0; t < datasets.size(); ++t)
    result.heads.push_back(model::init_head(cfg.hidden, env::kNumActions, init));

  const AdamConfig adam{cfg.lr};
  model::ReprAdam repr_opt(result.repr, adam);
  std::vector<model::HeadAdam> head_opt;
  for (const auto& h : result.heads) head_opt.emplace_back(h, adam);

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    model::BCLossGrad g;
    if (cfg.minibatch == 0) {
      g = model::bc_loss_grad(result.repr, result.heads, datasets);
    } else {
      const auto mb = draw_minibatches(datasets, cfg.minibatch, rng);
      g = model::bc_loss_grad(result.repr, result.heads, mb);
    }
    if (!std::isfinite(g.loss)) throw TrainingFailure("behavioral cloning loss diverged", epoch);
    result.loss_history.push_back(g.loss);
    if (converged(result.loss_history, cfg)) break;
    repr_opt.descend(result.repr, g.repr);
    for (std::size_t t = 0; t < result.heads.size(); ++t) {
      head_opt[t].descend(result.heads[t], g.heads[t]);
      if (cfg.head_radius) model::project_frobenius(result.heads[t], *cfg.head_radius);
    }
  }
  return result;
}

HeadFit adapt_head(const model::ReprParams& repr, const model::BCBatch& data,
                   const BCTrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (data.size() == 0) throw InvalidInput("adapt_head: empty dataset");
  const Matrix features = model::repr_features(repr, data.states);
  Rng init = rng.fork("init");
  HeadFit fit{model::init_head(repr.hidden(), env::kNumActions, init), {}};
  model::HeadAdam opt(fit.head, AdamConfig{cfg.lr});
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const model::HeadLossGrad g = model::head_loss_grad(fit.head, features, data.actions);
    if (!std::isfinite(g.loss)) throw TrainingFailure("head adaptation loss diverged", epoch);
    fit.loss_history.push_back(g.loss);
    if (converged(fit.loss_history, cfg)) break;
    opt.descend(fit.head, g.head);
    if (cfg.head_radius) model::project_frobenius(fit.head, *cfg.head_radius);
  }
  return fit;
}

BCTrainResult train_scratch(const model::BCBatch& data, const BCTrainConfig& cfg, Rng& rng) {
  return train_bc_repr(std::span<const model::BCBatch>(&data, 1), cfg, rng);
}

std::vector<BCTrainResult> train_bc_levels(const data::BCDataset& datasets, std::size_t horizon,
                                           const BCTrainConfig& cfg, const Rng& rng) {
  std::vector<BCTrainResult> out;
  out.reserve(horizon);
  for (std::size_t h = 1; h <= horizon; ++h) {
    std::vector<model::BCBatch> slices;
    slices.reserve(datasets.size());
    for (const auto& task : datasets) slices.push_back(data::level_slice(task, h));
    Rng level_rng = rng.fork("level", h);
    try {
      out.push_back(train_bc_repr(slices, cfg, level_rng));
    } catch (const TrainingFailure& e) {
      throw TrainingFailure("behavioral cloning loss diverged", e.epoch(), h);
    }
  }
  return out;
}

std::vector<model::HeadParams> adapt_heads_levels(std::span<const model::ReprParams> reprs,
                                                  const data::BCTaskData& data,
                                                  const BCTrainConfig& cfg, const Rng& rng) {
  std::vector<model::HeadParams> heads;
  heads.reserve(reprs.size());
  for (std::size_t h = 1; h <= reprs.size(); ++h) {
    Rng level_rng = rng.fork("level", h);
    try {
      heads.push_back(adapt_head(reprs[h - 1], data::level_slice(data, h), cfg, level_rng).head);
    } catch (const TrainingFailure& e) {
      throw TrainingFailure("head adaptation loss diverged", e.epoch(), h);
    }
  }
  return heads;
}

std::vector<BCTrainResult> train_scratch_levels(const data::BCTaskData& data, std::size_t horizon,
                                                const BCTrainConfig& cfg, const Rng& rng) {
  return train_bc_levels(data::BCDataset{data}, horizon, cfg, rng);
}

}  // namespace mtil::bc
