#include "mtil/rltransfer/rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <ostream>

#include "mtil/data/data.hpp"
#include "mtil/data/policy.hpp"
#include "mtil/error.hpp"
#include "mtil/model/optim.hpp"
#include "mtil/numkit/kernels.hpp"
#include "mtil/numkit/numkit.hpp"

namespace mtil::rl {

namespace kn = mtil::kernels;

void PGConfig::validate() const {
  if (!(lr >= 0.0)) throw InvalidInput("pg: lr must be non-negative");
  if (batch_episodes == 0) throw InvalidInput("pg: batch_episodes must be positive");
  if (total_steps == 0) throw InvalidInput("pg: total_steps must be positive");
  if (!(baseline_decay >= 0.0 && baseline_decay <= 1.0)) throw InvalidInput("pg: baseline_decay must be in [0, 1]");
  if (curve_points == 0) throw InvalidInput("pg: curve_points must be positive");
  if (hidden == 0) throw InvalidInput("pg: hidden must be positive");
}

double Episode::total() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

Episode run_episode(const env::LockParams& params, const model::ReprParams& repr,
                    const model::HeadParams& head, Rng& rng) {
  Episode ep;
  env::LockState state = env::reset(params, rng);
  for (std::size_t h = 0; h < params.horizon && state.active_index(); ++h) {
    Vector obs = env::encode(state);
    const Vector probs = model::policy_forward(repr, head, obs);
    const std::size_t a = data::sample_index(probs, rng);
    auto r = env::step(params, state, env::index_to_action(a), rng);
    ep.observations.push_back(std::move(obs));
    ep.actions.push_back(a);
    ep.rewards.push_back(r.reward);
    state = std::move(r.next);
  }
  return ep;
}

PolicyGradient reinforce_gradient(const model::ReprParams& repr, const model::HeadParams& head,
                                  std::span<const Episode> episodes,
                                  std::span<const double> baselines, bool with_repr) {
  if (episodes.empty()) throw InvalidInput("reinforce_gradient: no episodes");
  PolicyGradient g{model::zeros_like(repr), model::zeros_like(head)};
  const std::size_t hidden = repr.hidden();
  const double inv_b = 1.0 / static_cast<double>(episodes.size());
  Vector pre(hidden);
  Vector post(hidden);
  Vector dpost(hidden);
  Vector dlogits(head.num_actions());
  for (const auto& ep : episodes) {
    double to_go = 0.0;
    for (std::size_t t = ep.rewards.size(); t-- > 0;) {
      to_go += ep.rewards[t];
      const double advantage = inv_b * (to_go - (t < baselines.size() ? baselines[t] : 0.0));
      if (advantage == 0.0) continue;
      const auto& x = ep.observations[t];
      kn::gemv(repr.weight, x, pre);
      for (std::size_t k = 0; k < hidden; ++k) {
        pre[k] += repr.bias[k];
        post[k] = std::max(0.0, pre[k]);
      }
      kn::gemv(head.weight, post, dlogits);
      softmax_into(dlogits, dlogits);
      // grad log pi_a = e_a - pi
      for (auto& d : dlogits) d = -d * advantage;
      dlogits[ep.actions[t]] += advantage;
      kn::ger(1.0, dlogits, post, g.head.weight);
      if (!with_repr) continue;
      std::fill(dpost.begin(), dpost.end(), 0.0);
      kn::gemv_t_acc(head.weight, dlogits, dpost);
      for (std::size_t k = 0; k < hidden; ++k) {
        if (pre[k] <= 0.0) continue;
        g.repr.bias[k] += dpost[k];
        kn::axpy(dpost[k], x, g.repr.weight.row(k));
      }
    }
  }
  return g;
}

namespace {

template <class P>
void negate(P& p);

template <>
void negate(model::ReprParams& p) {
  for (auto& v : p.weight.flat()) v = -v;
  for (auto& v : p.bias) v = -v;
}

template <>
void negate(model::HeadParams& p) {
  for (auto& v : p.weight.flat()) v = -v;
}

bool finite(const PolicyGradient& g) {
  const auto ok = [](std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [](double v) { return std::isfinite(v); });
  };
  return ok(g.head.weight.flat()) && ok(g.repr.weight.flat()) && ok(g.repr.bias);
}

}  // namespace

PGResult train_pg_on_repr(const env::LockParams& params, const model::ReprParams* frozen,
                          const PGConfig& cfg, Rng& rng) {
  cfg.validate();
  params.validate();
  Rng init = rng.fork("init");
  PGResult out;
  out.repr = frozen != nullptr ? *frozen : model::init_repr(params.obs_dim(), cfg.hidden, init);
  out.head = model::init_head(out.repr.hidden(), env::kNumActions, init);
  const bool train_repr = frozen == nullptr;

  model::ReprAdam repr_opt(out.repr, AdamConfig{cfg.lr});
  model::HeadAdam head_opt(out.head, AdamConfig{cfg.lr});
  Vector baselines(params.horizon, 0.0);

  const std::size_t interval = std::max<std::size_t>(1, cfg.total_steps / cfg.curve_points);
  std::size_t steps = 0;
  std::size_t next_point = interval;
  double window_return = 0.0;
  std::size_t window_episodes = 0;
  std::size_t update = 0;

  while (steps < cfg.total_steps) {
    std::vector<Episode> batch;
    batch.reserve(cfg.batch_episodes);
    for (std::size_t e = 0; e < cfg.batch_episodes; ++e) {
      batch.push_back(run_episode(params, out.repr, out.head, rng));
      steps += batch.back().rewards.size();
      window_return += batch.back().total();
      ++window_episodes;
    }

    PolicyGradient g = reinforce_gradient(out.repr, out.head, batch, baselines, train_repr);
    if (!finite(g)) throw TrainingFailure("policy gradient diverged", update);
    negate(g.head);
    head_opt.descend(out.head, g.head);
    if (train_repr) {
      negate(g.repr);
      repr_opt.descend(out.repr, g.repr);
    }

    Vector batch_to_go(params.horizon, 0.0);
    for (const auto& ep : batch) {
      double to_go = 0.0;
      for (std::size_t t = ep.rewards.size(); t-- > 0;) {
        to_go += ep.rewards[t];
        batch_to_go[t] += to_go;
      }
    }
    for (std::size_t t = 0; t < params.horizon; ++t)
      baselines[t] = cfg.baseline_decay * baselines[t] +
                     (1.0 - cfg.baseline_decay) * batch_to_go[t] / static_cast<double>(batch.size());
    ++update;

    while (steps >= next_point && window_episodes > 0) {
      out.curve.push_back({next_point, window_return / static_cast<double>(window_episodes)});
      window_return = 0.0;
      window_episodes = 0;
      next_point += interval;
    }
    // A window shorter than one batch repeats the last value.
    while (steps >= next_point && !out.curve.empty()) {
      out.curve.push_back({next_point, out.curve.back().mean_return});
      next_point += interval;
    }
  }
  return out;
}

void RLExperimentConfig::validate() const {
  env.validate(false);
  if (t_grid.empty()) throw InvalidInput("rl: empty T grid");
  for (auto t : t_grid)
    if (t == 0) throw InvalidInput("rl: T values must be positive");
  if (n_train == 0 || seeds == 0) throw InvalidInput("rl: n_train and seeds must be positive");
  bc.validate();
  pg.validate();
}

void write_curve_header(std::ostream& out) { out << "setting,T,seed,env_steps,return_mean\n"; }

void write_curve_row(std::ostream& out, const CurveRow& row) {
  char num[32];
  std::snprintf(num, sizeof num, "%.6f", row.return_mean);
  out << "rl," << row.t << ',' << row.seed << ',' << row.env_steps << ',' << num << '\n';
}

namespace {

std::vector<CurveRow> curve_rows(std::size_t t, std::size_t seed, const PGResult& r) {
  std::vector<CurveRow> rows;
  for (const auto& p : r.curve) rows.push_back({t, seed, p.env_steps, p.mean_return});
  return rows;
}

std::vector<CurveRow> failed_rows(std::size_t t, std::size_t seed, const PGConfig& pg) {
  std::vector<CurveRow> rows;
  const std::size_t interval = std::max<std::size_t>(1, pg.total_steps / pg.curve_points);
  for (std::size_t i = 1; i <= pg.curve_points; ++i) rows.push_back({t, seed, i * interval, std::nan("")});
  return rows;
}

std::vector<CurveRow> run_seed(const RLExperimentConfig& cfg, std::size_t seed, std::ostream* log) {
  const Rng seed_rng = Rng(cfg.master_seed).fork("seed", seed);
  const std::size_t t_max = *std::max_element(cfg.t_grid.begin(), cfg.t_grid.end());
  env::TaskSampler train_sampler(cfg.env, seed_rng.fork("train-tasks"));
  std::vector<env::LockParams> train;
  for (std::size_t i = 0; i < t_max; ++i) train.push_back(train_sampler.sample());
  env::TaskSampler test_sampler(cfg.env, seed_rng.fork("test-task"));
  const env::LockParams test = test_sampler.sample();

  std::vector<model::BCBatch> batches;
  for (std::size_t i = 0; i < t_max; ++i) {
    Rng collect = seed_rng.fork("train-data", i);
    const auto trajs = data::collect_trajectories(train[i], data::expert_policy(train[i]), cfg.n_train, collect);
    Rng pick = seed_rng.fork("bc-pairs", i);
    batches.push_back(data::build_bc_dataset(trajs, pick, true).batch);
  }

  std::vector<CurveRow> rows;
  for (auto t : cfg.t_grid) {
    try {
      Rng repr_rng = seed_rng.fork("repr", t);
      const auto repr = bc::train_bc_repr(std::span(batches).first(t), cfg.bc, repr_rng).repr;
      Rng pg_rng = seed_rng.fork("pg", t);
      const auto r = train_pg_on_repr(test, &repr, cfg.pg, pg_rng);
      const auto part = curve_rows(t, seed, r);
      rows.insert(rows.end(), part.begin(), part.end());
    } catch (const std::exception& e) {
      if (log != nullptr) *log << "seed " << seed << " T=" << t << " failed: " << e.what() << '\n';
      const auto part = failed_rows(t, seed, cfg.pg);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    if (log != nullptr) *log << "  seed " << seed << " T=" << t << " done\n";
  }
  try {
    PGConfig scratch = cfg.pg;
    scratch.hidden = cfg.bc.hidden;
    Rng pg_rng = seed_rng.fork("pg", 0);
    const auto r = train_pg_on_repr(test, nullptr, scratch, pg_rng);
    const auto part = curve_rows(0, seed, r);
    rows.insert(rows.end(), part.begin(), part.end());
  } catch (const std::exception& e) {
    if (log != nullptr) *log << "seed " << seed << " scratch failed: " << e.what() << '\n';
    const auto part = failed_rows(0, seed, cfg.pg);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

}  // namespace

std::vector<CurveRow> rl_experiment(const RLExperimentConfig& cfg, std::ostream* csv,
                                    std::ostream* log) {
  cfg.validate();
  if (csv != nullptr) write_curve_header(*csv);
  std::vector<CurveRow> all;
  const std::size_t jobs = std::max<std::size_t>(1, cfg.jobs);
  for (std::size_t first = 0; first < cfg.seeds; first += jobs) {
    const std::size_t last = std::min(cfg.seeds, first + jobs);
    std::vector<std::future<std::vector<CurveRow>>> pending;
    for (std::size_t s = first; s < last; ++s)
      pending.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                   [&cfg, s, log, jobs] { return run_seed(cfg, s, jobs > 1 ? nullptr : log); }));
    for (auto& f : pending) {
      auto rows = f.get();
      if (csv != nullptr) {
        for (const auto& r : rows) write_curve_row(*csv, r);
        csv->flush();
      }
      all.insert(all.end(), rows.begin(), rows.end());
    }
  }
  return all;
}

}  // namespace mtil::rl
