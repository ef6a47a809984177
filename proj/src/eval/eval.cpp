#include "mtil/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <ostream>

#include "mtil/data/data.hpp"
#include "mtil/error.hpp"

namespace mtil::eval {

ReturnEstimate rollout_return(const env::LockParams& params, const data::Policy& policy,
                              std::size_t episodes, Rng& rng) {
  if (episodes == 0) throw InvalidInput("rollout_return: need at least one episode");
  params.validate();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    env::LockState state = env::reset(params, rng);
    double ret = 0.0;
    for (std::size_t h = 0; h < params.horizon; ++h) {
      // Past a failure nothing the policy does matters; skip the forward pass.
      if (!state.active_index()) break;
      const Vector obs = env::encode(state);
      const int action = policy(state, obs, h, rng);
      auto r = env::step(params, state, action, rng);
      ret += r.reward;
      state = std::move(r.next);
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  const double m = static_cast<double>(episodes);
  const double mean = sum / m;
  double se = 0.0;
  if (episodes > 1) {
    const double var = std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0));
    se = std::sqrt(var / m);
  }
  return {mean, se};
}

std::string setting_name(Setting s) {
  switch (s) {
    case Setting::BC:
      return "bc";
    case Setting::OA:
      return "oa";
    case Setting::RL:
      return "rl";
  }
  return "?";
}

Setting parse_setting(const std::string& name) {
  if (name == "bc") return Setting::BC;
  if (name == "oa") return Setting::OA;
  if (name == "rl") return Setting::RL;
  throw InvalidInput("unknown setting '" + name + "' (expected bc, oa or rl)");
}

void ExperimentConfig::validate() const {
  env.validate(false);
  if (setting == Setting::RL) throw InvalidInput("experiment: use the rl pipeline for setting rl");
  if (t_grid.empty() || n_test_grid.empty()) throw InvalidInput("experiment: empty grid");
  for (auto t : t_grid)
    if (t == 0) throw InvalidInput("experiment: T values must be positive");
  for (auto n : n_test_grid)
    if (n == 0) throw InvalidInput("experiment: n_test values must be positive");
  if (n_train == 0) throw InvalidInput("experiment: n_train must be positive");
  if (seeds == 0 || episodes == 0) throw InvalidInput("experiment: seeds and episodes must be positive");
  bc.validate();
  oa.validate();
}

void write_csv_header(std::ostream& out) {
  out << "setting,T,n_test,seed,variant,return_mean,return_se,status\n";
}

void write_csv_row(std::ostream& out, const ExperimentResult& row) {
  char nums[64];
  std::snprintf(nums, sizeof nums, "%.6f,%.6f", row.return_mean, row.return_se);
  out << setting_name(row.setting) << ',' << row.t << ',' << row.n_test << ',' << row.seed << ','
      << (row.baseline ? "scratch" : "repr") << ',' << nums << ',' << row.status << '\n';
}

namespace {

// Everything one seed needs, drawn from labeled forks of the seed stream so
// that BC and OA runs with the same master seed see the same tasks.
struct SeedTasks {
  std::vector<env::LockParams> train;
  env::LockParams test;
};

SeedTasks draw_tasks(const ExperimentConfig& cfg, const Rng& seed_rng) {
  const std::size_t t_max = *std::max_element(cfg.t_grid.begin(), cfg.t_grid.end());
  SeedTasks tasks;
  env::TaskSampler train_sampler(cfg.env, seed_rng.fork("train-tasks"));
  for (std::size_t i = 0; i < t_max; ++i) tasks.train.push_back(train_sampler.sample());
  env::TaskSampler test_sampler(cfg.env, seed_rng.fork("test-task"));
  tasks.test = test_sampler.sample();
  return tasks;
}

std::vector<data::Trajectory> expert_data(const env::LockParams& task, std::size_t n, Rng rng) {
  return data::collect_trajectories(task, data::expert_policy(task), n, rng);
}

std::string error_tag(const std::exception& e) {
  std::string msg = e.what();
  std::replace(msg.begin(), msg.end(), ',', ';');
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return "error:" + msg;
}

// Trains a representation on T tasks; adapts and evaluates it for one test set.
class Pipeline {
 public:
  virtual ~Pipeline() = default;
  virtual void train_repr(std::size_t t, const Rng& rng) = 0;
  virtual data::Policy adapted(std::size_t n_test, const Rng& rng) const = 0;
  virtual data::Policy scratch(std::size_t n_test, const Rng& rng) const = 0;
};

class BCPipeline final : public Pipeline {
 public:
  BCPipeline(const ExperimentConfig& cfg, const SeedTasks& tasks, const Rng& seed_rng)
      : cfg_(cfg), test_pairs_rng_(seed_rng.fork("bc-test-pairs")) {
    for (std::size_t i = 0; i < tasks.train.size(); ++i) {
      const auto trajs = expert_data(tasks.train[i], cfg.n_train, seed_rng.fork("train-data", i));
      Rng pick = seed_rng.fork("bc-pairs", i);
      train_data_.push_back(data::build_bc_dataset(trajs, pick, cfg.all_pairs));
    }
    const std::size_t n_max = *std::max_element(cfg.n_test_grid.begin(), cfg.n_test_grid.end());
    test_trajs_ = expert_data(tasks.test, n_max, seed_rng.fork("test-data"));
  }

  void train_repr(std::size_t t, const Rng& rng) override {
    const data::BCDataset subset(train_data_.begin(), train_data_.begin() + static_cast<std::ptrdiff_t>(t));
    reprs_.clear();
    if (cfg_.per_level) {
      for (auto& level : bc::train_bc_levels(subset, cfg_.env.horizon, cfg_.bc, rng))
        reprs_.push_back(std::move(level.repr));
    } else {
      std::vector<model::BCBatch> batches;
      for (const auto& d : subset) batches.push_back(d.batch);
      Rng r = rng;
      reprs_.push_back(bc::train_bc_repr(batches, cfg_.bc, r).repr);
    }
  }

  data::Policy adapted(std::size_t n_test, const Rng& rng) const override {
    const data::BCTaskData test = test_data(n_test);
    if (cfg_.per_level) {
      auto heads = bc::adapt_heads_levels(reprs_, test, cfg_.bc, rng);
      return data::level_policy(reprs_, std::move(heads), cfg_.greedy);
    }
    Rng r = rng;
    auto fit = bc::adapt_head(reprs_.front(), test.batch, cfg_.bc, r);
    return data::stationary_policy(reprs_.front(), std::move(fit.head), cfg_.greedy);
  }

  data::Policy scratch(std::size_t n_test, const Rng& rng) const override {
    const data::BCTaskData test = test_data(n_test);
    if (cfg_.per_level) {
      std::vector<model::ReprParams> reprs;
      std::vector<model::HeadParams> heads;
      for (auto& level : bc::train_scratch_levels(test, cfg_.env.horizon, cfg_.bc, rng)) {
        reprs.push_back(std::move(level.repr));
        heads.push_back(std::move(level.heads.front()));
      }
      return data::level_policy(std::move(reprs), std::move(heads), cfg_.greedy);
    }
    Rng r = rng;
    auto res = bc::train_scratch(test.batch, cfg_.bc, r);
    return data::stationary_policy(std::move(res.repr), std::move(res.heads.front()), cfg_.greedy);
  }

 private:
  // Pair selection depends only on n_test, so repr and scratch cells see the same data.
  data::BCTaskData test_data(std::size_t n_test) const {
    std::span<const data::Trajectory> first(test_trajs_.data(), n_test);
    Rng pick = test_pairs_rng_.fork("n", n_test);
    return data::build_bc_dataset(first, pick, cfg_.all_pairs);
  }

  const ExperimentConfig& cfg_;
  Rng test_pairs_rng_;
  data::BCDataset train_data_;
  std::vector<data::Trajectory> test_trajs_;
  std::vector<model::ReprParams> reprs_;
};

class OAPipeline final : public Pipeline {
 public:
  OAPipeline(const ExperimentConfig& cfg, const SeedTasks& tasks, const Rng& seed_rng)
      : cfg_(cfg), test_task_(tasks.test) {
    for (std::size_t i = 0; i < tasks.train.size(); ++i) {
      const auto trajs = expert_data(tasks.train[i], 2 * cfg.n_train, seed_rng.fork("train-data", i));
      Rng build = seed_rng.fork("oa-build", i);
      train_data_.push_back(data::build_oa_dataset(tasks.train[i], trajs, build));
    }
    n_max_ = *std::max_element(cfg.n_test_grid.begin(), cfg.n_test_grid.end());
    test_trajs_ = expert_data(tasks.test, 2 * n_max_, seed_rng.fork("test-data"));
    for (auto n : cfg.n_test_grid) {
      std::vector<data::Trajectory> pick(test_trajs_.begin(), test_trajs_.begin() + static_cast<std::ptrdiff_t>(n));
      pick.insert(pick.end(), test_trajs_.begin() + static_cast<std::ptrdiff_t>(n_max_),
                  test_trajs_.begin() + static_cast<std::ptrdiff_t>(n_max_ + n));
      Rng build = seed_rng.fork("oa-test-build", n);
      test_data_.emplace(n, data::build_oa_dataset(test_task_, pick, build));
    }
  }

  void train_repr(std::size_t t, const Rng& rng) override {
    const data::OADataset subset(train_data_.begin(), train_data_.begin() + static_cast<std::ptrdiff_t>(t));
    reprs_.clear();
    for (auto& level : oa::train_oa_reprs(subset, cfg_.oa, rng)) reprs_.push_back(std::move(level.repr));
  }

  data::Policy adapted(std::size_t n_test, const Rng& rng) const override {
    auto heads = oa::adapt_oa_heads(reprs_, test_data_.at(n_test), cfg_.oa, rng);
    return data::level_policy(reprs_, std::move(heads), cfg_.greedy);
  }

  data::Policy scratch(std::size_t n_test, const Rng& rng) const override {
    std::vector<model::ReprParams> reprs;
    std::vector<model::HeadParams> heads;
    for (auto& level : oa::train_oa_reprs(data::OADataset{test_data_.at(n_test)}, cfg_.oa, rng)) {
      reprs.push_back(std::move(level.repr));
      heads.push_back(std::move(level.heads.front()));
    }
    return data::level_policy(std::move(reprs), std::move(heads), cfg_.greedy);
  }

 private:
  const ExperimentConfig& cfg_;
  env::LockParams test_task_;
  data::OADataset train_data_;
  std::vector<data::Trajectory> test_trajs_;
  std::size_t n_max_ = 0;
  std::map<std::size_t, data::OATaskData> test_data_;
  std::vector<model::ReprParams> reprs_;
};

std::vector<ExperimentResult> run_seed(const ExperimentConfig& cfg, std::size_t seed,
                                       std::ostream* log) {
  const Rng seed_rng = Rng(cfg.master_seed).fork("seed", seed);
  const SeedTasks tasks = draw_tasks(cfg, seed_rng);
  std::unique_ptr<Pipeline> pipe;
  if (cfg.setting == Setting::BC)
    pipe = std::make_unique<BCPipeline>(cfg, tasks, seed_rng);
  else
    pipe = std::make_unique<OAPipeline>(cfg, tasks, seed_rng);

  const auto evaluate = [&](const data::Policy& policy, Rng eval_rng) {
    return rollout_return(tasks.test, policy, cfg.episodes, eval_rng);
  };

  // Scratch cells do not depend on T: compute once per n_test.
  std::map<std::size_t, ExperimentResult> scratch_cells;
  if (cfg.baseline) {
    for (auto n : cfg.n_test_grid) {
      ExperimentResult row{cfg.setting, 0, n, seed, true};
      try {
        const auto policy = pipe->scratch(n, seed_rng.fork("scratch", n));
        const auto est = evaluate(policy, seed_rng.fork("eval-scratch", n));
        row.return_mean = est.mean;
        row.return_se = est.se;
      } catch (const std::exception& e) {
        row.return_mean = row.return_se = std::nan("");
        row.status = error_tag(e);
      }
      scratch_cells.emplace(n, row);
    }
  }

  std::vector<ExperimentResult> rows;
  for (auto t : cfg.t_grid) {
    std::string repr_error;
    try {
      pipe->train_repr(t, seed_rng.fork("repr", t));
    } catch (const std::exception& e) {
      repr_error = error_tag(e);
    }
    for (auto n : cfg.n_test_grid) {
      ExperimentResult row{cfg.setting, t, n, seed, false};
      if (!repr_error.empty()) {
        row.return_mean = row.return_se = std::nan("");
        row.status = repr_error;
      } else {
        try {
          const auto policy = pipe->adapted(n, seed_rng.fork("adapt", t).fork("n", n));
          const auto est = evaluate(policy, seed_rng.fork("eval-repr", t).fork("n", n));
          row.return_mean = est.mean;
          row.return_se = est.se;
        } catch (const std::exception& e) {
          row.return_mean = row.return_se = std::nan("");
          row.status = error_tag(e);
        }
      }
      rows.push_back(row);
      if (cfg.baseline) {
        ExperimentResult base = scratch_cells.at(n);
        base.t = t;
        rows.push_back(base);
      }
    }
    if (log != nullptr) *log << "  seed " << seed << " T=" << t << " done\n";
  }
  return rows;
}

}  // namespace

std::vector<ExperimentResult> run_experiment(const ExperimentConfig& cfg, std::ostream* csv,
                                             std::ostream* log) {
  cfg.validate();
  if (csv != nullptr) write_csv_header(*csv);
  std::vector<ExperimentResult> all;
  const std::size_t jobs = std::max<std::size_t>(1, cfg.jobs);
  for (std::size_t first = 0; first < cfg.seeds; first += jobs) {
    const std::size_t last = std::min(cfg.seeds, first + jobs);
    std::vector<std::future<std::vector<ExperimentResult>>> pending;
    for (std::size_t s = first; s < last; ++s)
      pending.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                   [&cfg, s, log, jobs] { return run_seed(cfg, s, jobs > 1 ? nullptr : log); }));
    for (auto& f : pending) {
      auto rows = f.get();
      if (csv != nullptr) {
        for (const auto& r : rows) write_csv_row(*csv, r);
        csv->flush();
      }
      if (log != nullptr) *log << "seed " << rows.front().seed << " complete\n";
      all.insert(all.end(), rows.begin(), rows.end());
    }
  }
  return all;
}

ReturnEstimate aggregate(const std::vector<ExperimentResult>& rows, bool baseline, std::size_t t,
                         std::size_t n_test) {
  std::vector<double> values;
  for (const auto& r : rows)
    if (r.baseline == baseline && r.t == t && r.n_test == n_test && r.status == "ok")
      values.push_back(r.return_mean);
  if (values.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double k = static_cast<double>(values.size());
  const double se = values.size() > 1 ? std::sqrt(var / (k - 1.0) / k) : 0.0;
  return {mean, se};
}

}  // namespace mtil::eval
