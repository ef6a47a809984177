#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "mtil/data/policy.hpp"
#include "mtil/error.hpp"
#include "mtil/eval/eval.hpp"

using namespace mtil;
using namespace mtil::eval;

namespace {

env::LockParams task(std::uint64_t seed) {
  env::TaskSampler s(env::LockParams::standard(), Rng(seed));
  return s.sample();
}

ExperimentConfig tiny(Setting setting) {
  ExperimentConfig c;
  c.setting = setting;
  c.env.horizon = 2;
  c.t_grid = {1, 2, 3};
  c.n_train = 2;
  c.n_test_grid = {1, 2, 3, 4};
  c.episodes = 5;
  c.bc.max_epochs = 2;
  c.oa.max_outer_iters = 2;
  c.master_seed = 77;
  return c;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}

}  // namespace

TEST(RolloutReturn, ExpertIsExactlyTwenty) {
  const auto p = task(1);
  Rng rng(2);
  const auto r = rollout_return(p, data::expert_policy(p), 200, rng);
  EXPECT_EQ(r.mean, 20.0);
  EXPECT_EQ(r.se, 0.0);
}

TEST(RolloutReturn, UniformMatchesGeometricSurvival) {
  const auto p = task(3);
  Rng rng(4);
  const auto r = rollout_return(p, data::uniform_policy(), 10000, rng);
  EXPECT_NEAR(r.mean, 2.0 * (1.0 - std::pow(2.0, -20.0)), 0.1);
  EXPECT_GT(r.se, 0.0);
}

TEST(RolloutReturn, ZeroEpisodesRejected) {
  const auto p = task(1);
  Rng rng(1);
  EXPECT_THROW(rollout_return(p, data::uniform_policy(), 0, rng), InvalidInput);
}

TEST(RolloutReturn, GreedyAndSampledAgreeForConfidentPolicy) {
  // Features relu(+-real_1) with large head weights: near-deterministic at
  // step 1, a fair coin with respect to the combination afterwards.
  const auto p = task(5);
  model::ReprParams repr{Matrix(2, p.obs_dim()), Vector(2, 0.0)};
  const std::size_t real1 = p.noise_dim + p.index_dim;
  repr.weight(0, real1) = 1.0;
  repr.weight(1, real1) = -1.0;
  model::HeadParams head{Matrix(2, 2)};
  const double s = 200.0 * p.combo[0];
  head.weight(1, 0) = s;
  head.weight(0, 1) = s;
  head.weight(0, 0) = -s;
  head.weight(1, 1) = -s;
  Rng r1(6), r2(6);
  const auto greedy = rollout_return(p, data::stationary_policy(repr, head, true), 4000, r1);
  const auto sampled = rollout_return(p, data::stationary_policy(repr, head, false), 4000, r2);
  EXPECT_NEAR(greedy.mean, sampled.mean, 0.2);
}

TEST(Setting, NamesRoundtrip) {
  for (Setting s : {Setting::BC, Setting::OA, Setting::RL}) EXPECT_EQ(parse_setting(setting_name(s)), s);
  EXPECT_THROW(parse_setting("gail"), InvalidInput);
}

TEST(Experiment, RowCountMatchesGrid) {
  std::stringstream csv;
  const auto rows = run_experiment(tiny(Setting::BC), &csv);
  EXPECT_EQ(rows.size(), 120u);
  EXPECT_EQ(count_lines(csv.str()), 121u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_GE(r.return_mean, 0.0);
    EXPECT_LE(r.return_mean, 2.0);
  }
}

TEST(Experiment, ObservationAloneRowCount) {
  auto c = tiny(Setting::OA);
  c.seeds = 2;
  const auto rows = run_experiment(c, nullptr);
  EXPECT_EQ(rows.size(), 3u * 4u * 2u * 2u);
  for (const auto& r : rows) EXPECT_EQ(r.status, "ok");
}

TEST(Experiment, NoBaselineHalvesRows) {
  auto c = tiny(Setting::BC);
  c.baseline = false;
  c.seeds = 1;
  const auto rows = run_experiment(c, nullptr);
  EXPECT_EQ(rows.size(), 12u);
  for (const auto& r : rows) EXPECT_FALSE(r.baseline);
}

TEST(Experiment, DeterministicBytes) {
  auto c = tiny(Setting::BC);
  c.seeds = 2;
  std::stringstream a, b;
  run_experiment(c, &a);
  c.jobs = 2;
  run_experiment(c, &b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Experiment, CsvHeader) {
  std::stringstream out;
  write_csv_header(out);
  EXPECT_EQ(out.str(), "setting,T,n_test,seed,variant,return_mean,return_se,status\n");
}

TEST(Experiment, InvalidConfigRejected) {
  auto c = tiny(Setting::BC);
  c.t_grid.clear();
  EXPECT_THROW(run_experiment(c, nullptr), InvalidInput);
  c = tiny(Setting::BC);
  c.seeds = 0;
  EXPECT_THROW(run_experiment(c, nullptr), InvalidInput);
}

TEST(Aggregate, MeanAndStandardError) {
  std::vector<ExperimentResult> rows;
  for (double v : {1.0, 2.0, 3.0, 6.0}) {
    ExperimentResult r;
    r.t = 4;
    r.n_test = 8;
    r.return_mean = v;
    rows.push_back(r);
  }
  ExperimentResult other = rows[0];
  other.baseline = true;
  other.return_mean = 100.0;
  rows.push_back(other);
  ExperimentResult failed = rows[0];
  failed.status = "error: boom";
  rows.push_back(failed);
  const auto agg = aggregate(rows, false, 4, 8);
  EXPECT_DOUBLE_EQ(agg.mean, 3.0);
  // sample variance 14/3, se = sqrt(14/3 / 4)
  EXPECT_NEAR(agg.se, std::sqrt(14.0 / 12.0), 1e-15);
  EXPECT_TRUE(std::isnan(aggregate(rows, false, 16, 8).mean));
}
