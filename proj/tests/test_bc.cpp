#include <gtest/gtest.h>

#include <cmath>

#include "mtil/bc/bc.hpp"
#include "mtil/data/policy.hpp"
#include "mtil/error.hpp"

using namespace mtil;
using namespace mtil::bc;

namespace {

// Planted instance: phi*(x) = [relu(x0), relu(-x0)], task t labels action
// 1 when x0 > 0 (t even) or x0 < 0 (t odd). |x0| >= 0.5 keeps a margin.
model::BCBatch planted_batch(std::size_t t, std::size_t n, std::size_t dim, Rng& rng) {
  model::BCBatch b{Matrix(n, dim), {}};
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < dim; ++k) b.states(j, k) = rng.gaussian();
    const double x0 = (0.5 + rng.uniform()) * rng.sign();
    b.states(j, 0) = x0;
    const bool positive = x0 > 0.0;
    b.actions.push_back((positive != (t % 2 == 1)) ? 1 : 0);
  }
  return b;
}

model::ReprParams planted_repr(std::size_t dim) {
  model::ReprParams r{Matrix(2, dim), Vector(2, 0.0)};
  r.weight(0, 0) = 1.0;
  r.weight(1, 0) = -1.0;
  return r;
}

double accuracy(const model::ReprParams& r, const model::HeadParams& h, const model::BCBatch& b) {
  std::size_t ok = 0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const Vector p = model::policy_forward(r, h, b.states.row(j));
    ok += (p[1] > p[0] ? 1u : 0u) == b.actions[j];
  }
  return static_cast<double>(ok) / static_cast<double>(b.size());
}

double non_increasing_fraction(const std::vector<double>& loss) {
  std::size_t ok = 0;
  for (std::size_t i = 1; i < loss.size(); ++i) ok += loss[i] <= loss[i - 1];
  return static_cast<double>(ok) / static_cast<double>(loss.size() - 1);
}

BCTrainConfig fast() {
  BCTrainConfig c;
  c.lr = 0.01;
  c.max_epochs = 3000;
  return c;
}

}  // namespace

TEST(BCTrainConfig, Validation) {
  BCTrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = BCTrainConfig{};
  c.max_epochs = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = BCTrainConfig{};
  c.tolerance = -1.0;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(TrainBC, SingleTaskEqualsScratch) {
  Rng data(1);
  const auto b = planted_batch(0, 40, 6, data);
  Rng r1(7), r2(7);
  const auto joint = train_bc_repr(std::vector<model::BCBatch>{b}, fast(), r1);
  const auto scratch = train_scratch(b, fast(), r2);
  EXPECT_EQ(joint.loss_history, scratch.loss_history);
  EXPECT_EQ(joint.repr, scratch.repr);
  EXPECT_EQ(joint.heads, scratch.heads);
}

TEST(TrainBC, ZeroFeaturesStartAtLogTwo) {
  const model::BCBatch b{Matrix(6, 4), {0, 1, 0, 1, 1, 0}};
  Rng rng(2);
  BCTrainConfig c;
  c.max_epochs = 5;
  const auto r = train_bc_repr(std::vector<model::BCBatch>{b}, c, rng);
  EXPECT_NEAR(r.loss_history.front(), std::log(2.0), 1e-15);
}

TEST(TrainBC, PlantedModelIsFit) {
  Rng data(3);
  std::vector<model::BCBatch> tasks;
  for (std::size_t t = 0; t < 3; ++t) tasks.push_back(planted_batch(t, 200, 6, data));
  Rng rng(4);
  const auto r = train_bc_repr(tasks, fast(), rng);
  EXPECT_LT(r.loss_history.back(), 0.05);
  EXPECT_GE(non_increasing_fraction(r.loss_history), 0.95);
}

TEST(TrainBC, RejectsEmptyInput) {
  Rng rng(5);
  EXPECT_THROW(train_bc_repr(std::vector<model::BCBatch>{}, BCTrainConfig{}, rng), InvalidInput);
  EXPECT_THROW(train_bc_repr(std::vector<model::BCBatch>{{Matrix(0, 3), {}}}, BCTrainConfig{}, rng),
               InvalidInput);
}

TEST(TrainBC, Deterministic) {
  Rng data(6);
  const auto b = planted_batch(1, 30, 5, data);
  Rng r1(8), r2(8);
  const auto a = train_bc_repr(std::vector<model::BCBatch>{b, b}, fast(), r1);
  const auto c = train_bc_repr(std::vector<model::BCBatch>{b, b}, fast(), r2);
  EXPECT_EQ(a.loss_history, c.loss_history);
  EXPECT_EQ(a.repr, c.repr);
}

TEST(TrainBC, StopsWhenConverged) {
  Rng data(9);
  const auto b = planted_batch(0, 50, 4, data);
  Rng rng(10);
  BCTrainConfig c = fast();
  c.max_epochs = 5000;
  c.tolerance = 1e-2;
  const auto r = train_bc_repr(std::vector<model::BCBatch>{b}, c, rng);
  EXPECT_LT(r.loss_history.size(), 5001u);
}

TEST(TrainBC, SingleSampleRuns) {
  Rng data(11);
  const auto b = planted_batch(0, 1, 4, data);
  Rng rng(12);
  const auto r = train_scratch(b, fast(), rng);
  EXPECT_TRUE(std::isfinite(r.loss_history.back()));
}

TEST(AdaptHead, PlantedRepresentationGeneralizes) {
  Rng data(13);
  const auto train = planted_batch(1, 50, 6, data);
  const auto held_out = planted_batch(1, 2000, 6, data);
  const auto repr = planted_repr(6);
  Rng rng(14);
  const auto fit = adapt_head(repr, train, fast(), rng);
  EXPECT_GT(accuracy(repr, fit.head, held_out), 0.95);
}

TEST(AdaptHead, ZeroRepresentationCannotBeatLogK) {
  Rng data(15);
  const auto b = planted_batch(0, 40, 4, data);
  const model::ReprParams zero{Matrix(3, 4), Vector(3, 0.0)};
  Rng rng(16);
  const auto fit = adapt_head(zero, b, fast(), rng);
  EXPECT_GE(fit.loss_history.back(), std::log(2.0) - 1e-9);
}

TEST(AdaptHead, LeavesRepresentationUntouchedAndIsDeterministic) {
  Rng data(17);
  const auto b = planted_batch(0, 40, 6, data);
  Rng init(18);
  const auto repr = model::init_repr(6, 5, init);
  const auto before = repr;
  Rng r1(19), r2(19);
  const auto a = adapt_head(repr, b, fast(), r1);
  const auto c = adapt_head(repr, b, fast(), r2);
  EXPECT_EQ(repr, before);
  EXPECT_EQ(a.head, c.head);
  EXPECT_EQ(a.loss_history, c.loss_history);
}

TEST(BCLevels, OneModelPerLevelFromLevelSlices) {
  env::TaskSampler sampler(env::LockParams::short_horizon(), Rng(20));
  data::BCDataset ds;
  for (int t = 0; t < 2; ++t) {
    const auto p = sampler.sample();
    Rng rng(21 + t);
    const auto trajs = data::collect_trajectories(p, data::expert_policy(p), 10, rng);
    ds.push_back(data::build_bc_dataset(trajs, rng, true));
  }
  BCTrainConfig c;
  c.max_epochs = 30;
  const Rng root(22);
  const auto levels = train_bc_levels(ds, 10, c, root);
  ASSERT_EQ(levels.size(), 10u);

  std::vector<model::BCBatch> slices{data::level_slice(ds[0], 4), data::level_slice(ds[1], 4)};
  Rng level_rng = root.fork("level", 4);
  const auto alone = train_bc_repr(slices, c, level_rng);
  EXPECT_EQ(levels[3].repr, alone.repr);

  std::vector<model::ReprParams> reprs;
  for (const auto& l : levels) reprs.push_back(l.repr);
  const auto before = reprs;
  const auto heads = adapt_heads_levels(reprs, ds[0], c, root);
  EXPECT_EQ(heads.size(), 10u);
  EXPECT_EQ(reprs, before);
}
