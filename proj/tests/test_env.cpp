#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mtil/env/lock.hpp"
#include "mtil/error.hpp"

using namespace mtil;
using namespace mtil::env;

namespace {

LockParams all_plus() {
  LockParams p = LockParams::standard();
  p.combo.assign(p.horizon, 1);
  return p;
}

LockState state_at(const LockParams& p, std::size_t i, double real_i) {
  LockState s;
  s.noise.assign(p.noise_dim, 0.0);
  s.index.assign(p.index_dim, 0.0);
  s.index[i - 1] = 1.0;
  s.real.assign(p.real_dim, 0.0);
  s.real[i - 1] = real_i;
  s.t = i;
  return s;
}

int rollout(const LockParams& p, Rng& rng, bool expert) {
  LockState s = reset(p, rng);
  int total = 0;
  for (std::size_t h = 0; h < p.horizon; ++h) {
    const int a = expert ? expert_action(p, s) : rng.sign();
    auto r = step(p, s, a, rng);
    total += r.reward;
    s = std::move(r.next);
  }
  return total;
}

}  // namespace

TEST(LockParams, DefaultDimensions) {
  const LockParams p = LockParams::standard();
  EXPECT_EQ(p.horizon, 20u);
  EXPECT_EQ(p.obs_dim(), 50u);
  EXPECT_DOUBLE_EQ(p.w * p.w, 0.05);
  const LockParams q = LockParams::short_horizon();
  EXPECT_EQ(q.horizon, 10u);
  EXPECT_EQ(q.noise_dim, 30u);
  EXPECT_EQ(q.obs_dim(), 50u);
}

TEST(LockParams, ValidateRejectsBadShapes) {
  LockParams p = all_plus();
  EXPECT_NO_THROW(p.validate());
  p.index_dim = 19;
  EXPECT_THROW(p.validate(), InvalidInput);
  p = all_plus();
  p.combo[3] = 0;
  EXPECT_THROW(p.validate(), InvalidInput);
  p = all_plus();
  p.combo.pop_back();
  EXPECT_THROW(p.validate(), InvalidInput);
}

TEST(SampleTask, ReproducibleAndVaried) {
  TaskSampler a(LockParams::standard(), Rng(1));
  TaskSampler b(LockParams::standard(), Rng(1));
  const LockParams ta = a.sample();
  EXPECT_EQ(ta, b.sample());
  EXPECT_NE(ta.combo, a.sample().combo);
  TaskSampler c(LockParams::standard(), Rng(2));
  EXPECT_NE(ta.combo, c.sample().combo);
}

TEST(SampleTask, ComboEntriesAreFairCoins) {
  TaskSampler s(LockParams::standard(), Rng(3));
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const LockParams t = s.sample();
    sum += t.combo[0];
    ASSERT_EQ(t.noise_dim, 10u);
  }
  EXPECT_NEAR(sum / 10000.0, 0.0, 0.03);
}

TEST(Reset, StartsAtFirstIndex) {
  const LockParams p = all_plus();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const LockState s = reset(p, rng);
    ASSERT_EQ(s.active_index(), 0u);
    ASSERT_EQ(s.index[0], 1.0);
    ASSERT_EQ(s.t, 1u);
  }
}

TEST(Reset, ZeroNoiseScale) {
  LockParams p = all_plus();
  p.w = 0.0;
  Rng rng(4);
  const LockState s = reset(p, rng);
  for (double v : s.noise) EXPECT_EQ(v, 0.0);
  for (double v : s.real) EXPECT_EQ(v, 0.0);
}

TEST(Reset, RealBlockVariance) {
  const LockParams p = all_plus();
  Rng rng(5);
  double total = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const LockState s = reset(p, rng);
    for (double v : s.real) total += v * v;
  }
  const double expected = p.real_dim * p.w * p.w;
  EXPECT_NEAR(total / 10000.0, expected, 0.05 * expected);
}

TEST(Step, OpensOnMatchingSign) {
  const LockParams p = all_plus();
  Rng rng(6);
  const auto r = step(p, state_at(p, 1, 0.4), +1, rng);
  EXPECT_EQ(r.reward, 1);
  EXPECT_EQ(r.next.active_index(), 1u);
  EXPECT_EQ(r.next.t, 2u);
}

TEST(Step, ClosesOnWrongSignButStillRewards) {
  const LockParams p = all_plus();
  Rng rng(6);
  const auto r = step(p, state_at(p, 1, 0.4), -1, rng);
  EXPECT_EQ(r.reward, 1);
  EXPECT_FALSE(r.next.active_index().has_value());
}

TEST(Step, ZeroIndexIsAbsorbing) {
  const LockParams p = all_plus();
  Rng rng(7);
  LockState s = state_at(p, 3, 0.4);
  s.index.assign(p.index_dim, 0.0);
  for (int a : {-1, +1}) {
    const auto r = step(p, s, a, rng);
    EXPECT_EQ(r.reward, 0);
    EXPECT_FALSE(r.next.active_index().has_value());
  }
}

TEST(Step, LastStepSuccessZeroesIndex) {
  const LockParams p = all_plus();
  Rng rng(8);
  const auto r = step(p, state_at(p, 20, 0.3), +1, rng);
  EXPECT_EQ(r.reward, 1);
  EXPECT_FALSE(r.next.active_index().has_value());
  EXPECT_EQ(r.next.t, 21u);
}

TEST(Step, PastHorizonThrows) {
  const LockParams p = all_plus();
  Rng rng(9);
  LockState s = state_at(p, 20, 0.3);
  s.t = 21;
  EXPECT_THROW(step(p, s, 1, rng), EpisodeOver);
}

TEST(Step, IndexStaysOneHotOrZero) {
  Rng rng(10);
  TaskSampler sampler(LockParams::standard(), Rng(11));
  for (int e = 0; e < 200; ++e) {
    const LockParams p = sampler.sample();
    LockState s = reset(p, rng);
    for (std::size_t h = 0; h < p.horizon; ++h) {
      s = step(p, s, rng.sign(), rng).next;
      int ones = 0;
      for (double v : s.index) {
        ASSERT_TRUE(v == 0.0 || v == 1.0);
        ones += v == 1.0;
      }
      ASSERT_LE(ones, 1);
    }
  }
}

TEST(ExpertAction, SignRule) {
  LockParams p = all_plus();
  EXPECT_EQ(expert_action(p, state_at(p, 4, -0.3)), -1);
  p.combo[3] = -1;
  EXPECT_EQ(expert_action(p, state_at(p, 4, -0.3)), +1);
  EXPECT_EQ(expert_action(p, state_at(p, 4, 0.0)), -1);
  p.combo[3] = 1;
  EXPECT_EQ(expert_action(p, state_at(p, 4, 0.0)), +1);
}

TEST(ExpertAction, ReturnIsExactlyHorizon) {
  Rng rng(12);
  TaskSampler sampler(LockParams::standard(), Rng(13));
  for (int e = 0; e < 500; ++e) ASSERT_EQ(rollout(sampler.sample(), rng, true), 20);
}

TEST(RandomPolicy, SurvivalOracle) {
  Rng rng(14);
  const LockParams p = TaskSampler(LockParams::standard(), Rng(15)).sample();
  double total = 0.0;
  const int episodes = 10000;
  for (int e = 0; e < episodes; ++e) total += rollout(p, rng, false);
  EXPECT_NEAR(total / episodes, 2.0 * (1.0 - std::pow(2.0, -20.0)), 0.1);
}

TEST(RandomPolicy, ExogenousBlocksIgnorePolicy) {
  // Mean squared real-block norm after one step is the same under any action.
  const LockParams p = all_plus();
  double sq[2] = {0.0, 0.0};
  for (int which = 0; which < 2; ++which) {
    Rng rng(16 + which);
    for (int e = 0; e < 5000; ++e) {
      const LockState s = reset(p, rng);
      const auto r = step(p, s, which == 0 ? expert_action(p, s) : -expert_action(p, s), rng);
      for (double v : r.next.real) sq[which] += v * v;
    }
  }
  EXPECT_NEAR(sq[0] / sq[1], 1.0, 0.05);
}

TEST(Encode, LayoutAndRoundTrip) {
  const LockParams p = all_plus();
  LockState zero;
  zero.noise.assign(p.noise_dim, 0.0);
  zero.index.assign(p.index_dim, 0.0);
  zero.real.assign(p.real_dim, 0.0);
  EXPECT_EQ(encode(zero), Vector(50, 0.0));

  Rng rng(17);
  LockState s = reset(p, rng);
  s = step(p, s, expert_action(p, s), rng).next;
  const Vector x = encode(s);
  ASSERT_EQ(x.size(), 50u);
  EXPECT_EQ(x[10 + 1], 1.0);
  EXPECT_EQ(x[0], s.noise[0]);
  EXPECT_EQ(x[30], s.real[0]);
  EXPECT_EQ(decode(p, x, s.t), s);
}

TEST(Simulator, SetStateThenExpertAdvances) {
  const LockParams p = all_plus();
  LockSimulator sim(p);
  const LockState s = state_at(p, 5, -0.2);
  sim.set_state(s);
  EXPECT_EQ(encode(sim.state()), encode(s));
  Rng rng(18);
  const auto r = sim.step(expert_action(p, s), rng);
  EXPECT_EQ(r.next.active_index(), 5u);
  EXPECT_EQ(r.reward, 1);
}

TEST(Simulator, SetStateIsDeterministic) {
  const LockParams p = all_plus();
  const LockState s = state_at(p, 2, 0.1);
  LockSimulator a(p), b(p);
  Rng ra(19), rb(19);
  a.set_state(s);
  b.set_state(s);
  EXPECT_EQ(a.step(-1, ra).next, b.step(-1, rb).next);
}

TEST(Simulator, SetStateRejectsInvalid) {
  const LockParams p = all_plus();
  LockSimulator sim(p);
  LockState s = state_at(p, 2, 0.1);
  s.index[5] = 1.0;
  EXPECT_THROW(sim.set_state(s), InvalidInput);
  s = state_at(p, 2, 0.1);
  s.real.pop_back();
  EXPECT_THROW(sim.set_state(s), InvalidInput);
  s = state_at(p, 2, 0.1);
  s.index[1] = 0.5;
  EXPECT_THROW(sim.set_state(s), InvalidInput);
}

TEST(TaskFile, RoundTrip) {
  TaskSampler sampler(LockParams::short_horizon(), Rng(20));
  std::vector<LockParams> tasks{sampler.sample(), sampler.sample(), sampler.sample()};
  std::stringstream ss;
  write_tasks(ss, tasks);
  std::stringstream withcomment;
  withcomment << "# three tasks\n\n" << ss.str();
  EXPECT_EQ(read_tasks(withcomment), tasks);
}

TEST(TaskFile, RejectsMalformedLine) {
  std::stringstream ss("20 10 20 20 0.2 1 -1\n");
  EXPECT_THROW(read_tasks(ss), InvalidInput);
}
