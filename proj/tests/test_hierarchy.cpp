#include <gtest/gtest.h>

#include <memory>
#include <random>
#include <vector>

#include "dogfight/arena.hpp"
#include "dogfight/hierarchy.hpp"
#include "dogfight/training.hpp"

namespace dogfight {
namespace {

sac::ActorSnapshot random_policy(int obs_dim, int act_dim, std::uint64_t seed) {
  sac::SacConfig c;
  c.hidden = {8};
  std::mt19937_64 rng(seed);
  auto b = std::make_shared<sac::PolicyBundle>(sac::PolicyBundle::create(obs_dim, act_dim, c, rng));
  b->frozen = true;
  return b;
}

std::vector<sac::ActorSnapshot> lows(int n) {
  std::vector<sac::ActorSnapshot> out;
  for (int i = 0; i < n; ++i) out.push_back(random_policy(obs::size, kLowLevelActionDim, 100 + static_cast<std::uint64_t>(i)));
  return out;
}

EngagementState sample_engagement(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const InitialCondition ic = sample_ic(Regime::neutral, rng);
  return make_engagement(ic.blue, ic.red);
}

TEST(Argmax, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax_lowest(std::vector<float>{0.5f, 0.5f, 0.1f}), 0);
  EXPECT_EQ(argmax_lowest(std::vector<float>{-1.0f, 0.2f, 0.2f}), 1);
  EXPECT_THROW(argmax_lowest(std::vector<float>{}), HierarchyError);
  EXPECT_THROW(argmax_lowest(std::vector<float>{0.0f, NAN}), HierarchyError);
}

TEST(Controls, ActionMappingRoundTrip) {
  const ControlInput u = action_to_controls(std::vector<float>{0.5f, -0.25f, 1.0f, -1.0f});
  EXPECT_EQ(u, (ControlInput{0.5, -0.25, 1.0, 0.0}));
  const auto a = controls_to_action({0.1, 0.2, 0.3, 0.75});
  EXPECT_FLOAT_EQ(a[3], 0.5f);
  EXPECT_THROW(action_to_controls(std::vector<float>{0.0f}), HierarchyError);
}

TEST(Utilization, FractionsSumToOne) {
  const std::vector<int> d{0, 2, 2, 1, 2};
  const auto u = utilization(d, 3);
  EXPECT_DOUBLE_EQ(u[0], 0.2);
  EXPECT_DOUBLE_EQ(u[1], 0.2);
  EXPECT_DOUBLE_EQ(u[2], 0.6);
  EXPECT_THROW(utilization(std::vector<int>{3}, 3), HierarchyError);
}

TEST(SelectorReward, SparsePlusDense) {
  StepEvents ev;
  ev.dealt_by_blue = 0.01;
  ev.dealt_by_red = 0.004;
  GeometrySnapshot g;
  g.track_angle = kPi / 2.0;
  EXPECT_NEAR(selector_reward(ev, Side::blue, g, 0.1, 0.02), 0.006 + 0.1 * 0.5 * 0.02, 1e-15);
  EXPECT_NEAR(selector_reward(ev, Side::red, g, 0.0, 0.02), -0.006, 1e-15);
}

TEST(Agent, DecidesOnlyEveryFifthStep) {
  HierarchicalAgent agent(random_policy(obs::size, 3, 1), lows(3));
  EngagementState eng = sample_engagement(2);
  const EngagementConfig cfg;
  const ControlInput hold{0.0, 0.0, 0.0, 0.5};
  for (int k = 0; k < 40 && !eng.terminal(); ++k) {
    // Scores rotate each step; only on-grid steps may adopt them.
    std::vector<float> scores(3, 0.0f);
    scores[static_cast<std::size_t>(k % 3)] = 1.0f;
    const auto st = agent.act_with_scores(eng, Side::blue, scores);
    EXPECT_EQ(st.new_decision, k % kSelectionInterval == 0) << "step " << k;
    const int expected = (k - k % kSelectionInterval) % 3;
    EXPECT_EQ(agent.decision()->chosen_index, expected) << "step " << k;
    EXPECT_EQ(agent.decision()->hold_steps_remaining, kSelectionInterval - 1 - k % kSelectionInterval);
    step_engagement(eng, st.controls, hold, cfg);
  }
  EXPECT_EQ(agent.decisions().size(), 8u);
}

TEST(Agent, RepeatedCallOnSameStepDoesNotRedecide) {
  HierarchicalAgent agent(random_policy(obs::size, 2, 3), lows(2));
  const EngagementState eng = sample_engagement(4);
  agent.act(eng, Side::blue);
  const auto again = agent.act(eng, Side::blue);
  EXPECT_FALSE(again.new_decision);
  EXPECT_EQ(agent.decisions().size(), 1u);
}

TEST(Agent, LowLevelRunsDeterministically) {
  const auto ls = lows(2);
  HierarchicalAgent agent(random_policy(obs::size, 2, 5), ls);
  const EngagementState eng = sample_engagement(6);
  const auto st = agent.act_with_scores(eng, Side::blue, std::vector<float>{0.0f, 1.0f});
  const auto direct = sac::sample_action(*ls[1], observation(eng, Side::blue), nullptr);
  EXPECT_EQ(st.low_level_action, direct.action);
}

TEST(Agent, ResetClearsDecisions) {
  HierarchicalAgent agent(random_policy(obs::size, 2, 7), lows(2));
  agent.act(sample_engagement(8), Side::blue);
  agent.reset();
  EXPECT_TRUE(agent.decisions().empty());
  EXPECT_FALSE(agent.decision().has_value());
}

TEST(Agent, RejectsMismatchedSelector) {
  EXPECT_THROW(HierarchicalAgent(random_policy(obs::size, 3, 9), lows(2)), HierarchyError);
  EXPECT_THROW(HierarchicalAgent(random_policy(obs::size, 2, 9), {}), HierarchyError);
}

TEST(Episode, SelectionsRecordedOnGrid) {
  HierarchicalPilot blue("h", HierarchicalAgent(random_policy(obs::size, 3, 10), lows(3)));
  RandyPilot red;
  std::mt19937_64 rng(11);
  const InitialCondition ic = sample_ic(Regime::cz_wide, rng);
  const EpisodeLog log = run_episode(blue, red, ic, 12);
  ASSERT_FALSE(log.steps.empty());
  int selections = 0;
  for (const auto& r : log.steps) {
    // Records carry the post-step index, so a decision at step k shows at k + 1.
    EXPECT_EQ(r.blue_selection >= 0, (r.step - 1) % kSelectionInterval == 0) << r.step;
    EXPECT_EQ(r.red_selection, -1);
    if (r.blue_selection >= 0) ++selections;
  }
  ASSERT_TRUE(log.utilization_blue.has_value());
  double sum = 0.0;
  for (double v : *log.utilization_blue) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(selections, static_cast<int>((log.step_count + kSelectionInterval - 1) / kSelectionInterval));
}

TEST(SelectorTraining, LeavesLowLevelsUntouched) {
  const auto ls = lows(3);
  std::vector<std::string> before;
  for (const auto& l : ls) before.push_back(l->digest());
  SelectorTrainOptions o;
  o.sac.hidden = {16};
  o.sac.batch_size = 16;
  o.total_steps = 1500;
  o.warmup_decisions = 50;
  o.seed = 3;
  const SelectorTrainResult r = train_selector(ls, o);
  for (std::size_t i = 0; i < ls.size(); ++i) EXPECT_EQ(ls[i]->digest(), before[i]);
  EXPECT_GT(r.counters.updates, 0);
  ASSERT_FALSE(r.utilization.empty());
  for (const auto& row : r.utilization) {
    double sum = 0.0;
    for (double v : row) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(SelectorTraining, RejectsTrainableLowLevels) {
  sac::SacConfig c;
  c.hidden = {8};
  std::mt19937_64 rng(4);
  auto trainable = std::make_shared<sac::PolicyBundle>(sac::PolicyBundle::create(obs::size, 4, c, rng));
  SelectorTrainOptions o;
  o.total_steps = 10;
  EXPECT_THROW(train_selector({trainable, trainable}, o), std::exception);
}

}  // namespace
}  // namespace dogfight
