#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dogfight/dynamics.hpp"
#include "dogfight/sac.hpp"
#include "oracle/reference.hpp"

namespace dogfight::sac {
namespace {

SacConfig small_config() {
  SacConfig c;
  c.hidden = {16};
  c.batch_size = 8;
  return c;
}

std::vector<float> vec(std::initializer_list<float> v) { return v; }

TEST(Replay, RingOverwritesOldest) {
  ReplayBuffer b(3, 1, 1);
  for (int i = 0; i < 5; ++i) {
    b.push(vec({static_cast<float>(i)}), vec({0.0f}), static_cast<float>(i), vec({0.0f}), i == 4);
  }
  EXPECT_EQ(b.size(), 3u);
  EXPECT_EQ(b.total_pushed(), 5u);
  EXPECT_EQ(b.at(0).s[0], 2.0f);
  EXPECT_EQ(b.at(2).r, 4.0f);
  EXPECT_TRUE(b.at(2).done);
  EXPECT_THROW(b.at(3), std::out_of_range);
}

TEST(Replay, RejectsBadTransitions) {
  ReplayBuffer b(3, 2, 1);
  EXPECT_THROW(b.push(vec({1.0f}), vec({0.0f}), 0.0f, vec({0.0f, 0.0f}), false), nn::ShapeError);
  EXPECT_THROW(b.push(vec({1.0f, NAN}), vec({0.0f}), 0.0f, vec({0.0f, 0.0f}), false), SacError);
  std::mt19937_64 rng(1);
  EXPECT_THROW(b.sample(4, rng), SacError);
}

TEST(Replay, SampleIsSeeded) {
  ReplayBuffer b(100, 1, 1);
  for (int i = 0; i < 100; ++i) b.push(vec({static_cast<float>(i)}), vec({0.0f}), 0.0f, vec({0.0f}), false);
  std::mt19937_64 r1(9);
  std::mt19937_64 r2(9);
  EXPECT_EQ(b.sample_indices(32, r1), b.sample_indices(32, r2));
  const Batch batch = b.sample(16, r1);
  EXPECT_EQ(batch.size(), 16);
  EXPECT_EQ(batch.done.size(), 16);
}

TEST(Bundle, LayoutAndDigest) {
  std::mt19937_64 rng(2);
  const PolicyBundle b = PolicyBundle::create(43, 4, small_config(), rng);
  EXPECT_EQ(b.actor.sizes(), (std::vector<int>{43, 16, 8}));
  EXPECT_EQ(b.q1.sizes(), (std::vector<int>{47, 16, 1}));
  EXPECT_TRUE(b.q1 == b.q1_target);
  EXPECT_FALSE(b.q1 == b.q2);
  EXPECT_FLOAT_EQ(b.alpha(), 1.0f);
  PolicyBundle c = b;
  EXPECT_EQ(b.digest(), c.digest());
  c.frozen = true;
  EXPECT_NE(b.digest(), c.digest());
}

TEST(Bundle, TabularNeedsScalarAction) {
  SacConfig c = small_config();
  c.critic_features = CriticFeatures::tabular_sign;
  std::mt19937_64 rng(3);
  EXPECT_THROW(PolicyBundle::create(2, 2, c, rng), SacError);
  const PolicyBundle b = PolicyBundle::create(3, 1, c, rng);
  EXPECT_EQ(b.critic_input_dim(), 6);
}

TEST(Config, Validation) {
  SacConfig c;
  c.gamma = 1.5f;
  EXPECT_THROW(c.validate(), SacError);
  c = {};
  c.log_std_min = 3.0f;
  EXPECT_THROW(c.validate(), SacError);
  c = {};
  c.hidden = {};
  EXPECT_NO_THROW(c.validate());
}

TEST(Head, LogProbMatchesDensity) {
  std::mt19937_64 rng(4);
  const PolicyBundle b = PolicyBundle::create(3, 2, small_config(), rng);
  nn::Matrix out(1, 4);
  out << 0.3f, -0.2f, -0.5f, 0.1f;
  nn::Matrix z(1, 2);
  z << 0.7f, -1.2f;
  const SquashedHead h = squashed_head(b, out, z);
  double want = 0.0;
  for (int c = 0; c < 2; ++c) {
    const double ls = out(0, 2 + c);
    const double u = out(0, c) + std::exp(ls) * z(0, c);
    EXPECT_NEAR(h.action(0, c), std::tanh(u), 1e-6);
    want += -0.5 * z(0, c) * z(0, c) - ls - 0.5 * std::log(2.0 * dogfight::kPi) - oracle::log_sech_sq(u);
  }
  EXPECT_NEAR(h.log_prob[0], want, 1e-5);
}

TEST(Head, LogStdIsClamped) {
  std::mt19937_64 rng(5);
  const PolicyBundle b = PolicyBundle::create(1, 1, small_config(), rng);
  nn::Matrix out(1, 2);
  out << 0.0f, 10.0f;
  const SquashedHead h = squashed_head(b, out, nn::Matrix::Zero(1, 1));
  EXPECT_FLOAT_EQ(h.log_std(0, 0), 2.0f);
  EXPECT_EQ(h.log_std_active(0, 0), 0.0f);
}

TEST(Head, StableForLargePreactivations) {
  EXPECT_NEAR(log_one_minus_tanh_sq(30.0), oracle::log_sech_sq(30.0), 1e-9);
  EXPECT_NEAR(log_one_minus_tanh_sq(-0.3), std::log(1.0 - std::tanh(0.3) * std::tanh(0.3)), 1e-12);
}

TEST(Action, DeterministicWithoutRng) {
  std::mt19937_64 rng(6);
  const PolicyBundle b = PolicyBundle::create(3, 2, small_config(), rng);
  const std::vector<float> s{0.1f, 0.2f, 0.3f};
  const ActionSample a = sample_action(b, s, nullptr);
  const ActionSample c = sample_action_with_noise(b, s, std::vector<float>{0.0f, 0.0f});
  EXPECT_EQ(a.action, c.action);
  for (float v : a.action) EXPECT_LE(std::abs(v), 1.0f);
}

TEST(Bellman, TerminalDropsBootstrap) {
  EXPECT_FLOAT_EQ(bellman_target(1.0f, true, 0.9f, 10.0f), 1.0f);
  EXPECT_FLOAT_EQ(bellman_target(1.0f, false, 0.9f, 10.0f), 10.0f);
}

TEST(Targets, SoftValueUsesMinimumAndEntropy) {
  SacConfig c = small_config();
  c.initial_alpha = 0.5f;
  std::mt19937_64 rng(7);
  PolicyBundle b = PolicyBundle::create(2, 1, c, rng);
  Batch batch;
  batch.s = nn::Matrix::Zero(1, 2);
  batch.a = nn::Matrix::Zero(1, 1);
  batch.s_next = nn::Matrix::Ones(1, 2);
  batch.r = Eigen::VectorXf::Constant(1, 0.25f);
  batch.done = Eigen::VectorXf::Zero(1);
  nn::Matrix z(1, 1);
  z << 0.4f;
  const Eigen::VectorXf y = q_target(b, batch, z);
  const SquashedHead h = squashed_head(b, b.actor.forward_batch(batch.s_next), z);
  const nn::Matrix x = critic_inputs(b, batch.s_next, h.action);
  const float q = std::min(b.q1_target.forward_batch(x)(0, 0), b.q2_target.forward_batch(x)(0, 0));
  EXPECT_NEAR(y[0], 0.25f + c.gamma * (q - 0.5f * h.log_prob[0]), 1e-5);
}

TEST(Learner, FrozenBundleRefusesUpdates) {
  std::mt19937_64 rng(8);
  PolicyBundle b = PolicyBundle::create(2, 1, small_config(), rng);
  b.frozen = true;
  SacLearner l(b, small_config(), 1);
  ReplayBuffer buf(10, 2, 1);
  EXPECT_THROW(l.train_step(buf), FrozenBundleError);
  EXPECT_THROW(l.update_targets(), FrozenBundleError);
}

TEST(Learner, WaitsForOneBatch) {
  std::mt19937_64 rng(9);
  SacLearner l(PolicyBundle::create(2, 1, small_config(), rng), small_config(), 1);
  ReplayBuffer buf(10, 2, 1);
  buf.push(vec({0, 0}), vec({0}), 0.0f, vec({0, 0}), false);
  EXPECT_TRUE(l.train_step(buf).skipped);
  EXPECT_EQ(l.updates(), 0);
}

TEST(Learner, TrainStepIsDeterministic) {
  auto run = [] {
    std::mt19937_64 rng(10);
    SacLearner l(PolicyBundle::create(2, 1, small_config(), rng), small_config(), 77);
    ReplayBuffer buf(64, 2, 1);
    for (int i = 0; i < 64; ++i) {
      const float s = static_cast<float>(i) / 64.0f;
      buf.push(vec({s, -s}), vec({s - 0.5f}), s, vec({-s, s}), i % 10 == 0);
    }
    for (int i = 0; i < 20; ++i) l.train_step(buf);
    return l.bundle().digest();
  };
  EXPECT_EQ(run(), run());
}

TEST(Learner, HardTargetsWithIntervalAndTauOne) {
  SacConfig c = small_config();
  c.tau = 1.0f;
  c.target_update_interval = 3;
  std::mt19937_64 rng(11);
  SacLearner l(PolicyBundle::create(2, 1, c, rng), c, 3);
  ReplayBuffer buf(64, 2, 1);
  for (int i = 0; i < 64; ++i) buf.push(vec({0.1f * i, 0.0f}), vec({0.0f}), 1.0f, vec({0.0f, 0.1f}), false);
  l.train_step(buf);
  EXPECT_FALSE(l.bundle().q1 == l.bundle().q1_target);
  l.train_step(buf);
  l.train_step(buf);
  EXPECT_TRUE(l.bundle().q1 == l.bundle().q1_target);
  EXPECT_TRUE(l.bundle().q2 == l.bundle().q2_target);
}

TEST(Learner, FixedAlphaStaysFixed) {
  SacConfig c = small_config();
  c.learn_alpha = false;
  c.initial_alpha = 0.2f;
  std::mt19937_64 rng(12);
  SacLearner l(PolicyBundle::create(2, 1, c, rng), c, 3);
  Batch b;
  b.s = nn::Matrix::Random(32, 2);
  for (int i = 0; i < 10; ++i) l.update_alpha(b);
  EXPECT_FLOAT_EQ(l.bundle().alpha(), 0.2f);
}

}  // namespace
}  // namespace dogfight::sac
