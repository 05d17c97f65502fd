#include <gtest/gtest.h>

#include <set>

#include "dogfight/config.hpp"

namespace dogfight {
namespace {

TEST(Config, DeskDefaults) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.profile, "desk");
  EXPECT_EQ(c.low_sac.hidden, (std::vector<int>{128}));
  EXPECT_EQ(c.replay_capacity, 100000u);
  EXPECT_EQ(c.train_steps, 100000);
  EXPECT_EQ(c.engagement.health_scale, 1.0);
  EXPECT_EQ(c.train_health_scale, 10.0);
  EXPECT_FLOAT_EQ(c.low_sac.entropy_target, -4.0f);
  EXPECT_FLOAT_EQ(c.selector_sac.entropy_target, -3.0f);
  EXPECT_EQ(c.match_state_hz, 20);
}

TEST(Config, PaperScaleProfileAppliesBeforeOverrides) {
  // The profile key selects the base even when it comes after an override.
  const RunConfig c = parse_config("sac.batch_size = 64\nprofile = paper-scale\n");
  EXPECT_EQ(c.profile, "paper-scale");
  EXPECT_EQ(c.low_sac.hidden, (std::vector<int>{12288}));
  EXPECT_EQ(c.selector_sac.hidden, (std::vector<int>{7168}));
  EXPECT_EQ(c.replay_capacity, 5000000u);
  EXPECT_EQ(c.low_sac.batch_size, 64);
}

TEST(Config, ParsesEveryValueKind) {
  const RunConfig c = parse_config(
      "# comment line\n"
      "seed = 42   # trailing comment\n"
      "sac.hidden = 64, 32\n"
      "sac.learn_alpha = off\n"
      "engagement.reward_averaging = integral\n"
      "train.opponents = randy,level_flier\n"
      "eval.regime = neutral\n"
      "engagement.max_duration = 120\n");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.low_sac.hidden, (std::vector<int>{64, 32}));
  EXPECT_FALSE(c.low_sac.learn_alpha);
  EXPECT_EQ(c.engagement.reward_averaging, RewardAveraging::integral);
  EXPECT_EQ(c.train_opponents, (std::vector<std::string>{"randy", "level_flier"}));
  EXPECT_EQ(c.eval_regime, "neutral");
  EXPECT_EQ(c.engagement.max_steps(), 6000);
}

void expect_error(const std::string& text, const std::string& key, int line) {
  try {
    parse_config(text);
    ADD_FAILURE() << "accepted: " << text;
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), key) << e.what();
    EXPECT_EQ(e.line(), line) << e.what();
  }
}

TEST(Config, ErrorsNameKeyAndLine) {
  expect_error("seed = 1\nbogus.key = 3\n", "bogus.key", 2);
  expect_error("\n\nsac.gamma = 1.5\n", "sac.gamma", 3);
  expect_error("sac.batch_size = 2.5\n", "sac.batch_size", 1);
  expect_error("sac.learn_alpha = maybe\n", "sac.learn_alpha", 1);
  expect_error("eval.regime = furball\n", "eval.regime", 1);
  expect_error("train.opponents = randy,,level_flier\n", "train.opponents", 1);
  expect_error("train.opponents = ace\n", "train.opponents", 1);
  expect_error("sac.hidden = 0\n", "sac.hidden", 1);
  expect_error("engagement.health_scale = 0.5\n", "engagement.health_scale", 1);
  expect_error("dynamics.max_speed = nan\n", "dynamics.max_speed", 1);
  expect_error("seed 42\n", "", 1);
  expect_error("profile = huge\n", "profile", 1);
}

TEST(Config, CrossFieldValidation) {
  // Each value is in range on its own; together they are rejected.
  EXPECT_THROW(parse_config("sac.log_std_min = 5\nsac.log_std_max = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("ic.altitude_min = 20000\nic.altitude_max = 10000\n"), ConfigError);
}

TEST(Config, CanonicalTextCoversEveryKeyAndRoundTrips) {
  RunConfig c = parse_config("seed = 9\nsac.hidden = 32,16\nshaping.plateau = true\n");
  const std::string text = canonical_text(c);
  std::set<std::string> keys;
  for (const auto& k : config_keys()) {
    EXPECT_TRUE(keys.insert(k.key).second) << "duplicate " << k.key;
    EXPECT_NE(text.find(k.key + " = "), std::string::npos) << k.key;
  }
  const RunConfig back = parse_config(text);
  EXPECT_EQ(canonical_text(back), text);
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 64u);
}

TEST(Config, HashChangesWithAnyKey) {
  const std::string base = config_hash(parse_config(""));
  EXPECT_NE(config_hash(parse_config("seed = 1\n")), base);
  EXPECT_NE(config_hash(parse_config("shaping.deck_gain = 0.123\n")), base);
  EXPECT_EQ(config_hash(parse_config("seed = 0\n")), base);
}

TEST(Config, DerivedOptions) {
  const RunConfig c = parse_config("seed = 5\ntrain.health_scale = 20\ntrain.steps = 1234\nselector.steps = 77\n");
  const LowTrainOptions lo = c.low_train_options(Profile::as);
  EXPECT_EQ(lo.profile, Profile::as);
  EXPECT_EQ(lo.engagement.health_scale, 20.0);
  EXPECT_EQ(lo.total_steps, 1234);
  EXPECT_EQ(lo.seed, 5u);
  const SelectorTrainOptions so = c.selector_train_options();
  EXPECT_EQ(so.total_steps, 77);
  EXPECT_EQ(so.engagement.health_scale, 20.0);
  EXPECT_FLOAT_EQ(so.sac.entropy_target, -3.0f);
  EXPECT_EQ(c.engagement.health_scale, 1.0);
}

TEST(Config, ApplySetting) {
  RunConfig c;
  apply_setting(c, "matchd.human_side", "blue");
  EXPECT_EQ(c.match_human_side, "blue");
  EXPECT_THROW(apply_setting(c, "matchd.state_hz", "60"), ConfigError);
}

}  // namespace
}  // namespace dogfight
