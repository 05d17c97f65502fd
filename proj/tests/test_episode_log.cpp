#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dogfight/arena.hpp"
#include "dogfight/episode_log.hpp"

namespace dogfight {
namespace {

EpisodeLog sample_log(std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  const InitialCondition ic = sample_ic(Regime::wez_offense, rng);
  RandyPilot blue;
  LevelFlierPilot red;
  EpisodeOptions o;
  o.engagement.max_duration = 10.0;
  o.config_hash = "abc123";
  return run_episode(blue, red, ic, seed, o);
}

TEST(Ndjson, HeaderStepsFooter) {
  const EpisodeLog log = sample_log();
  const std::string text = to_ndjson(log);
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), log.steps.size() + 2);
  EXPECT_EQ(lines.front().rfind("{\"record\":\"header\"", 0), 0u);
  EXPECT_EQ(lines[1].rfind("{\"record\":\"step\"", 0), 0u);
  EXPECT_EQ(lines.back().rfind("{\"record\":\"footer\"", 0), 0u);
  EXPECT_EQ(text.back(), '\n');
}

TEST(Ndjson, RoundTripIsByteExact) {
  const EpisodeLog log = sample_log();
  const std::string text = to_ndjson(log);
  std::istringstream in(text);
  const EpisodeLog back = read_ndjson(in);
  EXPECT_EQ(to_ndjson(back), text);
  EXPECT_EQ(back.steps.size(), log.steps.size());
  EXPECT_EQ(back.outcome, log.outcome);
  EXPECT_EQ(back.reward_blue, log.reward_blue);
  EXPECT_EQ(back.blue_initial, log.blue_initial);
  EXPECT_EQ(back.config_hash, "abc123");
}

TEST(Ndjson, UtilizationSurvives) {
  EpisodeLog log = sample_log();
  log.utilization_blue = std::vector<double>{0.25, 0.75};
  std::istringstream in(to_ndjson(log));
  const EpisodeLog back = read_ndjson(in);
  ASSERT_TRUE(back.utilization_blue.has_value());
  EXPECT_EQ(*back.utilization_blue, (std::vector<double>{0.25, 0.75}));
  EXPECT_FALSE(back.utilization_red.has_value());
}

TEST(Ndjson, RejectsTruncatedAndForeignInput) {
  const std::string text = to_ndjson(sample_log());
  std::istringstream truncated(text.substr(0, text.rfind("{\"record\":\"footer\"")));
  EXPECT_THROW(read_ndjson(truncated), LogError);
  std::istringstream junk("not json\n");
  EXPECT_THROW(read_ndjson(junk), LogError);
  std::istringstream foreign("{\"record\":\"header\",\"format\":\"other\",\"version\":1}\n");
  EXPECT_THROW(read_ndjson(foreign), LogError);
}

TEST(Hash, IsSha256OfSerialization) {
  const EpisodeLog log = sample_log();
  const std::string h = log_hash(log);
  EXPECT_EQ(h.size(), 64u);
  EXPECT_EQ(h, log_hash(sample_log()));
  EXPECT_NE(h, log_hash(sample_log(4)));
}

TEST(Timeline, ShowsEventsAndResult) {
  const EpisodeLog log = sample_log();
  const std::string t = render_timeline(log, 100);
  EXPECT_NE(t.find("episode seed 3"), std::string::npos);
  EXPECT_NE(t.find("result "), std::string::npos);
  // The wez_offense start puts blue's gun on red at step 1.
  EXPECT_NE(t.find("gunsnap:blue"), std::string::npos);
  EXPECT_NE(t.find("terminal:"), std::string::npos);
}

}  // namespace
}  // namespace dogfight
