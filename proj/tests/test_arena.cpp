#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "dogfight/arena.hpp"

namespace dogfight {
namespace {

TEST(Seeds, DeriveIsStableAndSpreads) {
  EXPECT_EQ(derive_seed(7, 1, 2, 3), derive_seed(7, 1, 2, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(42, a, b));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(Seeds, SplitmixKnownValue) {
  // First output of splitmix64 seeded with 0.
  std::uint64_t s = 0;
  EXPECT_EQ(splitmix64(s), 0xE220A8397B1DCDAFULL);
}

TEST(Regimes, StringRoundTrip) {
  for (Regime r : {Regime::cz_wide, Regime::wez_offense, Regime::wez_defense, Regime::neutral}) {
    EXPECT_EQ(regime_from_string(to_string(r)), r);
  }
  EXPECT_THROW(regime_from_string("furball"), ArenaError);
}

TEST(InitialConditions, CzWideRespectsEnvelope) {
  std::mt19937_64 rng(1);
  const IcConfig c;
  for (int i = 0; i < 200; ++i) {
    const InitialCondition ic = sample_ic(Regime::cz_wide, rng, c);
    EXPECT_GE((ic.red.position - ic.blue.position).norm(), c.min_separation);
    for (const AircraftState* a : {&ic.blue, &ic.red}) {
      EXPECT_GE(a->altitude(), c.altitude_min);
      EXPECT_LE(a->altitude(), c.altitude_max);
      EXPECT_GE(a->speed(), c.speed_min - 1e-9);
      EXPECT_LE(a->speed(), c.speed_max + 1e-9);
      EXPECT_LE(std::abs(a->attitude.pitch), c.max_pitch_deg * kPi / 180.0 + 1e-12);
    }
    EXPECT_EQ(ic.blue.position.x, 0.0);
    EXPECT_EQ(ic.blue.position.y, 0.0);
    EXPECT_LE(std::abs(ic.red.position.x), c.horizontal_range);
    EXPECT_LE(std::abs(ic.red.position.y), c.horizontal_range);
  }
}

TEST(InitialConditions, WezOffenseStartsInsideTheGunCone) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const InitialCondition ic = sample_ic(Regime::wez_offense, rng);
    const GeometrySnapshot g = geometry(ic.blue, ic.red);
    EXPECT_GE(g.range, 500.0 - 1e-6);
    EXPECT_LE(g.range, 3000.0 + 1e-6);
    EXPECT_LT(g.track_angle, 1e-6);
    EXPECT_GT(wez_damage_rate(g), 0.0);
  }
}

TEST(InitialConditions, WezDefenseIsTheSwap) {
  std::mt19937_64 a(3);
  std::mt19937_64 b(3);
  const InitialCondition off = sample_ic(Regime::wez_offense, a);
  const InitialCondition def = sample_ic(Regime::wez_defense, b);
  EXPECT_EQ(def.blue.position, off.red.position);
  EXPECT_EQ(def.red.position, off.blue.position);
  EXPECT_EQ(def.regime, Regime::wez_defense);
}

TEST(InitialConditions, NeutralIsLineAbreast) {
  std::mt19937_64 rng(4);
  const InitialCondition ic = sample_ic(Regime::neutral, rng);
  const GeometrySnapshot g = geometry(ic.blue, ic.red);
  EXPECT_NEAR(g.range, IcConfig{}.neutral_separation, 1e-6);
  EXPECT_NEAR(g.track_angle, kPi / 2.0, 1e-9);
  EXPECT_NEAR(ic.blue.attitude.yaw, ic.red.attitude.yaw, 1e-15);
}

TEST(InitialConditions, ImpossibleSeparationExhaustsRetries) {
  IcConfig c;
  c.horizontal_range = 10.0;
  c.altitude_min = c.altitude_max = 10000.0;
  c.min_separation = 1000.0;
  c.max_retries = 20;
  std::mt19937_64 rng(5);
  EXPECT_THROW(sample_ic(Regime::cz_wide, rng, c), ArenaError);
}

TEST(Pilots, RandyIsSeeded) {
  std::mt19937_64 rng(6);
  const InitialCondition ic = sample_ic(Regime::neutral, rng);
  const EngagementState eng = make_engagement(ic.blue, ic.red);
  RandyPilot a;
  RandyPilot b;
  a.reset(9);
  b.reset(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.act(eng, Side::blue), b.act(eng, Side::blue));
  b.reset(10);
  a.reset(9);
  EXPECT_NE(a.act(eng, Side::blue), b.act(eng, Side::blue));
}

TEST(Pilots, RandyGuardPullsUpWhenLowAndSinking) {
  AircraftState low = level_flight_state({0, 0, 3000}, 0.0, 500.0);
  low.velocity.z = -50.0;
  const EngagementState eng = make_engagement(low, level_flight_state({0, 20000, 20000}, 0.0, 500.0));
  RandyPilot p;
  p.reset(1);
  const ControlInput u = p.act(eng, Side::blue);
  EXPECT_EQ(u.elevator, 1.0);
  EXPECT_EQ(u.throttle, 1.0);
}

TEST(Pilots, LevelFlierHoldsAltitude) {
  EngagementConfig cfg;
  EngagementState eng = make_engagement(level_flight_state({0, 0, 12000}, 0.0, 500.0),
                                        level_flight_state({0, 50000, 12000}, 0.0, 500.0), cfg);
  LevelFlierPilot blue;
  LevelFlierPilot red;
  blue.reset(0);
  red.reset(0);
  for (int k = 0; k < 1500; ++k) step_engagement(eng, blue.act(eng, Side::blue), red.act(eng, Side::red), cfg);
  EXPECT_NEAR(eng.blue.altitude(), 12000.0, 200.0);
  EXPECT_FALSE(eng.terminal());
}

TEST(Pilots, ScriptedFactory) {
  EXPECT_TRUE(is_scripted_pilot("randy"));
  EXPECT_TRUE(is_scripted_pilot("level_flier"));
  EXPECT_FALSE(is_scripted_pilot("ace"));
  EXPECT_EQ(make_scripted_pilot("level_flier")->name(), "level_flier");
  EXPECT_THROW(make_scripted_pilot("ace"), ArenaError);
}

class NanPilot : public Pilot {
 public:
  std::string name() const override { return "nan"; }
  void reset(std::uint64_t) override {}
  ControlInput act(const EngagementState&, Side) override { return {NAN, 0.0, 0.0, 0.5}; }
};

class ThrowingPilot : public Pilot {
 public:
  std::string name() const override { return "throws"; }
  void reset(std::uint64_t) override {}
  ControlInput act(const EngagementState&, Side) override { throw std::runtime_error("boom"); }
};

TEST(RunEpisode, NonFiniteControlsForfeit) {
  std::mt19937_64 rng(7);
  const InitialCondition ic = sample_ic(Regime::neutral, rng);
  NanPilot blue;
  RandyPilot red;
  const EpisodeLog log = run_episode(blue, red, ic, 1);
  EXPECT_EQ(log.outcome, Outcome::red_win);
  EXPECT_EQ(log.reason, TerminalReason::forfeit);
  ThrowingPilot red2;
  LevelFlierPilot blue2;
  const EpisodeLog log2 = run_episode(blue2, red2, ic, 1);
  EXPECT_EQ(log2.outcome, Outcome::blue_win);
  EXPECT_EQ(log2.reason, TerminalReason::forfeit);
}

TEST(RunEpisode, RecordsEveryStepAndRewards) {
  std::mt19937_64 rng(8);
  const InitialCondition ic = sample_ic(Regime::wez_offense, rng);
  LevelFlierPilot blue;
  RandyPilot red;
  EpisodeOptions o;
  o.engagement.max_duration = 20.0;
  const EpisodeLog log = run_episode(blue, red, ic, 3, o);
  ASSERT_EQ(static_cast<std::int64_t>(log.steps.size()), log.step_count);
  for (std::size_t i = 0; i < log.steps.size(); ++i) EXPECT_EQ(log.steps[i].step, static_cast<std::int64_t>(i + 1));
  EXPECT_NE(log.outcome, Outcome::ongoing);
  EXPECT_GE(log.reward_blue, 0.0);
  EXPECT_LE(log.reward_blue, 1.0);
  EXPECT_EQ(log.blue_name, "level_flier");
  // A log without per-step records keeps its summary.
  LevelFlierPilot blue2;
  RandyPilot red2;
  o.record_steps = false;
  const EpisodeLog bare = run_episode(blue2, red2, ic, 3, o);
  EXPECT_TRUE(bare.steps.empty());
  EXPECT_EQ(bare.step_count, log.step_count);
  EXPECT_EQ(bare.reward_blue, log.reward_blue);
}

TEST(RunEpisode, SameSeedSameLog) {
  std::mt19937_64 rng(9);
  const InitialCondition ic = sample_ic(Regime::cz_wide, rng);
  auto play = [&] {
    RandyPilot blue;
    RandyPilot red;
    EpisodeOptions o;
    o.engagement.max_duration = 30.0;
    return log_hash(run_episode(blue, red, ic, 17, o));
  };
  EXPECT_EQ(play(), play());
}

std::vector<AgentEntry> scripted() {
  return {{"randy", [] { return make_scripted_pilot("randy"); }},
          {"level_flier", [] { return make_scripted_pilot("level_flier"); }}};
}

TEST(Evaluate, CountsAddUpAndAreSeeded) {
  EvalOptions o;
  o.episodes = 4;
  o.seed = 5;
  o.episode.engagement.max_duration = 20.0;
  const auto agents = scripted();
  int callbacks = 0;
  o.on_episode = [&](const EpisodeLog&) { ++callbacks; };
  const auto rows = evaluate(agents[0], agents, o);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(callbacks, 8);
  for (const auto& r : rows) {
    EXPECT_EQ(r.episodes, 4);
    EXPECT_EQ(r.wins + r.losses + r.draws, 4);
    EXPECT_EQ(r.log_hashes.size(), 4u);
  }
  o.on_episode = nullptr;
  const auto again = evaluate(agents[0], agents, o);
  EXPECT_EQ(again[1].log_hashes, rows[1].log_hashes);
  const EvalSummary p = pooled(rows);
  EXPECT_EQ(p.episodes, 8);
  EXPECT_EQ(p.wins, rows[0].wins + rows[1].wins);
}

TEST(RoundRobin, EveryOrderedPairPlays) {
  RoundRobinOptions o;
  o.episodes_per_pair = 2;
  o.seed = 11;
  o.episode.engagement.max_duration = 10.0;
  const Standings s = round_robin(scripted(), o);
  ASSERT_EQ(s.pairs.size(), 2u);
  ASSERT_EQ(s.table.size(), 2u);
  for (const auto& st : s.table) {
    EXPECT_EQ(st.played, 4);
    EXPECT_EQ(st.wins + st.losses + st.draws, 4);
  }
  EXPECT_EQ(s.table[0].wins, s.table[1].losses);
  EXPECT_NE(s.format_matrix().find("randy"), std::string::npos);
  EXPECT_NE(s.to_json().find("\"pairs\""), std::string::npos);

  o.self_play = true;
  EXPECT_EQ(round_robin(scripted(), o).pairs.size(), 4u);
  EXPECT_EQ(round_robin(scripted(), o).to_json(), round_robin(scripted(), o).to_json());
}

}  // namespace
}  // namespace dogfight
