#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dogfight/engagement.hpp"
#include "oracle/reference.hpp"

namespace dogfight {
namespace {

AircraftState at(const Vec3& p, double heading, double speed = 500.0) {
  return level_flight_state(p, heading, speed);
}

TEST(Geometry, TailChase) {
  // Blue 1500 ft behind red, both heading north.
  const GeometrySnapshot g = geometry(at({0, 0, 10000}, 0.0, 600.0), at({1500, 0, 10000}, 0.0, 500.0));
  EXPECT_NEAR(g.range, 1500.0, 1e-9);
  EXPECT_NEAR(g.track_angle, 0.0, 1e-12);
  EXPECT_NEAR(g.adverse_angle, 0.0, 1e-12);
  EXPECT_NEAR(g.closure_rate, 100.0, 1e-9);
}

TEST(Geometry, HeadOnHasMaxAdverse) {
  const GeometrySnapshot g = geometry(at({0, 0, 10000}, 0.0), at({2000, 0, 10000}, kPi));
  EXPECT_NEAR(g.track_angle, 0.0, 1e-12);
  EXPECT_NEAR(g.adverse_angle, kPi, 1e-9);
  EXPECT_NEAR(g.closure_rate, 1000.0, 1e-6);
}

TEST(Geometry, BeamAspect) {
  const GeometrySnapshot g = geometry(at({0, 0, 10000}, kPi / 2.0), at({1000, 0, 10000}, 0.0));
  EXPECT_NEAR(g.track_angle, kPi / 2.0, 1e-12);
}

TEST(Geometry, CoincidentIsDegenerate) {
  const GeometrySnapshot g = geometry(at({0, 0, 10000}, 0.0), at({0.5, 0, 10000}, 0.0));
  EXPECT_TRUE(g.degenerate);
  EXPECT_EQ(wez_damage_rate(g), 0.0);
}

TEST(Wez, MatchesPiecewiseDefinition) {
  const EngagementConfig cfg;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> r(0.0, 3500.0);
  std::uniform_real_distribution<double> t(0.0, 0.05);
  for (int i = 0; i < 2000; ++i) {
    GeometrySnapshot g;
    g.range = r(rng);
    g.track_angle = t(rng);
    EXPECT_EQ(wez_damage_rate(g, cfg), oracle::wez_rate(g.range, g.track_angle, cfg.cone_half_angle()));
  }
}

TEST(Wez, Boundaries) {
  GeometrySnapshot g;
  g.range = 500.0;
  EXPECT_EQ(wez_damage_rate(g), 1.0);
  g.range = 3000.0;
  EXPECT_EQ(wez_damage_rate(g), 0.0);
  g.range = 499.0;
  EXPECT_EQ(wez_damage_rate(g), 0.0);
  g.range = 1750.0;
  g.track_angle = kPi / 180.0;
  EXPECT_EQ(wez_damage_rate(g), 0.5);
  g.track_angle = std::nextafter(kPi / 180.0, 1.0);
  EXPECT_EQ(wez_damage_rate(g), 0.0);
}

TEST(Config, MaxSteps) {
  EngagementConfig cfg;
  EXPECT_EQ(cfg.max_steps(), 15000);
  cfg.max_duration = 60.0;
  EXPECT_EQ(cfg.max_steps(), 3000);
}

TEST(Config, RejectsHealthScaleBelowOne) {
  EngagementConfig cfg;
  cfg.health_scale = 0.5;
  EXPECT_THROW(cfg.validate(), EngagementError);
}

TEST(Step, TimeoutIsDrawAtLastStep) {
  EngagementConfig cfg;
  cfg.max_duration = 2.0;
  EngagementState eng = make_engagement(at({0, 0, 20000}, 0.0), at({0, 40000, 20000}, 0.0), cfg);
  const ControlInput hold{0.0, 0.0, 0.0, eng.blue.thrust};
  StepEvents ev;
  while (!eng.terminal()) ev = step_engagement(eng, hold, hold, cfg);
  EXPECT_EQ(eng.step_index, 100);
  EXPECT_EQ(ev.reason, TerminalReason::timeout);
  EXPECT_EQ(eng.outcome, Outcome::draw);
  EXPECT_THROW(step_engagement(eng, hold, hold, cfg), EngagementError);
}

TEST(Step, TailShooterDealsDamageEachStep) {
  EngagementConfig cfg;
  cfg.dynamics.gravity_enabled = false;
  EngagementState eng =
      make_engagement(level_flight_state({0, 0, 10000}, 0.0, 500.0, cfg.dynamics),
                      level_flight_state({1000, 0, 10000}, 0.0, 500.0, cfg.dynamics), cfg);
  const ControlInput hold{0.0, 0.0, 0.0, eng.blue.thrust};
  const StepEvents ev = step_engagement(eng, hold, hold, cfg);
  EXPECT_TRUE(ev.gunsnap_blue);
  EXPECT_FALSE(ev.gunsnap_red);
  EXPECT_NEAR(ev.dealt_by_blue, (3000.0 - 1000.0) / 2500.0 * kSimDt, 1e-9);
  EXPECT_NEAR(eng.damage_fraction(Side::red), ev.dealt_by_blue, 1e-15);
  EXPECT_NEAR(eng.red.health, 1.0 - ev.dealt_by_blue, 1e-15);
}

TEST(Step, HealthScaleSlowsKill) {
  EngagementConfig cfg;
  cfg.dynamics.gravity_enabled = false;
  cfg.health_scale = 10.0;
  EngagementState eng =
      make_engagement(level_flight_state({0, 0, 10000}, 0.0, 500.0, cfg.dynamics),
                      level_flight_state({1000, 0, 10000}, 0.0, 500.0, cfg.dynamics), cfg);
  const ControlInput hold{0.0, 0.0, 0.0, eng.blue.thrust};
  step_engagement(eng, hold, hold, cfg);
  EXPECT_NEAR(eng.damage_fraction(Side::red), 0.8 * kSimDt / 10.0, 1e-12);
}

TEST(Step, DamageLandsBeforeHardDeck) {
  // Blue, below the deck, is pitched up onto a nearly dead red. The killing shot
  // counts, so both sides end destroyed and the result is a draw.
  EngagementConfig cfg;
  cfg.dynamics.gravity_enabled = false;
  AircraftState blue = level_flight_state({0, 0, 900}, 0.0, 500.0, cfg.dynamics);
  blue.attitude.pitch = std::atan2(100.0, 1000.0);
  blue.velocity = nose_direction(blue.attitude) * 500.0;
  const AircraftState red = level_flight_state({1000, 0, 1001}, 0.0, 500.0, cfg.dynamics);
  EngagementState eng = make_engagement(blue, red, cfg);
  eng.damage_red = 0.9999;
  const ControlInput hold{0.0, 0.0, 0.0, eng.blue.thrust};
  const StepEvents ev = step_engagement(eng, hold, hold, cfg);
  EXPECT_TRUE(ev.gunsnap_blue);
  EXPECT_TRUE(ev.hard_deck_blue);
  EXPECT_EQ(eng.health(Side::red), 0.0);
  EXPECT_EQ(eng.outcome, Outcome::draw);
  EXPECT_EQ(ev.reason, TerminalReason::hard_deck);
}

TEST(Step, HardDeckLoss) {
  EngagementConfig cfg;
  EngagementState eng = make_engagement(at({0, 0, 990}, 0.0), at({0, 30000, 5000}, 0.0), cfg);
  const ControlInput hold{0.0, 0.0, 0.0, 0.5};
  const StepEvents ev = step_engagement(eng, hold, hold, cfg);
  EXPECT_EQ(eng.outcome, Outcome::red_win);
  EXPECT_EQ(ev.reason, TerminalReason::hard_deck);
  EXPECT_EQ(eng.step_index, 1);
}

TEST(Step, BothBelowDeckIsDraw) {
  EngagementConfig cfg;
  EngagementState eng = make_engagement(at({0, 0, 990}, 0.0), at({0, 30000, 990}, 0.0), cfg);
  const ControlInput hold{0.0, 0.0, 0.0, 0.5};
  const StepEvents ev = step_engagement(eng, hold, hold, cfg);
  EXPECT_EQ(eng.outcome, Outcome::draw);
  EXPECT_EQ(ev.reason, TerminalReason::hard_deck);
  EXPECT_TRUE(ev.became_terminal);
}

TEST(EpisodeReward, MatchesBruteForce) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> curve(1 + static_cast<std::size_t>(u(rng) * 20000));
    double d = 0.0;
    for (auto& c : curve) c = d = std::min(1.0, d + 0.001 * u(rng));
    const double self = u(rng) * 1.2;
    EXPECT_NEAR(episode_reward(curve, self), oracle::episode_reward_bruteforce(curve, self, 300.0), 1e-9);
  }
}

TEST(EpisodeReward, ConstantCurveAveragesToItself) {
  const std::vector<double> curve(15000, 0.4);
  EXPECT_NEAR(episode_reward(curve, 0.0), 0.4, 1e-12);
  EXPECT_NEAR(episode_reward(curve, 0.0, 300.0, RewardAveraging::integral), 120.0, 1e-9);
}

TEST(EpisodeReward, ShortCurveIsPaddedWithFinalValue) {
  // Killed the opponent at t = 1 s: curve ramps 0 -> 1 then holds.
  std::vector<double> curve(51);
  for (int k = 0; k <= 50; ++k) curve[static_cast<std::size_t>(k)] = k / 50.0;
  const double ramp = 0.0 + (49.0 * 50.0 / 2.0) / 50.0;  // sum of k/50 for k < 50
  const double expected = (ramp + (15000 - 50) * 1.0) * kSimDt / 300.0;
  EXPECT_NEAR(episode_reward(curve, 0.0), expected, 1e-12);
}

TEST(EpisodeReward, DestroyedSideScoresZero) {
  const std::vector<double> curve(100, 0.9);
  EXPECT_EQ(episode_reward(curve, 1.0), 0.0);
  EXPECT_GT(episode_reward(curve, 0.999), 0.0);
}

TEST(EpisodeReward, RejectsEmptyCurve) {
  EXPECT_THROW(episode_reward(std::vector<double>{}, 0.0), EngagementError);
}

TEST(Observation, LayoutAndScaling) {
  EngagementConfig cfg;
  EngagementState eng = make_engagement(at({1000, -2000, 15000}, 0.0, 600.0), at({3000, -2000, 15000}, 0.0), cfg);
  const ObservationVector o = observation(eng, Side::blue);
  ASSERT_EQ(o.size(), static_cast<std::size_t>(obs::size));
  EXPECT_FLOAT_EQ(o[obs::own_position], 0.1f);
  EXPECT_FLOAT_EQ(o[obs::own_position + 1], -0.2f);
  EXPECT_FLOAT_EQ(o[obs::own_position + 2], 1.5f);
  EXPECT_FLOAT_EQ(o[obs::own_velocity], 0.6f);
  EXPECT_FLOAT_EQ(o[obs::opp_position], 0.3f);
  EXPECT_FLOAT_EQ(o[obs::own_health], 1.0f);
  EXPECT_FLOAT_EQ(o[obs::opp_health], 1.0f);
  EXPECT_FLOAT_EQ(o[obs::range], 0.2f);
  EXPECT_FLOAT_EQ(o[obs::track_angle], 0.0f);
  EXPECT_FLOAT_EQ(o[obs::closure_rate], 0.1f);
  // Red sees the mirror image.
  const ObservationVector r = observation(eng, Side::red);
  EXPECT_FLOAT_EQ(r[obs::own_position], 0.3f);
  EXPECT_FLOAT_EQ(r[obs::track_angle], 1.0f);
}

TEST(Strings, RoundTrip) {
  EXPECT_EQ(side_from_string(to_string(Side::red)), Side::red);
  EXPECT_EQ(outcome_from_string(to_string(Outcome::blue_win)), Outcome::blue_win);
  EXPECT_THROW(side_from_string("green"), EngagementError);
}

}  // namespace
}  // namespace dogfight
