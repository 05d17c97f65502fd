#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dogfight/engagement.hpp"
#include "dogfight/episode_log.hpp"
#include "dogfight/hierarchy.hpp"
#include "dogfight/sac.hpp"

namespace dogfight {

class ArenaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// splitmix64 step: advances `state` and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);
/// Seed derived from a base seed and up to three stream coordinates.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

enum class Regime { cz_wide, wez_offense, wez_defense, neutral };
std::string_view to_string(Regime r);
Regime regime_from_string(std::string_view s);

/// Initial-condition envelope.
struct IcConfig {
  double horizontal_range{12000.0};  ///< cz_wide red offset per horizontal axis, +-
  double altitude_min{5000.0};
  double altitude_max{25000.0};
  double speed_min{300.0};
  double speed_max{800.0};
  double max_pitch_deg{30.0};
  double min_separation{1000.0};  ///< cz_wide rejection threshold
  double neutral_separation{6000.0};
  int max_retries{1000};

  void validate() const;
};

struct InitialCondition {
  AircraftState blue;
  AircraftState red;
  Regime regime{Regime::neutral};
};

/// State flying along its nose at `speed` with the throttle trimmed for level flight.
AircraftState posed_state(const Vec3& position, const EulerAngles& attitude, double speed,
                          const DynamicsConfig& dynamics = {});

InitialCondition sample_ic(Regime regime, std::mt19937_64& rng, const IcConfig& config = {},
                           const DynamicsConfig& dynamics = {});

/// An agent flying one side of an engagement at 50 Hz.
class Pilot {
 public:
  virtual ~Pilot() = default;
  virtual std::string name() const = 0;
  /// Called before each episode.
  virtual void reset(std::uint64_t seed) = 0;
  virtual ControlInput act(const EngagementState& eng, Side side) = 0;
  /// Non-null for hierarchical pilots.
  virtual const HierarchicalAgent* hierarchy() const { return nullptr; }
};

/// Random maneuvering: each control follows u <- rho u + sqrt(1 - rho^2) sigma xi,
/// xi ~ N(0, 1), clamped to its range. Throttle walks on [0, 1] around 0.5.
/// Below `guard_altitude` the walk is overridden by a wings-level pull-up; a
/// guard of 0 disables it.
class RandyPilot : public Pilot {
 public:
  explicit RandyPilot(double rho = 0.98, double sigma = 0.6, double guard_altitude = 4000.0);
  std::string name() const override { return "randy"; }
  void reset(std::uint64_t seed) override;
  ControlInput act(const EngagementState& eng, Side side) override;

 private:
  double rho_;
  double sigma_;
  double guard_altitude_;
  std::mt19937_64 rng_;
  std::array<double, 4> walk_{};
};

/// Full throttle, wings level, altitude captured at the first step held by
/// pitch feedback; heading is left untouched.
class LevelFlierPilot : public Pilot {
 public:
  std::string name() const override { return "level_flier"; }
  void reset(std::uint64_t seed) override;
  ControlInput act(const EngagementState& eng, Side side) override;

 private:
  bool captured_{false};
  double target_altitude_{0.0};
};

/// One SAC policy. Deterministic unless `stochastic`.
class PolicyPilot : public Pilot {
 public:
  PolicyPilot(std::string name, sac::ActorSnapshot policy, bool stochastic = false);
  std::string name() const override { return name_; }
  void reset(std::uint64_t seed) override;
  ControlInput act(const EngagementState& eng, Side side) override;

 private:
  std::string name_;
  sac::ActorSnapshot policy_;
  bool stochastic_;
  std::mt19937_64 rng_;
};

/// Selector plus frozen low-level policies, all deterministic.
class HierarchicalPilot : public Pilot {
 public:
  HierarchicalPilot(std::string name, HierarchicalAgent agent);
  std::string name() const override { return name_; }
  void reset(std::uint64_t seed) override;
  ControlInput act(const EngagementState& eng, Side side) override;
  const HierarchicalAgent* hierarchy() const override { return &agent_; }
  HierarchicalAgent& agent() { return agent_; }

 private:
  std::string name_;
  HierarchicalAgent agent_;
};

/// "randy" or "level_flier".
std::unique_ptr<Pilot> make_scripted_pilot(std::string_view kind);
bool is_scripted_pilot(std::string_view kind);

struct EpisodeOptions {
  EngagementConfig engagement;
  bool record_steps{true};
  std::string config_hash;
};

/// Plays one episode to its terminal state. A pilot whose controls are
/// non-finite, or whose policy throws, forfeits.
EpisodeLog run_episode(Pilot& blue, Pilot& red, const InitialCondition& ic, std::uint64_t seed,
                       const EpisodeOptions& options = {});

struct AgentEntry {
  std::string name;
  std::function<std::unique_ptr<Pilot>()> make;
};

struct PairResult {
  int blue{0};  ///< index into the agent list
  int red{0};
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> log_hashes;
  int blue_wins{0};
  int red_wins{0};
  int draws{0};
  double blue_reward_sum{0.0};
  double red_reward_sum{0.0};
};

struct Standing {
  std::string name;
  int played{0};
  int wins{0};
  int losses{0};
  int draws{0};
  double reward_sum{0.0};

  double mean_reward() const { return played ? reward_sum / played : 0.0; }
  double win_rate() const { return played ? static_cast<double>(wins) / played : 0.0; }
};

struct Standings {
  std::vector<Standing> table;
  std::vector<PairResult> pairs;
  std::string config_hash;
  std::uint64_t seed{0};

  /// N x N matrix: cell (i, j) is "W-L-D" of agent i against agent j over both colours.
  std::string format_matrix() const;
  std::string format_table() const;
  /// Machine-readable record of every pair and standing.
  std::string to_json() const;
};

struct RoundRobinOptions {
  int episodes_per_pair{10};
  std::uint64_t seed{0};
  Regime regime{Regime::cz_wide};
  IcConfig ic;
  EpisodeOptions episode;
  bool self_play{false};
  /// Optional per-episode callback (e.g. to write logs).
  std::function<void(const EpisodeLog&)> on_episode;
};

/// Every ordered pair (i as blue, j as red) plays `episodes_per_pair` episodes.
Standings round_robin(const std::vector<AgentEntry>& agents, const RoundRobinOptions& options);

struct EvalOptions {
  int episodes{200};  ///< per opponent
  std::uint64_t seed{0};
  Regime regime{Regime::cz_wide};
  IcConfig ic;
  EpisodeOptions episode;
  std::function<void(const EpisodeLog&)> on_episode;
};

/// Result of one agent (flying blue) against one opponent.
struct EvalSummary {
  std::string opponent;
  int episodes{0};
  int wins{0};
  int losses{0};
  int draws{0};
  double reward_sum{0.0};
  /// Per-episode utilization rows of a hierarchical agent.
  std::vector<std::vector<double>> utilization;
  std::vector<std::string> log_hashes;

  double win_rate() const { return episodes ? static_cast<double>(wins) / episodes : 0.0; }
  double mean_reward() const { return episodes ? reward_sum / episodes : 0.0; }
};

/// Seeded evaluation: episode k against opponent j uses seed
/// derive_seed(seed, 1000 + j, k) for both its initial condition and pilots.
std::vector<EvalSummary> evaluate(const AgentEntry& agent, const std::vector<AgentEntry>& opponents,
                                  const EvalOptions& options);

/// Wins, losses and draws summed over opponents.
EvalSummary pooled(const std::vector<EvalSummary>& rows);

}  // namespace dogfight
