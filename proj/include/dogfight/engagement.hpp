#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dogfight/dynamics.hpp"

namespace dogfight {

class EngagementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Side { blue, red };
enum class Outcome { ongoing, blue_win, red_win, draw };

inline Side opponent_of(Side s) { return s == Side::blue ? Side::red : Side::blue; }
std::string_view to_string(Side s);
std::string_view to_string(Outcome o);
Side side_from_string(std::string_view s);
Outcome outcome_from_string(std::string_view s);

enum class RewardAveraging { mean, integral };

struct EngagementConfig {
  double wez_min_range{500.0};
  double wez_max_range{3000.0};
  /// Half-angle of the WEZ cone. The 2 degree aperture is read as the full
  /// cone angle, so the default half-angle is 1 degree.
  double wez_cone_half_angle_deg{1.0};
  double hard_deck{1000.0};
  double max_duration{300.0};
  /// Starting health multiplier. Damage rates are unchanged.
  double health_scale{1.0};
  RewardAveraging reward_averaging{RewardAveraging::mean};
  DynamicsConfig dynamics;

  double cone_half_angle() const { return wez_cone_half_angle_deg * kPi / 180.0; }
  std::int64_t max_steps() const;
  void validate() const;
};

/// Relative geometry as seen from `own`.
struct GeometrySnapshot {
  double range{0.0};
  /// Angle between own nose and the line of sight to the opponent.
  double track_angle{0.0};
  /// Angle between the opponent's tail and the line from the opponent to own.
  double adverse_angle{0.0};
  /// -d(range)/dt.
  double closure_rate{0.0};
  double altitude_own{0.0};
  Vec3 los_unit{1.0, 0.0, 0.0};
  bool degenerate{false};
};

GeometrySnapshot geometry(const AircraftState& own, const AircraftState& opp);

/// Damage per second inflicted by `geom`'s owner on its opponent.
double wez_damage_rate(const GeometrySnapshot& geom, const EngagementConfig& config = {});

struct EngagementState {
  AircraftState blue;
  AircraftState red;
  std::int64_t step_index{0};
  /// Cumulative damage in units of nominal (scale 1) health, capped at health_scale.
  double damage_blue{0.0};
  double damage_red{0.0};
  double health_scale{1.0};
  Outcome outcome{Outcome::ongoing};

  double t() const { return static_cast<double>(step_index) / kSimHz; }
  const AircraftState& aircraft(Side s) const { return s == Side::blue ? blue : red; }
  AircraftState& aircraft(Side s) { return s == Side::blue ? blue : red; }
  double damage(Side s) const { return s == Side::blue ? damage_blue : damage_red; }
  /// Damage as a fraction of starting health (d_self / d_opp).
  double damage_fraction(Side s) const { return damage(s) / health_scale; }
  double health(Side s) const;
  bool terminal() const { return outcome != Outcome::ongoing; }
};

EngagementState make_engagement(const AircraftState& blue, const AircraftState& red,
                                const EngagementConfig& config = {});

enum class TerminalReason { none, health, hard_deck, timeout, forfeit, disconnect };
std::string_view to_string(TerminalReason r);

struct StepEvents {
  /// Damage dealt this step by each side (rate * dt).
  double dealt_by_blue{0.0};
  double dealt_by_red{0.0};
  bool gunsnap_blue{false};  ///< blue scored on red
  bool gunsnap_red{false};   ///< red scored on blue
  bool hard_deck_blue{false};
  bool hard_deck_red{false};
  bool became_terminal{false};
  TerminalReason reason{TerminalReason::none};
  Outcome outcome{Outcome::ongoing};

  double dealt_by(Side s) const { return s == Side::blue ? dealt_by_blue : dealt_by_red; }
  bool gunsnap_by(Side s) const { return s == Side::blue ? gunsnap_blue : gunsnap_red; }
};

/// Advances both aircraft one 50 Hz step and applies damage, hard deck and
/// termination. WEZ damage is applied before the hard-deck check.
StepEvents step_engagement(EngagementState& eng, const ControlInput& blue, const ControlInput& red,
                           const EngagementConfig& config = {});

/// Environment episode reward for one side.
///
/// `opp_damage` holds the opponent's cumulative damage fraction sampled at the
/// start of every 50 Hz step, beginning at t = 0. It is truncated or padded with
/// its final value to `horizon` seconds. Returns the time-average of that curve
/// (or its integral when averaging is `integral`) when `self_damage_final` < 1,
/// else 0.
double episode_reward(std::span<const double> opp_damage, double self_damage_final,
                      double horizon = 300.0, RewardAveraging averaging = RewardAveraging::mean);

/// Observation layout. Each slot is divided by the scale listed in
/// `observation_scales()`.
namespace obs {
inline constexpr int own_fuel = 0;
inline constexpr int own_thrust = 1;
inline constexpr int own_deflection = 2;  // 3 slots
inline constexpr int own_health = 5;
inline constexpr int own_alpha = 6;
inline constexpr int own_beta = 7;
inline constexpr int own_position = 8;       // 3
inline constexpr int own_velocity = 11;      // 3
inline constexpr int own_acceleration = 14;  // 3
inline constexpr int own_euler = 17;         // 3
inline constexpr int own_rates = 20;         // 3
inline constexpr int own_rate_accel = 23;    // 3
inline constexpr int opp_position = 26;      // 3
inline constexpr int opp_velocity = 29;      // 3
inline constexpr int opp_euler = 32;         // 3
inline constexpr int opp_rates = 35;         // 3
inline constexpr int opp_health = 38;
inline constexpr int range = 39;
inline constexpr int track_angle = 40;
inline constexpr int adverse_angle = 41;
inline constexpr int closure_rate = 42;
inline constexpr int size = 43;
}  // namespace obs

struct ObservationScales {
  double position{10000.0};
  double velocity{1000.0};
  double acceleration{10.0 * kStandardGravity};
  double angle{kPi};
  double rate{4.0};
  double rate_accel{20.0};
  double range{10000.0};
  double closure{1000.0};
};

using ObservationVector = std::vector<float>;

ObservationVector observation(const EngagementState& eng, Side side,
                              const ObservationScales& scales = {});

}  // namespace dogfight
