#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "dogfight/vec3.hpp"

namespace dogfight {

inline constexpr double kSimHz = 50.0;
inline constexpr double kSimDt = 1.0 / kSimHz;
inline constexpr double kDtTolerance = 1e-9;
inline constexpr double kStandardGravity = 32.174;  // ft/s^2
inline constexpr double kPi = 3.14159265358979323846;

class DynamicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pilot inputs. Stick axes are in [-1, 1], throttle in [0, 1].
struct ControlInput {
  double aileron{0.0};
  double elevator{0.0};
  double rudder{0.0};
  double throttle{0.0};

  bool operator==(const ControlInput&) const = default;
  bool finite() const;
  /// Copy with every field clamped to its range. Non-finite fields throw.
  ControlInput clamped() const;
};

struct EulerAngles {
  double roll{0.0};
  double pitch{0.0};
  double yaw{0.0};
  bool operator==(const EulerAngles&) const = default;
};

/// Kinematic and energetic state of one aircraft.
///
/// World frame is a local flat plane: x = north, y = east, z = altitude (up),
/// all in feet. Euler angles follow the aerospace yaw-pitch-roll sequence with
/// yaw measured from north toward east, pitch nose-up positive and roll
/// right-wing-down positive. Body rates are (p, q, r) about the body
/// forward/right/down axes.
struct AircraftState {
  Vec3 position;
  Vec3 velocity;
  EulerAngles attitude;
  Vec3 body_rates;
  Vec3 body_rate_accel;
  Vec3 accel_world;
  double alpha{0.0};
  double beta{0.0};
  double fuel{1.0};
  double thrust{0.0};
  std::array<double, 3> surface_deflection{0.0, 0.0, 0.0};
  double health{1.0};

  bool operator==(const AircraftState&) const = default;
  bool finite() const;
  double speed() const { return velocity.norm(); }
  double altitude() const { return position.z; }
};

/// Constants of the reduced-order flight model. Defaults:
///
/// | key                   | default | unit        |
/// |-----------------------|---------|-------------|
/// | max_thrust_to_weight  | 0.9     | g           |
/// | max_speed             | 900     | ft/s        |
/// | g_limit               | 9       | g           |
/// | negative_g_limit      | 3       | g           |
/// | side_g_limit          | 1       | g           |
/// | roll_rate_max         | 4.0     | rad/s       |
/// | pitch_rate_max        | 1.5     | rad/s       |
/// | yaw_rate_max          | 0.5     | rad/s       |
/// | roll_time_constant    | 0.15    | s           |
/// | pitch_time_constant   | 0.25    | s           |
/// | yaw_time_constant     | 0.40    | s           |
/// | engine_time_constant  | 1.0     | s           |
/// | align_time_constant   | 0.4     | s           |
/// | corner_speed          | 450     | ft/s        |
/// | induced_drag_factor   | 0.005   | 1/g         |
/// | fuel_burn_rate        | 1/900   | 1/s at full thrust |
struct DynamicsConfig {
  double max_thrust_to_weight{0.9};
  double max_speed{900.0};
  double g_limit{9.0};
  double negative_g_limit{3.0};
  double side_g_limit{1.0};
  double roll_rate_max{4.0};
  double pitch_rate_max{1.5};
  double yaw_rate_max{0.5};
  double roll_time_constant{0.15};
  double pitch_time_constant{0.25};
  double yaw_time_constant{0.40};
  double engine_time_constant{1.0};
  double align_time_constant{0.4};
  double corner_speed{450.0};
  double induced_drag_factor{0.005};
  double fuel_burn_rate{1.0 / 900.0};
  bool fuel_gates_thrust{false};
  bool gravity_enabled{true};

  /// Parasitic drag coefficient so that full thrust balances drag at max_speed.
  double drag_coefficient() const {
    return max_thrust_to_weight * kStandardGravity / (max_speed * max_speed);
  }
  void validate() const;
};

/// Body-to-world rotation expressed in north-east-down axes.
Mat3 rotation_from_euler(const EulerAngles& e);
EulerAngles euler_from_rotation(const Mat3& r);

/// Unit nose direction in the north-east-up world frame.
Vec3 nose_direction(const EulerAngles& e);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Advances one aircraft by one fixed step. dt must be 0 or 1/50 s.
AircraftState step_aircraft(const AircraftState& state, const ControlInput& controls, double dt,
                            const DynamicsConfig& config = {});

/// Wings-level state flying along `heading` at `speed` and `altitude`, throttle set
/// to hold speed.
AircraftState level_flight_state(const Vec3& position, double heading, double speed,
                                 const DynamicsConfig& config = {});

}  // namespace dogfight
