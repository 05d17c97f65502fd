#include "dogfight/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dogfight {

namespace {

bool finite3(const std::array<double, 3>& a) {
  return std::isfinite(a[0]) && std::isfinite(a[1]) && std::isfinite(a[2]);
}

// NEU <-> NED conversion is a sign flip of the vertical axis.
Vec3 ned_to_neu(const Vec3& v) { return {v.x, v.y, -v.z}; }

Vec3 normalized_or_zero(const Vec3& v) {
  const double n = v.norm();
  if (n < 1e-12) {
    return {};
  }
  return v / n;
}

Mat3 exp_skew(const Vec3& w) {
  const double theta2 = w.dot(w);
  const double theta = std::sqrt(theta2);
  double a = 1.0;
  double b = 0.5;
  if (theta > 1e-8) {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  Mat3 k;
  k.m = {0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0};
  const Mat3 k2 = k * k;
  Mat3 out;
  for (std::size_t i = 0; i < 9; ++i) {
    const double identity = (i % 4 == 0) ? 1.0 : 0.0;
    out.m[i] = identity + a * k.m[i] + b * k2.m[i];
  }
  return out;
}

double clamp_finite(double v, double lo, double hi, const char* name) {
  if (!std::isfinite(v)) {
    throw DynamicsError(std::string("non-finite control input: ") + name);
  }
  return std::clamp(v, lo, hi);
}

}  // namespace

bool ControlInput::finite() const {
  return std::isfinite(aileron) && std::isfinite(elevator) && std::isfinite(rudder) &&
         std::isfinite(throttle);
}

ControlInput ControlInput::clamped() const {
  return {clamp_finite(aileron, -1.0, 1.0, "aileron"),
          clamp_finite(elevator, -1.0, 1.0, "elevator"),
          clamp_finite(rudder, -1.0, 1.0, "rudder"),
          clamp_finite(throttle, 0.0, 1.0, "throttle")};
}

bool AircraftState::finite() const {
  return position.finite() && velocity.finite() && std::isfinite(attitude.roll) &&
         std::isfinite(attitude.pitch) && std::isfinite(attitude.yaw) && body_rates.finite() &&
         body_rate_accel.finite() && accel_world.finite() && std::isfinite(alpha) &&
         std::isfinite(beta) && std::isfinite(fuel) && std::isfinite(thrust) &&
         finite3(surface_deflection) && std::isfinite(health);
}

void DynamicsConfig::validate() const {
  const double positives[] = {max_thrust_to_weight, max_speed,          g_limit,
                              negative_g_limit,     side_g_limit,       roll_rate_max,
                              pitch_rate_max,       yaw_rate_max,       roll_time_constant,
                              pitch_time_constant,  yaw_time_constant,  engine_time_constant,
                              align_time_constant,  corner_speed};
  for (double v : positives) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DynamicsError("dynamics constants must be finite and positive");
    }
  }
  if (!(induced_drag_factor >= 0.0) || !(fuel_burn_rate >= 0.0)) {
    throw DynamicsError("drag and fuel constants must be non-negative");
  }
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) {
    w += 2.0 * kPi;
  }
  return w;
}

Mat3 rotation_from_euler(const EulerAngles& e) {
  const double sr = std::sin(e.roll), cr = std::cos(e.roll);
  const double sp = std::sin(e.pitch), cp = std::cos(e.pitch);
  const double sy = std::sin(e.yaw), cy = std::cos(e.yaw);
  Mat3 r;
  r.m = {cp * cy, sr * sp * cy - cr * sy, cr * sp * cy + sr * sy,
         cp * sy, sr * sp * sy + cr * cy, cr * sp * sy - sr * cy,
         -sp,     sr * cp,                cr * cp};
  return r;
}

EulerAngles euler_from_rotation(const Mat3& r) {
  EulerAngles e;
  e.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  e.roll = wrap_angle(std::atan2(r(2, 1), r(2, 2)));
  e.yaw = wrap_angle(std::atan2(r(1, 0), r(0, 0)));
  return e;
}

Vec3 nose_direction(const EulerAngles& e) {
  const double cp = std::cos(e.pitch);
  return {cp * std::cos(e.yaw), cp * std::sin(e.yaw), std::sin(e.pitch)};
}

AircraftState step_aircraft(const AircraftState& state, const ControlInput& controls, double dt,
                            const DynamicsConfig& cfg) {
  if (!state.finite()) {
    throw DynamicsError("step_aircraft: non-finite aircraft state");
  }
  const ControlInput u = controls.clamped();
  if (dt == 0.0) {
    return state;
  }
  if (!(std::abs(dt - kSimDt) <= kDtTolerance)) {
    std::ostringstream msg;
    msg << "step_aircraft: dt " << dt << " is not 0 or " << kSimDt;
    throw DynamicsError(msg.str());
  }

  const double g = kStandardGravity;
  AircraftState next = state;
  next.surface_deflection = {u.aileron, u.elevator, u.rudder};

  // Body rates chase their commanded values through first-order lags. Pitch
  // authority shrinks at speed so the commanded turn stays within the g-limit.
  const double speed = state.velocity.norm();
  const double pitch_limit = std::min(cfg.pitch_rate_max, cfg.g_limit * g / std::max(speed, 1.0));
  const Vec3 commanded{u.aileron * cfg.roll_rate_max, u.elevator * pitch_limit,
                       u.rudder * cfg.yaw_rate_max};
  const Vec3& w0 = state.body_rates;
  const Vec3 w1{w0.x + dt * (commanded.x - w0.x) / cfg.roll_time_constant,
                w0.y + dt * (commanded.y - w0.y) / cfg.pitch_time_constant,
                w0.z + dt * (commanded.z - w0.z) / cfg.yaw_time_constant};
  next.body_rates = w1;
  next.body_rate_accel = (w1 - w0) / dt;

  const Mat3 rot = rotation_from_euler(state.attitude) * exp_skew(w1 * dt);
  next.attitude = euler_from_rotation(rot);

  next.thrust = state.thrust + dt * (u.throttle - state.thrust) / cfg.engine_time_constant;
  next.fuel = std::max(0.0, state.fuel - cfg.fuel_burn_rate * next.thrust * dt);
  const double thrust_available = (cfg.fuel_gates_thrust && next.fuel <= 0.0) ? 0.0 : next.thrust;

  const Vec3 nose = ned_to_neu(rot.column(0));
  const Vec3 right = ned_to_neu(rot.column(1));
  const Vec3 up = -ned_to_neu(rot.column(2));
  const Vec3 v_hat = speed > 1e-6 ? state.velocity / speed : nose;

  const double authority = std::min(1.0, (speed / cfg.corner_speed) * (speed / cfg.corner_speed));
  const Vec3 g_up{0.0, 0.0, cfg.gravity_enabled ? g : 0.0};

  // Aerodynamic normal acceleration turns the flight path toward the nose and
  // carries the airframe's weight, limited by what the wing can produce.
  const Vec3 nose_perp = nose - v_hat * nose.dot(v_hat);
  const Vec3 demand = nose_perp * (speed / cfg.align_time_constant) + (g_up - v_hat * g_up.dot(v_hat));
  const Vec3 lift_dir = normalized_or_zero(up - v_hat * up.dot(v_hat));
  const Vec3 side_raw = right - v_hat * right.dot(v_hat);
  const Vec3 side_dir = normalized_or_zero(side_raw - lift_dir * side_raw.dot(lift_dir));
  const double lift = std::clamp(demand.dot(lift_dir), -cfg.negative_g_limit * g * authority,
                                 cfg.g_limit * g * authority);
  const double side = std::clamp(demand.dot(side_dir), -cfg.side_g_limit * g * authority,
                                 cfg.side_g_limit * g * authority);

  const double drag = cfg.drag_coefficient() * speed * speed + cfg.induced_drag_factor * lift * lift / g;
  const Vec3 accel = nose * (thrust_available * cfg.max_thrust_to_weight * g) - v_hat * drag +
                     lift_dir * lift + side_dir * side - g_up;

  Vec3 v1 = state.velocity + accel * dt;
  const double s1 = v1.norm();
  if (s1 > cfg.max_speed) {
    v1 = v1 * (cfg.max_speed / s1);
  }
  next.velocity = v1;
  next.position = state.position + v1 * dt;
  next.accel_world = (v1 - state.velocity) / dt;

  const double s = v1.norm();
  if (s > 1e-6) {
    const double ub = nose.dot(v1);
    const double vb = right.dot(v1);
    const double wb = -up.dot(v1);
    next.alpha = std::atan2(wb, ub);
    next.beta = std::asin(std::clamp(vb / s, -1.0, 1.0));
  } else {
    next.alpha = 0.0;
    next.beta = 0.0;
  }
  return next;
}

AircraftState level_flight_state(const Vec3& position, double heading, double speed,
                                 const DynamicsConfig& cfg) {
  AircraftState s;
  s.position = position;
  s.attitude = {0.0, 0.0, wrap_angle(heading)};
  s.velocity = nose_direction(s.attitude) * speed;
  const double g = kStandardGravity;
  const double drag = cfg.drag_coefficient() * speed * speed + cfg.induced_drag_factor * g;
  s.thrust = std::clamp(drag / (cfg.max_thrust_to_weight * g), 0.0, 1.0);
  s.surface_deflection = {0.0, 0.0, 0.0};
  return s;
}

}  // namespace dogfight
