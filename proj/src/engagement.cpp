#include "dogfight/engagement.hpp"

#include <algorithm>
#include <cmath>

namespace dogfight {

namespace {

// Cumulative damage within this distance of the health pool counts as depleted.
constexpr double kDepletionTolerance = 1e-9;

void add_damage(double& ledger, double amount, double cap) {
  ledger = std::min(cap, ledger + amount);
  if (ledger >= cap - kDepletionTolerance) {
    ledger = cap;
  }
}

}  // namespace

std::string_view to_string(Side s) { return s == Side::blue ? "blue" : "red"; }

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::ongoing: return "ongoing";
    case Outcome::blue_win: return "blue_win";
    case Outcome::red_win: return "red_win";
    case Outcome::draw: return "draw";
  }
  return "ongoing";
}

std::string_view to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::none: return "none";
    case TerminalReason::health: return "health";
    case TerminalReason::hard_deck: return "hard_deck";
    case TerminalReason::timeout: return "timeout";
    case TerminalReason::forfeit: return "forfeit";
    case TerminalReason::disconnect: return "disconnect";
  }
  return "none";
}

Side side_from_string(std::string_view s) {
  if (s == "blue") return Side::blue;
  if (s == "red") return Side::red;
  throw EngagementError("unknown side '" + std::string(s) + "'");
}

Outcome outcome_from_string(std::string_view s) {
  for (Outcome o : {Outcome::ongoing, Outcome::blue_win, Outcome::red_win, Outcome::draw}) {
    if (to_string(o) == s) return o;
  }
  throw EngagementError("unknown outcome '" + std::string(s) + "'");
}

std::int64_t EngagementConfig::max_steps() const {
  return static_cast<std::int64_t>(std::llround(max_duration * kSimHz));
}

void EngagementConfig::validate() const {
  if (!(wez_min_range >= 0.0 && wez_max_range > wez_min_range)) {
    throw EngagementError("WEZ ranges must satisfy 0 <= min < max");
  }
  if (!(wez_cone_half_angle_deg > 0.0 && wez_cone_half_angle_deg < 180.0)) {
    throw EngagementError("WEZ cone half-angle must be in (0, 180) degrees");
  }
  if (!(max_duration > 0.0) || !(health_scale >= 1.0) || !std::isfinite(health_scale)) {
    throw EngagementError("max_duration must be positive and health_scale >= 1");
  }
  dynamics.validate();
}

double EngagementState::health(Side s) const {
  return std::max(0.0, health_scale - damage(s));
}

GeometrySnapshot geometry(const AircraftState& own, const AircraftState& opp) {
  GeometrySnapshot g;
  const Vec3 delta = opp.position - own.position;
  g.range = delta.norm();
  g.altitude_own = own.position.z;
  const Vec3 own_nose = nose_direction(own.attitude);
  if (g.range < 1.0) {
    g.degenerate = true;
    g.los_unit = own_nose;
    g.track_angle = 0.0;
    g.adverse_angle = 0.0;
    g.closure_rate = 0.0;
    return g;
  }
  g.los_unit = delta / g.range;
  g.track_angle = angle_between(own_nose, g.los_unit);
  // Opponent tail (-nose) against the opponent->own line (-los) is the same angle
  // as opponent nose against los.
  g.adverse_angle = angle_between(nose_direction(opp.attitude), g.los_unit);
  g.closure_rate = -(opp.velocity - own.velocity).dot(g.los_unit);
  return g;
}

double wez_damage_rate(const GeometrySnapshot& geom, const EngagementConfig& config) {
  if (geom.degenerate || geom.track_angle > config.cone_half_angle()) {
    return 0.0;
  }
  if (geom.range > config.wez_max_range || geom.range < config.wez_min_range) {
    return 0.0;
  }
  return (config.wez_max_range - geom.range) / (config.wez_max_range - config.wez_min_range);
}

EngagementState make_engagement(const AircraftState& blue, const AircraftState& red,
                                const EngagementConfig& config) {
  config.validate();
  EngagementState e;
  e.blue = blue;
  e.red = red;
  e.health_scale = config.health_scale;
  e.blue.health = config.health_scale;
  e.red.health = config.health_scale;
  return e;
}

StepEvents step_engagement(EngagementState& eng, const ControlInput& blue_u,
                           const ControlInput& red_u, const EngagementConfig& config) {
  if (eng.terminal()) {
    throw EngagementError("step_engagement: engagement already finished (" +
                          std::string(to_string(eng.outcome)) + ")");
  }
  StepEvents ev;
  AircraftState blue = step_aircraft(eng.blue, blue_u, kSimDt, config.dynamics);
  AircraftState red = step_aircraft(eng.red, red_u, kSimDt, config.dynamics);

  ev.dealt_by_blue = wez_damage_rate(geometry(blue, red), config) * kSimDt;
  ev.dealt_by_red = wez_damage_rate(geometry(red, blue), config) * kSimDt;
  ev.gunsnap_blue = ev.dealt_by_blue > 0.0;
  ev.gunsnap_red = ev.dealt_by_red > 0.0;
  add_damage(eng.damage_red, ev.dealt_by_blue, eng.health_scale);
  add_damage(eng.damage_blue, ev.dealt_by_red, eng.health_scale);

  if (blue.position.z < config.hard_deck) {
    ev.hard_deck_blue = true;
    eng.damage_blue = eng.health_scale;
  }
  if (red.position.z < config.hard_deck) {
    ev.hard_deck_red = true;
    eng.damage_red = eng.health_scale;
  }

  eng.blue = blue;
  eng.red = red;
  eng.blue.health = eng.health(Side::blue);
  eng.red.health = eng.health(Side::red);
  eng.step_index += 1;

  const bool blue_dead = eng.damage_blue >= eng.health_scale;
  const bool red_dead = eng.damage_red >= eng.health_scale;
  if (blue_dead || red_dead) {
    eng.outcome = (blue_dead && red_dead) ? Outcome::draw
                  : blue_dead             ? Outcome::red_win
                                          : Outcome::blue_win;
    ev.reason = (ev.hard_deck_blue || ev.hard_deck_red) ? TerminalReason::hard_deck
                                                        : TerminalReason::health;
  } else if (eng.step_index >= config.max_steps()) {
    eng.outcome = Outcome::draw;
    ev.reason = TerminalReason::timeout;
  }
  ev.became_terminal = eng.terminal();
  ev.outcome = eng.outcome;
  return ev;
}

double episode_reward(std::span<const double> opp_damage, double self_damage_final, double horizon,
                      RewardAveraging averaging) {
  if (opp_damage.empty()) {
    throw EngagementError("episode_reward: empty damage history");
  }
  if (!(horizon > 0.0)) {
    throw EngagementError("episode_reward: horizon must be positive");
  }
  if (self_damage_final >= 1.0) {
    return 0.0;
  }
  const auto samples = static_cast<std::size_t>(std::llround(horizon * kSimHz));
  const std::size_t logged = std::min(samples, opp_damage.size());
  double area = 0.0;
  for (std::size_t k = 0; k < logged; ++k) {
    area += opp_damage[k];
  }
  area += static_cast<double>(samples - logged) * opp_damage[logged - 1];
  area *= kSimDt;
  return averaging == RewardAveraging::mean ? area / horizon : area;
}

ObservationVector observation(const EngagementState& eng, Side side, const ObservationScales& sc) {
  const AircraftState& own = eng.aircraft(side);
  const AircraftState& opp = eng.aircraft(opponent_of(side));
  const GeometrySnapshot geom = geometry(own, opp);
  ObservationVector o(obs::size, 0.0f);
  auto put = [&o](int index, double value) { o[static_cast<std::size_t>(index)] = static_cast<float>(value); };
  auto put3 = [&put](int index, const Vec3& v, double scale) {
    put(index, v.x / scale);
    put(index + 1, v.y / scale);
    put(index + 2, v.z / scale);
  };
  auto put_euler = [&put, &sc](int index, const EulerAngles& e) {
    put(index, e.roll / sc.angle);
    put(index + 1, e.pitch / sc.angle);
    put(index + 2, e.yaw / sc.angle);
  };

  put(obs::own_fuel, own.fuel);
  put(obs::own_thrust, own.thrust);
  for (int i = 0; i < 3; ++i) {
    put(obs::own_deflection + i, own.surface_deflection[static_cast<std::size_t>(i)]);
  }
  put(obs::own_health, eng.health(side) / eng.health_scale);
  put(obs::own_alpha, own.alpha / sc.angle);
  put(obs::own_beta, own.beta / sc.angle);
  put3(obs::own_position, own.position, sc.position);
  put3(obs::own_velocity, own.velocity, sc.velocity);
  put3(obs::own_acceleration, own.accel_world, sc.acceleration);
  put_euler(obs::own_euler, own.attitude);
  put3(obs::own_rates, own.body_rates, sc.rate);
  put3(obs::own_rate_accel, own.body_rate_accel, sc.rate_accel);

  put3(obs::opp_position, opp.position, sc.position);
  put3(obs::opp_velocity, opp.velocity, sc.velocity);
  put_euler(obs::opp_euler, opp.attitude);
  put3(obs::opp_rates, opp.body_rates, sc.rate);
  put(obs::opp_health, eng.health(opponent_of(side)) / eng.health_scale);

  put(obs::range, geom.range / sc.range);
  put(obs::track_angle, geom.track_angle / sc.angle);
  put(obs::adverse_angle, geom.adverse_angle / sc.angle);
  put(obs::closure_rate, geom.closure_rate / sc.closure);
  return o;
}

}  // namespace dogfight
