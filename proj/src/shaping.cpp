#include "dogfight/shaping.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace dogfight {

std::string_view to_string(Profile p) {
  switch (p) {
    case Profile::cz: return "CZ";
    case Profile::as: return "AS";
    case Profile::cs: return "CS";
  }
  return "CZ";
}

Profile profile_from_string(std::string_view s) {
  std::string upper(s);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "CZ") return Profile::cz;
  if (upper == "AS") return Profile::as;
  if (upper == "CS") return Profile::cs;
  throw ShapingError("unknown reward profile '" + std::string(s) + "'");
}

void ShapingWeights::validate() const {
  const double gains[] = {relative_position_gain, track_theta_gain, closure_gain, gunsnap_blue_gain,
                          gunsnap_red_gain,       deck_gain,        too_close_gain, gunsnap_near,
                          gunsnap_far,            loss_penalty};
  for (double g : gains) {
    if (!std::isfinite(g)) throw ShapingError("shaping gains must be finite");
  }
  if (!(too_close_range >= 0.0 && too_close_range < 3000.0)) {
    throw ShapingError("too_close_range must be in [0, 3000)");
  }
  if (!(deck_floor >= 1000.0)) throw ShapingError("deck_floor must be >= 1000 ft");
  if (!(closure_clamp > 0.0) || !(deck_depth_scale > 0.0)) {
    throw ShapingError("closure_clamp and deck_depth_scale must be positive");
  }
  if (!(gunsnap_max_range > gunsnap_min_range) || !(gunsnap_cone_deg > 0.0)) {
    throw ShapingError("gun-snap band and cone must be non-empty");
  }
}

double offensive_score(const GeometrySnapshot& g) {
  const double ct = std::cos(0.5 * g.track_angle);
  const double ca = std::cos(0.5 * g.adverse_angle);
  return ct * ct * ca * ca;
}

double r_relative_position(const GeometrySnapshot& own, const GeometrySnapshot& opp,
                           const ShapingWeights& w) {
  return w.relative_position_gain * (offensive_score(own) - offensive_score(opp));
}

double r_track_theta(const GeometrySnapshot& own, const ShapingWeights& w) {
  return -w.track_theta_gain * own.track_angle / kPi;
}

double r_closure(const GeometrySnapshot& own, const ShapingWeights& w) {
  const double pursuit = (kPi - own.track_angle - own.adverse_angle) / kPi;
  const double closing = std::clamp(own.closure_rate / w.closure_clamp, -1.0, 1.0);
  return w.closure_gain * pursuit * closing;
}

double gunsnap_value(const GeometrySnapshot& shooter, const ShapingWeights& w) {
  if (shooter.degenerate || shooter.track_angle > w.gunsnap_cone_deg * kPi / 180.0) {
    return 0.0;
  }
  if (shooter.range < w.gunsnap_min_range || shooter.range > w.gunsnap_max_range) {
    return 0.0;
  }
  if (w.plateau) {
    return w.gunsnap_near;
  }
  const double nearness =
      (w.gunsnap_max_range - shooter.range) / (w.gunsnap_max_range - w.gunsnap_min_range);
  return w.gunsnap_far + (w.gunsnap_near - w.gunsnap_far) * nearness;
}

double r_gunsnap_blue(const GeometrySnapshot& own, const ShapingWeights& w) {
  return w.gunsnap_blue_gain * gunsnap_value(own, w);
}

double r_gunsnap_red(const GeometrySnapshot& opp, const ShapingWeights& w) {
  return -w.gunsnap_red_gain * gunsnap_value(opp, w);
}

double r_deck(double altitude, const ShapingWeights& w) {
  if (altitude >= w.deck_floor) {
    return 0.0;
  }
  return -w.deck_gain * std::min(1.0, (w.deck_floor - altitude) / w.deck_depth_scale);
}

double r_too_close(const GeometrySnapshot& own, const ShapingWeights& w) {
  if (own.range < w.too_close_range && own.adverse_angle < w.too_close_adverse_limit) {
    return -w.too_close_gain * (1.0 - own.range / w.too_close_range);
  }
  return 0.0;
}

RewardBreakdown compose(Profile profile, const GeometrySnapshot& own, const GeometrySnapshot& opp,
                        const ShapingWeights& weights, double dt) {
  ShapingWeights w = weights;
  if (profile == Profile::as) w.plateau = false;
  if (profile == Profile::cs) w.plateau = true;

  RewardBreakdown b;
  b.gunsnap_blue = r_gunsnap_blue(own, w) * dt;
  b.gunsnap_red = r_gunsnap_red(opp, w) * dt;
  b.deck = r_deck(own.altitude_own, w) * dt;
  if (profile == Profile::cz) {
    b.relative_position = r_relative_position(own, opp, w) * dt;
    b.closure = r_closure(own, w) * dt;
    b.too_close = r_too_close(own, w) * dt;
  } else {
    b.track_theta = r_track_theta(own, w) * dt;
  }
  b.total = b.sum();
  return b;
}

RewardBreakdown compose(std::string_view profile, const GeometrySnapshot& own,
                        const GeometrySnapshot& opp, const ShapingWeights& w, double dt) {
  return compose(profile_from_string(profile), own, opp, w, dt);
}

}  // namespace dogfight
