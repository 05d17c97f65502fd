#include "dogfight/episode_log.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dogfight/digest.hpp"

namespace dogfight {

namespace {

using Json = nlohmann::ordered_json;

Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

Json state_json(const AircraftState& s) {
  Json j;
  j["position"] = vec_json(s.position);
  j["velocity"] = vec_json(s.velocity);
  j["euler"] = Json::array({s.attitude.roll, s.attitude.pitch, s.attitude.yaw});
  j["body_rates"] = vec_json(s.body_rates);
  j["body_rate_accel"] = vec_json(s.body_rate_accel);
  j["accel_world"] = vec_json(s.accel_world);
  j["alpha"] = s.alpha;
  j["beta"] = s.beta;
  j["fuel"] = s.fuel;
  j["thrust"] = s.thrust;
  j["deflection"] = Json::array({s.surface_deflection[0], s.surface_deflection[1], s.surface_deflection[2]});
  j["health"] = s.health;
  return j;
}

AircraftState state_from(const Json& j) {
  AircraftState s;
  s.position = vec_from(j.at("position"));
  s.velocity = vec_from(j.at("velocity"));
  const Json& e = j.at("euler");
  s.attitude = {e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>()};
  s.body_rates = vec_from(j.at("body_rates"));
  s.body_rate_accel = vec_from(j.at("body_rate_accel"));
  s.accel_world = vec_from(j.at("accel_world"));
  s.alpha = j.at("alpha").get<double>();
  s.beta = j.at("beta").get<double>();
  s.fuel = j.at("fuel").get<double>();
  s.thrust = j.at("thrust").get<double>();
  const Json& d = j.at("deflection");
  s.surface_deflection = {d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()};
  s.health = j.at("health").get<double>();
  return s;
}

Json controls_json(const ControlInput& u) { return Json::array({u.aileron, u.elevator, u.rudder, u.throttle}); }

ControlInput controls_from(const Json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

Json geometry_json(const GeometrySnapshot& g) {
  Json j;
  j["range"] = g.range;
  j["track"] = g.track_angle;
  j["adverse"] = g.adverse_angle;
  j["closure"] = g.closure_rate;
  j["altitude"] = g.altitude_own;
  j["los"] = vec_json(g.los_unit);
  j["degenerate"] = g.degenerate;
  return j;
}

GeometrySnapshot geometry_from(const Json& j) {
  GeometrySnapshot g;
  g.range = j.at("range").get<double>();
  g.track_angle = j.at("track").get<double>();
  g.adverse_angle = j.at("adverse").get<double>();
  g.closure_rate = j.at("closure").get<double>();
  g.altitude_own = j.at("altitude").get<double>();
  g.los_unit = vec_from(j.at("los"));
  g.degenerate = j.at("degenerate").get<bool>();
  return g;
}

TerminalReason reason_from_string(const std::string& s) {
  for (auto r : {TerminalReason::none, TerminalReason::health, TerminalReason::hard_deck, TerminalReason::timeout,
                 TerminalReason::forfeit, TerminalReason::disconnect}) {
    if (to_string(r) == s) return r;
  }
  throw LogError("unknown terminal reason '" + s + "'");
}

Json events_json(const StepEvents& e) {
  Json j;
  j["dealt_by_blue"] = e.dealt_by_blue;
  j["dealt_by_red"] = e.dealt_by_red;
  j["gunsnap_blue"] = e.gunsnap_blue;
  j["gunsnap_red"] = e.gunsnap_red;
  j["hard_deck_blue"] = e.hard_deck_blue;
  j["hard_deck_red"] = e.hard_deck_red;
  j["terminal"] = e.became_terminal;
  j["reason"] = std::string(to_string(e.reason));
  j["outcome"] = std::string(to_string(e.outcome));
  return j;
}

StepEvents events_from(const Json& j) {
  StepEvents e;
  e.dealt_by_blue = j.at("dealt_by_blue").get<double>();
  e.dealt_by_red = j.at("dealt_by_red").get<double>();
  e.gunsnap_blue = j.at("gunsnap_blue").get<bool>();
  e.gunsnap_red = j.at("gunsnap_red").get<bool>();
  e.hard_deck_blue = j.at("hard_deck_blue").get<bool>();
  e.hard_deck_red = j.at("hard_deck_red").get<bool>();
  e.became_terminal = j.at("terminal").get<bool>();
  e.reason = reason_from_string(j.at("reason").get<std::string>());
  e.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  return e;
}

Json header_json(const EpisodeLog& log) {
  Json j;
  j["record"] = "header";
  j["format"] = "dogfight-episode";
  j["version"] = 1;
  j["seed"] = log.seed;
  j["regime"] = log.regime;
  j["blue"] = log.blue_name;
  j["red"] = log.red_name;
  j["config_hash"] = log.config_hash;
  j["health_scale"] = log.health_scale;
  j["blue_initial"] = state_json(log.blue_initial);
  j["red_initial"] = state_json(log.red_initial);
  return j;
}

Json step_json(const StepRecord& r) {
  Json j;
  j["record"] = "step";
  j["step"] = r.step;
  j["t"] = r.t();
  j["blue_controls"] = controls_json(r.blue_controls);
  j["red_controls"] = controls_json(r.red_controls);
  j["blue"] = state_json(r.blue);
  j["red"] = state_json(r.red);
  j["blue_geometry"] = geometry_json(r.blue_geometry);
  j["red_geometry"] = geometry_json(r.red_geometry);
  j["events"] = events_json(r.events);
  j["blue_selection"] = r.blue_selection;
  j["red_selection"] = r.red_selection;
  return j;
}

Json footer_json(const EpisodeLog& log) {
  Json j;
  j["record"] = "footer";
  j["outcome"] = std::string(to_string(log.outcome));
  j["reason"] = std::string(to_string(log.reason));
  j["steps"] = log.step_count;
  j["t"] = static_cast<double>(log.step_count) / kSimHz;
  j["damage_blue"] = log.damage_blue;
  j["damage_red"] = log.damage_red;
  j["reward_blue"] = log.reward_blue;
  j["reward_red"] = log.reward_red;
  j["utilization_blue"] = log.utilization_blue ? Json(*log.utilization_blue) : Json(nullptr);
  j["utilization_red"] = log.utilization_red ? Json(*log.utilization_red) : Json(nullptr);
  return j;
}

std::optional<std::vector<double>> optional_series(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::vector<double>>();
}

}  // namespace

void write_ndjson(std::ostream& out, const EpisodeLog& log) {
  out << header_json(log).dump() << '\n';
  for (const auto& r : log.steps) out << step_json(r).dump() << '\n';
  out << footer_json(log).dump() << '\n';
}

std::string to_ndjson(const EpisodeLog& log) {
  std::ostringstream s;
  write_ndjson(s, log);
  return s.str();
}

EpisodeLog read_ndjson(std::istream& in) {
  EpisodeLog log;
  std::string line;
  bool have_header = false;
  bool have_footer = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
      const std::string kind = j.at("record").get<std::string>();
      if (kind == "header") {
        if (j.at("format").get<std::string>() != "dogfight-episode" || j.at("version").get<int>() != 1) {
          throw LogError("unsupported episode log format");
        }
        log.seed = j.at("seed").get<std::uint64_t>();
        log.regime = j.at("regime").get<std::string>();
        log.blue_name = j.at("blue").get<std::string>();
        log.red_name = j.at("red").get<std::string>();
        log.config_hash = j.at("config_hash").get<std::string>();
        log.health_scale = j.at("health_scale").get<double>();
        log.blue_initial = state_from(j.at("blue_initial"));
        log.red_initial = state_from(j.at("red_initial"));
        have_header = true;
      } else if (kind == "step") {
        StepRecord r;
        r.step = j.at("step").get<std::int64_t>();
        r.blue_controls = controls_from(j.at("blue_controls"));
        r.red_controls = controls_from(j.at("red_controls"));
        r.blue = state_from(j.at("blue"));
        r.red = state_from(j.at("red"));
        r.blue_geometry = geometry_from(j.at("blue_geometry"));
        r.red_geometry = geometry_from(j.at("red_geometry"));
        r.events = events_from(j.at("events"));
        r.blue_selection = j.at("blue_selection").get<int>();
        r.red_selection = j.at("red_selection").get<int>();
        log.steps.push_back(std::move(r));
      } else if (kind == "footer") {
        log.outcome = outcome_from_string(j.at("outcome").get<std::string>());
        log.reason = reason_from_string(j.at("reason").get<std::string>());
        log.step_count = j.at("steps").get<std::int64_t>();
        log.damage_blue = j.at("damage_blue").get<double>();
        log.damage_red = j.at("damage_red").get<double>();
        log.reward_blue = j.at("reward_blue").get<double>();
        log.reward_red = j.at("reward_red").get<double>();
        log.utilization_blue = optional_series(j.at("utilization_blue"));
        log.utilization_red = optional_series(j.at("utilization_red"));
        have_footer = true;
      } else {
        throw LogError("unknown record kind '" + kind + "'");
      }
    } catch (const LogError& e) {
      throw LogError("episode log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw LogError("episode log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header || !have_footer) throw LogError("episode log is missing its header or footer");
  return log;
}

std::string log_hash(const EpisodeLog& log) { return sha256_hex(to_ndjson(log)); }

std::string render_timeline(const EpisodeLog& log, int every) {
  if (every <= 0) every = 1;
  std::ostringstream out;
  char buf[256];
  out << "episode seed " << log.seed << "  regime " << log.regime << "  blue " << log.blue_name << "  red "
      << log.red_name << "\n";
  std::snprintf(buf, sizeof buf, "%8s %8s %9s %9s %7s %7s %9s %9s  %s\n", "step", "t", "alt_b", "alt_r", "trk_b",
                "trk_r", "range", "health", "events");
  out << buf;
  int last_blue = -1;
  int last_red = -1;
  for (const auto& r : log.steps) {
    // A selection that switches policy is an event; a repeated one is not.
    const bool switched = (r.blue_selection >= 0 && r.blue_selection != last_blue) ||
                          (r.red_selection >= 0 && r.red_selection != last_red);
    if (r.blue_selection >= 0) last_blue = r.blue_selection;
    if (r.red_selection >= 0) last_red = r.red_selection;
    std::string ev;
    if (r.events.gunsnap_blue) ev += " gunsnap:blue";
    if (r.events.gunsnap_red) ev += " gunsnap:red";
    if (r.events.hard_deck_blue) ev += " deck:blue";
    if (r.events.hard_deck_red) ev += " deck:red";
    if (r.blue_selection >= 0) ev += " select:blue=" + std::to_string(r.blue_selection);
    if (r.red_selection >= 0) ev += " select:red=" + std::to_string(r.red_selection);
    if (r.events.became_terminal) ev += " terminal:" + std::string(to_string(r.events.reason));
    const bool gun_or_deck = r.events.gunsnap_blue || r.events.gunsnap_red || r.events.hard_deck_blue ||
                             r.events.hard_deck_red || r.events.became_terminal;
    if (r.step % every != 0 && !gun_or_deck && !switched) continue;
    std::snprintf(buf, sizeof buf, "%8lld %8.2f %9.1f %9.1f %7.2f %7.2f %9.1f %4.2f/%4.2f ",
                  static_cast<long long>(r.step), r.t(), r.blue.altitude(), r.red.altitude(),
                  r.blue_geometry.track_angle * 180.0 / kPi, r.red_geometry.track_angle * 180.0 / kPi,
                  r.blue_geometry.range, r.blue.health, r.red.health);
    out << buf << ev << "\n";
  }
  std::snprintf(buf, sizeof buf, "result %s (%s) at t=%.2f  reward blue %.6f  red %.6f\n",
                std::string(to_string(log.outcome)).c_str(), std::string(to_string(log.reason)).c_str(),
                static_cast<double>(log.step_count) / kSimHz, log.reward_blue, log.reward_red);
  out << buf;
  return out.str();
}

}  // namespace dogfight
