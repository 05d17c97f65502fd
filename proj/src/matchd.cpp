#include "dogfight/matchd.hpp"

#include <cmath>

namespace dogfight {

namespace {

using Json = nlohmann::ordered_json;

Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Json aircraft_json(const EngagementState& eng, Side side) {
  const AircraftState& a = eng.aircraft(side);
  Json j;
  j["side"] = std::string(to_string(side));
  j["position"] = vec_json(a.position);
  j["velocity"] = vec_json(a.velocity);
  j["euler"] = Json::array({a.attitude.roll, a.attitude.pitch, a.attitude.yaw});
  j["body_rates"] = vec_json(a.body_rates);
  j["speed"] = a.speed();
  j["altitude"] = a.altitude();
  j["fuel"] = a.fuel;
  j["thrust"] = a.thrust;
  j["health"] = eng.health(side);
  return j;
}

/// Line of sight to the opponent in own body axes.
Json bearing_json(const AircraftState& own, const AircraftState& opp, double view_half_angle) {
  const Vec3 d = opp.position - own.position;
  const Vec3 ned{d.x, d.y, -d.z};
  const Mat3 r = rotation_from_euler(own.attitude);
  const double fwd = r.column(0).dot(ned);
  const double right = r.column(1).dot(ned);
  const double down = r.column(2).dot(ned);
  Json j;
  j["azimuth"] = std::atan2(right, fwd);
  j["elevation"] = std::atan2(-down, std::hypot(fwd, right));
  j["off_screen"] = angle_between(Vec3{1.0, 0.0, 0.0}, Vec3{fwd, right, down}) > view_half_angle;
  return j;
}

Json controls_json(const ControlInput& u) {
  return {{"aileron", u.aileron}, {"elevator", u.elevator}, {"rudder", u.rudder}, {"throttle", u.throttle}};
}

}  // namespace

std::string_view to_string(MatchSession::Phase p) {
  switch (p) {
    case MatchSession::Phase::lobby:
      return "lobby";
    case MatchSession::Phase::running:
      return "running";
    case MatchSession::Phase::paused:
      return "paused";
    case MatchSession::Phase::finished:
      return "finished";
  }
  return "unknown";
}

void MatchConfig::validate() const {
  engagement.validate();
  if (state_hz < 1 || state_hz > 50) throw MatchError("state_hz must lie in [1, 50]");
  if (max_catchup < 1) throw MatchError("max_catchup must be at least 1");
  if (!(stall_seconds > 0.0)) throw MatchError("stall_seconds must be positive");
  if (!(view_half_angle_deg > 0.0 && view_half_angle_deg <= 180.0)) {
    throw MatchError("view_half_angle_deg must lie in (0, 180]");
  }
}

ControlInput MatchSession::default_controls() { return ControlInput{0.0, 0.0, 0.0, 0.5}; }

MatchSession::MatchSession(MatchConfig config, std::unique_ptr<Pilot> ai, InitialCondition ic, std::uint64_t seed)
    : config_(std::move(config)), ai_(std::move(ai)), ic_(ic), seed_(seed), human_u_(default_controls()) {
  config_.validate();
  if (!ai_) throw MatchError("match needs an AI pilot");
  eng_ = make_engagement(ic_.blue, ic_.red, config_.engagement);
}

int MatchSession::connect() {
  const int id = next_client_++;
  clients_.emplace(id, Client{});
  return id;
}

void MatchSession::send(std::vector<Outbound>& out, int client, std::string_view type, const Json& body, double now,
                        bool close_after) {
  auto it = clients_.find(client);
  if (it == clients_.end()) return;
  Json j;
  j["type"] = std::string(type);
  j["seq"] = ++it->second.seq;
  j["clock"] = now;
  for (const auto& [k, v] : body.items()) j[k] = v;
  out.push_back({client, j.dump(), close_after});
}

void MatchSession::broadcast(std::vector<Outbound>& out, std::string_view type, const Json& body, double now,
                             bool observers_only, bool close_after) {
  for (const auto& [id, c] : clients_) {
    if (c.role == Role::pending) continue;
    if (observers_only && c.role != Role::observer) continue;
    send(out, id, type, body, now, close_after);
  }
}

MatchSession::Json MatchSession::state_body() const {
  const Side human = config_.human_side;
  const Side ai = opponent_of(human);
  const AircraftState& own = eng_.aircraft(human);
  const GeometrySnapshot g = geometry(own, eng_.aircraft(ai));
  Json j;
  j["step"] = eng_.step_index;
  j["t"] = eng_.t();
  j["human_side"] = std::string(to_string(human));
  j["health"] = {{"blue", eng_.health(Side::blue)}, {"red", eng_.health(Side::red)}};
  j["own"] = aircraft_json(eng_, human);
  j["opponent"] = aircraft_json(eng_, ai);
  j["range"] = g.range;
  j["track_angle"] = g.track_angle;
  j["adverse_angle"] = g.adverse_angle;
  j["closure_rate"] = g.closure_rate;
  j["fuel"] = own.fuel;
  j["altitude"] = own.altitude();
  j["opponent_bearing"] = bearing_json(own, eng_.aircraft(ai), config_.view_half_angle_deg * kPi / 180.0);
  j["controls"] = controls_json(human_u_);
  j["gunsnap"] = {{"received", gunsnap_received_since_state_}, {"dealt", gunsnap_dealt_since_state_}};
  return j;
}

MatchSession::Json MatchSession::result_body() const {
  Json j;
  j["outcome"] = std::string(to_string(eng_.outcome));
  j["reason"] = std::string(to_string(reason_));
  j["step"] = eng_.step_index;
  j["t"] = eng_.t();
  j["health"] = {{"blue", eng_.health(Side::blue)}, {"red", eng_.health(Side::red)}};
  j["human_side"] = std::string(to_string(config_.human_side));
  return j;
}

std::vector<Outbound> MatchSession::receive(int client, std::string_view line, double now) {
  std::vector<Outbound> out;
  auto it = clients_.find(client);
  if (it == clients_.end()) return out;
  Client& c = it->second;

  auto reject = [&](std::string code, std::string message, bool close) {
    send(out, client, "error", Json{{"code", std::move(code)}, {"message", std::move(message)}}, now, close);
  };

  Json msg;
  try {
    msg = Json::parse(line);
  } catch (const std::exception&) {
    reject("bad_message", "message is not valid JSON", false);
    return out;
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    reject("bad_message", "message needs a string 'type'", false);
    return out;
  }
  const std::string type = msg["type"].get<std::string>();

  if (type == "hello") {
    if (c.role != Role::pending) {
      reject("bad_state", "hello already received", false);
      return out;
    }
    const int version = msg.contains("version") && msg["version"].is_number_integer() ? msg["version"].get<int>() : -1;
    if (version != kProtocolVersion) {
      reject("version_mismatch",
             "server speaks protocol " + std::to_string(kProtocolVersion) + ", client sent " + std::to_string(version),
             true);
      return out;
    }
    const std::string wanted =
        msg.contains("role") && msg["role"].is_string() ? msg["role"].get<std::string>() : std::string("pilot");
    Json body;
    body["version"] = kProtocolVersion;
    if (wanted == "pilot" && !pilot_ && phase_ == Phase::lobby) {
      c.role = Role::pilot;
      pilot_ = client;
      body["role"] = "pilot";
      body["side"] = std::string(to_string(config_.human_side));
    } else {
      c.role = Role::observer;
      body["role"] = "observer";
      body["side"] = nullptr;
      if (wanted == "pilot") body["note"] = "pilot slot taken; joined as observer";
    }
    body["opponent"] = ai_->name();
    body["state_hz"] = config_.state_hz;
    body["phase"] = std::string(to_string(phase_));
    send(out, client, "join", body, now);
    if (c.role == Role::observer && phase_ != Phase::lobby) send(out, client, "state", state_body(), now);
    return out;
  }

  if (c.role == Role::pending) {
    reject("bad_state", "send hello first", false);
    return out;
  }

  if (type == "join") {
    if (c.role != Role::pilot) {
      reject("not_pilot", "only the pilot can start the match", false);
      return out;
    }
    if (!msg.contains("ready") || msg["ready"] != true) return out;
    if (phase_ != Phase::lobby) {
      reject("bad_state", "match already started", false);
      return out;
    }
    start(out, now);
    return out;
  }

  if (type == "control") {
    if (c.role != Role::pilot) {
      reject("not_pilot", "observers cannot send controls", false);
      return out;
    }
    if (!msg.contains("seq") || !msg["seq"].is_number_integer()) {
      reject("bad_message", "control needs an integer 'seq'", false);
      return out;
    }
    const auto seq = msg["seq"].get<std::int64_t>();
    if (seq <= last_seq_) return out;  // stale
    ControlInput u;
    try {
      u.aileron = msg.at("aileron").get<double>();
      u.elevator = msg.at("elevator").get<double>();
      u.rudder = msg.at("rudder").get<double>();
      u.throttle = msg.at("throttle").get<double>();
    } catch (const std::exception&) {
      reject("bad_message", "control needs numeric aileron, elevator, rudder and throttle", false);
      return out;
    }
    if (!u.finite()) {
      reject("bad_message", "control values must be finite", false);
      return out;
    }
    human_u_ = u.clamped();
    last_seq_ = seq;
    return out;
  }

  reject("bad_message", "unknown message type '" + type + "'", false);
  return out;
}

std::vector<Outbound> MatchSession::disconnect(int client, double now) {
  std::vector<Outbound> out;
  if (!clients_.count(client)) return out;
  const bool was_pilot = pilot_ && *pilot_ == client;
  clients_.erase(client);
  if (!was_pilot) return out;
  pilot_.reset();
  if (phase_ == Phase::running || phase_ == Phase::paused) {
    // The absent pilot forfeits.
    eng_.outcome = config_.human_side == Side::blue ? Outcome::red_win : Outcome::blue_win;
    reason_ = TerminalReason::disconnect;
    finish(out, now);
  }
  return out;
}

void MatchSession::start(std::vector<Outbound>& out, double now) {
  ai_->reset(derive_seed(seed_, config_.human_side == Side::blue ? 2 : 1));
  eng_ = make_engagement(ic_.blue, ic_.red, config_.engagement);
  records_.clear();
  blue_damage_curve_.clear();
  red_damage_curve_.clear();
  phase_ = Phase::running;
  origin_ = now;
  last_tick_ = now;
  gunsnap_received_since_state_ = false;
  gunsnap_dealt_since_state_ = false;
  broadcast(out, "state", state_body(), now);
}

void MatchSession::finish(std::vector<Outbound>& out, double now) {
  phase_ = Phase::finished;
  blue_damage_curve_.push_back(eng_.damage_fraction(Side::blue));
  red_damage_curve_.push_back(eng_.damage_fraction(Side::red));
  broadcast(out, "result", result_body(), now, false, true);
}

std::vector<Outbound> MatchSession::tick(double now) {
  std::vector<Outbound> out;
  if (phase_ == Phase::paused) {
    phase_ = Phase::running;
    origin_ = now - static_cast<double>(eng_.step_index) / kSimHz;
    last_tick_ = now;
    broadcast(out, "event", Json{{"kind", "resume"}, {"step", eng_.step_index}}, now);
  }
  if (phase_ != Phase::running) return out;
  const double gap = now - last_tick_;
  last_tick_ = now;
  if (gap > config_.stall_seconds) {
    phase_ = Phase::paused;
    origin_ = now - static_cast<double>(eng_.step_index) / kSimHz;
    broadcast(out, "event", Json{{"kind", "pause"}, {"gap", gap}, {"step", eng_.step_index}}, now);
    return out;
  }
  advance(out, now);
  return out;
}

void MatchSession::advance(std::vector<Outbound>& out, double now) {
  const auto target = static_cast<std::int64_t>(std::floor((now - origin_) * kSimHz + 1e-9));
  const std::int64_t due = std::min<std::int64_t>(target - eng_.step_index, config_.max_catchup);
  const Side human = config_.human_side;
  const Side ai = opponent_of(human);
  // A state goes out whenever floor(step * hz / 50) advances.
  const auto state_slot = [this](std::int64_t k) { return k * config_.state_hz / 50; };
  bool received = false;
  bool dealt = false;
  std::vector<Json> states;

  for (std::int64_t i = 0; i < due && !eng_.terminal(); ++i) {
    blue_damage_curve_.push_back(eng_.damage_fraction(Side::blue));
    red_damage_curve_.push_back(eng_.damage_fraction(Side::red));
    const HierarchicalAgent* h = ai_->hierarchy();
    const std::size_t before = h ? h->decisions().size() : 0;

    ControlInput ai_u;
    bool ai_ok = true;
    try {
      ai_u = ai_->act(eng_, ai);
      ai_ok = ai_u.finite();
    } catch (const std::exception&) {
      ai_ok = false;
    }
    if (!ai_ok) {
      eng_.outcome = human == Side::blue ? Outcome::blue_win : Outcome::red_win;
      reason_ = TerminalReason::forfeit;
      break;
    }
    const ControlInput& ub = human == Side::blue ? human_u_ : ai_u;
    const ControlInput& ur = human == Side::red ? human_u_ : ai_u;
    const StepEvents ev = step_engagement(eng_, ub, ur, config_.engagement);
    if (ev.became_terminal) reason_ = ev.reason;

    StepRecord r;
    r.step = eng_.step_index;
    r.blue_controls = ub.clamped();
    r.red_controls = ur.clamped();
    r.blue = eng_.blue;
    r.red = eng_.red;
    r.blue_geometry = geometry(eng_.blue, eng_.red);
    r.red_geometry = geometry(eng_.red, eng_.blue);
    r.events = ev;
    if (h && h->decisions().size() > before) {
      (ai == Side::blue ? r.blue_selection : r.red_selection) = h->decisions().back();
      const auto& d = *h->decision();
      broadcast(out, "event",
                Json{{"kind", "selection"},
                     {"side", std::string(to_string(ai))},
                     {"step", eng_.step_index - 1},
                     {"index", d.chosen_index},
                     {"scores", d.scores}},
                now, true);
    }
    records_.push_back(std::move(r));

    received = received || ev.gunsnap_by(ai);
    dealt = dealt || ev.gunsnap_by(human);
    gunsnap_received_since_state_ = gunsnap_received_since_state_ || ev.gunsnap_by(ai);
    gunsnap_dealt_since_state_ = gunsnap_dealt_since_state_ || ev.gunsnap_by(human);
    if (state_slot(eng_.step_index) != state_slot(eng_.step_index - 1) || eng_.terminal()) {
      states.push_back(state_body());
      gunsnap_received_since_state_ = false;
      gunsnap_dealt_since_state_ = false;
    }
  }

  if (received) {
    broadcast(out, "event", Json{{"kind", "gunsnap"}, {"direction", "received"}, {"step", eng_.step_index}}, now);
  }
  if (dealt) {
    broadcast(out, "event", Json{{"kind", "gunsnap"}, {"direction", "dealt"}, {"step", eng_.step_index}}, now);
  }
  for (const auto& s : states) broadcast(out, "state", s, now);
  if (eng_.terminal()) finish(out, now);
}

EpisodeLog MatchSession::log() const {
  EpisodeLog log;
  log.seed = seed_;
  log.regime = std::string(to_string(ic_.regime));
  const std::string human = "human";
  log.blue_name = config_.human_side == Side::blue ? human : ai_->name();
  log.red_name = config_.human_side == Side::red ? human : ai_->name();
  log.config_hash = config_.config_hash;
  log.health_scale = config_.engagement.health_scale;
  log.blue_initial = ic_.blue;
  log.red_initial = ic_.red;
  log.steps = records_;
  log.outcome = eng_.outcome;
  log.reason = reason_;
  log.step_count = eng_.step_index;
  log.damage_blue = eng_.damage_fraction(Side::blue);
  log.damage_red = eng_.damage_fraction(Side::red);
  std::vector<double> blue_curve = blue_damage_curve_;
  std::vector<double> red_curve = red_damage_curve_;
  if (phase_ != Phase::finished) {
    blue_curve.push_back(log.damage_blue);
    red_curve.push_back(log.damage_red);
  }
  const auto& cfg = config_.engagement;
  log.reward_blue = episode_reward(red_curve, log.damage_blue, cfg.max_duration, cfg.reward_averaging);
  log.reward_red = episode_reward(blue_curve, log.damage_red, cfg.max_duration, cfg.reward_averaging);
  if (const HierarchicalAgent* h = ai_->hierarchy(); h && !h->decisions().empty()) {
    auto u = utilization(h->decisions(), static_cast<int>(h->policy_count()));
    (config_.human_side == Side::blue ? log.utilization_red : log.utilization_blue) = std::move(u);
  }
  return log;
}

}  // namespace dogfight
