#include "dogfight/arena.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace dogfight {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t s = base;
  std::uint64_t out = splitmix64(s);
  for (std::uint64_t coord : {a, b, c}) {
    s ^= coord + 0x632BE59BD9B4E019ULL + (out << 6) + (out >> 2);
    out = splitmix64(s);
  }
  return out;
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::cz_wide:
      return "cz_wide";
    case Regime::wez_offense:
      return "wez_offense";
    case Regime::wez_defense:
      return "wez_defense";
    case Regime::neutral:
      return "neutral";
  }
  return "neutral";
}

Regime regime_from_string(std::string_view s) {
  for (auto r : {Regime::cz_wide, Regime::wez_offense, Regime::wez_defense, Regime::neutral}) {
    if (to_string(r) == s) return r;
  }
  throw ArenaError("unknown initial-condition regime '" + std::string(s) + "'");
}

void IcConfig::validate() const {
  if (!(horizontal_range > 0.0)) throw ArenaError("ic.horizontal_range must be positive");
  if (!(altitude_min > 1000.0 && altitude_min < altitude_max)) {
    throw ArenaError("ic altitudes must satisfy 1000 < altitude_min < altitude_max");
  }
  if (!(speed_min > 0.0 && speed_min <= speed_max)) throw ArenaError("ic speeds must satisfy 0 < min <= max");
  if (!(max_pitch_deg >= 0.0 && max_pitch_deg < 90.0)) throw ArenaError("ic.max_pitch_deg must be in [0, 90)");
  if (!(neutral_separation > 0.0)) throw ArenaError("ic.neutral_separation must be positive");
  if (max_retries < 1) throw ArenaError("ic.max_retries must be >= 1");
}

AircraftState posed_state(const Vec3& position, const EulerAngles& attitude, double speed,
                          const DynamicsConfig& dynamics) {
  AircraftState s = level_flight_state(position, attitude.yaw, speed, dynamics);
  s.attitude = {wrap_angle(attitude.roll), attitude.pitch, wrap_angle(attitude.yaw)};
  s.velocity = nose_direction(s.attitude) * speed;
  return s;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Uniform on (-pi, pi].
double uniform_angle(std::mt19937_64& rng) { return -uniform(rng, -kPi, kPi); }

EulerAngles random_attitude(std::mt19937_64& rng, const IcConfig& c) {
  const double pitch_max = c.max_pitch_deg * kPi / 180.0;
  return {uniform_angle(rng), uniform(rng, -pitch_max, pitch_max), uniform_angle(rng)};
}

InitialCondition wez_offense(std::mt19937_64& rng, const IcConfig& c, const DynamicsConfig& d) {
  InitialCondition ic;
  ic.regime = Regime::wez_offense;
  const double pitch_max = c.max_pitch_deg * kPi / 180.0;
  const EulerAngles blue_att{uniform_angle(rng), uniform(rng, -pitch_max, pitch_max), uniform_angle(rng)};
  const Vec3 blue_pos{0.0, 0.0, uniform(rng, c.altitude_min, c.altitude_max)};
  ic.blue = posed_state(blue_pos, blue_att, uniform(rng, c.speed_min, c.speed_max), d);
  const double r = uniform(rng, 500.0, 3000.0);
  const Vec3 red_pos = blue_pos + nose_direction(ic.blue.attitude) * r;
  ic.red = posed_state(red_pos, random_attitude(rng, c), uniform(rng, c.speed_min, c.speed_max), d);
  return ic;
}

}  // namespace

InitialCondition sample_ic(Regime regime, std::mt19937_64& rng, const IcConfig& c, const DynamicsConfig& d) {
  c.validate();
  switch (regime) {
    case Regime::cz_wide: {
      for (int attempt = 0; attempt < c.max_retries; ++attempt) {
        InitialCondition ic;
        ic.regime = regime;
        const Vec3 blue_pos{0.0, 0.0, uniform(rng, c.altitude_min, c.altitude_max)};
        const Vec3 red_pos{uniform(rng, -c.horizontal_range, c.horizontal_range),
                           uniform(rng, -c.horizontal_range, c.horizontal_range),
                           uniform(rng, c.altitude_min, c.altitude_max)};
        ic.blue = posed_state(blue_pos, random_attitude(rng, c), uniform(rng, c.speed_min, c.speed_max), d);
        ic.red = posed_state(red_pos, random_attitude(rng, c), uniform(rng, c.speed_min, c.speed_max), d);
        if ((red_pos - blue_pos).norm() >= c.min_separation) return ic;
      }
      throw ArenaError("cz_wide sampler exhausted its retries");
    }
    case Regime::wez_offense:
      return wez_offense(rng, c, d);
    case Regime::wez_defense: {
      InitialCondition ic = wez_offense(rng, c, d);
      std::swap(ic.blue, ic.red);
      ic.regime = Regime::wez_defense;
      return ic;
    }
    case Regime::neutral: {
      InitialCondition ic;
      ic.regime = regime;
      const double heading = uniform_angle(rng);
      const double altitude = uniform(rng, std::max(c.altitude_min, 10000.0), std::max(c.altitude_max, 10001.0));
      const double speed = uniform(rng, c.speed_min, c.speed_max);
      const Vec3 right{-std::sin(heading), std::cos(heading), 0.0};
      const Vec3 blue_pos{0.0, 0.0, altitude};
      ic.blue = level_flight_state(blue_pos, heading, speed, d);
      ic.red = level_flight_state(blue_pos + right * c.neutral_separation, heading, speed, d);
      return ic;
    }
  }
  throw ArenaError("unhandled regime");
}

// ---------------------------------------------------------------------------
// Pilots

RandyPilot::RandyPilot(double rho, double sigma, double guard_altitude)
    : rho_(rho), sigma_(sigma), guard_altitude_(guard_altitude) {
  if (!(rho >= 0.0 && rho < 1.0) || !(sigma >= 0.0)) throw ArenaError("randy: rho must be in [0, 1), sigma >= 0");
}

void RandyPilot::reset(std::uint64_t seed) {
  rng_.seed(seed);
  walk_ = {0.0, 0.0, 0.0, 0.0};
}

ControlInput RandyPilot::act(const EngagementState& eng, Side side) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double k = std::sqrt(1.0 - rho_ * rho_) * sigma_;
  for (double& w : walk_) w = std::clamp(rho_ * w + k * normal(rng_), -1.0, 1.0);
  const AircraftState& s = eng.aircraft(side);
  if (s.altitude() < guard_altitude_ && s.velocity.z < 0.0) {
    const double roll = s.attitude.roll;
    return ControlInput{std::clamp(-0.75 * roll, -1.0, 1.0), std::abs(roll) < kPi / 3 ? 1.0 : 0.0, 0.0, 1.0};
  }
  return ControlInput{walk_[0], walk_[1], walk_[2], 0.5 * (walk_[3] + 1.0)}.clamped();
}

void LevelFlierPilot::reset(std::uint64_t) { captured_ = false; }

ControlInput LevelFlierPilot::act(const EngagementState& eng, Side side) {
  const AircraftState& s = eng.aircraft(side);
  if (!captured_) {
    target_altitude_ = s.altitude();
    captured_ = true;
  }
  const double speed = std::max(s.speed(), 1.0);
  const double climb_cmd = std::clamp(0.2 * (target_altitude_ - s.altitude()), -60.0, 60.0);
  const double path_cmd = std::asin(std::clamp(climb_cmd / speed, -0.5, 0.5));
  const double path = std::asin(std::clamp(s.velocity.z / speed, -1.0, 1.0));
  const double pitch_rate_cmd = 2.0 * (path_cmd - s.attitude.pitch) + 1.0 * (path_cmd - path);
  const double pitch_limit = std::min(1.5, 9.0 * kStandardGravity / speed);
  ControlInput u;
  u.aileron = std::clamp(-0.75 * s.attitude.roll, -1.0, 1.0);
  // Inverted: roll upright before pulling.
  u.elevator = std::abs(s.attitude.roll) > kPi / 2 ? 0.0 : std::clamp(pitch_rate_cmd / pitch_limit, -1.0, 1.0);
  u.rudder = 0.0;
  u.throttle = 1.0;
  return u;
}

PolicyPilot::PolicyPilot(std::string name, sac::ActorSnapshot policy, bool stochastic)
    : name_(std::move(name)), policy_(std::move(policy)), stochastic_(stochastic) {
  if (!policy_) throw ArenaError("policy pilot '" + name_ + "' has no policy");
  if (policy_->act_dim != kLowLevelActionDim || policy_->obs_dim != obs::size) {
    throw ArenaError("policy pilot '" + name_ + "' has the wrong observation or action width");
  }
}

void PolicyPilot::reset(std::uint64_t seed) { rng_.seed(seed); }

ControlInput PolicyPilot::act(const EngagementState& eng, Side side) {
  const ObservationVector o = observation(eng, side);
  return action_to_controls(sac::sample_action(*policy_, o, stochastic_ ? &rng_ : nullptr).action);
}

HierarchicalPilot::HierarchicalPilot(std::string name, HierarchicalAgent agent)
    : name_(std::move(name)), agent_(std::move(agent)) {}

void HierarchicalPilot::reset(std::uint64_t) { agent_.reset(); }

ControlInput HierarchicalPilot::act(const EngagementState& eng, Side side) { return agent_.act(eng, side).controls; }

bool is_scripted_pilot(std::string_view kind) { return kind == "randy" || kind == "level_flier"; }

std::unique_ptr<Pilot> make_scripted_pilot(std::string_view kind) {
  if (kind == "randy") return std::make_unique<RandyPilot>();
  if (kind == "level_flier") return std::make_unique<LevelFlierPilot>();
  throw ArenaError("unknown scripted pilot '" + std::string(kind) + "'");
}

// ---------------------------------------------------------------------------
// Episodes

namespace {

bool safe_act(Pilot& pilot, const EngagementState& eng, Side side, ControlInput& out) {
  try {
    out = pilot.act(eng, side);
  } catch (const std::exception&) {
    return false;
  }
  return out.finite();
}

}  // namespace

EpisodeLog run_episode(Pilot& blue, Pilot& red, const InitialCondition& ic, std::uint64_t seed,
                       const EpisodeOptions& options) {
  const EngagementConfig& cfg = options.engagement;
  cfg.validate();
  blue.reset(derive_seed(seed, 1));
  red.reset(derive_seed(seed, 2));

  EpisodeLog log;
  log.seed = seed;
  log.regime = std::string(to_string(ic.regime));
  log.blue_name = blue.name();
  log.red_name = red.name();
  log.config_hash = options.config_hash;
  log.health_scale = cfg.health_scale;

  EngagementState eng = make_engagement(ic.blue, ic.red, cfg);
  log.blue_initial = eng.blue;
  log.red_initial = eng.red;

  std::vector<double> red_damage_curve;   // blue's d_opp
  std::vector<double> blue_damage_curve;  // red's d_opp
  red_damage_curve.reserve(static_cast<std::size_t>(cfg.max_steps()) + 1);
  blue_damage_curve.reserve(static_cast<std::size_t>(cfg.max_steps()) + 1);

  auto decisions = [](const Pilot& p) { return p.hierarchy() ? p.hierarchy()->decisions().size() : 0; };

  while (!eng.terminal()) {
    red_damage_curve.push_back(eng.damage_fraction(Side::red));
    blue_damage_curve.push_back(eng.damage_fraction(Side::blue));

    const std::size_t blue_before = decisions(blue);
    const std::size_t red_before = decisions(red);
    ControlInput ub, ur;
    const bool blue_ok = safe_act(blue, eng, Side::blue, ub);
    const bool red_ok = safe_act(red, eng, Side::red, ur);
    if (!blue_ok || !red_ok) {
      eng.outcome = blue_ok ? Outcome::blue_win : (red_ok ? Outcome::red_win : Outcome::draw);
      log.reason = TerminalReason::forfeit;
      break;
    }
    const StepEvents ev = step_engagement(eng, ub, ur, cfg);
    if (ev.became_terminal) log.reason = ev.reason;
    if (options.record_steps) {
      StepRecord r;
      r.step = eng.step_index;
      r.blue_controls = ub.clamped();
      r.red_controls = ur.clamped();
      r.blue = eng.blue;
      r.red = eng.red;
      r.blue_geometry = geometry(eng.blue, eng.red);
      r.red_geometry = geometry(eng.red, eng.blue);
      r.events = ev;
      if (decisions(blue) > blue_before) r.blue_selection = blue.hierarchy()->decisions().back();
      if (decisions(red) > red_before) r.red_selection = red.hierarchy()->decisions().back();
      log.steps.push_back(std::move(r));
    }
  }
  red_damage_curve.push_back(eng.damage_fraction(Side::red));
  blue_damage_curve.push_back(eng.damage_fraction(Side::blue));

  log.outcome = eng.outcome;
  log.step_count = eng.step_index;
  log.damage_blue = eng.damage_fraction(Side::blue);
  log.damage_red = eng.damage_fraction(Side::red);
  log.reward_blue = episode_reward(red_damage_curve, log.damage_blue, cfg.max_duration, cfg.reward_averaging);
  log.reward_red = episode_reward(blue_damage_curve, log.damage_red, cfg.max_duration, cfg.reward_averaging);
  const auto util = [](const Pilot& p) -> std::optional<std::vector<double>> {
    const HierarchicalAgent* h = p.hierarchy();
    if (!h || h->decisions().empty()) return std::nullopt;
    return utilization(h->decisions(), static_cast<int>(h->policy_count()));
  };
  log.utilization_blue = util(blue);
  log.utilization_red = util(red);
  return log;
}

// ---------------------------------------------------------------------------
// Round robin

Standings round_robin(const std::vector<AgentEntry>& agents, const RoundRobinOptions& options) {
  if (agents.size() < 2) throw ArenaError("round robin needs at least two agents");
  if (options.episodes_per_pair < 1) throw ArenaError("episodes_per_pair must be >= 1");
  Standings st;
  st.seed = options.seed;
  st.config_hash = options.episode.config_hash;
  for (const auto& a : agents) st.table.push_back(Standing{a.name});

  const int n = static_cast<int>(agents.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j && !options.self_play) continue;
      PairResult pr;
      pr.blue = i;
      pr.red = j;
      auto blue = agents[static_cast<std::size_t>(i)].make();
      auto red = agents[static_cast<std::size_t>(j)].make();
      for (int k = 0; k < options.episodes_per_pair; ++k) {
        const std::uint64_t seed =
            derive_seed(options.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                        static_cast<std::uint64_t>(k));
        std::mt19937_64 ic_rng(seed);
        const InitialCondition ic =
            sample_ic(options.regime, ic_rng, options.ic, options.episode.engagement.dynamics);
        const EpisodeLog log = run_episode(*blue, *red, ic, seed, options.episode);
        pr.seeds.push_back(seed);
        pr.log_hashes.push_back(log_hash(log));
        pr.blue_reward_sum += log.reward_blue;
        pr.red_reward_sum += log.reward_red;
        Standing& sb = st.table[static_cast<std::size_t>(i)];
        Standing& sr = st.table[static_cast<std::size_t>(j)];
        sb.played += 1;
        sr.played += 1;
        sb.reward_sum += log.reward_blue;
        sr.reward_sum += log.reward_red;
        switch (log.outcome) {
          case Outcome::blue_win:
            pr.blue_wins += 1;
            sb.wins += 1;
            sr.losses += 1;
            break;
          case Outcome::red_win:
            pr.red_wins += 1;
            sr.wins += 1;
            sb.losses += 1;
            break;
          default:
            pr.draws += 1;
            sb.draws += 1;
            sr.draws += 1;
            break;
        }
        if (options.on_episode) options.on_episode(log);
      }
      st.pairs.push_back(std::move(pr));
    }
  }
  return st;
}

std::string Standings::format_matrix() const {
  const std::size_t n = table.size();
  std::vector<std::vector<std::array<int, 3>>> cell(n, std::vector<std::array<int, 3>>(n, {0, 0, 0}));
  std::vector<std::vector<bool>> played(n, std::vector<bool>(n, false));
  for (const auto& p : pairs) {
    const auto b = static_cast<std::size_t>(p.blue);
    const auto r = static_cast<std::size_t>(p.red);
    played[b][r] = played[r][b] = true;
    if (b == r) {
      cell[b][b][0] += p.blue_wins;
      cell[b][b][1] += p.red_wins;
      cell[b][b][2] += p.draws;
      continue;
    }
    cell[b][r][0] += p.blue_wins;
    cell[b][r][1] += p.red_wins;
    cell[b][r][2] += p.draws;
    cell[r][b][0] += p.red_wins;
    cell[r][b][1] += p.blue_wins;
    cell[r][b][2] += p.draws;
  }
  std::size_t width = 8;
  for (const auto& s : table) width = std::max(width, s.name.size() + 2);
  std::ostringstream out;
  auto pad = [&out, width](const std::string& s) { out << s << std::string(width - std::min(width, s.size()), ' '); };
  pad("W-L-D");
  for (const auto& s : table) pad(s.name);
  out << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    pad(table[i].name);
    for (std::size_t j = 0; j < n; ++j) {
      if (!played[i][j]) {
        pad("-");
        continue;
      }
      pad(std::to_string(cell[i][j][0]) + "-" + std::to_string(cell[i][j][1]) + "-" +
          std::to_string(cell[i][j][2]));
    }
    out << "\n";
  }
  return out.str();
}

std::string Standings::format_table() const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %6s %6s %6s %6s %8s %12s\n", "agent", "played", "wins", "losses", "draws",
                "win%", "mean_reward");
  out << buf;
  for (const auto& s : table) {
    std::snprintf(buf, sizeof buf, "%-16s %6d %6d %6d %6d %7.1f%% %12.6f\n", s.name.c_str(), s.played, s.wins,
                  s.losses, s.draws, 100.0 * s.win_rate(), s.mean_reward());
    out << buf;
  }
  return out.str();
}

std::string Standings::to_json() const {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  auto& t = j["standings"] = nlohmann::ordered_json::array();
  for (const auto& s : table) {
    t.push_back({{"name", s.name},
                 {"played", s.played},
                 {"wins", s.wins},
                 {"losses", s.losses},
                 {"draws", s.draws},
                 {"mean_reward", s.mean_reward()}});
  }
  auto& p = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& pr : pairs) {
    p.push_back({{"blue", table[static_cast<std::size_t>(pr.blue)].name},
                 {"red", table[static_cast<std::size_t>(pr.red)].name},
                 {"blue_wins", pr.blue_wins},
                 {"red_wins", pr.red_wins},
                 {"draws", pr.draws},
                 {"blue_reward_sum", pr.blue_reward_sum},
                 {"red_reward_sum", pr.red_reward_sum},
                 {"seeds", pr.seeds},
                 {"log_hashes", pr.log_hashes}});
  }
  return j.dump(2);
}

std::vector<EvalSummary> evaluate(const AgentEntry& agent, const std::vector<AgentEntry>& opponents,
                                  const EvalOptions& options) {
  if (options.episodes < 1) throw ArenaError("evaluation needs at least one episode");
  std::vector<EvalSummary> rows;
  auto blue = agent.make();
  for (std::size_t j = 0; j < opponents.size(); ++j) {
    EvalSummary row;
    row.opponent = opponents[j].name;
    auto red = opponents[j].make();
    for (int k = 0; k < options.episodes; ++k) {
      const std::uint64_t seed = derive_seed(options.seed, 1000 + j, static_cast<std::uint64_t>(k));
      std::mt19937_64 ic_rng(seed);
      const InitialCondition ic = sample_ic(options.regime, ic_rng, options.ic, options.episode.engagement.dynamics);
      const EpisodeLog log = run_episode(*blue, *red, ic, seed, options.episode);
      ++row.episodes;
      row.reward_sum += log.reward_blue;
      if (log.outcome == Outcome::blue_win) {
        ++row.wins;
      } else if (log.outcome == Outcome::red_win) {
        ++row.losses;
      } else {
        ++row.draws;
      }
      if (log.utilization_blue) row.utilization.push_back(*log.utilization_blue);
      row.log_hashes.push_back(log_hash(log));
      if (options.on_episode) options.on_episode(log);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

EvalSummary pooled(const std::vector<EvalSummary>& rows) {
  EvalSummary p;
  p.opponent = "all";
  for (const auto& r : rows) {
    p.episodes += r.episodes;
    p.wins += r.wins;
    p.losses += r.losses;
    p.draws += r.draws;
    p.reward_sum += r.reward_sum;
    p.utilization.insert(p.utilization.end(), r.utilization.begin(), r.utilization.end());
    p.log_hashes.insert(p.log_hashes.end(), r.log_hashes.begin(), r.log_hashes.end());
  }
  return p;
}

}  // namespace dogfight
