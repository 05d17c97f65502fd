#include "dogfight/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "dogfight/digest.hpp"

namespace dogfight {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(std::string_view text) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a finite number, got '" + s + "'");
  }
  return v;
}

std::int64_t parse_integer(std::string_view text) {
  const double v = parse_number(text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) {
    throw std::invalid_argument("expected an integer, got '" + std::string(text) + "'");
  }
  return static_cast<std::int64_t>(v);
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

std::vector<std::string> parse_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (item.empty()) throw std::invalid_argument("empty list element");
    out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

struct Field {
  std::string key;
  std::string description;
  std::function<std::string(RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

void check_range(double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) {
    throw std::invalid_argument("value " + format_double(v) + " outside [" + format_double(lo) + ", " +
                                format_double(hi) + "]");
  }
}

template <typename Access>
Field real(std::string key, std::string description, Access access, double lo, double hi) {
  return {std::move(key), std::move(description),
          [access](RunConfig& c) { return format_double(static_cast<double>(access(c))); },
          [access, lo, hi](RunConfig& c, std::string_view v) {
            const double x = parse_number(v);
            check_range(x, lo, hi);
            access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(x);
          }};
}

template <typename Access>
Field integer(std::string key, std::string description, Access access, double lo, double hi) {
  return {std::move(key), std::move(description),
          [access](RunConfig& c) { return std::to_string(access(c)); },
          [access, lo, hi](RunConfig& c, std::string_view v) {
            const std::int64_t x = parse_integer(v);
            check_range(static_cast<double>(x), lo, hi);
            access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(x);
          }};
}

template <typename Access>
Field boolean(std::string key, std::string description, Access access) {
  return {std::move(key), std::move(description),
          [access](RunConfig& c) { return std::string(access(c) ? "true" : "false"); },
          [access](RunConfig& c, std::string_view v) { access(c) = parse_bool(v); }};
}

template <typename Access>
Field choice(std::string key, std::string description, Access access, std::vector<std::string> allowed) {
  return {std::move(key), std::move(description), [access](RunConfig& c) { return std::string(access(c)); },
          [access, allowed](RunConfig& c, std::string_view v) {
            for (const auto& a : allowed) {
              if (a == v) {
                access(c) = std::string(v);
                return;
              }
            }
            throw std::invalid_argument("expected one of " + join(allowed) + ", got '" + std::string(v) + "'");
          }};
}

template <typename Access>
Field hidden_list(std::string key, std::string description, Access access) {
  return {std::move(key), std::move(description), [access](RunConfig& c) { return join(access(c)); },
          [access](RunConfig& c, std::string_view v) {
            std::vector<int> sizes;
            for (const auto& item : parse_list(v)) {
              const std::int64_t n = parse_integer(item);
              check_range(static_cast<double>(n), 1, 1 << 16);
              sizes.push_back(static_cast<int>(n));
            }
            access(c) = std::move(sizes);
          }};
}

template <typename Access>
Field name_list(std::string key, std::string description, Access access, std::vector<std::string> allowed) {
  return {std::move(key), std::move(description), [access](RunConfig& c) { return join(access(c)); },
          [access, allowed](RunConfig& c, std::string_view v) {
            auto items = parse_list(v);
            for (const auto& item : items) {
              bool ok = false;
              for (const auto& a : allowed) ok = ok || a == item;
              if (!ok) throw std::invalid_argument("unknown entry '" + item + "', expected " + join(allowed));
            }
            access(c) = std::move(items);
          }};
}

#define ACCESS(expr) [](RunConfig& c) -> auto& { return c.expr; }

const double kInf = std::numeric_limits<double>::infinity();

std::vector<Field> build_registry() {
  std::vector<Field> f;
  const std::vector<std::string> regimes{"cz_wide", "wez_offense", "wez_defense", "neutral"};
  f.push_back(choice("profile", "base defaults: desk or paper-scale", ACCESS(profile), {"desk", "paper-scale"}));
  f.push_back(integer("seed", "root seed of every random stream", ACCESS(seed), 0, 9.0e15));

  f.push_back(real("dynamics.max_thrust_to_weight", "full-throttle thrust in g", ACCESS(engagement.dynamics.max_thrust_to_weight), 1e-3, 10));
  f.push_back(real("dynamics.max_speed", "speed cap, ft/s", ACCESS(engagement.dynamics.max_speed), 1, 1e4));
  f.push_back(real("dynamics.g_limit", "positive load limit, g", ACCESS(engagement.dynamics.g_limit), 0.1, 50));
  f.push_back(real("dynamics.negative_g_limit", "negative load limit, g", ACCESS(engagement.dynamics.negative_g_limit), 0, 50));
  f.push_back(real("dynamics.side_g_limit", "lateral load limit, g", ACCESS(engagement.dynamics.side_g_limit), 0, 50));
  f.push_back(real("dynamics.roll_rate_max", "rad/s", ACCESS(engagement.dynamics.roll_rate_max), 1e-3, 20));
  f.push_back(real("dynamics.pitch_rate_max", "rad/s", ACCESS(engagement.dynamics.pitch_rate_max), 1e-3, 20));
  f.push_back(real("dynamics.yaw_rate_max", "rad/s", ACCESS(engagement.dynamics.yaw_rate_max), 1e-3, 20));
  f.push_back(real("dynamics.roll_time_constant", "s", ACCESS(engagement.dynamics.roll_time_constant), 0.02, 10));
  f.push_back(real("dynamics.pitch_time_constant", "s", ACCESS(engagement.dynamics.pitch_time_constant), 0.02, 10));
  f.push_back(real("dynamics.yaw_time_constant", "s", ACCESS(engagement.dynamics.yaw_time_constant), 0.02, 10));
  f.push_back(real("dynamics.engine_time_constant", "s", ACCESS(engagement.dynamics.engine_time_constant), 0.02, 60));
  f.push_back(real("dynamics.align_time_constant", "flight path to nose alignment, s", ACCESS(engagement.dynamics.align_time_constant), 0.02, 10));
  f.push_back(real("dynamics.corner_speed", "full-authority speed, ft/s", ACCESS(engagement.dynamics.corner_speed), 1, 1e4));
  f.push_back(real("dynamics.induced_drag_factor", "induced drag per g^2", ACCESS(engagement.dynamics.induced_drag_factor), 0, 1));
  f.push_back(real("dynamics.fuel_burn_rate", "fuel fraction per second at full thrust", ACCESS(engagement.dynamics.fuel_burn_rate), 0, 1));
  f.push_back(boolean("dynamics.fuel_gates_thrust", "empty tank removes thrust", ACCESS(engagement.dynamics.fuel_gates_thrust)));

  f.push_back(real("engagement.wez_min_range", "ft", ACCESS(engagement.wez_min_range), 0, 1e5));
  f.push_back(real("engagement.wez_max_range", "ft", ACCESS(engagement.wez_max_range), 1, 1e5));
  f.push_back(real("engagement.wez_cone_half_angle_deg", "WEZ cone half-angle, degrees", ACCESS(engagement.wez_cone_half_angle_deg), 0, 90));
  f.push_back(real("engagement.hard_deck", "ft", ACCESS(engagement.hard_deck), -1e5, 1e5));
  f.push_back(real("engagement.max_duration", "s", ACCESS(engagement.max_duration), 0.02, 1e5));
  f.push_back(real("engagement.health_scale", "starting health multiplier for evaluation", ACCESS(engagement.health_scale), 1, 1e6));
  f.push_back({"engagement.reward_averaging", "mean or integral",
               [](RunConfig& c) {
                 return std::string(c.engagement.reward_averaging == RewardAveraging::mean ? "mean" : "integral");
               },
               [](RunConfig& c, std::string_view v) {
                 if (v == "mean") {
                   c.engagement.reward_averaging = RewardAveraging::mean;
                 } else if (v == "integral") {
                   c.engagement.reward_averaging = RewardAveraging::integral;
                 } else {
                   throw std::invalid_argument("expected mean or integral, got '" + std::string(v) + "'");
                 }
               }});

  f.push_back(real("shaping.relative_position_gain", "", ACCESS(shaping.relative_position_gain), -1e3, 1e3));
  f.push_back(real("shaping.track_theta_gain", "", ACCESS(shaping.track_theta_gain), -1e3, 1e3));
  f.push_back(real("shaping.closure_gain", "", ACCESS(shaping.closure_gain), -1e3, 1e3));
  f.push_back(real("shaping.gunsnap_blue_gain", "", ACCESS(shaping.gunsnap_blue_gain), -1e3, 1e3));
  f.push_back(real("shaping.gunsnap_red_gain", "", ACCESS(shaping.gunsnap_red_gain), -1e3, 1e3));
  f.push_back(real("shaping.deck_gain", "", ACCESS(shaping.deck_gain), -1e3, 1e3));
  f.push_back(real("shaping.too_close_gain", "", ACCESS(shaping.too_close_gain), -1e3, 1e3));
  f.push_back(real("shaping.gunsnap_near", "gun-snap magnitude at 500 ft", ACCESS(shaping.gunsnap_near), 0, 1e3));
  f.push_back(real("shaping.gunsnap_far", "gun-snap magnitude at 3000 ft (ramped)", ACCESS(shaping.gunsnap_far), 0, 1e3));
  f.push_back(boolean("shaping.plateau", "plateau gun snaps in the CZ profile", ACCESS(shaping.plateau)));
  f.push_back(real("shaping.gunsnap_cone_deg", "gun-snap cone half-angle, degrees", ACCESS(shaping.gunsnap_cone_deg), 0, 90));
  f.push_back(real("shaping.gunsnap_min_range", "ft", ACCESS(shaping.gunsnap_min_range), 0, 1e5));
  f.push_back(real("shaping.gunsnap_max_range", "ft", ACCESS(shaping.gunsnap_max_range), 1, 1e5));
  f.push_back(real("shaping.closure_clamp", "closure rate at full weight, ft/s", ACCESS(shaping.closure_clamp), 1, 1e4));
  f.push_back(real("shaping.too_close_range", "ft", ACCESS(shaping.too_close_range), 0, 2999.999));
  f.push_back(real("shaping.too_close_adverse_limit", "rad", ACCESS(shaping.too_close_adverse_limit), 0, kPi));
  f.push_back(real("shaping.deck_floor", "ft", ACCESS(shaping.deck_floor), 1000, 1e5));
  f.push_back(real("shaping.deck_depth_scale", "ft of depth for full deck penalty", ACCESS(shaping.deck_depth_scale), 1, 1e5));
  f.push_back(real("shaping.loss_penalty", "terminal penalty when the trainee loses", ACCESS(shaping.loss_penalty), 0, 1e6));

  f.push_back(real("ic.horizontal_range", "ft", ACCESS(ic.horizontal_range), 1, 1e6));
  f.push_back(real("ic.altitude_min", "ft", ACCESS(ic.altitude_min), 1000, 1e5));
  f.push_back(real("ic.altitude_max", "ft", ACCESS(ic.altitude_max), 1000, 1e5));
  f.push_back(real("ic.speed_min", "ft/s", ACCESS(ic.speed_min), 1, 1e4));
  f.push_back(real("ic.speed_max", "ft/s", ACCESS(ic.speed_max), 1, 1e4));
  f.push_back(real("ic.max_pitch_deg", "degrees", ACCESS(ic.max_pitch_deg), 0, 89));
  f.push_back(real("ic.min_separation", "ft", ACCESS(ic.min_separation), 0, 1e6));
  f.push_back(real("ic.neutral_separation", "ft", ACCESS(ic.neutral_separation), 1, 1e6));

  auto sac_fields = [&f](const std::string& prefix, auto access) {
    f.push_back(hidden_list(prefix + ".hidden", "hidden layer widths", [access](RunConfig& c) -> auto& { return access(c).hidden; }));
    f.push_back(integer(prefix + ".batch_size", "", [access](RunConfig& c) -> auto& { return access(c).batch_size; }, 1, 1 << 20));
    f.push_back(real(prefix + ".learning_rate", "Adam step size", [access](RunConfig& c) -> auto& { return access(c).learning_rate; }, 0, 1));
    f.push_back(real(prefix + ".gamma", "discount", [access](RunConfig& c) -> auto& { return access(c).gamma; }, 0, 1));
    f.push_back(real(prefix + ".tau", "target soft-update rate", [access](RunConfig& c) -> auto& { return access(c).tau; }, 0, 1));
    f.push_back(real(prefix + ".entropy_target", "H0", [access](RunConfig& c) -> auto& { return access(c).entropy_target; }, -1e3, 1e3));
    f.push_back(real(prefix + ".initial_alpha", "", [access](RunConfig& c) -> auto& { return access(c).initial_alpha; }, 1e-8, 1e3));
    f.push_back(boolean(prefix + ".learn_alpha", "", [access](RunConfig& c) -> auto& { return access(c).learn_alpha; }));
    f.push_back(integer(prefix + ".target_update_interval", "", [access](RunConfig& c) -> auto& { return access(c).target_update_interval; }, 1, 1e9));
    f.push_back(real(prefix + ".log_std_min", "", [access](RunConfig& c) -> auto& { return access(c).log_std_min; }, -100, 100));
    f.push_back(real(prefix + ".log_std_max", "", [access](RunConfig& c) -> auto& { return access(c).log_std_max; }, -100, 100));
  };
  sac_fields("sac", [](RunConfig& c) -> sac::SacConfig& { return c.low_sac; });
  f.push_back(integer("replay.capacity", "transitions", ACCESS(replay_capacity), 1, 1e9));

  f.push_back(integer("train.steps", "environment steps per low-level run", ACCESS(train_steps), 0, 1e12));
  f.push_back(integer("train.warmup_steps", "uniform-random steps before learning", ACCESS(train_warmup_steps), 0, 1e12));
  f.push_back(integer("train.updates_per_step", "gradient steps per environment step", ACCESS(train_updates_per_step), 0, 1000));
  f.push_back(real("train.episode_seconds", "training episode cut, s", ACCESS(train_episode_seconds), 0.02, 1e5));
  f.push_back(real("train.health_scale", "starting health multiplier while training", ACCESS(train_health_scale), 1, 1e6));
  f.push_back(name_list("train.opponents", "opponent pool", ACCESS(train_opponents), {"randy", "level_flier", "snapshot"}));
  f.push_back(integer("train.snapshot_interval", "steps between self-play snapshots", ACCESS(train_snapshot_interval), 1, 1e12));
  f.push_back(integer("train.metrics_every", "write every n-th update record", ACCESS(metrics_every), 1, 1e12));

  sac_fields("selector", [](RunConfig& c) -> sac::SacConfig& { return c.selector_sac; });
  f.push_back(integer("selector.steps", "environment steps of selector training", ACCESS(selector_steps), 0, 1e12));
  f.push_back(integer("selector.warmup_decisions", "uniform-random decisions before learning", ACCESS(selector_warmup_decisions), 0, 1e12));
  f.push_back(real("selector.track_gain", "dense track-angle gain", ACCESS(selector_track_gain), 0, 1e3));
  f.push_back(real("selector.episode_seconds", "s", ACCESS(selector_episode_seconds), 0.1, 1e5));
  f.push_back(name_list("selector.opponents", "opponent pool", ACCESS(selector_opponents), {"randy", "level_flier"}));

  f.push_back(integer("eval.episodes", "episodes per evaluation", ACCESS(eval_episodes), 1, 1e9));
  f.push_back(choice("eval.regime", "initial conditions", ACCESS(eval_regime), regimes));
  f.push_back(name_list("eval.opponents", "scripted opponents", ACCESS(eval_opponents), {"randy", "level_flier"}));

  f.push_back(integer("matchd.port", "TCP port", ACCESS(match_port), 0, 65535));
  f.push_back(integer("matchd.state_hz", "state messages per second", ACCESS(match_state_hz), 1, 50));
  f.push_back(real("matchd.stall_seconds", "wall-clock gap that pauses a match", ACCESS(match_stall_seconds), 0.05, 60));
  f.push_back(integer("matchd.max_catchup", "simulation steps per tick at most", ACCESS(match_max_catchup), 1, 50));
  f.push_back(choice("matchd.regime", "initial conditions", ACCESS(match_regime), regimes));
  f.push_back(choice("matchd.human_side", "side flown by the connected pilot", ACCESS(match_human_side), {"blue", "red"}));
  return f;
}

#undef ACCESS

const std::vector<Field>& registry() {
  static const std::vector<Field> r = build_registry();
  return r;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : registry()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

struct Line {
  int number;
  std::string key;
  std::string value;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++number;
    const auto hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (!raw.empty()) {
      const auto eq = raw.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'", {}, number);
      }
      const auto key = trim(raw.substr(0, eq));
      const auto value = trim(raw.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": missing key", {}, number);
      out.push_back({number, std::string(key), std::string(value)});
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  low_sac.entropy_target = -4.0f;
  selector_sac.entropy_target = -3.0f;
}

void RunConfig::validate() const {
  try {
    engagement.validate();
    training_engagement().validate();
    shaping.validate();
    ic.validate();
    low_sac.validate();
    selector_sac.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

EngagementConfig RunConfig::training_engagement() const {
  EngagementConfig e = engagement;
  e.health_scale = train_health_scale;
  return e;
}

LowTrainOptions RunConfig::low_train_options(Profile p) const {
  LowTrainOptions o;
  o.profile = p;
  o.sac = low_sac;
  o.engagement = training_engagement();
  o.shaping = shaping;
  o.ic = ic;
  o.total_steps = train_steps;
  o.warmup_steps = train_warmup_steps;
  o.updates_per_step = train_updates_per_step;
  o.buffer_capacity = replay_capacity;
  o.episode_seconds = train_episode_seconds;
  o.opponents = train_opponents;
  o.snapshot_interval = train_snapshot_interval;
  o.seed = seed;
  o.metrics_every = metrics_every;
  return o;
}

SelectorTrainOptions RunConfig::selector_train_options() const {
  SelectorTrainOptions o;
  o.sac = selector_sac;
  o.engagement = training_engagement();
  o.ic = ic;
  o.track_gain = selector_track_gain;
  o.total_steps = selector_steps;
  o.warmup_decisions = selector_warmup_decisions;
  o.buffer_capacity = replay_capacity;
  o.episode_seconds = selector_episode_seconds;
  o.opponents = selector_opponents;
  o.seed = seed;
  o.metrics_every = metrics_every;
  return o;
}

RunConfig profile_defaults(std::string_view profile) {
  RunConfig c;
  if (profile == "desk") return c;
  if (profile == "paper-scale") {
    c.profile = "paper-scale";
    c.low_sac.hidden = {12288};
    c.selector_sac.hidden = {7168};
    c.replay_capacity = 5000000;
    return c;
  }
  throw ConfigError("unknown profile '" + std::string(profile) + "'", "profile");
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value, int line) {
  const std::string where = line > 0 ? "line " + std::to_string(line) + ": " : "";
  const Field* f = find_field(key);
  if (!f) throw ConfigError(where + "unknown key '" + std::string(key) + "'", std::string(key), line);
  try {
    f->set(config, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + "key '" + std::string(key) + "': " + e.what(), std::string(key), line);
  }
}

RunConfig parse_config(std::string_view text) {
  const std::vector<Line> lines = split_lines(text);
  std::string profile = "desk";
  for (const auto& l : lines) {
    if (l.key == "profile") profile = l.value;
  }
  RunConfig c;
  try {
    c = profile_defaults(profile);
  } catch (const ConfigError&) {
    int line = 0;
    for (const auto& l : lines) {
      if (l.key == "profile") line = l.number;
    }
    throw ConfigError("line " + std::to_string(line) + ": key 'profile': unknown profile '" + profile + "'",
                      "profile", line);
  }
  for (const auto& l : lines) apply_setting(c, l.key, l.value, l.number);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

std::string canonical_text(const RunConfig& config) {
  RunConfig copy = config;
  std::ostringstream out;
  for (const auto& f : registry()) out << f.key << " = " << f.get(copy) << "\n";
  return out.str();
}

std::string config_hash(const RunConfig& config) { return sha256_hex(canonical_text(config)); }

std::vector<ConfigKeyInfo> config_keys() {
  std::vector<ConfigKeyInfo> out;
  for (const auto& f : registry()) out.push_back({f.key, f.description});
  return out;
}

}  // namespace dogfight
