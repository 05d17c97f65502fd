// dogfight: command-line entry point. Exit codes: 0 success, 1 usage,
// 2 configuration, 3 runtime.

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dogfight/agents.hpp"
#include "dogfight/arena.hpp"
#include "dogfight/checkpoint.hpp"
#include "dogfight/config.hpp"
#include "dogfight/episode_log.hpp"
#include "dogfight/matchd.hpp"
#include "dogfight/shaping.hpp"
#include "dogfight/tcp_server.hpp"
#include "dogfight/training.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace dogfight;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed{0};
  bool seed_given{false};
};

RunConfig load_run_config(const Common& c) {
  // --set lines are appended to the file text so a `profile` override still
  // selects the base defaults before any other key applies.
  std::string text;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + c.config_path + "'");
    std::stringstream s;
    s << in.rdbuf();
    text = s.str();
    if (!text.empty() && text.back() != '\n') text += '\n';
  }
  const int file_lines = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
  for (const auto& s : c.sets) {
    if (s.find('=') == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    if (s.find('\n') != std::string::npos || s.find('#') != std::string::npos) {
      throw ConfigError("--set value may not contain newlines or '#': '" + s + "'");
    }
    text += s + "\n";
  }
  RunConfig cfg;
  try {
    cfg = parse_config(text);
  } catch (const ConfigError& e) {
    if (e.line() > file_lines) {
      const std::string& bad = c.sets.at(static_cast<std::size_t>(e.line() - file_lines - 1));
      std::string what = e.what();
      if (what.rfind("line ", 0) == 0 && what.find(": ") != std::string::npos) what = what.substr(what.find(": ") + 2);
      throw ConfigError("--set " + bad + ": " + what, e.key(), 0);
    }
    if (!c.config_path.empty() && e.line() > 0) {
      std::string what = e.what();
      if (what.rfind("line ", 0) == 0 && what.find(": ") != std::string::npos) what = what.substr(what.find(": ") + 2);
      throw ConfigError(c.config_path + ":" + std::to_string(e.line()) + ": " + what, e.key(), e.line());
    }
    throw;
  }
  if (c.seed_given) {
    cfg.seed = c.seed;
    cfg.validate();
  }
  return cfg;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "Run configuration file (key = value lines)");
  app->add_option("--set", c.sets, "Override one configuration key, as key=value (repeatable)");
  app->add_option_function<std::uint64_t>(
      "--seed",
      [&c](const std::uint64_t& s) {
        c.seed = s;
        c.seed_given = true;
      },
      "Root seed (overrides the config)");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_manifest(const std::string& dir, const std::string& command, const std::vector<std::string>& argv,
                    const RunConfig& cfg, const Json& outputs, const Json& extra = Json::object()) {
  Json m;
  m["tool"] = "dogfight";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["argv"] = argv;
  m["seed"] = cfg.seed;
  m["config_hash"] = config_hash(cfg);
  m["config"] = canonical_text(cfg);
  m["outputs"] = outputs;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_text(fs::path(dir) / "manifest.json", m.dump(2) + "\n");
}

std::vector<AgentEntry> scripted_entries(const std::vector<std::string>& names) {
  std::vector<AgentEntry> out;
  for (const auto& n : names) {
    if (!is_scripted_pilot(n)) throw UsageError("unknown scripted opponent '" + n + "'");
    out.push_back(resolve_agent(n));
  }
  return out;
}

std::string format_eval(const std::string& agent, const std::vector<EvalSummary>& rows) {
  std::ostringstream s;
  s << "agent " << agent << "\n";
  s << std::left << std::setw(14) << "opponent" << std::right << std::setw(6) << "games" << std::setw(6) << "W"
    << std::setw(6) << "L" << std::setw(6) << "D" << std::setw(10) << "win%" << std::setw(12) << "reward" << "\n";
  auto line = [&s](const EvalSummary& r) {
    s << std::left << std::setw(14) << r.opponent << std::right << std::setw(6) << r.episodes << std::setw(6)
      << r.wins << std::setw(6) << r.losses << std::setw(6) << r.draws << std::setw(10) << std::fixed
      << std::setprecision(1) << 100.0 * r.win_rate() << std::setw(12) << std::setprecision(4) << r.mean_reward()
      << "\n";
  };
  for (const auto& r : rows) line(r);
  if (rows.size() > 1) line(pooled(rows));
  return s.str();
}

std::string format_utilization(const std::vector<EvalSummary>& rows, const std::vector<std::string>& names) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3);
  s << "utilization (fraction of selection intervals)\n";
  s << std::left << std::setw(14) << "opponent";
  for (const auto& n : names) s << std::right << std::setw(12) << n;
  s << "\n";
  for (const auto& r : rows) {
    if (r.utilization.empty()) continue;
    std::vector<double> mean(names.size(), 0.0);
    for (const auto& u : r.utilization) {
      for (std::size_t i = 0; i < mean.size() && i < u.size(); ++i) mean[i] += u[i];
    }
    s << std::left << std::setw(14) << r.opponent;
    for (double m : mean) s << std::right << std::setw(12) << m / static_cast<double>(r.utilization.size());
    s << "\n";
  }
  s << "\nper-episode series\n" << std::left << std::setw(14) << "opponent" << std::setw(9) << "episode";
  for (const auto& n : names) s << std::right << std::setw(12) << n;
  s << "\n";
  for (const auto& r : rows) {
    for (std::size_t e = 0; e < r.utilization.size(); ++e) {
      s << std::left << std::setw(14) << r.opponent << std::setw(9) << e;
      for (double v : r.utilization[e]) s << std::right << std::setw(12) << v;
      s << "\n";
    }
  }
  return s.str();
}

std::vector<std::string> policy_names(const std::string& spec) {
  const auto hash = spec.rfind('#');
  if (is_scripted_pilot(spec) || hash != std::string::npos) return {};
  const Checkpoint c = load_checkpoint(spec);
  std::vector<std::string> names;
  if (!c.contains(kSelectorBundle)) return names;
  for (const auto& nb : c.bundles) {
    if (nb.name != kSelectorBundle) names.push_back(nb.name);
  }
  return names;
}

// --------------------------------------------------------------------------
// train-low

struct TrainLowArgs {
  Common common;
  std::string profile;
  std::string out;
  std::int64_t eval_interval{0};
  int eval_episodes{10};
};

int run_train_low(const TrainLowArgs& a, const std::vector<std::string>& argv) {
  const RunConfig cfg = load_run_config(a.common);
  const Profile profile = profile_from_string(a.profile);
  ensure_dir(a.out);
  const std::string name(to_string(profile));
  std::ofstream metrics(fs::path(a.out) / "metrics.ndjson", std::ios::binary);

  LowTrainOptions o = cfg.low_train_options(profile);
  o.metrics = &metrics;
  o.eval_interval = a.eval_interval;
  const auto opponents = scripted_entries(cfg.eval_opponents);
  o.on_eval = [&](std::int64_t step, const sac::ActorSnapshot& actor) {
    auto frozen = frozen_low_level(*actor, name);
    AgentEntry me{name, [frozen, name] { return std::make_unique<PolicyPilot>(name, frozen); }};
    EvalOptions eo;
    eo.episodes = a.eval_episodes;
    eo.seed = derive_seed(cfg.seed, 31, static_cast<std::uint64_t>(step));
    eo.regime = regime_from_string(cfg.eval_regime);
    eo.ic = cfg.ic;
    eo.episode.engagement = cfg.engagement;
    eo.episode.record_steps = false;
    const auto rows = evaluate(me, opponents, eo);
    Json j;
    j["record"] = "eval";
    j["env_step"] = step;
    for (const auto& r : rows) {
      j["opponents"][r.opponent] = {{"episodes", r.episodes}, {"wins", r.wins},       {"losses", r.losses},
                                    {"draws", r.draws},       {"win_rate", r.win_rate()}, {"mean_reward", r.mean_reward()}};
    }
    metrics << j.dump() << '\n';
    std::cerr << "eval @" << step << ": win rate " << pooled(rows).win_rate() << "\n";
  };

  std::cerr << "training " << name << " for " << o.total_steps << " steps\n";
  LowTrainResult r = train_low(o);
  r.bundle.frozen = true;

  Checkpoint ck;
  ck.kind = "low";
  ck.profile = name;
  ck.config_hash = config_hash(cfg);
  ck.config_text = canonical_text(cfg);
  ck.seed = cfg.seed;
  ck.counters = {{"env_steps", r.counters.env_steps}, {"updates", r.counters.updates},
                 {"skipped_updates", r.counters.skipped_updates}, {"episodes", r.counters.episodes},
                 {"wins", r.counters.wins}, {"losses", r.counters.losses}, {"draws", r.counters.draws}};
  ck.bundles.push_back({name, r.bundle});
  const std::string ck_name = name + ".dfck";
  save_checkpoint((fs::path(a.out) / ck_name).string(), ck);
  write_manifest(a.out, "train-low", argv, cfg, Json::array({ck_name, "metrics.ndjson"}),
                 Json{{"profile", name}, {"bundle_digest", r.bundle.digest()}});
  std::cout << "wrote " << (fs::path(a.out) / ck_name).string() << " (" << r.counters.episodes << " episodes, "
            << r.counters.updates << " updates)\n";
  return kOk;
}

// --------------------------------------------------------------------------
// train-selector

struct TrainSelectorArgs {
  Common common;
  std::vector<std::string> low;
  std::string out;
};

int run_train_selector(const TrainSelectorArgs& a, const std::vector<std::string>& argv) {
  const RunConfig cfg = load_run_config(a.common);
  if (a.low.size() < 2) throw UsageError("train-selector needs at least two --low checkpoints");
  ensure_dir(a.out);

  std::vector<NamedBundle> lows;
  std::vector<sac::ActorSnapshot> snapshots;
  for (const auto& spec : a.low) {
    const auto hash = spec.rfind('#');
    const std::string path = hash == std::string::npos ? spec : spec.substr(0, hash);
    const Checkpoint c = load_checkpoint(path);
    std::string name = hash == std::string::npos ? std::string() : spec.substr(hash + 1);
    if (name.empty()) {
      if (c.bundles.size() != 1) throw UsageError(path + " holds several bundles; pick one with '#name'");
      name = c.bundles.front().name;
    }
    auto frozen = frozen_low_level(c.get(name), name);
    std::string unique = name;
    for (int k = 2; std::any_of(lows.begin(), lows.end(), [&](const NamedBundle& nb) { return nb.name == unique; });
         ++k) {
      unique = name + "_" + std::to_string(k);
    }
    lows.push_back({unique, *frozen});
    snapshots.push_back(frozen);
  }
  std::vector<std::string> before;
  for (const auto& s : snapshots) before.push_back(s->digest());

  std::ofstream metrics(fs::path(a.out) / "metrics.ndjson", std::ios::binary);
  SelectorTrainOptions o = cfg.selector_train_options();
  o.metrics = &metrics;
  std::cerr << "training selector over " << lows.size() << " policies for " << o.total_steps << " steps\n";
  SelectorTrainResult r = train_selector(snapshots, o);

  std::vector<std::string> after;
  for (const auto& s : snapshots) after.push_back(s->digest());
  if (before != after) throw std::runtime_error("low-level policies changed during selector training");

  r.selector.frozen = true;
  Checkpoint ck;
  ck.kind = "selector";
  ck.config_hash = config_hash(cfg);
  ck.config_text = canonical_text(cfg);
  ck.seed = cfg.seed;
  ck.counters = {{"env_steps", r.counters.env_steps}, {"updates", r.counters.updates},
                 {"skipped_updates", r.counters.skipped_updates}, {"episodes", r.counters.episodes},
                 {"wins", r.counters.wins}, {"losses", r.counters.losses}, {"draws", r.counters.draws}};
  ck.bundles.push_back({kSelectorBundle, r.selector});
  for (auto& nb : lows) ck.bundles.push_back(nb);
  save_checkpoint((fs::path(a.out) / "selector.dfck").string(), ck);

  std::ostringstream util;
  util << "episode";
  for (const auto& nb : lows) util << '\t' << nb.name;
  util << '\n' << std::setprecision(17);
  for (std::size_t e = 0; e < r.utilization.size(); ++e) {
    util << e;
    for (double v : r.utilization[e]) util << '\t' << v;
    util << '\n';
  }
  write_text(fs::path(a.out) / "utilization.tsv", util.str());

  Json names = Json::array();
  for (const auto& nb : lows) names.push_back(nb.name);
  write_manifest(a.out, "train-selector", argv, cfg, Json::array({"selector.dfck", "utilization.tsv", "metrics.ndjson"}),
                 Json{{"low_levels", a.low}, {"policy_names", names}, {"low_level_digests_before", before},
                      {"low_level_digests_after", after}});
  std::cout << "wrote " << (fs::path(a.out) / "selector.dfck").string() << " (" << r.counters.episodes
            << " episodes, low-level digests unchanged)\n";
  return kOk;
}

// --------------------------------------------------------------------------
// eval

struct EvalArgs {
  Common common;
  std::string agent;
  std::vector<std::string> opponents;
  int episodes{0};
  std::string regime;
  bool utilization{false};
  std::string out;
  std::string logs;
};

int run_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  const RunConfig cfg = load_run_config(a.common);
  const AgentEntry agent = resolve_named_agent(a.agent);
  std::vector<AgentEntry> opponents;
  for (const auto& o : (a.opponents.empty() ? cfg.eval_opponents : a.opponents)) opponents.push_back(resolve_named_agent(o));

  EvalOptions eo;
  eo.episodes = a.episodes > 0 ? a.episodes : cfg.eval_episodes;
  eo.seed = cfg.seed;
  eo.regime = regime_from_string(a.regime.empty() ? cfg.eval_regime : a.regime);
  eo.ic = cfg.ic;
  eo.episode.engagement = cfg.engagement;
  eo.episode.config_hash = config_hash(cfg);
  eo.episode.record_steps = !a.logs.empty();
  int logged = 0;
  if (!a.logs.empty()) {
    ensure_dir(a.logs);
    eo.on_episode = [&](const EpisodeLog& log) {
      std::ostringstream name;
      name << "episode_" << std::setw(5) << std::setfill('0') << logged++ << ".ndjson";
      write_text(fs::path(a.logs) / name.str(), to_ndjson(log));
    };
  }
  const auto rows = evaluate(agent, opponents, eo);

  std::string report = "config " + config_hash(cfg) + " seed " + std::to_string(cfg.seed) + "\n";
  report += format_eval(agent.name, rows);
  if (a.utilization) {
    const auto spec = a.agent.substr(a.agent.find('=') == std::string::npos ? 0 : a.agent.find('=') + 1);
    const auto names = policy_names(spec);
    if (names.empty()) throw UsageError("--utilization needs a hierarchical agent checkpoint");
    report += "\n" + format_utilization(rows, names);
  }
  std::cout << report;
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_text(fs::path(a.out) / "report.txt", report);
    Json hashes;
    for (const auto& r : rows) hashes[r.opponent] = r.log_hashes;
    write_manifest(a.out, "eval", argv, cfg, Json::array({"report.txt"}), Json{{"log_hashes", hashes}});
  }
  return kOk;
}

// --------------------------------------------------------------------------
// tournament

struct TournamentArgs {
  Common common;
  std::vector<std::string> agents;
  int episodes{10};
  std::string regime;
  std::string out;
  bool self_play{false};
};

int run_tournament(const TournamentArgs& a, const std::vector<std::string>& argv) {
  const RunConfig cfg = load_run_config(a.common);
  if (a.agents.size() < 2) throw UsageError("tournament needs at least two --agent entries");
  std::vector<AgentEntry> agents;
  for (const auto& s : a.agents) agents.push_back(resolve_named_agent(s));
  RoundRobinOptions ro;
  ro.episodes_per_pair = a.episodes;
  ro.seed = cfg.seed;
  ro.regime = regime_from_string(a.regime.empty() ? cfg.eval_regime : a.regime);
  ro.ic = cfg.ic;
  ro.episode.engagement = cfg.engagement;
  ro.episode.config_hash = config_hash(cfg);
  ro.episode.record_steps = false;
  ro.self_play = a.self_play;
  const Standings st = round_robin(agents, ro);
  const std::string text = "config " + config_hash(cfg) + " seed " + std::to_string(cfg.seed) + "\n" +
                           st.format_matrix() + "\n" + st.format_table();
  std::cout << text;
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_text(fs::path(a.out) / "standings.txt", text);
    write_text(fs::path(a.out) / "standings.json", st.to_json() + "\n");
    write_manifest(a.out, "tournament", argv, cfg, Json::array({"standings.txt", "standings.json"}));
  }
  return kOk;
}

// --------------------------------------------------------------------------
// serve

std::atomic<bool> g_stop{false};

struct ServeArgs {
  Common common;
  std::string checkpoint;
  std::string side;
  int port{-1};
  std::string ic;
  std::string bind{"127.0.0.1"};
  std::string log;
};

int run_serve(const ServeArgs& a, const std::vector<std::string>&) {
  const RunConfig cfg = load_run_config(a.common);
  const AgentEntry ai = resolve_named_agent(a.checkpoint);
  MatchConfig mc;
  mc.engagement = cfg.engagement;
  mc.human_side = side_from_string(a.side.empty() ? cfg.match_human_side : a.side);
  mc.state_hz = cfg.match_state_hz;
  mc.max_catchup = cfg.match_max_catchup;
  mc.stall_seconds = cfg.match_stall_seconds;
  mc.config_hash = config_hash(cfg);
  std::mt19937_64 ic_rng(derive_seed(cfg.seed, 41));
  const Regime regime = regime_from_string(a.ic.empty() ? cfg.match_regime : a.ic);
  MatchSession session(mc, ai.make(), sample_ic(regime, ic_rng, cfg.ic, cfg.engagement.dynamics), cfg.seed);
  TcpServer server(a.port >= 0 ? a.port : cfg.match_port, a.bind);
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  std::cout << "listening on " << a.bind << ":" << server.port() << " (human flies " << to_string(mc.human_side)
            << " against " << ai.name << ")" << std::endl;
  server.serve(session, monotonic_seconds, &g_stop);
  const EpisodeLog log = session.log();
  std::cout << "match over: " << to_string(log.outcome) << " (" << to_string(log.reason) << ") after "
            << log.step_count << " steps\n";
  if (!a.log.empty()) write_text(a.log, to_ndjson(log));
  return kOk;
}

// --------------------------------------------------------------------------
// replay

struct ReplayArgs {
  std::string log;
  int every{50};
};

int run_replay(const ReplayArgs& a) {
  std::ifstream in(a.log, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open episode log " + a.log);
  const EpisodeLog log = read_ndjson(in);
  std::cout << render_timeline(log, a.every);
  return kOk;
}

// --------------------------------------------------------------------------
// plot-surfaces

struct SurfaceArgs {
  Common common;
  std::string out;
  int resolution{37};
};

GeometrySnapshot synthetic_geometry(double range, double track, double adverse, double closure = 0.0) {
  GeometrySnapshot g;
  g.range = range;
  g.track_angle = track;
  g.adverse_angle = adverse;
  g.closure_rate = closure;
  g.altitude_own = 20000.0;
  return g;
}

std::string ascii_heatmap(const std::vector<std::vector<double>>& grid) {
  static const char* ramp = " .:-=+*#%@";
  double lo = 1e300;
  double hi = -1e300;
  for (const auto& row : grid) {
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::ostringstream s;
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    for (double v : *it) {
      const int k = hi > lo ? static_cast<int>((v - lo) / (hi - lo) * 9.0 + 0.5) : 0;
      s << ramp[k];
    }
    s << '\n';
  }
  s << "min " << lo << " max " << hi << '\n';
  return s.str();
}

int run_plot_surfaces(const SurfaceArgs& a, const std::vector<std::string>& argv) {
  const RunConfig cfg = load_run_config(a.common);
  if (a.resolution < 2) throw UsageError("--resolution must be at least 2");
  ensure_dir(a.out);
  const int n = a.resolution;
  const auto& w = cfg.shaping;

  struct Surface {
    std::string name;
    std::string x_label;
    double x_max;
    std::string y_label;
    double y_max;
    std::function<double(double, double)> f;
  };
  const std::vector<Surface> surfaces{
      {"wez_damage_rate", "range_ft", 4000.0, "track_rad", kPi / 60.0,
       [&](double r, double t) { return wez_damage_rate(synthetic_geometry(r, t, 0.0), cfg.engagement); }},
      {"relative_position", "track_rad", kPi, "adverse_rad", kPi,
       [&](double t, double adv) {
         const auto own = synthetic_geometry(2000.0, t, adv);
         const auto opp = synthetic_geometry(2000.0, kPi - adv, kPi - t);
         return r_relative_position(own, opp, w);
       }},
      {"track_theta", "track_rad", kPi, "adverse_rad", kPi,
       [&](double t, double adv) { return r_track_theta(synthetic_geometry(2000.0, t, adv), w); }},
      {"closure", "track_rad", kPi, "closure_fps", 1000.0,
       [&](double t, double c) { return r_closure(synthetic_geometry(2000.0, t, 0.0, c - 500.0), w); }},
      {"gunsnap_ramped", "range_ft", 4000.0, "track_rad", kPi / 30.0,
       [&](double r, double t) {
         ShapingWeights ramp = w;
         ramp.plateau = false;
         return gunsnap_value(synthetic_geometry(r, t, 0.0), ramp);
       }},
      {"gunsnap_plateau", "range_ft", 4000.0, "track_rad", kPi / 30.0,
       [&](double r, double t) {
         ShapingWeights plateau = w;
         plateau.plateau = true;
         return gunsnap_value(synthetic_geometry(r, t, 0.0), plateau);
       }},
      {"too_close", "range_ft", 1500.0, "adverse_rad", kPi,
       [&](double r, double adv) { return r_too_close(synthetic_geometry(r, 0.0, adv), w); }},
      {"deck", "altitude_ft", 4000.0, "unused", 1.0, [&](double h, double) { return r_deck(h, w); }},
  };

  Json outputs = Json::array();
  for (const auto& s : surfaces) {
    std::vector<std::vector<double>> grid(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
    std::ostringstream tsv;
    tsv << std::setprecision(10) << s.x_label << '\t' << s.y_label << '\t' << s.name << '\n';
    for (int j = 0; j < n; ++j) {
      const double y = s.y_max * j / (n - 1);
      for (int i = 0; i < n; ++i) {
        const double x = s.x_max * i / (n - 1);
        const double v = s.f(x, y);
        grid[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = v;
        tsv << x << '\t' << y << '\t' << v << '\n';
      }
    }
    write_text(fs::path(a.out) / (s.name + ".tsv"), tsv.str());
    outputs.push_back(s.name + ".tsv");
    std::cout << s.name << " (x: " << s.x_label << " 0.." << s.x_max << ", y: " << s.y_label << " 0.." << s.y_max
              << " upward)\n"
              << ascii_heatmap(grid) << '\n';
  }
  write_manifest(a.out, "plot-surfaces", argv, cfg, outputs, Json{{"resolution", n}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Hierarchical air-combat agents: training, evaluation and live matches"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  TrainLowArgs tl;
  auto* c_tl = app.add_subcommand("train-low", "Train one low-level policy (cz, as or cs)");
  add_common(c_tl, tl.common);
  c_tl->add_option("--profile", tl.profile, "Reward profile: cz, as or cs")->required();
  c_tl->add_option("-o,--out", tl.out, "Output directory")->required();
  c_tl->add_option("--eval-interval", tl.eval_interval, "Evaluate against scripted opponents every N steps (0: never)");
  c_tl->add_option("--eval-episodes", tl.eval_episodes, "Episodes per opponent in each evaluation");

  TrainSelectorArgs ts;
  auto* c_ts = app.add_subcommand("train-selector", "Train the policy selector over frozen low-level policies");
  add_common(c_ts, ts.common);
  c_ts->add_option("--low", ts.low, "Low-level checkpoint, optionally path#bundle (two or more)")->required();
  c_ts->add_option("-o,--out", ts.out, "Output directory")->required();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Evaluate one agent against opponents");
  add_common(c_ev, ev.common);
  c_ev->add_option("--agent", ev.agent, "Agent spec: randy, level_flier, path.dfck or path.dfck#bundle")->required();
  c_ev->add_option("--opponent", ev.opponents, "Opponent spec (repeatable; default eval.opponents)");
  c_ev->add_option("--episodes", ev.episodes, "Episodes per opponent (default eval.episodes)");
  c_ev->add_option("--regime", ev.regime, "Initial conditions: cz_wide, wez_offense, wez_defense, neutral");
  c_ev->add_flag("--utilization", ev.utilization, "Print selector utilization tables");
  c_ev->add_option("-o,--out", ev.out, "Directory for report.txt and manifest.json");
  c_ev->add_option("--logs", ev.logs, "Directory for per-episode logs");

  TournamentArgs tn;
  auto* c_tn = app.add_subcommand("tournament", "Round robin between agents");
  add_common(c_tn, tn.common);
  c_tn->add_option("--agent", tn.agents, "name=spec or spec (repeatable, two or more)")->required();
  c_tn->add_option("--episodes", tn.episodes, "Episodes per ordered pair");
  c_tn->add_option("--regime", tn.regime, "Initial conditions");
  c_tn->add_flag("--self-play", tn.self_play, "Also play each agent against itself");
  c_tn->add_option("-o,--out", tn.out, "Output directory");

  ServeArgs sv;
  auto* c_sv = app.add_subcommand("serve", "Host a live match against a connected pilot");
  add_common(c_sv, sv.common);
  c_sv->add_option("--checkpoint", sv.checkpoint, "AI agent spec")->required();
  c_sv->add_option("--side", sv.side, "Side flown by the human: blue or red");
  c_sv->add_option("--port", sv.port, "TCP port (0: ephemeral)");
  c_sv->add_option("--ic", sv.ic, "Initial-condition regime");
  c_sv->add_option("--bind", sv.bind, "Bind address");
  c_sv->add_option("--log", sv.log, "Write the match log here");

  ReplayArgs rp;
  auto* c_rp = app.add_subcommand("replay", "Print an episode log as a timeline");
  c_rp->add_option("log", rp.log, "Episode log (.ndjson)")->required();
  c_rp->add_option("--every", rp.every, "Print every N-th step plus event steps");

  SurfaceArgs ps;
  auto* c_ps = app.add_subcommand("plot-surfaces", "Tabulate the damage and shaping surfaces");
  add_common(c_ps, ps.common);
  c_ps->add_option("-o,--out", ps.out, "Output directory")->required();
  c_ps->add_option("--resolution", ps.resolution, "Grid points per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (c_tl->parsed()) return run_train_low(tl, args);
    if (c_ts->parsed()) return run_train_selector(ts, args);
    if (c_ev->parsed()) return run_eval(ev, args);
    if (c_tn->parsed()) return run_tournament(tn, args);
    if (c_sv->parsed()) return run_serve(sv, args);
    if (c_rp->parsed()) return run_replay(rp);
    if (c_ps->parsed()) return run_plot_surfaces(ps, args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
