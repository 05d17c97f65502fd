#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dogfight/arena.hpp"
#include "dogfight/episode_log.hpp"

namespace dogfight {

inline constexpr int kProtocolVersion = 1;

class MatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MatchConfig {
  EngagementConfig engagement;
  Side human_side{Side::red};
  /// State messages per second, at most 50. Emitted on the steps where
  /// floor(step * state_hz / 50) advances.
  int state_hz{20};
  /// Simulation steps run by one tick at most.
  int max_catchup{5};
  /// A gap between ticks longer than this pauses the match.
  double stall_seconds{1.0};
  /// Half-angle of the pilot's forward view; outside it the opponent bearing is flagged off-screen.
  double view_half_angle_deg{45.0};
  std::string config_hash;

  void validate() const;
};

/// One line to deliver to one client.
struct Outbound {
  int client{0};
  std::string line;  ///< one JSON message, without the trailing newline
  bool close_after{false};
};

/// Clock-driven match between one connected human pilot and an AI pilot.
///
/// The session is a pure state machine: callers feed it connections, received
/// lines and wall-clock ticks (seconds, monotonic) and deliver what it returns.
/// Controls received between ticks take effect at the first step of the next
/// tick.
class MatchSession {
 public:
  enum class Phase { lobby, running, paused, finished };

  MatchSession(MatchConfig config, std::unique_ptr<Pilot> ai, InitialCondition ic, std::uint64_t seed);

  int connect();
  std::vector<Outbound> receive(int client, std::string_view line, double now);
  std::vector<Outbound> disconnect(int client, double now);
  std::vector<Outbound> tick(double now);

  Phase phase() const { return phase_; }
  const EngagementState& engagement() const { return eng_; }
  std::int64_t steps() const { return eng_.step_index; }
  /// Control currently held for the human side.
  const ControlInput& human_controls() const { return human_u_; }
  std::int64_t last_control_seq() const { return last_seq_; }
  std::optional<int> pilot() const { return pilot_; }
  std::size_t client_count() const { return clients_.size(); }
  /// Log of the match so far, with the same layout as arena episodes.
  EpisodeLog log() const;

  /// Neutral stick, half throttle.
  static ControlInput default_controls();

 private:
  enum class Role { pending, pilot, observer };
  struct Client {
    Role role{Role::pending};
    std::int64_t seq{0};
  };

  using Json = nlohmann::ordered_json;

  void send(std::vector<Outbound>& out, int client, std::string_view type, const Json& body, double now,
            bool close_after = false);
  void broadcast(std::vector<Outbound>& out, std::string_view type, const Json& body, double now,
                 bool observers_only = false, bool close_after = false);
  Json state_body() const;
  Json result_body() const;
  void start(std::vector<Outbound>& out, double now);
  void finish(std::vector<Outbound>& out, double now);
  void advance(std::vector<Outbound>& out, double now);

  MatchConfig config_;
  std::unique_ptr<Pilot> ai_;
  InitialCondition ic_;
  std::uint64_t seed_;
  EngagementState eng_;
  Phase phase_{Phase::lobby};
  std::map<int, Client> clients_;
  int next_client_{1};
  std::optional<int> pilot_;
  ControlInput human_u_;
  std::int64_t last_seq_{-1};
  double origin_{0.0};
  double last_tick_{0.0};
  bool gunsnap_received_since_state_{false};
  bool gunsnap_dealt_since_state_{false};
  TerminalReason reason_{TerminalReason::none};
  std::vector<StepRecord> records_;
  std::vector<double> blue_damage_curve_;
  std::vector<double> red_damage_curve_;
};

std::string_view to_string(MatchSession::Phase p);

}  // namespace dogfight
