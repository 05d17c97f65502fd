#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dogfight/training.hpp"
#include "dogfight/engagement.hpp"
#include "dogfight/sac.hpp"
#include "dogfight/shaping.hpp"

namespace dogfight {

/// Rejected configuration. `key` and `line` are empty/0 when not applicable.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string key = {}, int line = 0)
      : std::runtime_error(message), key_(std::move(key)), line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

/// Every tunable of a run. Defaults form the "desk" profile.
struct RunConfig {
  std::string profile{"desk"};
  std::uint64_t seed{0};

  EngagementConfig engagement;  ///< evaluation rules (health_scale 1)
  ShapingWeights shaping;
  IcConfig ic;

  sac::SacConfig low_sac;
  sac::SacConfig selector_sac;
  std::size_t replay_capacity{100000};

  std::int64_t train_steps{100000};
  std::int64_t train_warmup_steps{5000};
  int train_updates_per_step{1};
  double train_episode_seconds{60.0};
  double train_health_scale{10.0};
  std::vector<std::string> train_opponents{"randy", "level_flier", "snapshot"};
  std::int64_t train_snapshot_interval{50000};
  std::int64_t metrics_every{1};

  std::int64_t selector_steps{100000};
  std::int64_t selector_warmup_decisions{1000};
  double selector_track_gain{kSelectorTrackGain};
  double selector_episode_seconds{60.0};
  std::vector<std::string> selector_opponents{"randy", "level_flier"};

  int eval_episodes{200};
  std::string eval_regime{"cz_wide"};
  std::vector<std::string> eval_opponents{"randy", "level_flier"};

  int match_port{7878};
  int match_state_hz{20};
  double match_stall_seconds{1.0};
  int match_max_catchup{5};
  std::string match_regime{"neutral"};
  std::string match_human_side{"red"};

  RunConfig();

  /// Cross-field validation of the whole configuration.
  void validate() const;

  LowTrainOptions low_train_options(Profile profile) const;
  SelectorTrainOptions selector_train_options() const;
  /// Engagement rules used for training (health inflated).
  EngagementConfig training_engagement() const;
};

/// "desk" or "paper-scale" defaults.
RunConfig profile_defaults(std::string_view profile);

/// Parses the key-value format. A `profile` key selects the base defaults and
/// may appear anywhere; every other key overrides them.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
/// Applies one "key = value" override.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value, int line = 0);

/// Canonical "key = value" text of every key in registry order.
std::string canonical_text(const RunConfig& config);
/// SHA-256 of `canonical_text`.
std::string config_hash(const RunConfig& config);

struct ConfigKeyInfo {
  std::string key;
  std::string description;
};
/// Every recognised key with a one-line description.
std::vector<ConfigKeyInfo> config_keys();

}  // namespace dogfight
