#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dogfight/arena.hpp"
#include "dogfight/sac.hpp"
#include "dogfight/shaping.hpp"

namespace dogfight {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Initial-condition regime used to train each profile.
Regime training_regime(Profile profile, std::mt19937_64& rng);

struct LowTrainOptions {
  Profile profile{Profile::cz};
  sac::SacConfig sac;
  EngagementConfig engagement;  ///< health_scale is the training value
  ShapingWeights shaping;
  IcConfig ic;
  std::int64_t total_steps{100000};
  std::int64_t warmup_steps{5000};
  int updates_per_step{1};
  std::size_t buffer_capacity{100000};
  /// Episodes are cut (not terminated) after this many seconds.
  double episode_seconds{60.0};
  /// Opponent pool sampled per episode: "randy", "level_flier", "snapshot".
  std::vector<std::string> opponents{"randy", "level_flier", "snapshot"};
  std::int64_t snapshot_interval{50000};
  std::uint64_t seed{0};
  /// Newline-delimited metrics; null disables them.
  std::ostream* metrics{nullptr};
  std::int64_t metrics_every{1};
  /// Called with the current actor every `eval_interval` environment steps
  /// (0 disables). The callback must not touch the training random streams.
  std::int64_t eval_interval{0};
  std::function<void(std::int64_t env_step, const sac::ActorSnapshot& actor)> on_eval;

  void validate() const;
};

struct TrainCounters {
  std::int64_t env_steps{0};
  std::int64_t updates{0};
  std::int64_t skipped_updates{0};
  std::int64_t episodes{0};
  int wins{0};
  int losses{0};
  int draws{0};
};

struct LowTrainResult {
  sac::PolicyBundle bundle;
  TrainCounters counters;
};

/// Trains one low-level policy with its profile's shaping reward. The trainee
/// flies blue. A trainee loss adds -loss_penalty to the final transition.
LowTrainResult train_low(const LowTrainOptions& options);

struct SelectorTrainOptions {
  sac::SacConfig sac;
  EngagementConfig engagement;
  IcConfig ic;
  Regime regime{Regime::cz_wide};
  double track_gain{kSelectorTrackGain};
  std::int64_t total_steps{100000};
  std::int64_t warmup_decisions{1000};
  std::size_t buffer_capacity{100000};
  double episode_seconds{60.0};
  std::vector<std::string> opponents{"randy", "level_flier"};
  std::uint64_t seed{0};
  std::ostream* metrics{nullptr};
  std::int64_t metrics_every{1};

  void validate() const;
};

struct SelectorTrainResult {
  sac::PolicyBundle selector;
  TrainCounters counters;
  /// Utilization row of every training episode.
  std::vector<std::vector<double>> utilization;
};

/// Trains the selector as a semi-MDP over 5-step decision intervals: one
/// transition and one SAC update per decision, rewards summed over the held
/// interval. Low-level policies must be frozen and are never modified.
SelectorTrainResult train_selector(const std::vector<sac::ActorSnapshot>& low_levels,
                                   const SelectorTrainOptions& options);

}  // namespace dogfight
