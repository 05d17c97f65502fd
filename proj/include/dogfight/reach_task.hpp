#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "dogfight/sac.hpp"

namespace dogfight {

/// One-dimensional reach task used to sanity-check the SAC learner.
///
/// d0 ~ U[-1, 1]; d' = clip(d + 0.1 a, -2, 2) with a in [-1, 1];
/// reward 1 - |d'|; 50 steps per episode; observation (d, t / 50).
struct ReachTask {
  static constexpr int kHorizon = 50;
  static constexpr double kGain = 0.1;
  static constexpr double kLimit = 2.0;

  double d{0.0};
  int t{0};

  void reset(double d0);
  void reset(std::mt19937_64& rng);
  std::vector<float> observation() const;
  /// Applies `a` (clamped to [-1, 1]) and returns the reward.
  double step(double a);
  bool done() const { return t >= kHorizon; }
};

/// Optimal bang-bang controller: full deflection toward 0, exact landing on
/// the final move, then hold.
double reach_oracle_action(double d);

/// Return of `policy` from each start in `starts`, averaged.
double reach_average_return(const std::function<double(const std::vector<float>&)>& policy,
                            const std::vector<double>& starts);

/// Average oracle return from `starts`.
double reach_oracle_return(const std::vector<double>& starts);

struct ReachTrainOptions {
  sac::SacConfig sac;
  std::int64_t total_steps{50000};
  std::int64_t warmup_steps{1000};
  std::int64_t eval_interval{2500};
  int eval_episodes{100};
  std::size_t buffer_capacity{100000};
  std::uint64_t seed{0};

  ReachTrainOptions();
};

struct ReachTrainResult {
  double oracle_return{0.0};
  double best_return{0.0};
  double final_return{0.0};
  std::int64_t steps_to_threshold{-1};  ///< first eval step at >= 90% of oracle, -1 if never
  std::vector<std::pair<std::int64_t, double>> curve;
};

/// Trains SAC on the reach task, evaluating the deterministic policy every
/// `eval_interval` steps on fixed starting points.
ReachTrainResult train_reach(const ReachTrainOptions& options);

}  // namespace dogfight
