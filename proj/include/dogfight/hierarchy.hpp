#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dogfight/engagement.hpp"
#include "dogfight/sac.hpp"

namespace dogfight {

class HierarchyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simulation steps per selector decision (50 Hz / 10 Hz).
inline constexpr int kSelectionInterval = 5;
/// Low-level action width: aileron, elevator, rudder, throttle.
inline constexpr int kLowLevelActionDim = 4;

/// Maps a squashed action in [-1, 1]^4 to control inputs. Throttle is
/// rescaled to [0, 1].
ControlInput action_to_controls(std::span<const float> a);
std::vector<float> controls_to_action(const ControlInput& u);

/// Index of the largest score; ties resolve to the lowest index.
int argmax_lowest(std::span<const float> scores);

struct SelectorDecision {
  std::vector<float> scores;
  int chosen_index{0};
  int hold_steps_remaining{kSelectionInterval - 1};
};

/// Evaluates the selector head. A null `rng` gives the deterministic (z = 0)
/// evaluation used in play.
SelectorDecision select(const sac::PolicyBundle& selector, std::span<const float> observation,
                        std::mt19937_64* rng = nullptr);

/// Dense gain on the track-angle term of the selector reward.
inline constexpr double kSelectorTrackGain = 0.1;

/// Damage dealt minus damage received by `side` this step plus
/// gain * (pi - track) / pi * dt.
double selector_reward(const StepEvents& events, Side side, const GeometrySnapshot& own,
                       double track_gain = kSelectorTrackGain, double dt = kSimDt);

/// Fraction of selection intervals in which each policy was chosen.
std::vector<double> utilization(std::span<const int> decisions, int policy_count);

/// Selector over frozen low-level policies. A decision is taken on steps with
/// step_index % 5 == 0 and governs that step and the four after it. Low-level
/// actors always run deterministically.
class HierarchicalAgent {
 public:
  HierarchicalAgent(sac::ActorSnapshot selector, std::vector<sac::ActorSnapshot> low_levels);

  struct Step {
    ControlInput controls;
    std::vector<float> low_level_action;
    bool new_decision{false};
  };

  /// Controls for `side` at the engagement's current step. With `selector_rng`
  /// set, new decisions sample the selector stochastically.
  Step act(const EngagementState& eng, Side side, std::mt19937_64* selector_rng = nullptr);
  /// As `act`, but a decision due at this step uses the supplied scores
  /// instead of evaluating the selector.
  Step act_with_scores(const EngagementState& eng, Side side, std::span<const float> scores);

  void reset();
  void set_selector(sac::ActorSnapshot selector);

  const std::optional<SelectorDecision>& decision() const { return decision_; }
  /// Chosen index of every decision since the last reset.
  const std::vector<int>& decisions() const { return decisions_; }
  std::size_t policy_count() const { return low_levels_.size(); }
  const sac::PolicyBundle& low_level(std::size_t i) const { return *low_levels_.at(i); }
  const sac::PolicyBundle& selector() const { return *selector_; }

 private:
  Step drive(const EngagementState& eng, Side side, std::span<const float> scores, std::mt19937_64* rng);

  sac::ActorSnapshot selector_;
  std::vector<sac::ActorSnapshot> low_levels_;
  std::optional<SelectorDecision> decision_;
  std::int64_t decision_step_{-1};
  std::vector<int> decisions_;
};

}  // namespace dogfight
