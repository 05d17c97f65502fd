#include "dogfight/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dogfight {

ControlInput action_to_controls(std::span<const float> a) {
  if (a.size() != static_cast<std::size_t>(kLowLevelActionDim)) {
    throw HierarchyError("action_to_controls: expected 4 values, got " + std::to_string(a.size()));
  }
  ControlInput u;
  u.aileron = a[0];
  u.elevator = a[1];
  u.rudder = a[2];
  u.throttle = 0.5 * (static_cast<double>(a[3]) + 1.0);
  return u;
}

std::vector<float> controls_to_action(const ControlInput& u) {
  return {static_cast<float>(u.aileron), static_cast<float>(u.elevator), static_cast<float>(u.rudder),
          static_cast<float>(2.0 * u.throttle - 1.0)};
}

int argmax_lowest(std::span<const float> scores) {
  if (scores.empty()) throw HierarchyError("argmax over an empty score vector");
  int best = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw HierarchyError("selector produced a non-finite score");
    if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

SelectorDecision select(const sac::PolicyBundle& selector, std::span<const float> observation,
                        std::mt19937_64* rng) {
  SelectorDecision d;
  d.scores = sac::sample_action(selector, observation, rng).action;
  d.chosen_index = argmax_lowest(d.scores);
  d.hold_steps_remaining = kSelectionInterval - 1;
  return d;
}

double selector_reward(const StepEvents& events, Side side, const GeometrySnapshot& own, double track_gain,
                       double dt) {
  const double sparse = events.dealt_by(side) - events.dealt_by(opponent_of(side));
  const double dense = track_gain * (kPi - own.track_angle) / kPi * dt;
  return sparse + dense;
}

std::vector<double> utilization(std::span<const int> decisions, int policy_count) {
  if (decisions.empty()) throw HierarchyError("utilization of an empty decision series");
  if (policy_count <= 0) throw HierarchyError("utilization needs at least one policy");
  std::vector<double> counts(static_cast<std::size_t>(policy_count), 0.0);
  for (int d : decisions) {
    if (d < 0 || d >= policy_count) throw HierarchyError("decision index out of range");
    counts[static_cast<std::size_t>(d)] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(decisions.size());
  return counts;
}

HierarchicalAgent::HierarchicalAgent(sac::ActorSnapshot selector, std::vector<sac::ActorSnapshot> low_levels)
    : low_levels_(std::move(low_levels)) {
  if (low_levels_.empty()) throw HierarchyError("hierarchy needs at least one low-level policy");
  for (std::size_t i = 0; i < low_levels_.size(); ++i) {
    const auto& p = low_levels_[i];
    if (!p) throw HierarchyError("low-level policy " + std::to_string(i) + " is missing");
    if (!p->frozen) throw HierarchyError("low-level policy " + std::to_string(i) + " is not frozen");
    if (p->act_dim != kLowLevelActionDim) {
      throw HierarchyError("low-level policy " + std::to_string(i) + " must emit 4 controls");
    }
    if (p->obs_dim != low_levels_.front()->obs_dim) {
      throw HierarchyError("low-level policies disagree on observation width");
    }
  }
  set_selector(std::move(selector));
}

void HierarchicalAgent::set_selector(sac::ActorSnapshot selector) {
  if (!selector) throw HierarchyError("selector is missing");
  if (selector->act_dim != static_cast<int>(low_levels_.size())) {
    throw HierarchyError("selector emits " + std::to_string(selector->act_dim) + " scores for " +
                         std::to_string(low_levels_.size()) + " policies");
  }
  if (selector->obs_dim != low_levels_.front()->obs_dim) {
    throw HierarchyError("selector and low-level policies disagree on observation width");
  }
  selector_ = std::move(selector);
}

void HierarchicalAgent::reset() {
  decision_.reset();
  decision_step_ = -1;
  decisions_.clear();
}

HierarchicalAgent::Step HierarchicalAgent::act(const EngagementState& eng, Side side,
                                               std::mt19937_64* selector_rng) {
  return drive(eng, side, {}, selector_rng);
}

HierarchicalAgent::Step HierarchicalAgent::act_with_scores(const EngagementState& eng, Side side,
                                                           std::span<const float> scores) {
  if (scores.size() != low_levels_.size()) throw HierarchyError("score vector does not match the policy count");
  return drive(eng, side, scores, nullptr);
}

HierarchicalAgent::Step HierarchicalAgent::drive(const EngagementState& eng, Side side,
                                                 std::span<const float> scores, std::mt19937_64* rng) {
  const ObservationVector o = observation(eng, side);
  Step out;
  const std::int64_t k = eng.step_index;
  const bool due = !decision_ || k < decision_step_ || (k % kSelectionInterval == 0 && k != decision_step_);
  if (due) {
    if (scores.empty()) {
      decision_ = select(*selector_, o, rng);
    } else {
      SelectorDecision d;
      d.scores.assign(scores.begin(), scores.end());
      d.chosen_index = argmax_lowest(d.scores);
      decision_ = std::move(d);
    }
    decision_step_ = k;
    decisions_.push_back(decision_->chosen_index);
    out.new_decision = true;
  }
  decision_->hold_steps_remaining = static_cast<int>((kSelectionInterval - 1) - k % kSelectionInterval);
  const auto& policy = *low_levels_[static_cast<std::size_t>(decision_->chosen_index)];
  out.low_level_action = sac::sample_action(policy, o, nullptr).action;
  out.controls = action_to_controls(out.low_level_action);
  return out;
}

}  // namespace dogfight
