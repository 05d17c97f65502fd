#include "dogfight/reach_task.hpp"

#include <algorithm>
#include <cmath>

namespace dogfight {

void ReachTask::reset(double d0) {
  d = d0;
  t = 0;
}

void ReachTask::reset(std::mt19937_64& rng) { reset(std::uniform_real_distribution<double>(-1.0, 1.0)(rng)); }

std::vector<float> ReachTask::observation() const {
  return {static_cast<float>(d), static_cast<float>(static_cast<double>(t) / kHorizon)};
}

double ReachTask::step(double a) {
  d = std::clamp(d + kGain * std::clamp(a, -1.0, 1.0), -kLimit, kLimit);
  ++t;
  return 1.0 - std::abs(d);
}

double reach_oracle_action(double d) { return std::clamp(-d / ReachTask::kGain, -1.0, 1.0); }

double reach_average_return(const std::function<double(const std::vector<float>&)>& policy,
                            const std::vector<double>& starts) {
  double total = 0.0;
  for (double d0 : starts) {
    ReachTask task;
    task.reset(d0);
    while (!task.done()) total += task.step(policy(task.observation()));
  }
  return starts.empty() ? 0.0 : total / static_cast<double>(starts.size());
}

double reach_oracle_return(const std::vector<double>& starts) {
  return reach_average_return([](const std::vector<float>& o) { return reach_oracle_action(o[0]); }, starts);
}

ReachTrainOptions::ReachTrainOptions() {
  sac.hidden = {64};
  sac.batch_size = 128;
  sac.learning_rate = 1e-3f;
  sac.tau = 5e-3f;
  sac.gamma = 0.99f;
  sac.entropy_target = -1.0f;
}

ReachTrainResult train_reach(const ReachTrainOptions& o) {
  std::mt19937_64 rng(o.seed);
  sac::PolicyBundle bundle = sac::PolicyBundle::create(2, 1, o.sac, rng);
  sac::SacLearner learner(std::move(bundle), o.sac, o.seed ^ 0x5AC5AC5ACULL);
  sac::ReplayBuffer buffer(o.buffer_capacity, 2, 1);

  std::mt19937_64 eval_rng(o.seed + 7919);
  std::vector<double> starts(static_cast<std::size_t>(o.eval_episodes));
  for (double& s : starts) s = std::uniform_real_distribution<double>(-1.0, 1.0)(eval_rng);

  ReachTrainResult result;
  result.oracle_return = reach_oracle_return(starts);
  auto evaluate = [&]() {
    const sac::PolicyBundle& b = learner.bundle();
    return reach_average_return(
        [&b](const std::vector<float>& obs) { return static_cast<double>(sac::sample_action(b, obs, nullptr).action[0]); },
        starts);
  };

  ReachTask task;
  task.reset(rng);
  std::uniform_real_distribution<float> warm(-1.0f, 1.0f);
  for (std::int64_t step = 1; step <= o.total_steps; ++step) {
    const std::vector<float> s = task.observation();
    float a = 0.0f;
    if (step <= o.warmup_steps) {
      a = warm(rng);
    } else {
      a = sac::sample_action(learner.bundle(), s, &rng).action[0];
    }
    const double r = task.step(a);
    const std::vector<float> s_next = task.observation();
    // The horizon is a time limit, not a terminal state.
    buffer.push(s, std::span<const float>(&a, 1), static_cast<float>(r), s_next, false);
    if (task.done()) task.reset(rng);
    if (step > o.warmup_steps) learner.train_step(buffer);
    if (step % o.eval_interval == 0) {
      const double ret = evaluate();
      result.curve.emplace_back(step, ret);
      result.best_return = std::max(result.best_return, ret);
      result.final_return = ret;
      if (result.steps_to_threshold < 0 && ret >= 0.9 * result.oracle_return) result.steps_to_threshold = step;
    }
  }
  return result;
}

}  // namespace dogfight
