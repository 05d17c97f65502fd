#include "dogfight/training.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

namespace dogfight {

namespace {

using Json = nlohmann::ordered_json;

std::int64_t episode_step_cap(double seconds, const EngagementConfig& env) {
  const auto cap = static_cast<std::int64_t>(std::llround(seconds * kSimHz));
  return std::min(cap, env.max_steps());
}

void write_update(std::ostream* out, std::int64_t every, std::int64_t env_step, const sac::TrainMetrics& m) {
  if (!out || m.skipped || every <= 0 || m.step % every != 0) return;
  Json j;
  j["record"] = "update";
  j["env_step"] = env_step;
  j["update"] = m.step;
  j["q1_loss"] = m.q1_loss;
  j["q2_loss"] = m.q2_loss;
  j["policy_loss"] = m.policy_loss;
  j["alpha_loss"] = m.alpha_loss;
  j["alpha"] = m.alpha;
  j["entropy"] = m.entropy;
  *out << j.dump() << '\n';
}

void tally(TrainCounters& c, Outcome outcome) {
  if (outcome == Outcome::blue_win) {
    ++c.wins;
  } else if (outcome == Outcome::red_win) {
    ++c.losses;
  } else {
    ++c.draws;
  }
}

std::unique_ptr<Pilot> make_opponent(const std::string& kind, const sac::ActorSnapshot& snapshot) {
  if (kind == "snapshot") {
    if (snapshot) return std::make_unique<PolicyPilot>("snapshot", snapshot, false);
    return make_scripted_pilot("randy");
  }
  return make_scripted_pilot(kind);
}

void validate_opponents(const std::vector<std::string>& pool, bool allow_snapshot) {
  if (pool.empty()) throw TrainingError("opponent pool is empty");
  for (const auto& k : pool) {
    if (!is_scripted_pilot(k) && !(allow_snapshot && k == "snapshot")) {
      throw TrainingError("unknown training opponent '" + k + "'");
    }
  }
}

}  // namespace

Regime training_regime(Profile profile, std::mt19937_64& rng) {
  if (profile == Profile::cz) return Regime::cz_wide;
  return std::bernoulli_distribution(0.5)(rng) ? Regime::wez_offense : Regime::wez_defense;
}

void LowTrainOptions::validate() const {
  sac.validate();
  engagement.validate();
  shaping.validate();
  ic.validate();
  if (total_steps < 0 || warmup_steps < 0) throw TrainingError("step counts must be non-negative");
  if (updates_per_step < 0) throw TrainingError("updates_per_step must be non-negative");
  if (buffer_capacity == 0) throw TrainingError("buffer capacity must be positive");
  if (!(episode_seconds > 0.0)) throw TrainingError("episode_seconds must be positive");
  if (snapshot_interval <= 0) throw TrainingError("snapshot_interval must be positive");
  if (eval_interval < 0) throw TrainingError("eval_interval must be non-negative");
  validate_opponents(opponents, true);
}

LowTrainResult train_low(const LowTrainOptions& o) {
  o.validate();
  std::mt19937_64 rng(o.seed);
  std::mt19937_64 env_rng(derive_seed(o.seed, 11));
  sac::PolicyBundle bundle = sac::PolicyBundle::create(obs::size, kLowLevelActionDim, o.sac, rng);
  sac::SacLearner learner(std::move(bundle), o.sac, derive_seed(o.seed, 12));
  sac::ReplayBuffer buffer(o.buffer_capacity, obs::size, kLowLevelActionDim);
  const std::int64_t cap = episode_step_cap(o.episode_seconds, o.engagement);

  LowTrainResult result;
  TrainCounters& c = result.counters;
  sac::ActorSnapshot snapshot;
  std::uniform_real_distribution<float> warm(-1.0f, 1.0f);

  while (c.env_steps < o.total_steps) {
    const Regime regime = training_regime(o.profile, env_rng);
    const InitialCondition ic = sample_ic(regime, env_rng, o.ic, o.engagement.dynamics);
    const std::string& kind =
        o.opponents[std::uniform_int_distribution<std::size_t>(0, o.opponents.size() - 1)(env_rng)];
    auto opponent = make_opponent(kind, snapshot);
    opponent->reset(derive_seed(o.seed, 13, static_cast<std::uint64_t>(c.episodes)));

    EngagementState eng = make_engagement(ic.blue, ic.red, o.engagement);
    RewardBreakdown sums;
    double shaped_return = 0.0;
    std::int64_t episode_steps = 0;
    ObservationVector s = observation(eng, Side::blue);

    while (!eng.terminal() && episode_steps < cap && c.env_steps < o.total_steps) {
      std::vector<float> a(kLowLevelActionDim);
      if (c.env_steps < o.warmup_steps) {
        for (float& x : a) x = warm(rng);
      } else {
        a = sac::sample_action(learner.bundle(), s, &rng).action;
      }
      const ControlInput red_u = opponent->act(eng, Side::red);
      const StepEvents ev = step_engagement(eng, action_to_controls(a), red_u, o.engagement);
      ++episode_steps;
      ++c.env_steps;

      const RewardBreakdown rb =
          compose(o.profile, geometry(eng.blue, eng.red), geometry(eng.red, eng.blue), o.shaping);
      double r = rb.total;
      sums.relative_position += rb.relative_position;
      sums.track_theta += rb.track_theta;
      sums.closure += rb.closure;
      sums.gunsnap_blue += rb.gunsnap_blue;
      sums.gunsnap_red += rb.gunsnap_red;
      sums.deck += rb.deck;
      sums.too_close += rb.too_close;
      if (eng.outcome == Outcome::red_win) r -= o.shaping.loss_penalty;
      shaped_return += r;
      const bool done = eng.terminal() && ev.reason != TerminalReason::timeout;
      const ObservationVector s_next = observation(eng, Side::blue);
      buffer.push(s, a, static_cast<float>(r), s_next, done);
      s = s_next;

      if (c.env_steps > o.warmup_steps) {
        for (int k = 0; k < o.updates_per_step; ++k) {
          const sac::TrainMetrics m = learner.train_step(buffer);
          if (!m.skipped) ++c.updates;
          write_update(o.metrics, o.metrics_every, c.env_steps, m);
        }
      }
      if (c.env_steps % o.snapshot_interval == 0) snapshot = learner.snapshot();
      if (o.on_eval && o.eval_interval > 0 && c.env_steps % o.eval_interval == 0) {
        o.on_eval(c.env_steps, learner.snapshot());
      }
    }

    tally(c, eng.outcome);
    ++c.episodes;
    if (o.metrics) {
      Json j;
      j["record"] = "episode";
      j["episode"] = c.episodes;
      j["env_step"] = c.env_steps;
      j["profile"] = std::string(to_string(o.profile));
      j["regime"] = std::string(to_string(regime));
      j["opponent"] = opponent->name();
      j["steps"] = episode_steps;
      j["outcome"] = std::string(to_string(eng.outcome));
      j["shaped_return"] = shaped_return;
      j["components"] = {{"relative_position", sums.relative_position}, {"track_theta", sums.track_theta},
                         {"closure", sums.closure},     {"gunsnap_blue", sums.gunsnap_blue},
                         {"gunsnap_red", sums.gunsnap_red}, {"deck", sums.deck},
                         {"too_close", sums.too_close}};
      j["alpha"] = learner.bundle().alpha();
      *o.metrics << j.dump() << '\n';
    }
  }
  c.skipped_updates = learner.skipped_updates();
  result.bundle = learner.bundle();
  return result;
}

void SelectorTrainOptions::validate() const {
  sac.validate();
  engagement.validate();
  ic.validate();
  if (total_steps < 0 || warmup_decisions < 0) throw TrainingError("step counts must be non-negative");
  if (buffer_capacity == 0) throw TrainingError("buffer capacity must be positive");
  if (!(episode_seconds > 0.0)) throw TrainingError("episode_seconds must be positive");
  validate_opponents(opponents, false);
}

SelectorTrainResult train_selector(const std::vector<sac::ActorSnapshot>& low_levels,
                                   const SelectorTrainOptions& o) {
  o.validate();
  if (low_levels.size() < 2) throw TrainingError("selector training needs at least two low-level policies");
  const int n = static_cast<int>(low_levels.size());
  std::mt19937_64 rng(o.seed);
  std::mt19937_64 env_rng(derive_seed(o.seed, 21));
  sac::PolicyBundle init = sac::PolicyBundle::create(obs::size, n, o.sac, rng);
  sac::SacLearner learner(std::move(init), o.sac, derive_seed(o.seed, 22));
  sac::ReplayBuffer buffer(o.buffer_capacity, obs::size, n);
  HierarchicalAgent agent(learner.snapshot(), low_levels);
  const std::int64_t cap = episode_step_cap(o.episode_seconds, o.engagement);

  SelectorTrainResult result;
  TrainCounters& c = result.counters;
  std::int64_t decisions = 0;
  std::uniform_real_distribution<float> warm(-1.0f, 1.0f);

  while (c.env_steps < o.total_steps) {
    const InitialCondition ic = sample_ic(o.regime, env_rng, o.ic, o.engagement.dynamics);
    const std::string& kind =
        o.opponents[std::uniform_int_distribution<std::size_t>(0, o.opponents.size() - 1)(env_rng)];
    auto opponent = make_scripted_pilot(kind);
    opponent->reset(derive_seed(o.seed, 23, static_cast<std::uint64_t>(c.episodes)));
    agent.reset();

    EngagementState eng = make_engagement(ic.blue, ic.red, o.engagement);
    std::int64_t episode_steps = 0;
    ObservationVector s_decision;
    std::vector<float> a_decision;
    double interval_reward = 0.0;
    bool pending = false;

    while (!eng.terminal() && episode_steps < cap && c.env_steps < o.total_steps) {
      if (eng.step_index % kSelectionInterval == 0) {
        const ObservationVector s = observation(eng, Side::blue);
        if (pending) {
          buffer.push(s_decision, a_decision, static_cast<float>(interval_reward), s, false);
          const sac::TrainMetrics m = decisions > o.warmup_decisions ? learner.train_step(buffer)
                                                                     : sac::TrainMetrics{0, true};
          if (!m.skipped) ++c.updates;
          write_update(o.metrics, o.metrics_every, c.env_steps, m);
        }
        std::vector<float> scores(static_cast<std::size_t>(n));
        if (decisions < o.warmup_decisions) {
          for (float& x : scores) x = warm(rng);
        } else {
          scores = sac::sample_action(learner.bundle(), s, &rng).action;
        }
        s_decision = s;
        a_decision = scores;
        interval_reward = 0.0;
        pending = true;
        ++decisions;
      }
      HierarchicalAgent::Step step;
      if (eng.step_index % kSelectionInterval == 0) {
        // Route the sampled scores through the agent so its hold bookkeeping
        // and decision record stay authoritative.
        step = agent.act_with_scores(eng, Side::blue, a_decision);
      } else {
        step = agent.act(eng, Side::blue);
      }
      const ControlInput red_u = opponent->act(eng, Side::red);
      const StepEvents ev = step_engagement(eng, step.controls, red_u, o.engagement);
      ++episode_steps;
      ++c.env_steps;
      interval_reward += selector_reward(ev, Side::blue, geometry(eng.blue, eng.red), o.track_gain);
      if (eng.terminal() && pending) {
        const bool done = ev.reason != TerminalReason::timeout;
        buffer.push(s_decision, a_decision, static_cast<float>(interval_reward), observation(eng, Side::blue),
                    done);
        pending = false;
      }
    }
    if (pending && eng.step_index % kSelectionInterval == 0) {
      // Cut at a decision boundary: the interval is complete.
      buffer.push(s_decision, a_decision, static_cast<float>(interval_reward), observation(eng, Side::blue), false);
    }
    tally(c, eng.outcome);
    ++c.episodes;
    if (!agent.decisions().empty()) {
      result.utilization.push_back(utilization(agent.decisions(), n));
      if (o.metrics) {
        Json j;
        j["record"] = "episode";
        j["episode"] = c.episodes;
        j["env_step"] = c.env_steps;
        j["opponent"] = opponent->name();
        j["steps"] = episode_steps;
        j["outcome"] = std::string(to_string(eng.outcome));
        j["utilization"] = result.utilization.back();
        j["alpha"] = learner.bundle().alpha();
        *o.metrics << j.dump() << '\n';
      }
    }
  }
  c.skipped_updates = learner.skipped_updates();
  result.selector = learner.bundle();
  return result;
}

}  // namespace dogfight
