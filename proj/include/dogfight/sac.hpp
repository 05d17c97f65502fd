#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dogfight/nn.hpp"

namespace dogfight::sac {

class SacError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FrozenBundleError : public SacError {
 public:
  using SacError::SacError;
};

struct Transition {
  std::vector<float> s;
  std::vector<float> a;
  float r{0.0f};
  std::vector<float> s_next;
  bool done{false};
};

struct Batch {
  nn::Matrix s;
  nn::Matrix a;
  Eigen::VectorXf r;
  nn::Matrix s_next;
  Eigen::VectorXf done;  // 1 for terminal, 0 otherwise
  std::vector<std::size_t> indices;

  Eigen::Index size() const { return s.rows(); }
};

/// Fixed-capacity ring of transitions with uniform sampling. Pushes and
/// samples serialize on one mutex; each holds it only for a copy.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim);

  void push(const Transition& t);
  void push(std::span<const float> s, std::span<const float> a, float r,
            std::span<const float> s_next, bool done);

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_pushed() const;
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

  /// Transition by age: 0 is the oldest retained.
  Transition at(std::size_t i) const;
  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;
  Batch sample(std::size_t n, std::mt19937_64& rng) const;
  Batch gather(const std::vector<std::size_t>& slots) const;

 private:
  std::size_t capacity_;
  int obs_dim_;
  int act_dim_;
  mutable std::mutex mutex_;
  std::size_t size_{0};
  std::size_t next_{0};
  std::uint64_t pushed_{0};
  std::vector<float> s_, a_, r_, s_next_, done_;
};

/// How critic inputs are formed from (state, action).
enum class CriticFeatures {
  /// Concatenation [s, a].
  state_action,
  /// One-hot over (argmax(s), a[0] >= 0). Requires a 1-D action; used for
  /// tabular verification fixtures.
  tabular_sign,
};

struct SacConfig {
  std::vector<int> hidden{128};
  int batch_size{256};
  float learning_rate{2.0e-4f};
  float gamma{0.99f};
  float tau{1.0e-3f};
  float entropy_target{-4.0f};
  float initial_alpha{1.0f};
  bool learn_alpha{true};
  int target_update_interval{1};
  float log_std_min{-20.0f};
  float log_std_max{2.0f};
  CriticFeatures critic_features{CriticFeatures::state_action};

  void validate() const;
};

/// Actor, twin critics, their targets and the temperature of one policy.
struct PolicyBundle {
  int obs_dim{0};
  int act_dim{0};
  nn::Mlp actor;  // outputs [mean (act_dim), log_std (act_dim)]
  nn::Mlp q1;
  nn::Mlp q2;
  nn::Mlp q1_target;
  nn::Mlp q2_target;
  float log_alpha{0.0f};
  float entropy_target{-4.0f};
  float gamma{0.99f};
  float log_std_min{-20.0f};
  float log_std_max{2.0f};
  CriticFeatures critic_features{CriticFeatures::state_action};
  bool frozen{false};

  static PolicyBundle create(int obs_dim, int act_dim, const SacConfig& config,
                             std::mt19937_64& rng);

  float alpha() const;
  int critic_input_dim() const;
  /// SHA-256 over every tensor, scalar and flag.
  std::string digest() const;
  bool operator==(const PolicyBundle&) const = default;
};

/// Read-only actor view shared with rollout workers.
using ActorSnapshot = std::shared_ptr<const PolicyBundle>;

struct ActionSample {
  std::vector<float> action;
  float log_prob{0.0f};
};

/// a = tanh(mean + std * z), z ~ N(0, I). With `rng == nullptr` the policy is
/// evaluated deterministically (z = 0).
ActionSample sample_action(const PolicyBundle& b, std::span<const float> s, std::mt19937_64* rng);
/// Same with caller-supplied standard-normal noise.
ActionSample sample_action_with_noise(const PolicyBundle& b, std::span<const float> s,
                                      std::span<const float> z);

/// log(1 - tanh(u)^2) computed without cancellation.
double log_one_minus_tanh_sq(double u);

/// Squashed-Gaussian head evaluated on a batch of actor outputs.
struct SquashedHead {
  nn::Matrix mean;
  nn::Matrix log_std;   // clamped
  nn::Matrix noise;
  nn::Matrix pre_tanh;
  nn::Matrix action;
  Eigen::VectorXf log_prob;
  nn::Matrix log_std_active;  // 1 where the clamp did not bind
};

SquashedHead squashed_head(const PolicyBundle& b, const nn::Matrix& actor_out, const nn::Matrix& noise);

/// Critic input rows for (s, a) under the bundle's feature map.
nn::Matrix critic_inputs(const PolicyBundle& b, const nn::Matrix& s, const nn::Matrix& a);

/// y = r + gamma * (1 - done) * soft_value.
float bellman_target(float r, bool done, float gamma, float soft_value);

/// Soft Bellman targets with a' drawn from the current actor using `next_noise`.
Eigen::VectorXf q_target(const PolicyBundle& b, const Batch& batch, const nn::Matrix& next_noise);

struct CriticGradients {
  double q1_loss{0.0};
  double q2_loss{0.0};
  nn::Mlp q1_grad;
  nn::Mlp q2_grad;
};

/// Losses 1/2 mean (Q(s,a) - y)^2 for both critics and their gradients.
CriticGradients critic_gradients(const PolicyBundle& b, const Batch& batch, const Eigen::VectorXf& y);

struct PolicyGradients {
  double loss{0.0};
  double mean_log_prob{0.0};
  nn::Mlp actor_grad;
};

/// Loss mean[alpha log pi(a|s) - min(Q1,Q2)(s,a)] with reparameterised a and
/// its gradient with respect to the actor parameters.
PolicyGradients policy_gradients(const PolicyBundle& b, const nn::Matrix& states, const nn::Matrix& noise);

struct TrainMetrics {
  std::int64_t step{0};
  bool skipped{false};
  double q1_loss{0.0};
  double q2_loss{0.0};
  double policy_loss{0.0};
  double alpha_loss{0.0};
  double alpha{0.0};
  double entropy{0.0};
};

/// Owns a bundle's optimiser state and random stream and applies the three
/// update rules plus the target soft update. The trainer is the single writer
/// of its bundle.
class SacLearner {
 public:
  SacLearner(PolicyBundle bundle, const SacConfig& config, std::uint64_t seed);

  const PolicyBundle& bundle() const { return bundle_; }
  PolicyBundle& mutable_bundle() { return bundle_; }
  const SacConfig& config() const { return config_; }
  std::mt19937_64& rng() { return rng_; }
  std::int64_t updates() const { return updates_; }
  ActorSnapshot snapshot() const { return std::make_shared<const PolicyBundle>(bundle_); }

  void set_learning_rate(float lr);

  nn::Matrix standard_normal(Eigen::Index rows, Eigen::Index cols);

  Eigen::VectorXf q_target(const Batch& batch);
  /// One Adam step on each critic. Returns the pre-step losses.
  std::pair<double, double> update_q(const Batch& batch);
  /// One Adam step on the actor. Returns the pre-step loss.
  double update_policy(const Batch& batch);
  /// One Adam step on log(alpha). Returns the pre-step loss. When alpha is not
  /// learned, returns the loss without changing anything.
  double update_alpha(const Batch& batch);
  void update_targets();

  TrainMetrics train_step(const ReplayBuffer& buffer);

  /// Number of updates skipped because of non-finite gradients.
  std::int64_t skipped_updates() const { return skipped_; }

 private:
  void require_trainable(const char* op) const;

  PolicyBundle bundle_;
  SacConfig config_;
  std::mt19937_64 rng_;
  nn::AdamState actor_opt_;
  nn::AdamState q1_opt_;
  nn::AdamState q2_opt_;
  nn::ScalarAdam alpha_opt_;
  std::int64_t updates_{0};
  std::int64_t skipped_{0};
  double last_entropy_{0.0};
};

}  // namespace dogfight::sac
