#include "dogfight/sac.hpp"

#include <algorithm>
#include <cmath>

#include "dogfight/digest.hpp"

namespace dogfight::sac {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kLog2 = 0.69314718055994530942;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

bool all_finite(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

void check_width(const nn::Matrix& m, int width, const char* what) {
  if (m.cols() != width) {
    throw nn::ShapeError(std::string(what) + ": expected width " + std::to_string(width) + ", got " +
                         std::to_string(m.cols()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ReplayBuffer

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0 || obs_dim <= 0 || act_dim <= 0) {
    throw SacError("ReplayBuffer: capacity and dimensions must be positive");
  }
}

void ReplayBuffer::push(const Transition& t) { push(t.s, t.a, t.r, t.s_next, t.done); }

void ReplayBuffer::push(std::span<const float> s, std::span<const float> a, float r,
                        std::span<const float> s_next, bool done) {
  if (static_cast<int>(s.size()) != obs_dim_ || static_cast<int>(s_next.size()) != obs_dim_ ||
      static_cast<int>(a.size()) != act_dim_) {
    throw nn::ShapeError("ReplayBuffer::push: transition dimensions do not match the buffer");
  }
  if (!all_finite(s) || !all_finite(a) || !all_finite(s_next) || !std::isfinite(r)) {
    throw SacError("ReplayBuffer::push: non-finite transition");
  }
  const auto od = static_cast<std::size_t>(obs_dim_);
  const auto ad = static_cast<std::size_t>(act_dim_);
  std::lock_guard lock(mutex_);
  if (size_ < capacity_) {
    s_.insert(s_.end(), s.begin(), s.end());
    a_.insert(a_.end(), a.begin(), a.end());
    s_next_.insert(s_next_.end(), s_next.begin(), s_next.end());
    r_.push_back(r);
    done_.push_back(done ? 1.0f : 0.0f);
    ++size_;
  } else {
    std::copy(s.begin(), s.end(), s_.begin() + static_cast<std::ptrdiff_t>(next_ * od));
    std::copy(a.begin(), a.end(), a_.begin() + static_cast<std::ptrdiff_t>(next_ * ad));
    std::copy(s_next.begin(), s_next.end(), s_next_.begin() + static_cast<std::ptrdiff_t>(next_ * od));
    r_[next_] = r;
    done_[next_] = done ? 1.0f : 0.0f;
  }
  next_ = (next_ + 1) % capacity_;
  ++pushed_;
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard lock(mutex_);
  return size_;
}

std::uint64_t ReplayBuffer::total_pushed() const {
  std::lock_guard lock(mutex_);
  return pushed_;
}

Transition ReplayBuffer::at(std::size_t i) const {
  std::size_t slot = 0;
  {
    std::lock_guard lock(mutex_);
    if (i >= size_) throw std::out_of_range("ReplayBuffer::at: index beyond size");
    const std::size_t oldest = size_ < capacity_ ? 0 : next_;
    slot = (oldest + i) % capacity_;
  }
  const Batch b = gather({slot});
  Transition t;
  t.s.assign(b.s.data(), b.s.data() + b.s.size());
  t.a.assign(b.a.data(), b.a.data() + b.a.size());
  t.r = b.r[0];
  t.s_next.assign(b.s_next.data(), b.s_next.data() + b.s_next.size());
  t.done = b.done[0] > 0.5f;
  return t;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, std::mt19937_64& rng) const {
  const std::size_t count = size();
  if (count == 0) throw SacError("ReplayBuffer::sample: buffer is empty");
  std::uniform_int_distribution<std::size_t> dist(0, count - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = dist(rng);
  return idx;
}

Batch ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  return gather(sample_indices(n, rng));
}

Batch ReplayBuffer::gather(const std::vector<std::size_t>& slots) const {
  const auto n = static_cast<Eigen::Index>(slots.size());
  Batch b;
  b.s.resize(n, obs_dim_);
  b.a.resize(n, act_dim_);
  b.s_next.resize(n, obs_dim_);
  b.r.resize(n);
  b.done.resize(n);
  b.indices = slots;
  const auto od = static_cast<std::size_t>(obs_dim_);
  const auto ad = static_cast<std::size_t>(act_dim_);
  std::lock_guard lock(mutex_);
  for (Eigen::Index row = 0; row < n; ++row) {
    const std::size_t k = slots[static_cast<std::size_t>(row)];
    if (k >= size_) throw std::out_of_range("ReplayBuffer::gather: slot beyond size");
    std::copy_n(s_.begin() + static_cast<std::ptrdiff_t>(k * od), od, b.s.row(row).data());
    std::copy_n(a_.begin() + static_cast<std::ptrdiff_t>(k * ad), ad, b.a.row(row).data());
    std::copy_n(s_next_.begin() + static_cast<std::ptrdiff_t>(k * od), od, b.s_next.row(row).data());
    b.r[row] = r_[k];
    b.done[row] = done_[k];
  }
  return b;
}

// ---------------------------------------------------------------------------
// Bundle

void SacConfig::validate() const {
  if (batch_size <= 0) throw SacError("batch_size must be positive");
  if (!(learning_rate >= 0.0f)) throw SacError("learning_rate must be non-negative");
  if (!(gamma >= 0.0f && gamma <= 1.0f)) throw SacError("gamma must be in [0, 1]");
  if (!(tau >= 0.0f && tau <= 1.0f)) throw SacError("tau must be in [0, 1]");
  if (!(initial_alpha > 0.0f)) throw SacError("initial_alpha must be positive");
  if (!(log_std_min < log_std_max)) throw SacError("log_std_min must be below log_std_max");
  if (target_update_interval < 1) throw SacError("target_update_interval must be >= 1");
  for (int h : hidden) {
    if (h <= 0) throw SacError("hidden layer widths must be positive");
  }
}

PolicyBundle PolicyBundle::create(int obs_dim, int act_dim, const SacConfig& config,
                                  std::mt19937_64& rng) {
  config.validate();
  if (obs_dim <= 0 || act_dim <= 0) throw SacError("PolicyBundle: dimensions must be positive");
  if (config.critic_features == CriticFeatures::tabular_sign && act_dim != 1) {
    throw SacError("tabular critic features need a one-dimensional action");
  }
  PolicyBundle b;
  b.obs_dim = obs_dim;
  b.act_dim = act_dim;
  b.critic_features = config.critic_features;
  b.entropy_target = config.entropy_target;
  b.gamma = config.gamma;
  b.log_std_min = config.log_std_min;
  b.log_std_max = config.log_std_max;
  b.log_alpha = std::log(config.initial_alpha);

  auto layout = [&config](int in, int out) {
    std::vector<int> sizes{in};
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(out);
    return sizes;
  };
  b.actor = nn::Mlp::random(layout(obs_dim, 2 * act_dim), rng);
  b.q1 = nn::Mlp::random(layout(b.critic_input_dim(), 1), rng);
  b.q2 = nn::Mlp::random(layout(b.critic_input_dim(), 1), rng);
  b.q1_target = b.q1;
  b.q2_target = b.q2;
  return b;
}

float PolicyBundle::alpha() const { return std::exp(log_alpha); }

int PolicyBundle::critic_input_dim() const {
  return critic_features == CriticFeatures::tabular_sign ? 2 * obs_dim : obs_dim + act_dim;
}

std::string PolicyBundle::digest() const {
  Digest d;
  auto add_net = [&d](const nn::Mlp& m) {
    d.update_values(std::span<const int>(m.sizes()));
    m.for_each_tensor([&d](std::span<const float> t) { d.update_values(t); });
  };
  const int dims[] = {obs_dim, act_dim, static_cast<int>(critic_features), frozen ? 1 : 0};
  d.update_values(std::span<const int>(dims));
  for (const nn::Mlp* m : {&actor, &q1, &q2, &q1_target, &q2_target}) add_net(*m);
  const float scalars[] = {log_alpha, entropy_target, gamma, log_std_min, log_std_max};
  d.update_values(std::span<const float>(scalars));
  return d.hex();
}

// ---------------------------------------------------------------------------
// Policy head

double log_one_minus_tanh_sq(double u) { return 2.0 * (kLog2 - u - softplus(-2.0 * u)); }

ActionSample sample_action_with_noise(const PolicyBundle& b, std::span<const float> s,
                                      std::span<const float> z) {
  if (static_cast<int>(z.size()) != b.act_dim) throw nn::ShapeError("sample_action: noise size");
  const std::vector<float> out = b.actor.forward(s);
  if (!all_finite(out)) {
    throw SacError("sample_action: actor produced non-finite output");
  }
  ActionSample result;
  result.action.resize(static_cast<std::size_t>(b.act_dim));
  double log_prob = 0.0;
  for (int i = 0; i < b.act_dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double mean = out[k];
    const double log_std = std::clamp<double>(out[k + static_cast<std::size_t>(b.act_dim)],
                                              b.log_std_min, b.log_std_max);
    const double u = mean + std::exp(log_std) * z[k];
    result.action[k] = static_cast<float>(std::tanh(u));
    log_prob += -0.5 * static_cast<double>(z[k]) * z[k] - log_std - kHalfLog2Pi - log_one_minus_tanh_sq(u);
  }
  result.log_prob = static_cast<float>(log_prob);
  return result;
}

ActionSample sample_action(const PolicyBundle& b, std::span<const float> s, std::mt19937_64* rng) {
  std::vector<float> z(static_cast<std::size_t>(b.act_dim), 0.0f);
  if (rng != nullptr) {
    std::normal_distribution<float> normal(0.0f, 1.0f);
    for (auto& v : z) v = normal(*rng);
  }
  return sample_action_with_noise(b, s, z);
}

SquashedHead squashed_head(const PolicyBundle& b, const nn::Matrix& actor_out, const nn::Matrix& noise) {
  const int a = b.act_dim;
  check_width(actor_out, 2 * a, "squashed_head actor output");
  check_width(noise, a, "squashed_head noise");
  if (noise.rows() != actor_out.rows()) throw nn::ShapeError("squashed_head: batch size mismatch");
  if (!actor_out.allFinite()) throw SacError("squashed_head: actor produced non-finite output");
  const Eigen::Index n = actor_out.rows();
  SquashedHead h;
  h.mean = actor_out.leftCols(a);
  h.log_std.resize(n, a);
  h.log_std_active.resize(n, a);
  h.pre_tanh.resize(n, a);
  h.action.resize(n, a);
  h.noise = noise;
  h.log_prob.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    double lp = 0.0;
    for (int c = 0; c < a; ++c) {
      const double raw = actor_out(r, a + c);
      const double ls = std::clamp<double>(raw, b.log_std_min, b.log_std_max);
      const double z = noise(r, c);
      const double u = static_cast<double>(h.mean(r, c)) + std::exp(ls) * z;
      h.log_std(r, c) = static_cast<float>(ls);
      h.log_std_active(r, c) = (raw > b.log_std_min && raw < b.log_std_max) ? 1.0f : 0.0f;
      h.pre_tanh(r, c) = static_cast<float>(u);
      h.action(r, c) = static_cast<float>(std::tanh(u));
      lp += -0.5 * z * z - ls - kHalfLog2Pi - log_one_minus_tanh_sq(u);
    }
    h.log_prob[r] = static_cast<float>(lp);
  }
  return h;
}

nn::Matrix critic_inputs(const PolicyBundle& b, const nn::Matrix& s, const nn::Matrix& a) {
  check_width(s, b.obs_dim, "critic_inputs states");
  check_width(a, b.act_dim, "critic_inputs actions");
  if (s.rows() != a.rows()) throw nn::ShapeError("critic_inputs: batch size mismatch");
  if (b.critic_features == CriticFeatures::state_action) {
    nn::Matrix x(s.rows(), b.obs_dim + b.act_dim);
    x << s, a;
    return x;
  }
  nn::Matrix x = nn::Matrix::Zero(s.rows(), 2 * b.obs_dim);
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    Eigen::Index state = 0;
    s.row(r).maxCoeff(&state);
    x(r, 2 * state + (a(r, 0) >= 0.0f ? 1 : 0)) = 1.0f;
  }
  return x;
}

float bellman_target(float r, bool done, float gamma, float soft_value) {
  return done ? r : r + gamma * soft_value;
}

Eigen::VectorXf q_target(const PolicyBundle& b, const Batch& batch, const nn::Matrix& next_noise) {
  if (batch.size() == 0) throw SacError("q_target: empty batch");
  const SquashedHead next = squashed_head(b, b.actor.forward_batch(batch.s_next), next_noise);
  const nn::Matrix x = critic_inputs(b, batch.s_next, next.action);
  const nn::Matrix t1 = b.q1_target.forward_batch(x);
  const nn::Matrix t2 = b.q2_target.forward_batch(x);
  const float alpha = b.alpha();
  Eigen::VectorXf y(batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const float soft_value = std::min(t1(i, 0), t2(i, 0)) - alpha * next.log_prob[i];
    y[i] = bellman_target(batch.r[i], batch.done[i] > 0.5f, b.gamma, soft_value);
  }
  return y;
}

CriticGradients critic_gradients(const PolicyBundle& b, const Batch& batch, const Eigen::VectorXf& y) {
  if (batch.size() == 0 || y.size() != batch.size()) {
    throw nn::ShapeError("critic_gradients: target size mismatch");
  }
  const nn::Matrix x = critic_inputs(b, batch.s, batch.a);
  const auto n = static_cast<float>(batch.size());
  CriticGradients out;
  auto one = [&](const nn::Mlp& q, nn::Mlp& grad) {
    nn::Trace trace;
    const nn::Matrix pred = q.forward_batch(x, trace);
    const nn::Matrix residual = pred - nn::Matrix(y);
    grad = q.zeros_like();
    q.backward(trace, residual / n, grad);
    return 0.5 * residual.cast<double>().squaredNorm() / static_cast<double>(n);
  };
  out.q1_loss = one(b.q1, out.q1_grad);
  out.q2_loss = one(b.q2, out.q2_grad);
  return out;
}

PolicyGradients policy_gradients(const PolicyBundle& b, const nn::Matrix& states, const nn::Matrix& noise) {
  const Eigen::Index n = states.rows();
  if (n == 0) throw SacError("policy_gradients: empty batch");
  const int a = b.act_dim;
  nn::Trace actor_trace;
  const nn::Matrix actor_out = b.actor.forward_batch(states, actor_trace);
  const SquashedHead head = squashed_head(b, actor_out, noise);

  const nn::Matrix x = critic_inputs(b, states, head.action);
  nn::Trace t1, t2;
  const nn::Matrix q1 = b.q1.forward_batch(x, t1);
  const nn::Matrix q2 = b.q2.forward_batch(x, t2);
  nn::Matrix pick1 = nn::Matrix::Zero(n, 1);
  nn::Matrix pick2 = nn::Matrix::Zero(n, 1);
  Eigen::VectorXd qmin(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (q1(i, 0) <= q2(i, 0)) {
      pick1(i, 0) = 1.0f;
      qmin[i] = q1(i, 0);
    } else {
      pick2(i, 0) = 1.0f;
      qmin[i] = q2(i, 0);
    }
  }
  // dQmin/dx through whichever critic is smaller per sample.
  nn::Mlp scratch1 = b.q1.zeros_like();
  nn::Mlp scratch2 = b.q2.zeros_like();
  const nn::Matrix dx = b.q1.backward(t1, pick1, scratch1) + b.q2.backward(t2, pick2, scratch2);

  const double alpha = b.alpha();
  nn::Matrix upstream(n, 2 * a);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss += alpha * head.log_prob[i] - qmin[i];
    for (int c = 0; c < a; ++c) {
      const double act = head.action(i, c);
      const double dq_da =
          b.critic_features == CriticFeatures::state_action ? dx(i, b.obs_dim + c) : 0.0;
      const double sigma_z = std::exp(static_cast<double>(head.log_std(i, c))) * head.noise(i, c);
      const double dsquash = 1.0 - act * act;
      const double d_mean = alpha * 2.0 * act - dq_da * dsquash;
      const double d_log_std =
          (alpha * (-1.0 + 2.0 * act * sigma_z) - dq_da * dsquash * sigma_z) * head.log_std_active(i, c);
      upstream(i, c) = static_cast<float>(d_mean / static_cast<double>(n));
      upstream(i, a + c) = static_cast<float>(d_log_std / static_cast<double>(n));
    }
  }
  PolicyGradients out;
  out.loss = loss / static_cast<double>(n);
  out.mean_log_prob = head.log_prob.cast<double>().mean();
  out.actor_grad = b.actor.zeros_like();
  b.actor.backward(actor_trace, upstream, out.actor_grad);
  return out;
}

// ---------------------------------------------------------------------------
// Learner

SacLearner::SacLearner(PolicyBundle bundle, const SacConfig& config, std::uint64_t seed)
    : bundle_(std::move(bundle)),
      config_(config),
      rng_(seed),
      actor_opt_(bundle_.actor, config.learning_rate),
      q1_opt_(bundle_.q1, config.learning_rate),
      q2_opt_(bundle_.q2, config.learning_rate) {
  config_.validate();
  alpha_opt_.learning_rate = config.learning_rate;
}

void SacLearner::set_learning_rate(float lr) {
  actor_opt_.learning_rate = lr;
  q1_opt_.learning_rate = lr;
  q2_opt_.learning_rate = lr;
  alpha_opt_.learning_rate = lr;
  config_.learning_rate = lr;
}

void SacLearner::require_trainable(const char* op) const {
  if (bundle_.frozen) {
    throw FrozenBundleError(std::string(op) + ": policy bundle is frozen");
  }
}

nn::Matrix SacLearner::standard_normal(Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  nn::Matrix z(rows, cols);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng_);
  return z;
}

Eigen::VectorXf SacLearner::q_target(const Batch& batch) {
  return sac::q_target(bundle_, batch, standard_normal(batch.size(), bundle_.act_dim));
}

std::pair<double, double> SacLearner::update_q(const Batch& batch) {
  require_trainable("update_q");
  const Eigen::VectorXf y = q_target(batch);
  CriticGradients g = critic_gradients(bundle_, batch, y);
  if (!nn::adam_step(q1_opt_, bundle_.q1, g.q1_grad)) ++skipped_;
  if (!nn::adam_step(q2_opt_, bundle_.q2, g.q2_grad)) ++skipped_;
  return {g.q1_loss, g.q2_loss};
}

double SacLearner::update_policy(const Batch& batch) {
  require_trainable("update_policy");
  PolicyGradients g = policy_gradients(bundle_, batch.s, standard_normal(batch.size(), bundle_.act_dim));
  if (!nn::adam_step(actor_opt_, bundle_.actor, g.actor_grad)) ++skipped_;
  return g.loss;
}

double SacLearner::update_alpha(const Batch& batch) {
  require_trainable("update_alpha");
  const SquashedHead head = squashed_head(bundle_, bundle_.actor.forward_batch(batch.s),
                                          standard_normal(batch.size(), bundle_.act_dim));
  const double alpha = bundle_.alpha();
  const double mean_log_prob = head.log_prob.cast<double>().mean();
  last_entropy_ = -mean_log_prob;
  // d/d(log alpha) of mean[-alpha (log pi + H0)] equals the loss itself.
  const double loss = -alpha * (mean_log_prob + bundle_.entropy_target);
  if (config_.learn_alpha && !alpha_opt_.apply(bundle_.log_alpha, loss)) ++skipped_;
  return loss;
}

void SacLearner::update_targets() {
  require_trainable("update_targets");
  nn::soft_update(bundle_.q1_target, bundle_.q1, config_.tau);
  nn::soft_update(bundle_.q2_target, bundle_.q2, config_.tau);
}

TrainMetrics SacLearner::train_step(const ReplayBuffer& buffer) {
  require_trainable("train_step");
  TrainMetrics m;
  m.step = updates_;
  if (buffer.size() < static_cast<std::size_t>(config_.batch_size)) {
    m.skipped = true;
    m.alpha = bundle_.alpha();
    return m;
  }
  const Batch batch = buffer.sample(static_cast<std::size_t>(config_.batch_size), rng_);
  std::tie(m.q1_loss, m.q2_loss) = update_q(batch);
  m.policy_loss = update_policy(batch);
  m.alpha_loss = update_alpha(batch);
  ++updates_;
  if (updates_ % config_.target_update_interval == 0) {
    update_targets();
  }
  m.step = updates_;
  m.alpha = bundle_.alpha();
  m.entropy = last_entropy_;
  return m;
}

}  // namespace dogfight::sac
