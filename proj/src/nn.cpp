#include "dogfight/nn.hpp"

#include <cmath>
#include <sstream>

namespace dogfight::nn {

namespace {

std::string shape_text(const std::vector<int>& sizes) {
  std::ostringstream s;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    s << (i ? "x" : "") << sizes[i];
  }
  return s.str();
}

void require_same_shape(const Mlp& a, const Mlp& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_text(a.sizes()) + " vs " +
                     shape_text(b.sizes()));
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) {
    throw ShapeError("Mlp needs at least input and output sizes");
  }
  for (int s : sizes_) {
    if (s <= 0) throw ShapeError("Mlp layer sizes must be positive: " + shape_text(sizes_));
  }
  layers_.reserve(sizes_.size() - 1);
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    DenseLayer l;
    l.weight = Matrix::Zero(sizes_[i + 1], sizes_[i]);
    l.bias = Vector::Zero(sizes_[i + 1]);
    layers_.push_back(std::move(l));
  }
}

Mlp Mlp::random(std::vector<int> sizes, std::mt19937_64& rng) {
  Mlp net(std::move(sizes));
  for (auto& l : net.layers_) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(l.weight.cols()));
    std::uniform_real_distribution<float> dist(-bound, bound);
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = dist(rng);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = dist(rng);
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool Mlp::finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

std::vector<float> Mlp::forward(std::span<const float> x) const {
  if (static_cast<int>(x.size()) != input_size()) {
    throw ShapeError("forward: input length " + std::to_string(x.size()) + " != " +
                     std::to_string(input_size()));
  }
  Vector h = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Vector z = layers_[i].weight * h + layers_[i].bias;
    if (i + 1 < layers_.size()) z = z.cwiseMax(0.0f);
    h = std::move(z);
  }
  return {h.data(), h.data() + h.size()};
}

Matrix Mlp::forward_batch(const Matrix& x) const {
  if (x.cols() != input_size()) {
    throw ShapeError("forward_batch: input width " + std::to_string(x.cols()) + " != " +
                     std::to_string(input_size()));
  }
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix z = h * layers_[i].weight.transpose();
    z.rowwise() += layers_[i].bias.transpose();
    if (i + 1 < layers_.size()) z = z.cwiseMax(0.0f);
    h = std::move(z);
  }
  return h;
}

Matrix Mlp::forward_batch(const Matrix& x, Trace& trace) const {
  if (x.cols() != input_size()) {
    throw ShapeError("forward_batch: input width " + std::to_string(x.cols()) + " != " +
                     std::to_string(input_size()));
  }
  trace.inputs.clear();
  trace.preactivations.clear();
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    trace.inputs.push_back(h);
    Matrix z = h * layers_[i].weight.transpose();
    z.rowwise() += layers_[i].bias.transpose();
    trace.preactivations.push_back(z);
    h = (i + 1 < layers_.size()) ? Matrix(z.cwiseMax(0.0f)) : z;
  }
  return h;
}

Matrix Mlp::backward(const Trace& trace, const Matrix& upstream, Mlp& grads) const {
  require_same_shape(*this, grads, "backward");
  if (trace.inputs.size() != layers_.size()) {
    throw ShapeError("backward: trace does not belong to this network");
  }
  if (upstream.cols() != output_size() || upstream.rows() != trace.inputs.front().rows()) {
    throw ShapeError("backward: upstream shape mismatch");
  }
  Matrix delta = upstream;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    if (k + 1 < layers_.size()) {
      delta = delta.cwiseProduct((trace.preactivations[k].array() > 0.0f).cast<float>().matrix());
    }
    grads.layers_[k].weight.noalias() += delta.transpose() * trace.inputs[k];
    grads.layers_[k].bias += delta.colwise().sum().transpose();
    delta = delta * layers_[k].weight;
  }
  return delta;
}

void Mlp::set_zero() {
  for (auto& l : layers_) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

std::vector<float> Mlp::flatten() const {
  std::vector<float> out;
  out.reserve(parameter_count());
  for_each_tensor([&out](std::span<const float> t) { out.insert(out.end(), t.begin(), t.end()); });
  return out;
}

void Mlp::unflatten(std::span<const float> flat) {
  if (flat.size() != parameter_count()) {
    throw ShapeError("unflatten: expected " + std::to_string(parameter_count()) + " values, got " +
                     std::to_string(flat.size()));
  }
  std::size_t offset = 0;
  for_each_tensor([&](std::span<float> t) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.begin());
    offset += t.size();
  });
}

bool Mlp::operator==(const Mlp& other) const {
  if (sizes_ != other.sizes_) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].weight != other.layers_[i].weight || layers_[i].bias != other.layers_[i].bias) {
      return false;
    }
  }
  return true;
}

Mlp gradients(const Mlp& params, std::span<const float> x, std::span<const float> upstream) {
  if (static_cast<int>(x.size()) != params.input_size()) {
    throw ShapeError("gradients: input length mismatch");
  }
  if (static_cast<int>(upstream.size()) != params.output_size()) {
    throw ShapeError("gradients: upstream length " + std::to_string(upstream.size()) + " != " +
                     std::to_string(params.output_size()));
  }
  Matrix xb = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  Matrix ub = Eigen::Map<const Matrix>(upstream.data(), 1, static_cast<Eigen::Index>(upstream.size()));
  Trace trace;
  params.forward_batch(xb, trace);
  Mlp grads = params.zeros_like();
  params.backward(trace, ub, grads);
  return grads;
}

void soft_update(Mlp& target, const Mlp& online, float tau) {
  require_same_shape(target, online, "soft_update");
  auto& tl = target.layers();
  const auto& ol = online.layers();
  for (std::size_t i = 0; i < tl.size(); ++i) {
    tl[i].weight = (1.0f - tau) * tl[i].weight + tau * ol[i].weight;
    tl[i].bias = (1.0f - tau) * tl[i].bias + tau * ol[i].bias;
  }
}

AdamState::AdamState(const Mlp& like, float lr)
    : first_moment(like.zeros_like()), second_moment(like.zeros_like()), learning_rate(lr) {}

bool adam_step(AdamState& s, Mlp& params, const Mlp& grads) {
  require_same_shape(params, grads, "adam_step");
  require_same_shape(params, s.first_moment, "adam_step moments");
  if (!grads.finite()) {
    return false;
  }
  s.step += 1;
  const auto t = static_cast<double>(s.step);
  const auto c1 = static_cast<float>(1.0 - std::pow(static_cast<double>(s.beta1), t));
  const auto c2 = static_cast<float>(1.0 - std::pow(static_cast<double>(s.beta2), t));
  auto& pl = params.layers();
  auto& ml = s.first_moment.layers();
  auto& vl = s.second_moment.layers();
  const auto& gl = grads.layers();
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = s.beta1 * m + (1.0f - s.beta1) * g;
    v = s.beta2 * v + (1.0f - s.beta2) * g.cwiseProduct(g);
    p.array() -= s.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + s.epsilon);
  };
  for (std::size_t i = 0; i < pl.size(); ++i) {
    update(pl[i].weight, ml[i].weight, vl[i].weight, gl[i].weight);
    update(pl[i].bias, ml[i].bias, vl[i].bias, gl[i].bias);
  }
  return true;
}

bool ScalarAdam::apply(float& param, double grad) {
  if (!std::isfinite(grad)) {
    return false;
  }
  step += 1;
  first_moment = beta1 * first_moment + (1.0 - beta1) * grad;
  second_moment = beta2 * second_moment + (1.0 - beta2) * grad * grad;
  const double mhat = first_moment / (1.0 - std::pow(beta1, static_cast<double>(step)));
  const double vhat = second_moment / (1.0 - std::pow(beta2, static_cast<double>(step)));
  param = static_cast<float>(param - learning_rate * mhat / (std::sqrt(vhat) + epsilon));
  return true;
}

}  // namespace dogfight::nn
