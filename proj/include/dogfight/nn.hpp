#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dogfight::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Batch-major float matrix: one sample per row.
using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXf;

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Activations kept from a batched forward pass for the backward pass.
struct Trace {
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> preactivations;  // pre-ReLU output of each layer
};

/// Fully-connected network: affine -> ReLU -> ... -> affine (linear output).
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialised network with the given layer sizes (input first).
  explicit Mlp(std::vector<int> sizes);
  /// Uniform fan-in initialisation in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static Mlp random(std::vector<int> sizes, std::mt19937_64& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const;
  bool same_shape(const Mlp& other) const { return sizes_ == other.sizes_; }
  bool finite() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::vector<float> forward(std::span<const float> x) const;
  Matrix forward_batch(const Matrix& x) const;
  Matrix forward_batch(const Matrix& x, Trace& trace) const;

  /// Reverse pass. Adds parameter gradients (summed over the batch) into
  /// `grads` and returns the gradient with respect to the input batch.
  Matrix backward(const Trace& trace, const Matrix& upstream, Mlp& grads) const;

  /// Zero network with this network's shape.
  Mlp zeros_like() const { return Mlp(sizes_); }
  void set_zero();

  /// Calls f(span<float>) on every weight and bias tensor, in layer order.
  template <typename F>
  void for_each_tensor(F&& f) {
    for (auto& l : layers_) {
      f(std::span<float>(l.weight.data(), static_cast<std::size_t>(l.weight.size())));
      f(std::span<float>(l.bias.data(), static_cast<std::size_t>(l.bias.size())));
    }
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    for (const auto& l : layers_) {
      f(std::span<const float>(l.weight.data(), static_cast<std::size_t>(l.weight.size())));
      f(std::span<const float>(l.bias.data(), static_cast<std::size_t>(l.bias.size())));
    }
  }

  /// Flat copy of all parameters in for_each_tensor order.
  std::vector<float> flatten() const;
  void unflatten(std::span<const float> flat);

  bool operator==(const Mlp& other) const;

 private:
  std::vector<int> sizes_;
  std::vector<DenseLayer> layers_;
};

/// Exact gradients of the single-sample forward pass against `upstream`.
Mlp gradients(const Mlp& params, std::span<const float> x, std::span<const float> upstream);

/// target <- (1 - tau) * target + tau * online.
void soft_update(Mlp& target, const Mlp& online, float tau);

struct AdamState {
  Mlp first_moment;
  Mlp second_moment;
  std::int64_t step{0};
  float learning_rate{2.0e-4f};
  float beta1{0.9f};
  float beta2{0.999f};
  float epsilon{1e-8f};

  AdamState() = default;
  AdamState(const Mlp& like, float lr);
};

/// Bias-corrected Adam update. Returns false and leaves everything untouched
/// when the gradients contain non-finite values.
bool adam_step(AdamState& state, Mlp& params, const Mlp& grads);

/// Adam for a single scalar parameter (the temperature's log).
struct ScalarAdam {
  double first_moment{0.0};
  double second_moment{0.0};
  std::int64_t step{0};
  double learning_rate{2.0e-4};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};

  bool apply(float& param, double grad);
};

}  // namespace dogfight::nn
