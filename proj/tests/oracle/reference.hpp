#pragma once

// Straight-line double-precision oracles, written independently of the
// library code paths they check.

#include <cmath>
#include <functional>
#include <vector>

#include "dogfight/nn.hpp"

namespace oracle {

struct RefLayer {
  int in{0};
  int out{0};
  std::vector<double> w;  // out * in, row-major
  std::vector<double> b;
};

inline std::vector<RefLayer> copy_net(const dogfight::nn::Mlp& m) {
  std::vector<RefLayer> layers;
  for (const auto& l : m.layers()) {
    RefLayer r;
    r.out = static_cast<int>(l.weight.rows());
    r.in = static_cast<int>(l.weight.cols());
    for (int i = 0; i < r.out; ++i) {
      for (int j = 0; j < r.in; ++j) r.w.push_back(l.weight(i, j));
      r.b.push_back(l.bias(i));
    }
    layers.push_back(std::move(r));
  }
  return layers;
}

/// affine -> ReLU -> ... -> affine.
inline std::vector<double> forward(const std::vector<RefLayer>& net, std::vector<double> x) {
  for (std::size_t k = 0; k < net.size(); ++k) {
    const RefLayer& l = net[k];
    std::vector<double> y(static_cast<std::size_t>(l.out));
    for (int i = 0; i < l.out; ++i) {
      double acc = l.b[static_cast<std::size_t>(i)];
      for (int j = 0; j < l.in; ++j) acc += l.w[static_cast<std::size_t>(i * l.in + j)] * x[static_cast<std::size_t>(j)];
      if (k + 1 < net.size() && acc < 0.0) acc = 0.0;
      y[static_cast<std::size_t>(i)] = acc;
    }
    x = std::move(y);
  }
  return x;
}

/// WEZ damage per second from the piecewise definition.
inline double wez_rate(double r, double track, double half_angle) {
  if (track > half_angle) return 0.0;
  if (r < 500.0 || r > 3000.0) return 0.0;
  return (3000.0 - r) / 2500.0;
}

/// Time-average of a 50 Hz step curve over `horizon` seconds, padded with its
/// last value; zero when the own side was destroyed.
inline double episode_reward_bruteforce(const std::vector<double>& curve, double self_final, double horizon) {
  if (self_final >= 1.0) return 0.0;
  const long n = std::lround(horizon * 50.0);
  double sum = 0.0;
  for (long k = 0; k < n; ++k) {
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(k), curve.size() - 1);
    sum += curve[i] * 0.02;
  }
  return sum / horizon;
}

/// log(1 - tanh(u)^2) = -2 log cosh(u), evaluated without cancellation for large |u|.
inline double log_sech_sq(double u) {
  const double a = std::abs(u);
  return 2.0 * (std::log(2.0) - a - std::log1p(std::exp(-2.0 * a)));
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Statistics of a = tanh(u), u ~ N(mu, sigma^2): P(a >= 0) and E[-log pi(a)].
struct SquashedStats {
  double p_positive{0.0};
  double entropy{0.0};
};

inline SquashedStats squashed_gaussian_stats(double mu, double sigma) {
  const double kPi = 3.14159265358979323846;
  SquashedStats s;
  s.p_positive = 0.5 * std::erfc(-mu / (sigma * std::sqrt(2.0)));
  // E[-log pi(a)] = H(N) + E[log(1 - tanh(u)^2)].
  const double gauss_entropy = 0.5 * std::log(2.0 * kPi * std::exp(1.0) * sigma * sigma);
  auto integrand = [&](double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi) * log_sech_sq(mu + sigma * z);
  };
  s.entropy = gauss_entropy + simpson(integrand, -12.0, 12.0, 4000);
  return s;
}

/// Soft policy evaluation on a tabular MDP with two action classes (sign of a
/// one-dimensional action). P[s][c][s'] and R[s][c]; `stats[s]` describes the
/// fixed policy in state s. Iterates Q <- R + gamma P (pi Q + alpha H) to
/// convergence.
inline std::vector<std::vector<double>> soft_policy_evaluation(
    const std::vector<std::vector<std::vector<double>>>& P, const std::vector<std::vector<double>>& R,
    const std::vector<SquashedStats>& stats, double gamma, double alpha) {
  const std::size_t n = R.size();
  std::vector<std::vector<double>> q(n, std::vector<double>(2, 0.0));
  for (int it = 0; it < 100000; ++it) {
    std::vector<double> v(n);
    for (std::size_t s = 0; s < n; ++s) {
      v[s] = (1.0 - stats[s].p_positive) * q[s][0] + stats[s].p_positive * q[s][1] + alpha * stats[s].entropy;
    }
    double delta = 0.0;
    auto next = q;
    for (std::size_t s = 0; s < n; ++s) {
      for (int c = 0; c < 2; ++c) {
        double acc = R[s][static_cast<std::size_t>(c)];
        for (std::size_t s2 = 0; s2 < n; ++s2) acc += gamma * P[s][static_cast<std::size_t>(c)][s2] * v[s2];
        delta = std::max(delta, std::abs(acc - q[s][static_cast<std::size_t>(c)]));
        next[s][static_cast<std::size_t>(c)] = acc;
      }
    }
    q = std::move(next);
    if (delta < 1e-13) break;
  }
  return q;
}

}  // namespace oracle
