#pragma once

// Layers and activations shared by the SRD controllers.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>

#include "srd/nn/ops.hpp"

namespace srd::nn {

inline constexpr double kDefaultEpsilon = 0.01;     // selective activation width
inline constexpr double kDefaultLeakSlope = 0.01;   // threshold activation leak

// output[i] = sum_j kernel[j] * input[i + j*dilation] + bias
inline Tensor conv1d(const Tensor& input, const Tensor& kernel, const std::optional<Tensor>& bias,
                     std::size_t dilation = 1) {
  if (input.rank() != 1 || kernel.rank() != 1 || kernel.size() == 0 || dilation == 0) {
    throw DimensionError("conv1d: input " + shape_str(input.shape()) + " kernel " +
                         shape_str(kernel.shape()) + " dilation " + std::to_string(dilation));
  }
  const std::size_t L = input.size();
  const std::size_t K = kernel.size();
  const std::size_t span_len = 1 + (K - 1) * dilation;
  if (L < span_len) {
    throw DimensionError("conv1d: input " + shape_str(input.shape()) + " shorter than kernel " +
                         shape_str(kernel.shape()) + " at dilation " + std::to_string(dilation));
  }
  if (bias && bias->size() != 1) {
    throw DimensionError("conv1d: bias must be a scalar, got " + shape_str(bias->shape()));
  }
  const std::size_t out_len = L - (K - 1) * dilation;
  const double b = bias ? bias->item() : 0.0;
  std::vector<double> out(out_len, b);
  for (std::size_t i = 0; i < out_len; ++i) {
    for (std::size_t j = 0; j < K; ++j) out[i] += kernel[j] * input[i + j * dilation];
  }
  std::vector<Tensor> inputs{input, kernel};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias.has_value();
  return detail::make_result(
      {out_len}, std::move(out), std::move(inputs), [K, dilation, has_bias](const Node& self) {
        const auto& in = self.parents[0];
        const auto& ker = self.parents[1];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const double g = self.grad[i];
          for (std::size_t j = 0; j < K; ++j) {
            detail::accumulate(in, i + j * dilation, g * ker->value[j]);
            detail::accumulate(ker, j, g * in->value[i + j * dilation]);
          }
          if (has_bias) detail::accumulate(self.parents[2], 0, g);
        }
      });
}

// W (n x m) * x (m) + b (n)
inline Tensor fully_connected(const Tensor& x, const Tensor& W, const Tensor& b) {
  if (x.rank() != 1 || W.rank() != 2 || b.rank() != 1 || W.shape()[1] != x.size() ||
      W.shape()[0] != b.size()) {
    throw DimensionError("fully_connected: x " + shape_str(x.shape()) + " W " +
                         shape_str(W.shape()) + " b " + shape_str(b.shape()));
  }
  const std::size_t n = W.shape()[0];
  const std::size_t m = W.shape()[1];
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    double s = b[r];
    for (std::size_t c = 0; c < m; ++c) s += W.values()[r * m + c] * x[c];
    out[r] = s;
  }
  return detail::make_result({n}, std::move(out), {x, W, b}, [n, m](const Node& self) {
    const auto& px = self.parents[0];
    const auto& pw = self.parents[1];
    const auto& pb = self.parents[2];
    for (std::size_t r = 0; r < n; ++r) {
      const double g = self.grad[r];
      detail::accumulate(pb, r, g);
      for (std::size_t c = 0; c < m; ++c) {
        detail::accumulate(pw, r * m + c, g * px->value[c]);
        detail::accumulate(px, c, g * pw->value[r * m + c]);
      }
    }
  });
}

// Unit-stride transposed convolution with one cell of padding on each side,
// so the output grid has the input's shape:
//   out[y][x] = sum_{a,b} in[y - a + 1][x - b + 1] * k[a][b]
inline Tensor deconv3x3(const Tensor& grid, const Tensor& kernel) {
  if (grid.rank() != 2 || grid.shape()[0] == 0 || grid.shape()[1] == 0) {
    throw DimensionError("deconv3x3: grid must be HxW, got " + shape_str(grid.shape()));
  }
  if (kernel.shape() != Shape{3, 3}) {
    throw DimensionError("deconv3x3: kernel must be [3,3], got " + shape_str(kernel.shape()));
  }
  const long H = static_cast<long>(grid.shape()[0]);
  const long W = static_cast<long>(grid.shape()[1]);
  std::vector<double> out(grid.size(), 0.0);
  const auto& in = grid.values();
  const auto& k = kernel.values();
  for (long y = 0; y < H; ++y) {
    for (long x = 0; x < W; ++x) {
      double s = 0.0;
      for (long a = 0; a < 3; ++a) {
        const long sy = y - a + 1;
        if (sy < 0 || sy >= H) continue;
        for (long b = 0; b < 3; ++b) {
          const long sx = x - b + 1;
          if (sx < 0 || sx >= W) continue;
          s += in[sy * W + sx] * k[a * 3 + b];
        }
      }
      out[y * W + x] = s;
    }
  }
  return detail::make_result(grid.shape(), std::move(out), {grid, kernel}, [H, W](const Node& self) {
    const auto& pg = self.parents[0];
    const auto& pk = self.parents[1];
    for (long y = 0; y < H; ++y) {
      for (long x = 0; x < W; ++x) {
        const double g = self.grad[y * W + x];
        if (g == 0.0) continue;
        for (long a = 0; a < 3; ++a) {
          const long sy = y - a + 1;
          if (sy < 0 || sy >= H) continue;
          for (long b = 0; b < 3; ++b) {
            const long sx = x - b + 1;
            if (sx < 0 || sx >= W) continue;
            detail::accumulate(pg, sy * W + sx, g * pk->value[a * 3 + b]);
            detail::accumulate(pk, a * 3 + b, g * pg->value[sy * W + sx]);
          }
        }
      }
    }
  });
}

// eps / (||x||^2 + eps): 1 exactly on a zero residual, a match detector.
inline Tensor selective_activation(const Tensor& x, double epsilon = kDefaultEpsilon) {
  if (!(epsilon > 0.0)) throw UsageError("selective_activation: epsilon must be positive");
  double sq = 0.0;
  for (double v : x.values()) sq += v * v;
  const double denom = sq + epsilon;
  return detail::make_result({}, {epsilon / denom}, {x}, [epsilon, denom](const Node& self) {
    const auto& in = self.parents[0];
    const double coef = -2.0 * epsilon / (denom * denom) * self.grad[0];
    for (std::size_t i = 0; i < in->value.size(); ++i) detail::accumulate(in, i, coef * in->value[i]);
  });
}

// Elementwise selective activation on scalar residuals.
inline Tensor selective_activation_elementwise(const Tensor& x, double epsilon = kDefaultEpsilon) {
  if (!(epsilon > 0.0)) throw UsageError("selective_activation: epsilon must be positive");
  return detail::unary(
      x, [epsilon](double v) { return epsilon / (v * v + epsilon); },
      [epsilon](double v, double) {
        const double d = v * v + epsilon;
        return -2.0 * epsilon * v / (d * d);
      });
}

// tanh(LeakyReLU(x))
inline Tensor threshold_activation(const Tensor& x, double slope = kDefaultLeakSlope) {
  return tanh(leaky_relu(x, slope));
}

inline Tensor softmax(const Tensor& v) {
  if (v.size() == 0) throw DimensionError("softmax of empty vector");
  const double shift = *std::max_element(v.values().begin(), v.values().end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(v[i] - shift);
    total += out[i];
  }
  for (double& o : out) o /= total;
  return detail::make_result(v.shape(), std::move(out), {v}, [](const Node& self) {
    double dot = 0.0;
    for (std::size_t i = 0; i < self.grad.size(); ++i) dot += self.grad[i] * self.value[i];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      detail::accumulate(self.parents[0], i, self.value[i] * (self.grad[i] - dot));
    }
  });
}

// Lowest index wins ties.
inline std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw DimensionError("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// Cross entropy of z against its own argmax; the label carries no gradient.
inline Tensor cross_entropy_self(const Tensor& z) {
  if (z.rank() != 1 || z.size() == 0) {
    throw DimensionError("cross_entropy_self: need a logit vector, got " + shape_str(z.shape()));
  }
  const std::size_t label = argmax(z.values());
  const double shift = z[label];
  double total = 0.0;
  for (double v : z.values()) total += std::exp(v - shift);
  const double loss = std::log(total);  // logsumexp(z) - z[label]
  return detail::make_result({}, {loss}, {z}, [label, shift, total](const Node& self) {
    const auto& in = self.parents[0];
    for (std::size_t i = 0; i < in->value.size(); ++i) {
      const double p = std::exp(in->value[i] - shift) / total;
      detail::accumulate(in, i, self.grad[0] * (p - (i == label ? 1.0 : 0.0)));
    }
  });
}

// sigma_sa((x - p)^2): responds to x sitting at the reference pose p.
inline Tensor stable_pose_activation(const Tensor& x, const Tensor& p,
                                     double epsilon = kDefaultEpsilon) {
  if (x.size() != 1 || p.size() != 1) {
    throw DimensionError("stable_pose_activation: scalar inputs expected, got " +
                         shape_str(x.shape()) + " and " + shape_str(p.shape()));
  }
  return selective_activation(square(sub(x, p)), epsilon);
}

inline Tensor inverse_stable_pose_activation(const Tensor& x, const Tensor& p,
                                             double epsilon = kDefaultEpsilon) {
  return add_scalar(scale(stable_pose_activation(x, p, epsilon), -1.0), 1.0);
}

class SgdSettings {
 public:
  explicit SgdSettings(double learning_rate) : lr_(learning_rate) {
    if (!(learning_rate > 0.0)) throw UsageError("SGD learning rate must be positive");
  }
  double learning_rate() const { return lr_; }

 private:
  double lr_;
};

// values -= lr * grad, then grads are cleared.
inline void sgd_step(std::span<Tensor> params, const SgdSettings& settings) {
  const double lr = settings.learning_rate();
  for (auto& p : params) {
    auto& v = p.mutable_values();
    auto& g = p.mutable_grad();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    p.zero_grad();
  }
}

}  // namespace srd::nn
