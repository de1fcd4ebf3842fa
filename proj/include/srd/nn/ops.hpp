#pragma once

// Elementwise and structural operations on Tensor.

#include <algorithm>
#include <cmath>
#include <span>

#include "srd/nn/tensor.hpp"

namespace srd::nn {

namespace detail {
inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd f, Deriv df) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return make_result(x.shape(), std::move(out), {x}, [df](const Node& self) {
    const auto& in = self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      accumulate(in, i, self.grad[i] * df(in->value[i], self.value[i]));
    }
  });
}
}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      detail::accumulate(self.parents[0], i, self.grad[i]);
      detail::accumulate(self.parents[1], i, self.grad[i]);
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      detail::accumulate(self.parents[0], i, self.grad[i]);
      detail::accumulate(self.parents[1], i, -self.grad[i]);
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return detail::make_result(a.shape(), std::move(out), {a, b}, [](const Node& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      detail::accumulate(pa, i, self.grad[i] * pb->value[i]);
      detail::accumulate(pb, i, self.grad[i] * pa->value[i]);
    }
  });
}

inline Tensor scale(const Tensor& x, double c) {
  return detail::unary(x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

inline Tensor add_scalar(const Tensor& x, double c) {
  return detail::unary(x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

inline Tensor square(const Tensor& x) {
  return detail::unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

inline Tensor tanh(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

inline Tensor leaky_relu(const Tensor& x, double slope) {
  return detail::unary(
      x, [slope](double v) { return v >= 0.0 ? v : slope * v; },
      [slope](double v, double) { return v >= 0.0 ? 1.0 : slope; });
}

inline Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return detail::make_result({}, {s}, {x}, [](const Node& self) {
    const auto& in = self.parents[0];
    for (std::size_t i = 0; i < in->value.size(); ++i) detail::accumulate(in, i, self.grad[0]);
  });
}

inline Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

// Flattened element selection; repeated indices accumulate gradient.
inline Tensor gather(const Tensor& x, std::span<const std::size_t> indices) {
  std::vector<double> out(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= x.size()) {
      throw DimensionError("gather index " + std::to_string(indices[k]) + " outside shape " +
                           shape_str(x.shape()));
    }
    out[k] = x[indices[k]];
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return detail::make_result({idx.size()}, std::move(out), {x}, [idx](const Node& self) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      detail::accumulate(self.parents[0], idx[k], self.grad[k]);
    }
  });
}

inline Tensor element(const Tensor& x, std::size_t i) {
  const std::size_t idx[] = {i};
  Tensor g = gather(x, idx);
  g.node()->shape = {};
  return g;
}

// Concatenates flattened inputs into one vector.
inline Tensor concat(const std::vector<Tensor>& parts) {
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  const std::size_t n = out.size();
  return detail::make_result({n}, std::move(out), parts, [offsets](const Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      const auto& p = self.parents[k];
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        detail::accumulate(p, i, self.grad[offsets[k] + i]);
      }
    }
  });
}

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw DimensionError("reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  return detail::make_result(std::move(shape), x.values(), {x}, [](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      detail::accumulate(self.parents[0], i, self.grad[i]);
    }
  });
}

// Replaces the listed flat positions with constants; those positions pass no
// gradient back to x.
inline Tensor assign_constant(const Tensor& x, std::span<const std::size_t> indices,
                              std::span<const double> constants) {
  if (indices.size() != constants.size()) {
    throw DimensionError("assign_constant: index/value count mismatch");
  }
  std::vector<double> out = x.values();
  std::vector<char> masked(x.size(), 0);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.at(indices[k]) = constants[k];
    masked[indices[k]] = 1;
  }
  return detail::make_result(x.shape(), std::move(out), {x}, [masked](const Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (!masked[i]) detail::accumulate(self.parents[0], i, self.grad[i]);
    }
  });
}

inline double max_abs(const Tensor& x) {
  double m = 0.0;
  for (double v : x.values()) m = std::max(m, std::abs(v));
  return m;
}

// x / max|x| with the divisor treated as a constant. All-zero input is
// returned unchanged.
inline Tensor normalize_max_abs(const Tensor& x) {
  const double m = max_abs(x);
  if (m == 0.0) return scale(x, 1.0);
  return scale(x, 1.0 / m);
}

}  // namespace srd::nn
