#pragma once

// Reverse-mode differentiable tensors.
//
// A Tensor is a cheap handle to a shared node. Operations that see at least
// one input with requires_grad (and run while recording is enabled) attach
// their inputs and a local-gradient rule to the result; backward() walks the
// recorded graph in reverse topological order.

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace srd::nn {

using Shape = std::vector<std::size_t>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

inline std::size_t numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

namespace detail {
inline bool& recording_flag() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::recording_flag(); }

// Suspends recording for its lifetime. Results computed inside carry no
// parents, so nothing upstream of them receives gradient through them.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::recording_flag()) { detail::recording_flag() = false; }
  ~NoGradGuard() { detail::recording_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(const Node&)> backward_fn;

  bool is_leaf() const { return !backward_fn; }
};

class Tensor {
 public:
  Tensor() : node_(std::make_shared<Node>()) {}

  static Tensor from(std::vector<double> values, Shape shape, bool requires_grad = false) {
    if (numel(shape) != values.size()) {
      throw DimensionError("value count " + std::to_string(values.size()) +
                           " does not match shape " + shape_str(shape));
    }
    Tensor t;
    t.node_->shape = std::move(shape);
    t.node_->grad.assign(values.size(), 0.0);
    t.node_->value = std::move(values);
    t.node_->requires_grad = requires_grad;
    return t;
  }
  static Tensor vector(std::vector<double> values, bool requires_grad = false) {
    const std::size_t n = values.size();
    return from(std::move(values), {n}, requires_grad);
  }
  static Tensor scalar(double v, bool requires_grad = false) {
    return from({v}, {}, requires_grad);
  }
  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = numel(shape);
    return from(std::vector<double>(n, 0.0), std::move(shape), requires_grad);
  }
  static Tensor filled(Shape shape, double v, bool requires_grad = false) {
    const std::size_t n = numel(shape);
    return from(std::vector<double>(n, v), std::move(shape), requires_grad);
  }

  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rank() const { return node_->shape.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool r) { node_->requires_grad = r; }

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& mutable_values() { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }
  std::vector<double>& mutable_grad() { return node_->grad; }

  double item() const {
    if (size() != 1) throw UsageError("item() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
  }
  double operator[](std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t r, std::size_t c) const { return node_->value.at(r * node_->shape.at(1) + c); }

  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  // Independent leaf holding a copy of the values.
  Tensor detach() const { return from(node_->value, node_->shape, false); }
  Tensor clone_leaf() const { return from(node_->value, node_->shape, node_->requires_grad); }

  bool is_leaf() const { return node_->is_leaf(); }
  bool same_node(const Tensor& o) const { return node_ == o.node_; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

// Builds an op result; attaches the backward rule only when recording and at
// least one input needs gradient.
inline Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                          std::function<void(const Node&)> backward) {
  Tensor out = Tensor::from(std::move(values), std::move(shape));
  if (!grad_enabled()) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  node.parents.reserve(inputs.size());
  for (const auto& in : inputs) node.parents.push_back(in.node());
  node.backward_fn = std::move(backward);
  return out;
}

inline void accumulate(const std::shared_ptr<Node>& target, std::size_t i, double g) {
  if (target->requires_grad) target->grad[i] += g;
}

}  // namespace detail

// The ordered operation list reachable from a root: every node appears after
// all of its parents.
class ComputationRecord {
 public:
  explicit ComputationRecord(const Tensor& root) {
    std::unordered_set<const Node*> seen;
    // Iterative post-order DFS; graphs from long rollouts can be deep.
    std::vector<std::pair<std::shared_ptr<Node>, std::size_t>> stack;
    if (root.requires_grad()) stack.emplace_back(root.node(), 0);
    seen.insert(root.node().get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        auto parent = node->parents[next++];
        if (parent->requires_grad && seen.insert(parent.get()).second) {
          stack.emplace_back(std::move(parent), 0);
        }
      } else {
        order_.push_back(node);
        stack.pop_back();
      }
    }
  }

  const std::vector<std::shared_ptr<Node>>& order() const { return order_; }

  std::size_t operation_count() const {
    std::size_t n = 0;
    for (const auto& node : order_) n += node->is_leaf() ? 0 : 1;
    return n;
  }

 private:
  std::vector<std::shared_ptr<Node>> order_;
};

// Accumulates d(loss)/d(leaf) into every reachable requires_grad leaf.
// Intermediate grads are reset first, so repeated calls add only into leaves.
inline void backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " + shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) return;
  ComputationRecord record(loss);
  const auto& order = record.order();
  for (const auto& node : order) {
    if (!node->is_leaf()) std::fill(node->grad.begin(), node->grad.end(), 0.0);
  }
  order.back()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->is_leaf()) (*it)->backward_fn(**it);
  }
}

}  // namespace srd::nn
