#pragma once

// FishNN (food detectors + action layer), its PFC judge, and the decision
// memory the self-reward loss accumulates over.
//
// Neuron semantics:
//   a_fh  "food here"   fires on window [0.5, 0, 0]
//   a_ft  "food there"  fires when food is one or two cells ahead
//   e, m  eat / move logits from [a_fh, a_ft, F]
//   e1    food here, hungry, eating
//   m1    food there, hungry, moving
//   ex    no food here, moving on
//   T, F  the PFC's verdict on the chosen action

#include <array>
#include <deque>

#include "srd/fish1d/world.hpp"
#include "srd/nn/layers.hpp"
#include "srd/nn/params_io.hpp"

namespace srd::fish1d {

struct FishNNSettings {
  double epsilon = nn::kDefaultEpsilon;
  double delta = 0.01;
  // Eat logit = eat_food_weight * a_fh - F + eat_bias. The fish starts out
  // eating only below F ~ 0.4 and moves past food when half full.
  double eat_food_weight = 2.85;
  double eat_bias = -2.0;
};

struct Senses {
  nn::Tensor food_here;   // a_fh
  nn::Tensor food_there;  // a_ft
};

struct Decision {
  Action action;
  nn::Tensor logits;  // [e, m]
};

class FishNN {
 public:
  explicit FishNN(FishNNSettings settings = {}) : settings_(settings) {
    conv_fh_w_ = nn::Tensor::vector({1.0, 0.0, 0.0});
    conv_fh_b_ = nn::Tensor::scalar(-0.5);
    conv_ft_w_ = nn::Tensor::vector({0.0, 1.0, 1.0});
    conv_ft_b_ = nn::Tensor::scalar(-0.5);
    const double d = settings.delta;
    action_w_ = nn::Tensor::from({settings.eat_food_weight, 0.0, -1.0,  // e
                                  d, 1.0, 1.0},                         // m
                                 {2, 3}, true);
    action_b_ = nn::Tensor::vector({settings.eat_bias, 0.0}, true);
  }

  Senses sense(const std::array<double, 3>& window) const {
    const auto env = nn::Tensor::vector({window.begin(), window.end()});
    return {nn::selective_activation(nn::conv1d(env, conv_fh_w_, conv_fh_b_), settings_.epsilon),
            nn::selective_activation(nn::conv1d(env, conv_ft_w_, conv_ft_b_), settings_.epsilon)};
  }

  Decision decide(const nn::Tensor& a_fh, const nn::Tensor& a_ft, double energy) const {
    const auto x = nn::concat({a_fh, a_ft, nn::Tensor::scalar(energy)});
    auto logits = nn::fully_connected(x, action_w_, action_b_);
    const auto action = nn::argmax(logits.values()) == 0 ? Action::kEat : Action::kMove;
    return {action, logits};
  }

  // Only the action layer is trainable; the detectors are fixed by design.
  std::array<nn::Tensor, 2> trainable() const { return {action_w_, action_b_}; }

  nn::ParamSet params() const {
    return {{"action.bias", action_b_},
            {"action.weight", action_w_},
            {"conv_fh.bias", conv_fh_b_},
            {"conv_fh.weight", conv_fh_w_},
            {"conv_ft.bias", conv_ft_b_},
            {"conv_ft.weight", conv_ft_w_}};
  }
  void load(const nn::ParamSet& src) {
    auto mine = params();
    nn::assign_params(mine, src);
  }

  const nn::Tensor& action_weight() const { return action_w_; }
  const nn::Tensor& action_bias() const { return action_b_; }
  const nn::Tensor& fh_kernel() const { return conv_fh_w_; }
  const nn::Tensor& fh_bias() const { return conv_fh_b_; }
  const nn::Tensor& ft_kernel() const { return conv_ft_w_; }
  const nn::Tensor& ft_bias() const { return conv_ft_b_; }
  const FishNNSettings& settings() const { return settings_; }

 private:
  FishNNSettings settings_;
  nn::Tensor conv_fh_w_, conv_fh_b_, conv_ft_w_, conv_ft_b_;
  nn::Tensor action_w_, action_b_;
};

struct FishPFCSettings {
  // Evidence a v1 neuron needs before it counts as active.
  double activity_threshold = 0.8;
  double false_bias = 0.1;
  double leak_slope = nn::kDefaultLeakSlope;
};

class FishPFC {
 public:
  explicit FishPFC(FishPFCSettings settings = {}) : settings_(settings) {
    kernels_ = {nn::Tensor::vector({1.0, 0.0, -1.0, 1.0, 0.0}),    // e1
                nn::Tensor::vector({0.0, 1.0, -1.0, 0.0, 1.0}),    // m1
                nn::Tensor::vector({-1.0, -1.0, 0.0, 0.0, 1.0})};  // ex
    threshold_ = nn::Tensor::scalar(-settings.activity_threshold);
    judge_w_ = nn::Tensor::from({1.0, 1.0, 1.0,  //
                                 -1.0, -1.0, -1.0},
                                {2, 3});
    judge_b_ = nn::Tensor::vector({0.0, settings.false_bias});
  }

  // v0 = [a_fh, a_ft, F, e, m] with [e, m] the softmaxed action logits.
  nn::Tensor v1(const nn::Tensor& v0) const {
    std::vector<nn::Tensor> rows;
    rows.reserve(kernels_.size());
    for (const auto& k : kernels_) rows.push_back(nn::conv1d(v0, k, threshold_));
    return nn::threshold_activation(nn::concat(rows), settings_.leak_slope);
  }

  // [T, F]
  nn::Tensor judge(const nn::Tensor& v0) const {
    return nn::fully_connected(v1(v0), judge_w_, judge_b_);
  }

  static nn::Tensor make_v0(const Senses& s, double energy, const nn::Tensor& action_logits) {
    return nn::concat({s.food_here, s.food_there, nn::Tensor::scalar(energy),
                       nn::softmax(action_logits)});
  }

  const std::array<nn::Tensor, 3>& kernels() const { return kernels_; }
  const FishPFCSettings& settings() const { return settings_; }

 private:
  FishPFCSettings settings_;
  std::array<nn::Tensor, 3> kernels_;
  nn::Tensor threshold_;
  nn::Tensor judge_w_, judge_b_;
};

inline bool judged_true(const nn::Tensor& verdict) { return nn::argmax(verdict.values()) == 0; }

// Holds the last `capacity` PFC verdicts with their graphs intact, so the
// loss on their sum reaches the action layer through every buffered step.
class DecisionMemory {
 public:
  explicit DecisionMemory(std::size_t capacity = 8) : capacity_(capacity) {
    if (capacity == 0) throw nn::UsageError("DecisionMemory capacity must be positive");
  }

  void push(nn::Tensor verdict) {
    buffer_.push_back(std::move(verdict));
    if (buffer_.size() > capacity_) buffer_.pop_front();
  }

  bool full() const { return buffer_.size() == capacity_; }
  std::size_t size() const { return buffer_.size(); }
  std::size_t capacity() const { return capacity_; }

  nn::Tensor z() const {
    nn::Tensor acc = nn::Tensor::zeros({2});
    for (const auto& v : buffer_) acc = nn::add(acc, v);
    return acc;
  }

 private:
  std::size_t capacity_;
  std::deque<nn::Tensor> buffer_;
};

}  // namespace srd::fish1d
