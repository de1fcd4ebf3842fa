#pragma once

// The Fish Sale Negotiator: external-sensor neurons over an implicitly
// augmented offer, a buy/hold/quit layer, and the PFC that judges it.
//
// Neuron semantics:
//   PG   price gauge: rises with price, falls a little with size and colour
//   SZ   size: length and weight
//   LSR  limited supply rush: last round's purchase fraction
//   ST   sub-type match: peaks at st = (0.5, 0.5, 0.5)
//   B, L, Q       buy, hold (and wait for a lower price), quit
//   PGL  holding at a high price          -> T
//   BC   buying cheap                     -> T
//   FQ   quitting on a desirable fish     -> F

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "srd/nn/layers.hpp"
#include "srd/nn/params_io.hpp"
#include "srd/util/rng.hpp"

namespace srd::auction {

enum class Decision { kBuy = 0, kHold = 1, kQuit = 2 };

inline const char* decision_name(Decision d) {
  switch (d) {
    case Decision::kBuy: return "buy";
    case Decision::kHold: return "hold";
    case Decision::kQuit: return "quit";
  }
  return "?";
}

// (p, l, w, g, st1, st2, st3, f)
struct FishVector {
  std::array<double, 8> v{5.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5};

  double& price() { return v[0]; }
  double price() const { return v[0]; }
  double& f() { return v[7]; }
  double f() const { return v[7]; }
};

inline FishVector base_offer() { return {}; }

struct VariantSettings {
  double scale = 0.05;           // p, l, w, g times U[1 - scale, 1 + scale]
  double flip_probability = 0.2;  // per sub-type flag
};

inline std::vector<FishVector> make_offer_variants(const FishVector& base, std::size_t count,
                                                   std::uint64_t seed, VariantSettings s = {}) {
  if (count == 0) throw nn::UsageError("make_offer_variants needs count >= 1");
  Rng rng(seed);
  std::vector<FishVector> out(count, base);
  for (auto& x : out) {
    for (std::size_t i = 0; i < 4; ++i) x.v[i] *= rng.uniform(1.0 - s.scale, 1.0 + s.scale);
    for (std::size_t i = 4; i < 7; ++i) {
      if (rng.bernoulli(s.flip_probability)) x.v[i] = -x.v[i];
    }
  }
  return out;
}

struct FsnDesign {
  double delta = 0.001;
  double base_price = 5.0;
  std::size_t d_ic = 5;
  double clone_noise = 0.01;
  double epsilon = nn::kDefaultEpsilon;
  // Decision rows over (PG, SZ, LSR, ST). The buy bias puts a zero-noise
  // agent near indifference at the base price.
  std::array<double, 4> buy_row{-0.2, 1.0, 0.1, 1.0};
  std::array<double, 4> hold_row{0.2, 0.0, -0.05, 0.0};
  std::array<double, 4> quit_row{0.5, -1.0, -1.0, -1.0};
  std::array<double, 3> decision_bias{-1.74, 0.0, 0.0};
  // The PFC reads softmax(sharpness * logits).
  double pfc_sharpness = 10.0;
  double true_bias = 0.0;
  double false_bias = 0.2;
};

struct OptimSettings {
  int epochs = 0;
  std::size_t batch = 4;
  double learning_rate = 1e-5;

  static OptimSettings sample(Rng& rng) {
    OptimSettings o;
    o.epochs = rng.integer(0, 2);
    o.batch = static_cast<std::size_t>(rng.integer(4, 15));
    o.learning_rate = rng.uniform(1e-7, 1e-4);
    return o;
  }
};

class FsnModel {
 public:
  explicit FsnModel(FsnDesign design = {}) : design_(design) {
    const double d = design.delta;
    const double ib = 1.0 / design.base_price;
    const std::array<std::array<double, 8>, 4> rows{{
        {ib, -2 * d, -2 * d, -2 * d, 0, 0, 0, 0},         // PG
        {0, 0.5, 0.5, 0, 0, 0, 0, 0},                     // SZ
        {0, 0, 0, 0, 0, 0, 0, 1},                         // LSR
        {0, 0, 0, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0},       // ST
    }};
    const std::array<double, 4> biases{0.0, 0.0, 0.0, -0.5};
    for (std::size_t n = 0; n < 4; ++n) {
      std::vector<double> k(rows[n].begin(), rows[n].end());
      for (auto& x : k) x += d;
      es_w_[n] = nn::Tensor::vector(std::move(k));
      es_bias_[n] = nn::Tensor::scalar(biases[n]);
    }
    std::vector<double> w;
    for (const auto* row : {&design.buy_row, &design.hold_row, &design.quit_row}) {
      w.insert(w.end(), row->begin(), row->end());
    }
    dec_w_ = nn::Tensor::from(std::move(w), {3, 4}, true);
    dec_b_ = nn::Tensor::vector({design.decision_bias.begin(), design.decision_bias.end()}, true);
  }

  // Copies own their tensors; tensors are shared handles otherwise.
  FsnModel(const FsnModel& o)
      : design_(o.design_), dec_w_(o.dec_w_.clone_leaf()), dec_b_(o.dec_b_.clone_leaf()), optim_(o.optim_) {
    for (std::size_t n = 0; n < 4; ++n) {
      es_w_[n] = o.es_w_[n].clone_leaf();
      es_bias_[n] = o.es_bias_[n].clone_leaf();
    }
  }
  FsnModel& operator=(const FsnModel& o) {
    if (this != &o) *this = FsnModel(o);
    return *this;
  }
  FsnModel(FsnModel&&) noexcept = default;
  FsnModel& operator=(FsnModel&&) noexcept = default;

  // An agent that always holds, whatever the offer.
  static FsnModel always_hold(FsnDesign design = {}) {
    FsnModel m(design);
    std::fill(m.dec_w_.mutable_values().begin(), m.dec_w_.mutable_values().end(), 0.0);
    m.dec_b_.mutable_values() = {0.0, 1.0, 0.0};
    return m;
  }

  const FsnDesign& design() const { return design_; }
  OptimSettings& optim() { return optim_; }
  const OptimSettings& optim() const { return optim_; }

  void perturb_intent(Rng& rng, double amount = 0.1) {
    for (auto& b : dec_b_.mutable_values()) b += rng.uniform(-amount, amount);
  }

  // Interleaves D_ic clones as (p, p1.., l, l1.., ...): clone 0 is exact,
  // the rest carry Gaussian noise.
  std::vector<double> augment(const FishVector& x, Rng* noise) const {
    const std::size_t D = design_.d_ic;
    std::vector<double> out(8 * D);
    for (std::size_t var = 0; var < 8; ++var) {
      for (std::size_t c = 0; c < D; ++c) {
        double v = x.v[var];
        if (c > 0 && noise != nullptr && design_.clone_noise > 0) v += noise->normal(0.0, design_.clone_noise);
        out[var * D + c] = v;
      }
    }
    return out;
  }

  nn::Tensor es_forward(const FishVector& x, Rng* noise) const {
    const auto input = nn::Tensor::vector(augment(x, noise));
    std::vector<nn::Tensor> neurons;
    for (std::size_t n = 0; n < 4; ++n) {
      const auto pre = nn::mean(nn::conv1d(input, es_w_[n], es_bias_[n], design_.d_ic));
      neurons.push_back(n == 3 ? nn::selective_activation(pre, design_.epsilon)
                               : nn::threshold_activation(pre));
    }
    return nn::concat(neurons);
  }

  nn::Tensor logits(const nn::Tensor& x_es) const { return nn::fully_connected(x_es, dec_w_, dec_b_); }

  Decision decide_from(const nn::Tensor& x_es) const {
    return static_cast<Decision>(nn::argmax(logits(x_es).values()));
  }

  Decision decide(const FishVector& x, Rng* noise) const {
    nn::NoGradGuard guard;
    return decide_from(es_forward(x, noise));
  }

  // [T, F_neg] logits.
  nn::Tensor pfc(const nn::Tensor& x_es, const nn::Tensor& decision_logits) const {
    const auto y = nn::softmax(nn::scale(decision_logits, design_.pfc_sharpness));
    const auto PG = nn::element(x_es, 0), SZ = nn::element(x_es, 1);
    const auto LSR = nn::element(x_es, 2), ST = nn::element(x_es, 3);
    const auto B = nn::element(y, 0), L = nn::element(y, 1), Q = nn::element(y, 2);
    const auto pgl = nn::threshold_activation(nn::add_scalar(nn::add(PG, L), -1.0));
    const auto bc = nn::threshold_activation(nn::sub(B, PG));
    const auto desirable = nn::scale(nn::add(nn::add(SZ, LSR), ST), 1.0 / 3.0);
    const auto fq = nn::threshold_activation(nn::add_scalar(nn::add(Q, desirable), -1.0));
    return nn::concat({nn::add_scalar(nn::add(pgl, bc), design_.true_bias),
                       nn::add_scalar(fq, design_.false_bias)});
  }

  std::array<nn::Tensor, 2> trainable() const { return {dec_w_, dec_b_}; }
  const nn::Tensor& decision_weight() const { return dec_w_; }
  const nn::Tensor& decision_bias() const { return dec_b_; }
  const std::array<nn::Tensor, 4>& es_weights() const { return es_w_; }
  const std::array<nn::Tensor, 4>& es_biases() const { return es_bias_; }

  nn::ParamSet params() const {
    nn::ParamSet p{{"decision.bias", dec_b_}, {"decision.weight", dec_w_}};
    static constexpr std::array<const char*, 4> kNames{"PG", "SZ", "LSR", "ST"};
    for (std::size_t n = 0; n < 4; ++n) {
      p.emplace(std::string("es.") + kNames[n] + ".weight", es_w_[n]);
      p.emplace(std::string("es.") + kNames[n] + ".bias", es_bias_[n]);
    }
    return p;
  }

  void load(const nn::ParamSet& src) {
    auto mine = params();
    nn::assign_params(mine, src);
  }

 private:
  FsnDesign design_;
  std::array<nn::Tensor, 4> es_w_;
  std::array<nn::Tensor, 4> es_bias_;
  nn::Tensor dec_w_;
  nn::Tensor dec_b_;
  OptimSettings optim_;
};

inline bool judged_true(const nn::Tensor& verdict) { return nn::argmax(verdict.values()) == 0; }

// SRD on the offer variants: per minibatch, z = sum of [T, F] verdicts and
// loss = CE(z, argmax z); only the decision layer moves.
inline std::size_t srd_finetune(FsnModel& m, const std::vector<FishVector>& variants, Rng& noise) {
  const auto& o = m.optim();
  if (o.epochs <= 0 || variants.empty()) return 0;
  const nn::SgdSettings sgd(o.learning_rate);
  auto params = m.trainable();
  std::size_t updates = 0;
  for (int e = 0; e < o.epochs; ++e) {
    for (std::size_t start = 0; start < variants.size(); start += o.batch) {
      const std::size_t end = std::min(variants.size(), start + o.batch);
      nn::Tensor z = nn::Tensor::zeros({2});
      for (std::size_t i = start; i < end; ++i) {
        const auto x_es = m.es_forward(variants[i], &noise);
        z = nn::add(z, m.pfc(x_es, m.logits(x_es)));
      }
      nn::backward(nn::cross_entropy_self(z));
      nn::sgd_step(params, sgd);
      ++updates;
    }
  }
  return updates;
}

// Stand-in for human inspection: admits a model only if its sensor weights
// are the designed ones and its decision layer keeps the designed signs.
struct ScreenResult {
  bool admitted = false;
  std::string reason;
};

inline ScreenResult screen(const FsnModel& m, double tolerance = 1e-9) {
  const FsnModel reference(m.design());
  for (std::size_t n = 0; n < 4; ++n) {
    const auto& a = m.es_weights()[n].values();
    const auto& b = reference.es_weights()[n].values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i] - b[i]) > tolerance) return {false, "sensor weights differ from the design"};
    }
    if (std::abs(m.es_biases()[n].item() - reference.es_biases()[n].item()) > tolerance) {
      return {false, "sensor bias differs from the design"};
    }
  }
  const auto& W = m.decision_weight();
  // Columns: PG, SZ, LSR, ST. Rows: B, L, Q.
  if (!(W.at(0, 0) < 0 && W.at(0, 1) > 0 && W.at(0, 2) > 0 && W.at(0, 3) > 0)) {
    return {false, "buy row lost its sign pattern"};
  }
  if (!(W.at(1, 0) > 0)) return {false, "hold ignores the price"};
  return {true, ""};
}

}  // namespace srd::auction
