#pragma once

// Live loops for the fish: plain episodes (traces) and SRD training.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "srd/fish1d/fish_nn.hpp"
#include "srd/util/rng.hpp"

namespace srd::fish1d {

struct TraceRecord {
  long step;
  double energy;  // after the step
  bool food_here;
  bool food_there;
  Action action;
  bool judge_true;
};

struct EpisodeSummary {
  std::vector<TraceRecord> trace;
  bool died = false;
  double mean_energy = 0.0;
  double min_energy = 1.0;
  long missed_meals = 0;  // food here, F < 1, and the fish moved on
};

struct FishRunSettings {
  WorldSettings world;
  long food_period = 5;
  bool keep_trace = true;
};

// The seed picks where on the tape the fish starts.
inline FishWorld make_world(std::uint64_t seed, long food_period = 5) {
  FishWorld w;
  w.food_period = food_period;
  Rng rng(seed);
  w.tape_offset = static_cast<long>(rng.index(static_cast<std::size_t>(food_period)));
  return w;
}

inline EpisodeSummary run_episode(const FishNN& net, const FishPFC& pfc, long steps,
                                  std::uint64_t seed, const FishRunSettings& settings = {}) {
  nn::NoGradGuard no_grad;
  EpisodeSummary out;
  FishWorld world = make_world(seed, settings.food_period);
  FishState state;
  double total = 0.0;
  long done = 0;
  for (long t = 0; t < steps; ++t) {
    const bool here = world.food_here();
    const bool there = world.food_there();
    const auto senses = net.sense(world.window());
    const auto decision = net.decide(senses.food_here, senses.food_there, state.energy);
    const auto verdict =
        pfc.judge(FishPFC::make_v0(senses, state.energy, decision.logits));
    if (here && state.energy < 1.0 && decision.action == Action::kMove) ++out.missed_meals;
    world_step(world, state, decision.action, settings.world);
    total += state.energy;
    ++done;
    out.min_energy = std::min(out.min_energy, state.energy);
    if (settings.keep_trace) {
      out.trace.push_back({t, state.energy, here, there, decision.action, judged_true(verdict)});
    }
    if (!state.alive()) {
      out.died = true;
      break;
    }
  }
  out.mean_energy = done ? total / static_cast<double>(done) : 0.0;
  return out;
}

struct FishTrainSettings {
  long steps = 12000;
  std::size_t memory = 8;
  double learning_rate = 0.03;
  FishRunSettings run;
};

struct TrainSummary {
  long updates = 0;
  bool died = false;
  double mean_loss = 0.0;
};

// Every step pushes the PFC verdict into memory; once memory is full the
// self-labelled cross entropy of its sum updates the action layer.
inline TrainSummary srd_train(FishNN& net, const FishPFC& pfc, std::uint64_t seed,
                              const FishTrainSettings& settings = {}) {
  TrainSummary out;
  FishWorld world = make_world(seed, settings.run.food_period);
  FishState state;
  DecisionMemory memory(settings.memory);
  const nn::SgdSettings sgd(settings.learning_rate);
  auto params = net.trainable();
  double loss_total = 0.0;
  for (long t = 0; t < settings.steps; ++t) {
    const auto senses = net.sense(world.window());
    const auto decision = net.decide(senses.food_here, senses.food_there, state.energy);
    memory.push(pfc.judge(FishPFC::make_v0(senses, state.energy, decision.logits)));
    if (memory.full()) {
      const auto loss = nn::cross_entropy_self(memory.z());
      nn::backward(loss);
      nn::sgd_step(params, sgd);
      loss_total += loss.item();
      ++out.updates;
    }
    world_step(world, state, decision.action, settings.run.world);
    if (!state.alive()) {
      // A dead fish restarts; training is about the policy, not one life.
      out.died = true;
      state = FishState{};
    }
  }
  out.mean_loss = out.updates ? loss_total / static_cast<double>(out.updates) : 0.0;
  return out;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  os << "step,F,food_here,food_there,action,judge\n";
  char buf[64];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%.6f", r.energy);
    os << r.step << ',' << buf << ',' << (r.food_here ? 1 : 0) << ',' << (r.food_there ? 1 : 0)
       << ',' << action_name(r.action) << ',' << (r.judge_true ? "T" : "F") << '\n';
  }
}

}  // namespace srd::fish1d
