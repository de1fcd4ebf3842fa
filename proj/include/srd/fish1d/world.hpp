#pragma once

// The 1D fish's world: an endless tape with food every `food_period` cells,
// seen through a 3-cell window that starts at the fish's own cell.

#include <algorithm>
#include <array>
#include <set>

#include "srd/nn/tensor.hpp"

namespace srd::fish1d {

inline constexpr double kFoodValue = 0.5;

enum class Action { kEat = 0, kMove = 1 };

inline const char* action_name(Action a) { return a == Action::kEat ? "eat" : "move"; }

struct FishWorld {
  long tape_offset = 0;
  long food_period = 5;
  std::set<long> eaten;

  bool has_food(long cell) const {
    return cell % food_period == 0 && !eaten.contains(cell);
  }
  std::array<double, 3> window() const {
    std::array<double, 3> w{};
    for (long i = 0; i < 3; ++i) w[i] = has_food(tape_offset + i) ? kFoodValue : 0.0;
    return w;
  }
  bool food_here() const { return has_food(tape_offset); }
  bool food_there() const { return has_food(tape_offset + 1) || has_food(tape_offset + 2); }
};

struct FishState {
  double energy = 1.0;
  bool alive() const { return energy > 0.0; }
};

struct WorldSettings {
  double decay = 0.05;
  double eat_energy = 1.0;
};

// Eating with food present restores energy to eat_energy and consumes the
// cell; moving rolls the window left by one. Decay applies every step.
inline void world_step(FishWorld& world, FishState& state, Action action,
                       const WorldSettings& settings = {}) {
  if (!state.alive()) throw nn::UsageError("world_step: the fish is dead");
  if (action == Action::kEat) {
    if (world.food_here()) {
      state.energy = settings.eat_energy;
      world.eaten.insert(world.tape_offset);
    }
  } else {
    ++world.tape_offset;
    // Cells behind the fish never come back into view.
    while (!world.eaten.empty() && *world.eaten.begin() < world.tape_offset) {
      world.eaten.erase(world.eaten.begin());
    }
  }
  state.energy = std::max(0.0, state.energy - settings.decay);
}

}  // namespace srd::fish1d
