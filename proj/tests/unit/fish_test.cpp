#include <gtest/gtest.h>

#include <sstream>

#include "srd/fish1d/episode.hpp"

using namespace srd;
using namespace srd::fish1d;
using nn::Tensor;

namespace {

// sigma_sa(r) for a scalar residual r with eps = 0.01.
double sa(double r) { return 0.01 / (r * r + 0.01); }

Tensor scalar(double v) { return Tensor::scalar(v); }

Tensor verdict_for(const FishPFC& pfc, double a_fh, double a_ft, double F, Action a) {
  // One-hot [e, m] as the softmaxed action; logits +-20 saturate softmax.
  const auto logits = a == Action::kEat ? Tensor::vector({20, -20}) : Tensor::vector({-20, 20});
  return pfc.judge(FishPFC::make_v0({scalar(a_fh), scalar(a_ft)}, F, logits));
}

}  // namespace

TEST(FishSense, CanonicalWindowsMatchHandValues) {
  const FishNN net;
  struct Case {
    std::array<double, 3> window;
    double fh, ft;
  };
  const Case cases[] = {
      {{0, 0, 0}, sa(-0.5), sa(-0.5)},
      {{0.5, 0, 0}, sa(0.0), sa(-0.5)},
      {{0, 0.5, 0}, sa(-0.5), sa(0.0)},
      {{0, 0, 0.5}, sa(-0.5), sa(0.0)},
  };
  for (const auto& c : cases) {
    const auto s = net.sense(c.window);
    EXPECT_NEAR(s.food_here.item(), c.fh, 1e-12);
    EXPECT_NEAR(s.food_there.item(), c.ft, 1e-12);
  }
  EXPECT_DOUBLE_EQ(net.sense({0.5, 0, 0}).food_here.item(), 1.0);
  EXPECT_NEAR(net.sense({0, 0, 0}).food_here.item(), 0.0384615, 1e-6);
}

TEST(FishNN, DetectorWeightsMatchDesign) {
  const FishNN net;
  EXPECT_EQ(net.fh_kernel().values(), (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(net.ft_kernel().values(), (std::vector<double>{0, 1, 1}));
  EXPECT_DOUBLE_EQ(net.fh_bias().item(), -0.5);
  EXPECT_DOUBLE_EQ(net.ft_bias().item(), -0.5);
}

TEST(FishNN, InitialDecisions) {
  const FishNN net;
  // Half full with food here: the untrained fish moves on.
  EXPECT_EQ(net.decide(scalar(1), scalar(0.04), 0.5).action, Action::kMove);
  EXPECT_EQ(net.decide(scalar(0.04), scalar(1), 0.9).action, Action::kMove);
  EXPECT_EQ(net.decide(scalar(0.04), scalar(0.04), 0.2).action, Action::kMove);
  EXPECT_EQ(net.decide(scalar(1), scalar(0.04), 0.2).action, Action::kEat);
}

TEST(FishNN, InitialPolicyEatsOnlyWhenHungryAndFoodHere) {
  const FishNN net;
  const double off = sa(-0.5);
  for (int i = 0; i <= 100; ++i) {
    const double F = i / 100.0;
    EXPECT_EQ(net.decide(scalar(off), scalar(off), F).action, Action::kMove) << F;
    EXPECT_EQ(net.decide(scalar(off), scalar(1), F).action, Action::kMove) << F;
    const auto here = net.decide(scalar(1), scalar(off), F).action;
    if (F < 0.35) EXPECT_EQ(here, Action::kEat) << F;
    if (F >= 0.45) EXPECT_EQ(here, Action::kMove) << F;
  }
}

TEST(FishWorld, WindowAndFoodPlacement) {
  FishWorld w;
  EXPECT_EQ(w.window(), (std::array<double, 3>{0.5, 0, 0}));
  w.tape_offset = 3;
  EXPECT_EQ(w.window(), (std::array<double, 3>{0, 0, 0.5}));
  for (long off = 0; off < 20; ++off) {
    w.tape_offset = off;
    for (double v : w.window()) EXPECT_TRUE(v == 0.0 || v == 0.5);
  }
}

TEST(FishWorld, EatRestoresAndConsumes) {
  FishWorld w;
  FishState s{0.5};
  world_step(w, s, Action::kEat);
  EXPECT_DOUBLE_EQ(s.energy, 1.0 - 0.05);
  EXPECT_FALSE(w.food_here());
  EXPECT_EQ(w.window(), (std::array<double, 3>{0, 0, 0}));
  // Eating again without food only costs decay.
  world_step(w, s, Action::kEat);
  EXPECT_DOUBLE_EQ(s.energy, 0.9);
}

TEST(FishWorld, MoveRollsWindowLeft) {
  FishWorld w;
  w.tape_offset = 2;
  FishState s;
  const auto before = w.window();
  world_step(w, s, Action::kMove);
  const auto after = w.window();
  EXPECT_DOUBLE_EQ(after[0], before[1]);
  EXPECT_DOUBLE_EQ(after[1], before[2]);
}

TEST(FishWorld, TwentyMovesStarveAndDeadFishCannotStep) {
  FishWorld w;
  w.tape_offset = 1;
  FishState s;
  for (int i = 0; i < 20; ++i) world_step(w, s, Action::kMove);
  EXPECT_NEAR(s.energy, 0.0, 1e-12);
  s.energy = 0.0;
  EXPECT_FALSE(s.alive());
  EXPECT_THROW(world_step(w, s, Action::kMove), nn::UsageError);
}

TEST(FishPFC, KernelsMatchDesign) {
  const FishPFC pfc;
  EXPECT_EQ(pfc.kernels()[0].values(), (std::vector<double>{1, 0, -1, 1, 0}));
  EXPECT_EQ(pfc.kernels()[1].values(), (std::vector<double>{0, 1, -1, 0, 1}));
  EXPECT_EQ(pfc.kernels()[2].values(), (std::vector<double>{-1, -1, 0, 0, 1}));
}

TEST(FishPFC, WorkedExamples) {
  const FishPFC pfc;
  const double off = sa(-0.5);
  EXPECT_TRUE(judged_true(verdict_for(pfc, 1, off, 0.2, Action::kEat)));
  EXPECT_TRUE(judged_true(verdict_for(pfc, off, off, 0.5, Action::kMove)));
  EXPECT_FALSE(judged_true(verdict_for(pfc, 1, off, 0.2, Action::kMove)));
}

TEST(FishPFC, ConsistencyGrid) {
  const FishPFC pfc;
  const double off = sa(-0.5);
  struct Scenario {
    const char* name;
    double fh, ft;
    Action correct;
  };
  const Scenario grid[] = {{"food-here", 1, off, Action::kEat},
                           {"food-there", off, 1, Action::kMove},
                           {"no-food", off, off, Action::kMove}};
  // Hungry means any energy from 0.2 up to a full belly.
  for (int i = 4; i <= 20; ++i) {
    const double F = i * 0.05;
    for (const auto& sc : grid) {
      for (Action a : {Action::kEat, Action::kMove}) {
        EXPECT_EQ(judged_true(verdict_for(pfc, sc.fh, sc.ft, F, a)), a == sc.correct)
            << sc.name << " / " << action_name(a) << " at F=" << F;
      }
    }
  }
}

TEST(FishPFC, AnyActiveNeuronReadsTrue) {
  const FishPFC pfc;
  const auto& threshold = pfc.settings().activity_threshold;
  // All three v1 neurons below threshold -> F_neg.
  auto v0 = Tensor::vector({0.04, 0.04, 0.5, 0.5, 0.5});
  EXPECT_FALSE(judged_true(pfc.judge(v0)));
  EXPECT_GT(threshold, 0.0);
  // One neuron comfortably active -> T.
  auto v0b = Tensor::vector({0.04, 0.04, 0.5, 0.0, 1.7});
  EXPECT_TRUE(judged_true(pfc.judge(v0b)));
}

TEST(DecisionMemory, SumsLastEntries) {
  DecisionMemory mem(3);
  std::vector<std::array<double, 2>> pushed;
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const std::array<double, 2> v{rng.normal(), rng.normal()};
    pushed.push_back(v);
    mem.push(Tensor::vector({v[0], v[1]}));
    EXPECT_LE(mem.size(), 3u);
    double a = 0, b = 0;
    for (std::size_t k = pushed.size() - std::min<std::size_t>(pushed.size(), 3); k < pushed.size(); ++k) {
      a += pushed[k][0];
      b += pushed[k][1];
    }
    const auto z = mem.z();
    EXPECT_NEAR(z[0], a, 1e-12);
    EXPECT_NEAR(z[1], b, 1e-12);
  }
  EXPECT_THROW(DecisionMemory(0), nn::UsageError);
}

TEST(FishEpisode, UntrainedSurvivesLongRuns) {
  const FishNN net;
  const FishPFC pfc;
  FishRunSettings rs;
  rs.keep_trace = false;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ep = run_episode(net, pfc, 100000, seed, rs);
    EXPECT_FALSE(ep.died);
    EXPECT_GT(ep.min_energy, 0.0);
  }
}

TEST(FishEpisode, ZeroStepsAndDeterminism) {
  const FishNN net;
  const FishPFC pfc;
  EXPECT_TRUE(run_episode(net, pfc, 0, 1).trace.empty());
  const auto a = run_episode(net, pfc, 300, 7);
  const auto b = run_episode(net, pfc, 300, 7);
  std::ostringstream sa, sb;
  write_trace_csv(sa, a.trace);
  write_trace_csv(sb, b.trace);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.trace.size(), 300u);
  EXPECT_EQ(sa.str().substr(0, sa.str().find('\n')), "step,F,food_here,food_there,action,judge");
}

TEST(FishTrain, ZeroStepsLeavesWeights) {
  FishNN net;
  const auto before = net.action_weight().values();
  FishTrainSettings ts;
  ts.steps = 0;
  srd_train(net, FishPFC{}, 0, ts);
  EXPECT_EQ(net.action_weight().values(), before);
}

TEST(FishTrain, OnlyActionLayerMoves) {
  FishNN net;
  const FishPFC pfc;
  FishTrainSettings ts;
  ts.steps = 200;
  srd_train(net, pfc, 0, ts);
  EXPECT_EQ(net.fh_kernel().values(), (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(net.ft_kernel().values(), (std::vector<double>{0, 1, 1}));
  EXPECT_EQ(pfc.kernels()[0].values(), (std::vector<double>{1, 0, -1, 1, 0}));
  EXPECT_NE(net.action_weight().values(), FishNN{}.action_weight().values());
}

TEST(FishTrain, TrainedFishEatsWhenHalfFull) {
  FishNN net;
  const FishPFC pfc;
  srd_train(net, pfc, 0);
  const double off = sa(-0.5);
  EXPECT_EQ(net.decide(scalar(1), scalar(off), 0.5).action, Action::kEat);
  EXPECT_EQ(net.decide(scalar(off), scalar(1), 0.5).action, Action::kMove);
  EXPECT_EQ(net.decide(scalar(off), scalar(off), 0.2).action, Action::kMove);
  const auto before = run_episode(FishNN{}, pfc, 5000, 0);
  const auto after = run_episode(net, pfc, 5000, 0);
  EXPECT_GT(after.mean_energy, before.mean_energy);
  EXPECT_FALSE(after.died);
}

TEST(FishParams, SaveLoadRoundTrip) {
  FishNN net;
  srd_train(net, FishPFC{}, 3, {.steps = 300});
  const auto text = nn::params_to_json(net.params());
  FishNN fresh;
  fresh.load(nn::params_from_json(text));
  EXPECT_EQ(fresh.action_weight().values(), net.action_weight().values());
  EXPECT_EQ(fresh.action_bias().values(), net.action_bias().values());
}
