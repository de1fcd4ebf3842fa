#pragma once

// Robot2NN: tile detectors, the unknown mask, DeconvSeq score fields, plan
// making by imagination, the imagination loss, and evaluation.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "srd/lavaland/map.hpp"
#include "srd/nn/layers.hpp"
#include "srd/nn/params_io.hpp"

namespace srd::lavaland {

inline constexpr std::size_t kSeqTypes = 4;
inline constexpr std::size_t kSeqLayers = 5;
inline constexpr std::array<const char*, kSeqTypes> kSeqNames{"target", "self", "grass", "dirt"};
enum Seq : std::size_t { kSeqTarget = 0, kSeqSelf = 1, kSeqGrass = 2, kSeqDirt = 3 };

inline nn::Tensor initial_kernel() {
  return nn::Tensor::from({0.1, 0.1, 0.1, 0.1, 1.0, 0.1, 0.1, 0.1, 0.1}, {3, 3}, true);
}

struct Robot2NNParams {
  std::array<std::array<nn::Tensor, kSeqLayers>, kSeqTypes> kernels;

  Robot2NNParams() {
    for (auto& seq : kernels) {
      for (auto& k : seq) k = initial_kernel();
    }
  }

  Robot2NNParams clone() const {
    Robot2NNParams out;
    for (std::size_t s = 0; s < kSeqTypes; ++s) {
      for (std::size_t l = 0; l < kSeqLayers; ++l) {
        out.kernels[s][l].mutable_values() = kernels[s][l].values();
      }
    }
    return out;
  }

  std::vector<nn::Tensor> trainable() const {
    std::vector<nn::Tensor> out;
    for (const auto& seq : kernels) out.insert(out.end(), seq.begin(), seq.end());
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : trainable()) n += t.size();
    return n;
  }

  static std::string name(std::size_t seq, std::size_t layer) {
    return std::string(kSeqNames[seq]) + "." + std::to_string(layer);
  }

  nn::ParamSet params() const {
    nn::ParamSet out;
    for (std::size_t s = 0; s < kSeqTypes; ++s) {
      for (std::size_t l = 0; l < kSeqLayers; ++l) out.emplace(name(s, l), kernels[s][l]);
    }
    return out;
  }

  void load(const nn::ParamSet& src) {
    auto mine = params();
    nn::assign_params(mine, src);
  }
};

// How the favourability field that weighs grass and dirt is built.
enum class FavourMode {
  kLiteral,  // (w_target - w_self) on raw detector grids
  kSpread,   // the same difference after each field's DeconvSeq
};

// How the imagination loss scales each v_plan to unit magnitude.
enum class PlanNorm {
  kPerPlan,       // v_i / |v_i|
  kMaxOverPlans,  // v_i / max_j |v_j|
  kBoardMax,      // v_i / v0
};

struct RobotSettings {
  RobotPreferences prefs;
  double epsilon = nn::kDefaultEpsilon;
  double recognition_threshold = 1e-4;
  double departed_factor = -0.9;  // departed tile <- departed_factor * v0
  int max_steps = 36;
  int n_plans = 4;
  double top_choice_odds = 0.9;
  FavourMode favour = FavourMode::kLiteral;
  PlanNorm plan_norm = PlanNorm::kPerPlan;
};

// w_t = sigma_sa(mean over RGB of (x - t)^2) per tile.
inline nn::Tensor get_aba(const TileMap& map, const Rgb& t, double epsilon = nn::kDefaultEpsilon) {
  const auto x = map.rgb();
  std::vector<double> w(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    double m = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = x[i * 3 + c] - t[c];
      m += d * d;
    }
    m /= 3.0;
    w[i] = epsilon / (m * m + epsilon);
  }
  return nn::Tensor::from(std::move(w), {static_cast<std::size_t>(map.height),
                                          static_cast<std::size_t>(map.width)});
}

// 1 wherever none of the named detectors recognizes the tile.
inline nn::Tensor unknown_mask(const std::vector<nn::Tensor>& detectors, double threshold = 1e-4) {
  if (detectors.empty()) throw nn::DimensionError("unknown_mask needs at least one detector");
  std::vector<double> out(detectors.front().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (const auto& d : detectors) s += d[i];
    out[i] = (1.0 - s) > threshold ? 1.0 : 0.0;
  }
  return nn::Tensor::from(std::move(out), detectors.front().shape());
}

// Five rounds of deconv -> tanh -> divide by max-abs (divisor frozen).
inline nn::Tensor deconv_seq(const std::array<nn::Tensor, kSeqLayers>& seq, const nn::Tensor& grid) {
  nn::Tensor g = grid;
  for (const auto& k : seq) g = nn::normalize_max_abs(nn::tanh(nn::deconv3x3(g, k)));
  return g;
}

struct ScoreField {
  nn::Tensor w_target, w_grass, w_dirt, w_self;
  nn::Tensor w_unknown;
  std::array<nn::Tensor, kSeqTypes> v1;
  nn::Tensor v_sum;  // H x W, carries gradient to the kernels
};

inline ScoreField tile_scores(const TileMap& map, const Robot2NNParams& params,
                              const RobotSettings& s) {
  ScoreField f;
  f.w_target = get_aba(map, kTargetRgb, s.epsilon);
  f.w_grass = get_aba(map, kGrassRgb, s.epsilon);
  f.w_dirt = get_aba(map, kDirtRgb, s.epsilon);
  f.w_self = nn::Tensor::zeros(f.w_target.shape());
  f.w_self.mutable_values()[map.index(map.spawn)] = 1.0;
  f.w_unknown = unknown_mask({f.w_target, f.w_grass, f.w_dirt}, s.recognition_threshold);

  const auto& P = s.prefs;
  const auto ds_target = deconv_seq(params.kernels[kSeqTarget], f.w_target);
  const auto ds_self = deconv_seq(params.kernels[kSeqSelf], f.w_self);
  const nn::Tensor favour = s.favour == FavourMode::kLiteral ? nn::sub(f.w_target, f.w_self)
                                                             : nn::sub(ds_target, ds_self);
  f.v1[kSeqTarget] = nn::scale(ds_target, P.p_target);
  f.v1[kSeqSelf] = nn::scale(ds_self, P.p_self);
  f.v1[kSeqGrass] =
      nn::scale(deconv_seq(params.kernels[kSeqGrass], nn::mul(favour, f.w_grass)), P.p_grass);
  f.v1[kSeqDirt] =
      nn::scale(deconv_seq(params.kernels[kSeqDirt], nn::mul(favour, f.w_dirt)), P.p_dirt);
  f.v_sum = nn::add(nn::add(f.v1[0], f.v1[1]), nn::add(f.v1[2], f.v1[3]));
  return f;
}

// v_sum with the target pinned to v0, the origin to -v0 and unknown tiles to
// -u_a * v0. v0 = max|v_sum| is a constant.
struct PlanBoard {
  nn::Tensor values;
  double v0 = 0.0;
};

inline PlanBoard plan_board(const TileMap& map, const ScoreField& f, const RobotSettings& s) {
  PlanBoard b;
  b.v0 = nn::max_abs(f.v_sum);
  std::vector<std::size_t> idx{map.index(map.target), map.index(map.spawn)};
  std::vector<double> val{b.v0, -b.v0};
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (f.w_unknown[i] != 0.0 && i != idx[0] && i != idx[1]) {
      idx.push_back(i);
      val.push_back(-s.prefs.unknown_avoidance * b.v0);
    }
  }
  b.values = nn::assign_constant(f.v_sum, idx, val);
  return b;
}

struct PlanRecord {
  std::vector<Pos> trajectory;
  nn::Tensor v_plan;  // scalar; differentiable where the visited values are
  bool reached = false;
  std::size_t steps() const { return trajectory.size(); }
};

inline PlanRecord make_plan(const TileMap& map, const PlanBoard& board, const RobotSettings& s,
                            Rng& rng) {
  if (map.height * map.width < 2) throw ConfigError("plan on a map with fewer than two cells");
  std::vector<double> live = board.values.values();
  std::vector<char> overwritten(map.size(), 0);
  std::vector<std::size_t> fresh;
  double constant = 0.0;
  PlanRecord plan;
  Pos pos = map.spawn;
  static constexpr std::array<std::array<int, 2>, 4> kMoves{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
  for (int step = 0; step < s.max_steps; ++step) {
    std::array<std::pair<double, Pos>, 4> nb;
    std::size_t n = 0;
    for (const auto& [dr, dc] : kMoves) {
      const Pos q{pos.row + dr, pos.col + dc};
      if (q.row < 0 || q.row >= map.height || q.col < 0 || q.col >= map.width) continue;
      nb[n++] = {live[map.index(q)], q};
    }
    std::stable_sort(nb.begin(), nb.begin() + static_cast<long>(n),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const bool take_first = n == 1 || rng.uniform() < s.top_choice_odds;
    const Pos next = take_first ? nb[0].second : nb[1].second;
    const std::size_t here = map.index(pos);
    live[here] = s.departed_factor * board.v0;
    overwritten[here] = 1;
    pos = next;
    plan.trajectory.push_back(pos);
    const std::size_t at = map.index(pos);
    if (overwritten[at]) {
      constant += live[at];
    } else {
      fresh.push_back(at);
    }
    if (pos == map.target) {
      plan.reached = true;
      break;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(plan.trajectory.size());
  nn::Tensor total = fresh.empty() ? nn::Tensor::scalar(0.0) : nn::sum(nn::gather(board.values, fresh));
  plan.v_plan = nn::scale(nn::add_scalar(total, constant), inv_n);
  return plan;
}

struct Imagination {
  std::vector<PlanRecord> plans;
  std::size_t executed = 0;
  const PlanRecord& executed_plan() const { return plans.at(executed); }
};

inline Imagination imagine_and_act(const TileMap& map, const PlanBoard& board,
                                   const RobotSettings& s, Rng& rng) {
  if (s.n_plans < 1) throw ConfigError("n_plans must be at least 1");
  Imagination out;
  for (int i = 0; i < s.n_plans; ++i) out.plans.push_back(make_plan(map, board, s, rng));
  for (std::size_t i = 1; i < out.plans.size(); ++i) {
    if (out.plans[i].v_plan.item() > out.plans[out.executed].v_plan.item()) out.executed = i;
  }
  return out;
}

// Imagination loss over every imagined plan; the normalizers are constants.
inline std::optional<nn::Tensor> imagination_loss(const std::vector<PlanRecord>& plans,
                                                  PlanNorm norm, double v0) {
  double shared = 0.0;
  for (const auto& p : plans) shared = std::max(shared, std::abs(p.v_plan.item()));
  if (norm == PlanNorm::kBoardMax) shared = v0;
  if (shared == 0.0) return std::nullopt;
  std::vector<nn::Tensor> terms;
  for (const auto& p : plans) {
    const double c = norm == PlanNorm::kPerPlan ? std::abs(p.v_plan.item()) : shared;
    if (c == 0.0) continue;
    const auto miss = nn::add_scalar(nn::scale(nn::tanh(nn::scale(p.v_plan, 1.0 / c)), -1.0), 1.0);
    terms.push_back(nn::square(miss));
  }
  return nn::sum(nn::concat(terms));
}

// Per-map random stream for plan sampling.
inline Rng plan_rng(std::uint64_t seed, std::size_t map_index) { return Rng(seed).split(map_index); }

struct TrainSettings {
  double learning_rate = 1e-4;
  int epochs = 1;
};

struct TrainReport {
  std::size_t maps = 0;
  std::size_t updates = 0;
  double mean_loss = 0.0;
};

inline TrainReport srd_train_lavaland(Robot2NNParams& params, const MapBank& bank,
                                      const RobotSettings& s, const TrainSettings& t,
                                      std::uint64_t seed) {
  TrainReport rep;
  const nn::SgdSettings sgd(t.learning_rate);
  auto trainable = params.trainable();
  double loss_total = 0.0;
  for (int e = 0; e < t.epochs; ++e) {
    for (std::size_t i = 0; i < bank.maps.size(); ++i) {
      const auto& map = bank.maps[i];
      Rng rng = plan_rng(seed, i + static_cast<std::size_t>(e) * bank.maps.size());
      const auto field = tile_scores(map, params, s);
      const auto board = plan_board(map, field, s);
      const auto im = imagine_and_act(map, board, s, rng);
      ++rep.maps;
      const auto loss = imagination_loss(im.plans, s.plan_norm, board.v0);
      if (!loss) continue;
      nn::backward(*loss);
      nn::sgd_step(trainable, sgd);
      loss_total += loss->item();
      ++rep.updates;
    }
  }
  rep.mean_loss = rep.updates ? loss_total / static_cast<double>(rep.updates) : 0.0;
  return rep;
}

struct EpisodeOutcome {
  bool reached = false;
  std::size_t steps = 0;
  std::size_t grass = 0, dirt = 0, lava = 0;
  std::vector<Pos> trajectory;
};

inline EpisodeOutcome run_lavaland_episode(const TileMap& map, const Robot2NNParams& params,
                                           const RobotSettings& s, Rng& rng) {
  nn::NoGradGuard no_grad;
  const auto field = tile_scores(map, params, s);
  const auto board = plan_board(map, field, s);
  const auto im = imagine_and_act(map, board, s, rng);
  const auto& plan = im.executed_plan();
  EpisodeOutcome out;
  out.reached = plan.reached;
  out.steps = plan.steps();
  out.trajectory = plan.trajectory;
  for (const auto& p : plan.trajectory) {
    switch (map.at(p)) {
      case Tile::kGrass: ++out.grass; break;
      case Tile::kDirt: ++out.dirt; break;
      case Tile::kLava: ++out.lava; break;
      case Tile::kTarget: break;
    }
  }
  return out;
}

struct EvaluationReport {
  std::size_t maps = 0;
  std::size_t reached = 0;
  double accuracy = 0.0;
  double mean_lava = 0.0;
  double mean_grass = 0.0;
  double mean_dirt = 0.0;
  // counts[k] = maps whose executed plan crossed exactly k tiles of the type
  std::vector<std::size_t> grass_hist, dirt_hist, lava_hist;
  std::vector<EpisodeOutcome> episodes;
};

// Maps are independent, so `jobs` workers split the bank; each map draws
// from its own stream and results do not depend on the worker count.
inline EvaluationReport evaluate(const Robot2NNParams& params, const MapBank& bank,
                                 const RobotSettings& s, std::uint64_t seed, unsigned jobs = 1) {
  if (bank.maps.empty()) throw ConfigError("cannot evaluate on an empty map bank");
  EvaluationReport rep;
  rep.maps = bank.maps.size();
  rep.episodes.resize(rep.maps);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < rep.maps; i += stride) {
      Rng rng = plan_rng(seed, i);
      rep.episodes[i] = run_lavaland_episode(bank.maps[i], params, s, rng);
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(rep.maps)));
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(work, j, jobs);
    for (auto& th : pool) th.join();
  }
  auto bump = [](std::vector<std::size_t>& h, std::size_t k) {
    if (h.size() <= k) h.resize(k + 1, 0);
    ++h[k];
  };
  for (const auto& e : rep.episodes) {
    rep.reached += e.reached ? 1 : 0;
    rep.mean_grass += static_cast<double>(e.grass);
    rep.mean_dirt += static_cast<double>(e.dirt);
    rep.mean_lava += static_cast<double>(e.lava);
    bump(rep.grass_hist, e.grass);
    bump(rep.dirt_hist, e.dirt);
    bump(rep.lava_hist, e.lava);
  }
  const double n = static_cast<double>(rep.maps);
  rep.accuracy = static_cast<double>(rep.reached) / n;
  rep.mean_grass /= n;
  rep.mean_dirt /= n;
  rep.mean_lava /= n;
  return rep;
}

struct KernelEntry {
  std::size_t seq, layer, row, col;
  double value;
  bool center_dominant;
};

// All 180 values, flagged per kernel by whether |center| is the largest
// magnitude in it.
inline std::vector<KernelEntry> inspect_kernels(const Robot2NNParams& params) {
  std::vector<KernelEntry> out;
  for (std::size_t s = 0; s < kSeqTypes; ++s) {
    for (std::size_t l = 0; l < kSeqLayers; ++l) {
      const auto& v = params.kernels[s][l].values();
      bool dominant = true;
      for (std::size_t i = 0; i < 9; ++i) {
        if (i != 4 && std::abs(v[i]) > std::abs(v[4])) dominant = false;
      }
      for (std::size_t i = 0; i < 9; ++i) out.push_back({s, l, i / 3, i % 3, v[i], dominant});
    }
  }
  return out;
}

inline bool all_centers_dominant(const Robot2NNParams& params) {
  for (const auto& e : inspect_kernels(params)) {
    if (!e.center_dominant) return false;
  }
  return true;
}

}  // namespace srd::lavaland
