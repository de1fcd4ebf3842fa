#pragma once

// The auction server: poll active agents, branch on demand versus stock,
// move the price, and record purchases. Plus the trial and experiment
// harness around it.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "srd/auction/fsn.hpp"
#include "srd/util/errors.hpp"

namespace srd::auction {

enum class AgentStatus { kActive, kBought, kQuit };

struct Agent {
  FsnModel model;
  AgentStatus status = AgentStatus::kActive;
  bool malicious = false;
  Rng noise{0};
};

struct Purchase {
  std::size_t agent;
  double price;
  int k;
};

struct ServerSettings {
  double alpha = 0.05;  // price *= 1 +- alpha
  int max_iterations = 64;
  int optim_iterations = 4;  // SRD only while k < this
  bool optim = false;
};

enum class Termination { kRunning, kSoldOut, kNoActiveAgents, kIterationLimit };

struct AuctionState {
  int k = 0;
  std::size_t stock = 0;
  std::size_t remaining = 0;  // N_a
  FishVector offer;
  std::vector<Agent> agents;
  std::vector<Purchase> ledger;
  std::vector<FishVector> variants;  // SRD data set
  Termination termination = Termination::kRunning;

  bool terminated() const { return termination != Termination::kRunning; }
  std::size_t active_count() const {
    return static_cast<std::size_t>(std::count_if(agents.begin(), agents.end(), [](const Agent& a) {
      return a.status == AgentStatus::kActive;
    }));
  }
};

struct StepReport {
  std::size_t active_before = 0;
  std::size_t buys = 0;
  std::size_t holds = 0;
  std::size_t quits = 0;
  bool sold = false;
};

inline StepReport server_step(AuctionState& st, const ServerSettings& s) {
  if (st.terminated()) throw nn::UsageError("server_step on a terminated auction");
  StepReport rep;
  if (s.optim && st.k < s.optim_iterations) {
    for (auto& a : st.agents) {
      if (a.status == AgentStatus::kActive && !a.malicious) srd_finetune(a.model, st.variants, a.noise);
    }
  }
  std::vector<std::size_t> buyers;
  for (std::size_t i = 0; i < st.agents.size(); ++i) {
    auto& a = st.agents[i];
    if (a.status != AgentStatus::kActive) continue;
    ++rep.active_before;
    switch (a.model.decide(st.offer, &a.noise)) {
      case Decision::kBuy: buyers.push_back(i); break;
      case Decision::kHold: ++rep.holds; break;
      case Decision::kQuit:
        a.status = AgentStatus::kQuit;
        ++rep.quits;
        break;
    }
  }
  rep.buys = buyers.size();
  auto purchase = [&] {
    for (std::size_t i : buyers) {
      st.agents[i].status = AgentStatus::kBought;
      st.ledger.push_back({i, st.offer.price(), st.k});
    }
    st.remaining -= buyers.size();
    rep.sold = !buyers.empty();
  };
  if (rep.buys > st.remaining) {
    st.offer.price() *= 1.0 + s.alpha;
  } else if (rep.buys < st.remaining) {
    purchase();
    st.offer.price() *= 1.0 - s.alpha;
  } else {
    purchase();
  }
  st.offer.f() = rep.active_before ? static_cast<double>(rep.buys) / static_cast<double>(rep.active_before) : 0.0;
  ++st.k;
  if (st.remaining == 0) {
    st.termination = Termination::kSoldOut;
  } else if (st.active_count() == 0) {
    st.termination = Termination::kNoActiveAgents;
  } else if (st.k >= s.max_iterations) {
    st.termination = Termination::kIterationLimit;
  }
  return rep;
}

struct AuctionConfig {
  double r = 0.25;
  std::size_t n = 64;
  double malicious_frac = 0.0;
  double intent_spread = 0.1;  // decision biases + U[-spread, spread]
  std::size_t variants = 16;
  ServerSettings server;
  FsnDesign design;
  bool allow_flagged = false;  // admit screener-flagged models
  VariantSettings variant_settings;
};

struct TrialResult {
  double r = 0.0;
  std::size_t available = 0;
  std::vector<double> prices;
  double purchase_rate = 0.0;
  int iterations = 0;
  Termination termination = Termination::kRunning;
  std::vector<Purchase> ledger;
  std::vector<Agent> agents;
};

inline std::size_t malicious_count(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::lround(frac * static_cast<double>(n)));
}

// Every draw comes from a stream of `seed`: agent i's intent and optimizer
// settings from split(i), its decision noise from another split, so honest
// agents match across runs that differ only in the malicious fraction.
inline AuctionState make_auction(const AuctionConfig& c, std::uint64_t seed) {
  if (!(c.r > 0.0) || c.r > 1.0) throw ConfigError("item supply r must lie in (0, 1]");
  if (!(c.malicious_frac >= 0.0 && c.malicious_frac <= 1.0)) {
    throw ConfigError("malicious fraction must lie in [0, 1]");
  }
  if (c.n == 0) throw ConfigError("an auction needs at least one participant");
  const Rng root(seed);
  AuctionState st;
  st.stock = st.remaining = static_cast<std::size_t>(std::lround(c.r * static_cast<double>(c.n)));
  if (st.stock == 0) throw ConfigError("r * n rounds to zero fish on sale");
  st.offer = base_offer();
  st.variants = make_offer_variants(base_offer(), c.variants, root.split(3).next_u64(), c.variant_settings);

  std::vector<std::size_t> order(c.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng pick = root.split(2);
  for (std::size_t i = c.n - 1; i > 0; --i) std::swap(order[i], order[pick.index(i + 1)]);
  std::vector<char> bad(c.n, 0);
  for (std::size_t k = 0; k < malicious_count(c.malicious_frac, c.n); ++k) bad[order[k]] = 1;

  const Rng agents_root = root.split(0), noise_root = root.split(1);
  st.agents.reserve(c.n);
  for (std::size_t i = 0; i < c.n; ++i) {
    Rng rng = agents_root.split(i);
    Agent a{bad[i] ? FsnModel::always_hold(c.design) : FsnModel(c.design), AgentStatus::kActive,
            bad[i] != 0, noise_root.split(i)};
    if (!a.malicious) {
      a.model.perturb_intent(rng, c.intent_spread);
      a.model.optim() = OptimSettings::sample(rng);
    }
    if (!screen(a.model).admitted && !c.allow_flagged) {
      throw ConfigError("screener rejected agent " + std::to_string(i) + ": " + screen(a.model).reason);
    }
    st.agents.push_back(std::move(a));
  }
  return st;
}

inline TrialResult run_auction(const AuctionConfig& c, std::uint64_t seed) {
  AuctionConfig cfg = c;
  cfg.allow_flagged = c.allow_flagged || c.malicious_frac > 0.0;
  AuctionState st = make_auction(cfg, seed);
  while (!st.terminated()) server_step(st, c.server);
  TrialResult out;
  out.r = c.r;
  out.available = st.stock;
  for (const auto& p : st.ledger) out.prices.push_back(p.price);
  out.purchase_rate = static_cast<double>(st.ledger.size()) / static_cast<double>(st.stock);
  out.iterations = st.k;
  out.termination = st.termination;
  out.ledger = std::move(st.ledger);
  out.agents = std::move(st.agents);
  return out;
}

enum class Condition { kNoOptim, kOptim, kMaliciousOptim, kMaliciousNoOptim };

inline const char* condition_name(Condition c) {
  switch (c) {
    case Condition::kNoOptim: return "noOptim";
    case Condition::kOptim: return "Optim";
    case Condition::kMaliciousOptim: return "malicious-Optim";
    case Condition::kMaliciousNoOptim: return "malicious-noOptim";
  }
  return "?";
}

inline Condition parse_condition(const std::string& s) {
  for (Condition c : {Condition::kNoOptim, Condition::kOptim, Condition::kMaliciousOptim,
                      Condition::kMaliciousNoOptim}) {
    if (s == condition_name(c)) return c;
  }
  throw ConfigError("unknown auction condition '" + s + "'");
}

inline bool is_malicious(Condition c) {
  return c == Condition::kMaliciousOptim || c == Condition::kMaliciousNoOptim;
}
inline bool is_optim(Condition c) { return c == Condition::kOptim || c == Condition::kMaliciousOptim; }

// "start:stop:count", evenly spaced and inclusive.
inline std::vector<double> parse_grid(const std::string& text) {
  double a = 0, b = 0;
  int n = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%d%c", &a, &b, &n, &tail) != 3 || n < 1) {
    throw ConfigError("grid must look like start:stop:count, got '" + text + "'");
  }
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return out;
}

struct ExperimentConfig {
  std::vector<double> r_grid = parse_grid("0.0625:0.5:8");
  int trials = 10;
  std::vector<Condition> conditions{Condition::kOptim};
  double malicious_frac = 0.5;  // used by the malicious conditions
  AuctionConfig auction;
};

struct CellSummary {
  Condition condition;
  double r;
  std::size_t purchases = 0;
  std::size_t available = 0;
  double mean_price = std::nan("");
  double purchase_rate = 0.0;
};

struct ExperimentResult {
  struct Trial {
    Condition condition;
    std::size_t r_index;
    int trial;
    TrialResult result;
  };
  std::vector<Trial> trials;
  std::vector<CellSummary> cells;

  const CellSummary& cell(Condition c, std::size_t r_index) const {
    std::size_t seen = 0;
    for (const auto& s : cells) {
      if (s.condition == c && seen++ == r_index) return s;
    }
    throw nn::UsageError("no such experiment cell");
  }
};

// Trial t at grid point j uses the same seed in every condition.
inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t r_index, int trial) {
  return Rng(seed).split(r_index).split(static_cast<std::uint64_t>(trial)).next_u64();
}

inline ExperimentResult run_experiment(const ExperimentConfig& x, std::uint64_t seed, unsigned jobs = 1,
                                       bool keep_agents = false) {
  if (x.trials < 1) throw ConfigError("trials must be at least 1");
  if (x.r_grid.empty()) throw ConfigError("empty r grid");
  ExperimentResult out;
  for (Condition c : x.conditions) {
    for (std::size_t j = 0; j < x.r_grid.size(); ++j) {
      for (int t = 0; t < x.trials; ++t) out.trials.push_back({c, j, t, {}});
    }
  }
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < out.trials.size(); i += stride) {
      auto& tr = out.trials[i];
      AuctionConfig cfg = x.auction;
      cfg.r = x.r_grid[tr.r_index];
      cfg.server.optim = is_optim(tr.condition);
      cfg.malicious_frac = is_malicious(tr.condition) ? x.malicious_frac : 0.0;
      tr.result = run_auction(cfg, trial_seed(seed, tr.r_index, tr.trial));
      if (!keep_agents) tr.result.agents.clear();
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(out.trials.size())));
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(work, j, jobs);
    for (auto& th : pool) th.join();
  }
  for (Condition c : x.conditions) {
    for (std::size_t j = 0; j < x.r_grid.size(); ++j) {
      CellSummary s{c, x.r_grid[j]};
      double total = 0.0;
      for (const auto& tr : out.trials) {
        if (tr.condition != c || tr.r_index != j) continue;
        s.purchases += tr.result.prices.size();
        s.available += tr.result.available;
        for (double p : tr.result.prices) total += p;
      }
      if (s.purchases) s.mean_price = total / static_cast<double>(s.purchases);
      s.purchase_rate = static_cast<double>(s.purchases) / static_cast<double>(s.available);
      out.cells.push_back(s);
    }
  }
  return out;
}

inline std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// One row per purchase; a trial without purchases still gets one row with
// an empty price so its purchase rate is recorded.
inline void write_results_csv(std::ostream& os, const ExperimentResult& res) {
  os << "condition,r,trial,price,purchase_rate\n";
  for (const auto& tr : res.trials) {
    const auto head = std::string(condition_name(tr.condition)) + "," + fmt(tr.result.r) + "," +
                      std::to_string(tr.trial) + ",";
    const auto rate = fmt(tr.result.purchase_rate);
    if (tr.result.prices.empty()) os << head << "," << rate << "\n";
    for (double p : tr.result.prices) os << head << fmt(p) << "," << rate << "\n";
  }
}

inline void write_summary_csv(std::ostream& os, const ExperimentResult& res) {
  os << "condition,r,purchases,available,mean_price,purchase_rate\n";
  for (const auto& c : res.cells) {
    os << condition_name(c.condition) << "," << fmt(c.r) << "," << c.purchases << "," << c.available << ","
       << fmt(c.mean_price) << "," << fmt(c.purchase_rate) << "\n";
  }
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw nn::UsageError("spearman needs two equal series of length >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

}  // namespace srd::auction
