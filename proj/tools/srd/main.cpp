#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "srd/auction/server.hpp"
#include "srd/fish1d/episode.hpp"
#include "srd/lavaland/render.hpp"
#include "srd/util/report.hpp"

#ifndef SRD_VERSION
#define SRD_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using srd::ConfigError;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::string> argv;
  json overrides = json::object();
};

// Reads keys out of one config section; anything left over is an error.
struct Reader {
  const json& section;
  std::string name;
  std::set<std::string> seen;

  template <class T>
  void operator()(const char* key, T& dst) {
    seen.insert(key);
    if (!section.contains(key)) return;
    try {
      dst = section.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + name + "." + key + "' has the wrong type");
    }
  }

  void finish() const {
    for (const auto& [key, _] : section.items()) {
      if (!seen.count(key)) throw ConfigError("unknown config key '" + name + "." + key + "'");
    }
  }
};

struct Writer {
  ordered_json& out;
  template <class T>
  void operator()(const char* key, T& value) {
    out[key] = value;
  }
};

struct FishConfig {
  srd::fish1d::FishNNSettings nn;
  srd::fish1d::FishPFCSettings pfc;
  srd::fish1d::FishTrainSettings train;
};

template <class V>
void visit(V& v, FishConfig& c) {
  v("epsilon", c.nn.epsilon);
  v("delta", c.nn.delta);
  v("eat_food_weight", c.nn.eat_food_weight);
  v("eat_bias", c.nn.eat_bias);
  v("activity_threshold", c.pfc.activity_threshold);
  v("false_bias", c.pfc.false_bias);
  v("leak_slope", c.pfc.leak_slope);
  v("memory", c.train.memory);
  v("learning_rate", c.train.learning_rate);
  v("food_period", c.train.run.food_period);
  v("decay", c.train.run.world.decay);
  v("eat_energy", c.train.run.world.eat_energy);
}

struct AuctionCli {
  srd::auction::AuctionConfig a;
  double malicious_frac = 0.5;
};

template <class V>
void visit(V& v, AuctionCli& c) {
  auto& d = c.a.design;
  v("n", c.a.n);
  v("intent_spread", c.a.intent_spread);
  v("variants", c.a.variants);
  v("variant_scale", c.a.variant_settings.scale);
  v("flip_probability", c.a.variant_settings.flip_probability);
  v("alpha", c.a.server.alpha);
  v("max_iterations", c.a.server.max_iterations);
  v("optim_iterations", c.a.server.optim_iterations);
  v("delta", d.delta);
  v("base_price", d.base_price);
  v("d_ic", d.d_ic);
  v("clone_noise", d.clone_noise);
  v("epsilon", d.epsilon);
  v("buy_row", d.buy_row);
  v("hold_row", d.hold_row);
  v("quit_row", d.quit_row);
  v("decision_bias", d.decision_bias);
  v("pfc_sharpness", d.pfc_sharpness);
  v("true_bias", d.true_bias);
  v("false_bias", d.false_bias);
}

struct LavaConfig {
  srd::lavaland::MapSettings maps;
  srd::lavaland::RobotSettings robot;
  srd::lavaland::TrainSettings train;
  std::string favour = "literal";
  std::string plan_norm = "plan";
};

template <class V>
void visit(V& v, LavaConfig& c) {
  v("height", c.maps.height);
  v("width", c.maps.width);
  v("grass_fraction", c.maps.grass_fraction);
  v("lava_fraction", c.maps.lava_fraction);
  v("p_target", c.robot.prefs.p_target);
  v("p_self", c.robot.prefs.p_self);
  v("p_grass", c.robot.prefs.p_grass);
  v("p_dirt", c.robot.prefs.p_dirt);
  v("unknown_avoidance", c.robot.prefs.unknown_avoidance);
  v("epsilon", c.robot.epsilon);
  v("recognition_threshold", c.robot.recognition_threshold);
  v("departed_factor", c.robot.departed_factor);
  v("max_steps", c.robot.max_steps);
  v("n_plans", c.robot.n_plans);
  v("top_choice_odds", c.robot.top_choice_odds);
  v("favour", c.favour);
  v("plan_norm", c.plan_norm);
  v("learning_rate", c.train.learning_rate);
  v("epochs", c.train.epochs);
}

json section(const Globals& g, const char* name) {
  return g.overrides.contains(name) ? g.overrides.at(name) : json::object();
}

template <class C>
void apply(const Globals& g, const char* name, C& c) {
  const json s = section(g, name);
  if (!s.is_object()) throw ConfigError(std::string("config section '") + name + "' must be an object");
  Reader r{s, name, {}};
  visit(r, c);
  r.finish();
}

template <class C>
ordered_json snapshot(C c) {
  ordered_json j = ordered_json::object();
  Writer w{j};
  visit(w, c);
  return j;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void check(const FishConfig& c) {
  require(c.train.memory >= 1, "fish1d.memory must be at least 1");
  require(c.train.learning_rate >= 0, "fish1d.learning_rate must be non-negative");
  require(c.train.run.food_period >= 1, "fish1d.food_period must be at least 1");
  require(c.nn.epsilon > 0, "fish1d.epsilon must be positive");
}

void check(const AuctionCli& c) {
  require(c.a.server.alpha > 0 && c.a.server.alpha < 1, "auction.alpha must lie in (0, 1)");
  require(c.a.server.max_iterations >= 1, "auction.max_iterations must be at least 1");
  require(c.a.variants >= 1, "auction.variants must be at least 1");
  require(c.a.design.d_ic >= 1, "auction.d_ic must be at least 1");
  require(c.a.design.base_price > 0, "auction.base_price must be positive");
  require(c.malicious_frac >= 0 && c.malicious_frac <= 1, "--malicious-frac must lie in [0, 1]");
}

void check(LavaConfig& c) {
  using namespace srd::lavaland;
  require(c.maps.height >= 2 && c.maps.width >= 2, "lavaland maps must be at least 2x2");
  require(c.maps.grass_fraction >= 0 && c.maps.lava_fraction >= 0 &&
              c.maps.grass_fraction + c.maps.lava_fraction < 1,
          "lavaland grass and lava fractions must be non-negative and leave room for dirt");
  require(c.robot.max_steps >= 1, "lavaland.max_steps must be at least 1");
  require(c.robot.n_plans >= 1, "lavaland.n_plans must be at least 1");
  require(c.robot.top_choice_odds >= 0 && c.robot.top_choice_odds <= 1, "lavaland.top_choice_odds must lie in [0, 1]");
  require(c.train.learning_rate >= 0, "lavaland.learning_rate must be non-negative");
  require(c.train.epochs >= 0, "lavaland.epochs must be non-negative");
  if (c.favour == "literal") {
    c.robot.favour = FavourMode::kLiteral;
  } else if (c.favour == "spread") {
    c.robot.favour = FavourMode::kSpread;
  } else {
    throw ConfigError("lavaland.favour must be 'literal' or 'spread'");
  }
  if (c.plan_norm == "plan") {
    c.robot.plan_norm = PlanNorm::kPerPlan;
  } else if (c.plan_norm == "max") {
    c.robot.plan_norm = PlanNorm::kMaxOverPlans;
  } else if (c.plan_norm == "board") {
    c.robot.plan_norm = PlanNorm::kBoardMax;
  } else {
    throw ConfigError("lavaland.plan_norm must be 'plan', 'max' or 'board'");
  }
}

LavaConfig lava_config(const Globals& g, const std::string& preset) {
  const auto p = srd::lavaland::make_preset(preset);
  LavaConfig c;
  c.maps = p.maps;
  c.robot.prefs = p.prefs;
  apply(g, "lavaland", c);
  check(c);
  return c;
}

class Manifest {
 public:
  Manifest(const Globals& g, std::string scenario) : start_(std::chrono::steady_clock::now()) {
    m_.scenario = std::move(scenario);
    m_.seed = g.seed;
    m_.version = SRD_VERSION;
    m_.command = g.argv;
  }
  srd::report::RunManifest& get() { return m_; }
  void output(const fs::path& p) { m_.outputs.push_back(p.string()); }
  void write(const fs::path& path) {
    m_.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m_.write(path);
  }

 private:
  srd::report::RunManifest m_;
  std::chrono::steady_clock::time_point start_;
};

// File outputs get a sidecar manifest; directory outputs hold manifest.json.
fs::path sidecar(const fs::path& file) { return file.string() + ".manifest.json"; }

std::string need_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw ConfigError(std::string("--out is required (") + what + ")");
  return g.out;
}

// fish1d ----------------------------------------------------------------

int fish_run(const Globals& g, long steps, const std::string& trained) {
  using namespace srd::fish1d;
  require(steps >= 1, "--steps must be at least 1");
  FishConfig c;
  apply(g, "fish1d", c);
  check(c);
  FishNN net(c.nn);
  if (!trained.empty()) net.load(srd::nn::load_params(trained));
  const FishPFC pfc(c.pfc);
  const auto res = run_episode(net, pfc, steps, g.seed, c.train.run);
  std::cerr << "steps " << res.trace.size() << " died " << (res.died ? "yes" : "no") << " mean_F "
            << srd::auction::fmt(res.mean_energy) << " min_F " << srd::auction::fmt(res.min_energy)
            << " missed_meals " << res.missed_meals << "\n";
  if (g.out.empty()) {
    write_trace_csv(std::cout, res.trace);
    return 0;
  }
  const fs::path dir = g.out;
  Manifest man(g, "fish1d run");
  man.get().preset = trained.empty() ? "untrained" : "trained";
  auto cfg = snapshot(c);
  cfg["steps"] = steps;
  cfg["trained"] = trained;
  man.get().config = cfg;
  std::ostringstream csv;
  write_trace_csv(csv, res.trace);
  srd::report::write_text(dir / "trace.csv", csv.str());
  man.output(dir / "trace.csv");
  srd::report::PlotSpec plot{(dir / "trace.csv").string(), "step", "F", "", (dir / "energy.svg").string(),
                             "fish energy"};
  srd::report::emit_plot(plot);
  man.output(dir / "energy.svg");
  man.write(dir / "manifest.json");
  return 0;
}

int fish_train(const Globals& g, long iters) {
  using namespace srd::fish1d;
  require(iters >= 1, "--iters must be at least 1");
  const fs::path out = need_out(g, "parameter file");
  FishConfig c;
  apply(g, "fish1d", c);
  check(c);
  c.train.steps = iters;
  FishNN net(c.nn);
  const FishPFC pfc(c.pfc);
  Manifest man(g, "fish1d train");
  const auto rep = srd_train(net, pfc, g.seed, c.train);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  srd::nn::save_params(net.params(), out.string());
  std::cout << "updates " << rep.updates << " mean_loss " << srd::auction::fmt(rep.mean_loss) << " died "
            << (rep.died ? "yes" : "no") << "\n";
  auto cfg = snapshot(c);
  cfg["iters"] = iters;
  man.get().config = cfg;
  man.output(out);
  man.write(sidecar(out));
  return 0;
}

// auction ---------------------------------------------------------------

int auction_run(const Globals& g, const std::string& grid, int trials, bool optim, double malicious,
                const std::string& conditions, int snapshots) {
  using namespace srd::auction;
  const fs::path dir = need_out(g, "output directory");
  AuctionCli c;
  c.malicious_frac = malicious > 0 ? malicious : 0.5;
  apply(g, "auction", c);
  check(c);
  require(trials >= 1, "--trials must be at least 1");
  require(snapshots >= 0, "--snapshots must be non-negative");
  ExperimentConfig x;
  x.r_grid = parse_grid(grid);
  x.trials = trials;
  x.auction = c.a;
  x.malicious_frac = c.malicious_frac;
  if (!conditions.empty()) {
    x.conditions.clear();
    std::stringstream ss(conditions);
    std::string item;
    while (std::getline(ss, item, ',')) x.conditions.push_back(parse_condition(item));
    require(!x.conditions.empty(), "--conditions is empty");
  } else if (malicious > 0) {
    x.conditions = {optim ? Condition::kMaliciousOptim : Condition::kMaliciousNoOptim};
  } else {
    x.conditions = {optim ? Condition::kOptim : Condition::kNoOptim};
  }
  Manifest man(g, "auction run");
  const auto res = run_experiment(x, g.seed, g.jobs, snapshots > 0);

  std::ostringstream results, summary;
  write_results_csv(results, res);
  write_summary_csv(summary, res);
  srd::report::write_text(dir / "results.csv", results.str());
  srd::report::write_text(dir / "summary.csv", summary.str());
  man.output(dir / "results.csv");
  man.output(dir / "summary.csv");
  using srd::report::PlotSpec;
  srd::report::emit_plot(PlotSpec{(dir / "summary.csv").string(), "r", "mean_price", "condition",
                                  (dir / "price_vs_r.svg").string(), "mean purchase price"});
  srd::report::emit_plot(PlotSpec{(dir / "summary.csv").string(), "r", "purchase_rate", "condition",
                                  (dir / "rate_vs_r.svg").string(), "purchase rate"});
  man.output(dir / "price_vs_r.svg");
  man.output(dir / "rate_vs_r.svg");

  if (snapshots > 0) {
    for (const auto& tr : res.trials) {
      if (tr.trial >= snapshots) continue;
      char sub[64];
      std::snprintf(sub, sizeof sub, "r%02zu/trial%02d", tr.r_index, tr.trial);
      const fs::path base = dir / "params" / condition_name(tr.condition) / sub;
      fs::create_directories(base);
      for (std::size_t i = 0; i < tr.result.agents.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "agent%03zu.json", i);
        srd::nn::save_params(tr.result.agents[i].model.params(), (base / name).string());
      }
    }
    man.output(dir / "params");
  }

  ordered_json cfg = snapshot(c);
  cfg["r_grid"] = x.r_grid;
  cfg["trials"] = trials;
  cfg["malicious_frac"] = c.malicious_frac;
  std::vector<std::string> names;
  for (auto cond : x.conditions) names.emplace_back(condition_name(cond));
  cfg["conditions"] = names;
  cfg["snapshots"] = snapshots;
  man.get().config = cfg;
  man.write(dir / "manifest.json");

  for (auto cond : x.conditions) {
    std::vector<double> r, p;
    std::cout << condition_name(cond) << "\n";
    for (std::size_t j = 0; j < x.r_grid.size(); ++j) {
      const auto& cell = res.cell(cond, j);
      std::cout << "  r " << fmt(cell.r) << " mean_price " << (std::isnan(cell.mean_price) ? "-" : fmt(cell.mean_price))
                << " purchase_rate " << fmt(cell.purchase_rate) << "\n";
      if (!std::isnan(cell.mean_price)) {
        r.push_back(cell.r);
        p.push_back(cell.mean_price);
      }
    }
    if (r.size() >= 2) std::cout << "  spearman(r, price) " << fmt(spearman(r, p)) << "\n";
  }
  return 0;
}

// lavaland --------------------------------------------------------------

int lava_gen(const Globals& g, std::size_t count, const std::string& preset) {
  using namespace srd::lavaland;
  const fs::path out = need_out(g, "bank file");
  require(count >= 1, "--count must be at least 1");
  auto c = lava_config(g, preset);
  auto p = make_preset(preset);
  p.maps = c.maps;
  Manifest man(g, "lavaland gen");
  const auto bank = generate_maps(count, p, g.seed);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_bank(bank, out.string());
  man.get().preset = preset;
  auto cfg = snapshot(c);
  cfg["count"] = count;
  man.get().config = cfg;
  man.output(out);
  man.write(sidecar(out));
  std::cout << "wrote " << count << " " << preset << " maps to " << out.string() << "\n";
  return 0;
}

int lava_train(const Globals& g, const std::string& bank_path) {
  using namespace srd::lavaland;
  const fs::path out = need_out(g, "parameter file");
  const auto bank = load_bank(bank_path);
  auto c = lava_config(g, bank.preset);
  Manifest man(g, "lavaland train");
  Robot2NNParams params;
  const auto rep = srd_train_lavaland(params, bank, c.robot, c.train, g.seed);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  srd::nn::save_params(params.params(), out.string());
  std::cout << "maps " << rep.maps << " updates " << rep.updates << " mean_loss " << srd::auction::fmt(rep.mean_loss)
            << " centers_dominant " << (all_centers_dominant(params) ? "yes" : "no") << "\n";
  man.get().preset = bank.preset;
  auto cfg = snapshot(c);
  cfg["bank"] = bank_path;
  man.get().config = cfg;
  man.output(out);
  man.write(sidecar(out));
  return 0;
}

void write_kernels_csv(std::ostream& os, const std::vector<srd::lavaland::KernelEntry>& ks) {
  os << "seq,layer,row,col,value,center_dominant\n";
  for (const auto& k : ks) {
    os << srd::lavaland::kSeqNames[k.seq] << ',' << k.layer << ',' << k.row << ',' << k.col << ','
       << srd::auction::fmt(k.value) << ',' << (k.center_dominant ? 1 : 0) << '\n';
  }
}

int lava_eval(const Globals& g, const std::string& bank_path, const std::string& params_path,
              const std::string& report, int trajectories, int renders) {
  using namespace srd::lavaland;
  require(trajectories >= 0 && renders >= 0, "--trajectories and --renders must be non-negative");
  const fs::path dir = report;
  const auto bank = load_bank(bank_path);
  auto c = lava_config(g, bank.preset);
  Robot2NNParams params;
  if (!params_path.empty()) params.load(srd::nn::load_params(params_path));
  Manifest man(g, "lavaland eval");
  const auto rep = evaluate(params, bank, c.robot, g.seed, g.jobs);

  ordered_json acc;
  acc["preset"] = bank.preset;
  acc["params"] = params_path.empty() ? "initial" : params_path;
  acc["maps"] = rep.maps;
  acc["reached"] = rep.reached;
  acc["accuracy"] = rep.accuracy;
  acc["mean_grass"] = rep.mean_grass;
  acc["mean_dirt"] = rep.mean_dirt;
  acc["mean_lava"] = rep.mean_lava;
  srd::report::write_text(dir / "accuracy.json", acc.dump(2) + "\n");
  man.output(dir / "accuracy.json");

  std::ostringstream hist;
  hist << "tile,count,maps,cumulative\n";
  auto rows = [&](const char* name, const std::vector<std::size_t>& h) {
    std::size_t cum = 0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      cum += h[k];
      hist << name << ',' << k << ',' << h[k] << ',' << cum << '\n';
    }
  };
  rows("grass", rep.grass_hist);
  rows("dirt", rep.dirt_hist);
  rows("lava", rep.lava_hist);
  srd::report::write_text(dir / "histograms.csv", hist.str());
  man.output(dir / "histograms.csv");
  srd::report::emit_plot({(dir / "histograms.csv").string(), "count", "cumulative", "tile",
                          (dir / "histograms.svg").string(), "cumulative tiles traversed"});
  man.output(dir / "histograms.svg");

  std::ostringstream ks;
  write_kernels_csv(ks, inspect_kernels(params));
  srd::report::write_text(dir / "kernels.csv", ks.str());
  man.output(dir / "kernels.csv");

  const auto n = static_cast<std::size_t>(std::max(trajectories, renders));
  for (std::size_t i = 0; i < std::min(n, bank.maps.size()); ++i) {
    char name[32];
    if (i < static_cast<std::size_t>(trajectories)) {
      std::snprintf(name, sizeof name, "map%04zu.json", i);
      srd::report::write_text(dir / "trajectories" / name,
                              trajectory_json(i, bank.maps[i], rep.episodes[i]).dump(1) + "\n");
    }
    if (i < static_cast<std::size_t>(renders)) {
      srd::nn::NoGradGuard guard;
      const auto board = plan_board(bank.maps[i], tile_scores(bank.maps[i], params, c.robot), c.robot);
      std::snprintf(name, sizeof name, "map%04zu.svg", i);
      srd::report::write_text(dir / "renders" / name, render_episode_svg(bank.maps[i], board, rep.episodes[i]));
    }
  }
  if (trajectories > 0) man.output(dir / "trajectories");
  if (renders > 0) man.output(dir / "renders");

  man.get().preset = bank.preset;
  auto cfg = snapshot(c);
  cfg["bank"] = bank_path;
  cfg["params"] = params_path;
  man.get().config = cfg;
  man.write(dir / "manifest.json");
  std::cout << "accuracy " << srd::auction::fmt(rep.accuracy) << " (" << rep.reached << "/" << rep.maps
            << ") mean_lava " << srd::auction::fmt(rep.mean_lava) << " mean_grass "
            << srd::auction::fmt(rep.mean_grass) << "\n";
  return 0;
}

int plot(const Globals& g, srd::report::PlotSpec spec, const std::string& kind) {
  spec.svg_path = need_out(g, "SVG file");
  if (kind == "line") {
    spec.kind = srd::report::PlotKind::kLine;
  } else if (kind == "scatter") {
    spec.kind = srd::report::PlotKind::kScatter;
  } else {
    throw ConfigError("--kind must be 'line' or 'scatter'");
  }
  srd::report::emit_plot(spec);
  return 0;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j;
  try {
    j = json::parse(srd::report::read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON (byte " + std::to_string(e.byte) + ")");
  }
  if (!j.is_object()) throw ConfigError("config " + path + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "fish1d" && key != "auction" && key != "lavaland") {
      throw ConfigError("unknown config section '" + key + "' (expected fish1d, auction or lavaland)");
    }
  }
  return j;
}

// Key names and types are checked for every section, used or not.
void validate_sections(const Globals& g) {
  FishConfig f;
  AuctionCli a;
  LavaConfig l;
  apply(g, "fish1d", f);
  apply(g, "auction", a);
  apply(g, "lavaland", l);
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  g.argv.assign(argv, argv + argc);

  CLI::App app{"Self reward design experiments: 1D fish, fish sale auction, lavaland robot", "srd"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "root random seed")->capture_default_str();
  app.add_option("--out", g.out, "output file or directory");
  app.add_option("--config", g.config, "JSON file overriding defaults")->check(CLI::ExistingFile);
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* fish = app.add_subcommand("fish1d", "1D robot fish");
  fish->require_subcommand(1);
  long steps = 5000, iters = 12000;
  std::string trained;
  auto* fish_run_cmd = fish->add_subcommand("run", "run one episode and print or save its trace");
  fish_run_cmd->add_option("--steps", steps, "steps to simulate")->capture_default_str();
  fish_run_cmd->add_option("--trained", trained, "trained parameter file")->check(CLI::ExistingFile);
  auto* fish_train_cmd = fish->add_subcommand("train", "SRD-train the action layer");
  fish_train_cmd->add_option("--iters", iters, "training steps")->capture_default_str();

  auto* auction = app.add_subcommand("auction", "fish sale auction");
  auction->require_subcommand(1);
  std::string grid = "0.0625:0.5:8", conditions;
  int trials = 10, snapshots = 1;
  bool optim = false;
  double malicious = 0.0;
  auto* auction_run_cmd = auction->add_subcommand("run", "run the supply sweep");
  auction_run_cmd->add_option("--r-grid", grid, "supply ratios as start:stop:count")->capture_default_str();
  auction_run_cmd->add_option("--trials", trials, "trials per r")->capture_default_str();
  auction_run_cmd->add_flag("--optim", optim, "agents fine-tune with SRD");
  auction_run_cmd->add_option("--malicious-frac", malicious, "fraction of always-hold agents");
  auction_run_cmd->add_option("--conditions", conditions,
                              "comma list of noOptim, Optim, malicious-Optim, malicious-noOptim");
  auction_run_cmd->add_option("--snapshots", snapshots, "trials per cell whose agent parameters are saved")
      ->capture_default_str();

  auto* lava = app.add_subcommand("lavaland", "lavaland robot");
  lava->require_subcommand(1);
  std::size_t count = 4096;
  std::string preset = "project-a", bank, params, report;
  int traj = 0, renders = 4;
  auto* gen = lava->add_subcommand("gen", "generate a map bank");
  gen->add_option("--count", count, "maps")->capture_default_str();
  gen->add_option("--preset", preset, "project-a, compare-a, lava-a or lava-noav-a")->capture_default_str();
  auto* train = lava->add_subcommand("train", "one SRD pass over a bank");
  train->add_option("--bank", bank, "map bank")->required()->check(CLI::ExistingFile);
  auto* eval = lava->add_subcommand("eval", "evaluate parameters on a bank");
  eval->add_option("--bank", bank, "map bank")->required()->check(CLI::ExistingFile);
  eval->add_option("--params", params, "trained parameter file")->check(CLI::ExistingFile);
  eval->add_option("--report", report, "report directory")->required();
  eval->add_option("--trajectories", traj, "per-map trajectory dumps")->capture_default_str();
  eval->add_option("--renders", renders, "per-map SVG renders")->capture_default_str();

  auto* plot_cmd = app.add_subcommand("plot", "render a CSV column pair as SVG");
  srd::report::PlotSpec spec;
  std::string kind = "line";
  plot_cmd->add_option("--csv", spec.csv_path, "input CSV")->required();
  plot_cmd->add_option("--x", spec.x, "x column")->required();
  plot_cmd->add_option("--y", spec.y, "y column")->required();
  plot_cmd->add_option("--group", spec.group, "series column");
  plot_cmd->add_option("--title", spec.title, "plot title");
  plot_cmd->add_option("--kind", kind, "line or scatter")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    g.overrides = load_config(g.config);
    validate_sections(g);
    if (*fish_run_cmd) return fish_run(g, steps, trained);
    if (*fish_train_cmd) return fish_train(g, iters);
    if (*auction_run_cmd) return auction_run(g, grid, trials, optim, malicious, conditions, snapshots);
    if (*gen) return lava_gen(g, count, preset);
    if (*train) return lava_train(g, bank);
    if (*eval) return lava_eval(g, bank, params, report, traj, renders);
    if (*plot_cmd) return plot(g, spec, kind);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const srd::nn::ParamsFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const srd::nn::ParamsVersionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << app.help();
  return 2;
}
